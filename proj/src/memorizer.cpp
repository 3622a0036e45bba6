#include "gam/memorizer.hpp"

#include <sstream>

#include "gam/prompts.hpp"
#include "gam/text.hpp"

namespace gam {

void MemoryState::append(Memo memo) {
    if (!memos_.empty() && memo.session_id < memos_.back().session_id) {
        throw OutOfOrderSession("memo for session " + std::to_string(memo.session_id) +
                                " appended after session " +
                                std::to_string(memos_.back().session_id));
    }
    memos_.push_back(std::move(memo));
}

std::int64_t MemoryState::last_session_id() const {
    return memos_.empty() ? -1 : memos_.back().session_id;
}

std::string render_memory(const MemoryState& memory) {
    std::ostringstream out;
    bool first = true;
    for (const auto& memo : memory.memos()) {
        if (!first) {
            out << '\n';
        }
        first = false;
        out << "[session " << memo.session_id << " | pages ";
        for (std::size_t i = 0; i < memo.source_page_ids.size(); ++i) {
            if (i > 0) out << ',';
            out << memo.source_page_ids[i];
        }
        out << "] " << memo.text;
    }
    return out.str();
}

namespace {

RenderOptions render_options(const MemorizerConfig& config) {
    RenderOptions options;
    options.context_budget = config.context_budget;
    options.max_output_tokens = config.max_output_tokens;
    options.temperature = config.temperature;
    return options;
}

}  // namespace

Memo memorize(const std::string& session_chunk, const MemoryState& memory,
              ModelBackend& backend, const MemorizerConfig& config) {
    if (session_chunk.empty()) {
        throw Error("memorize: session chunk is empty");
    }
    const auto exchange = render_prompt(builtin_template(PromptName::memorize),
                                        {{"memory", render_memory(memory)},
                                         {"chunk", session_chunk}},
                                        render_options(config));
    std::string text = backend.complete(exchange);
    if (is_blank(text)) {
        throw EmptyCompletion("memorize returned a blank memo");
    }
    Memo memo;
    memo.text = truncate_middle(text, config.memo_budget);
    return memo;
}

std::string make_header(const std::string& session_chunk, const MemoryState& memory,
                        ModelBackend& backend, const MemorizerConfig& config) {
    if (session_chunk.empty()) {
        throw Error("make_header: session chunk is empty");
    }
    const auto exchange = render_prompt(builtin_template(PromptName::header),
                                        {{"memory", render_memory(memory)},
                                         {"chunk", session_chunk}},
                                        render_options(config));
    std::string text;
    try {
        text = backend.complete(exchange);
    } catch (const EmptyCompletion&) {
        return "";
    }
    if (is_blank(text)) {
        return "";
    }
    return truncate_middle(text, config.header_budget);
}

IngestResult ingest(const Session& session, const MemoryState& memory, PageStore& store,
                    ModelBackend& backend, const MemorizerConfig& config) {
    if (session.content.empty()) {
        throw Error("ingest: session content is empty");
    }
    std::int64_t last_seen = memory.last_session_id();
    if (!store.empty()) {
        last_seen = std::max(last_seen, store.pages().back().session_id);
    }
    if (session.id <= last_seen) {
        throw OutOfOrderSession("session " + std::to_string(session.id) +
                                " arrives after session " + std::to_string(last_seen));
    }

    // All backend work happens against staged state; pages and memos are
    // committed together only once every chunk has succeeded.
    const auto chunks = segment_into_pages(session.content, config.page_size);
    const PageId base_id = static_cast<PageId>(store.size());

    IngestResult result;
    result.memory = memory;
    std::vector<Page> staged;
    staged.reserve(chunks.size());

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const PageId page_id = base_id + static_cast<PageId>(i);
        Page page;
        page.id = page_id;
        page.session_id = session.id;
        page.header = make_header(chunks[i], result.memory, backend, config);
        page.content = chunks[i];

        Memo memo = memorize(chunks[i], result.memory, backend, config);
        memo.session_id = session.id;
        memo.source_page_ids = {page_id};

        staged.push_back(std::move(page));
        result.memory.append(std::move(memo));
        result.page_ids.push_back(page_id);
    }

    for (auto& page : staged) {
        store.append(std::move(page));
    }
    return result;
}

}  // namespace gam
