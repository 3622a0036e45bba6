#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gam/backend.hpp"
#include "gam/pagestore.hpp"

namespace gam {

// One temporally ordered unit of interaction history.
struct Session {
    std::int64_t id = 0;
    std::string content;
    std::optional<std::string> created_at;
    std::map<std::string, std::string> metadata;
};

// A concise snapshot of one session chunk, with back-references to the pages
// that hold the lossless original.
struct Memo {
    std::string text;
    std::vector<PageId> source_page_ids;
    std::int64_t session_id = 0;
};

// Append-only list of memos; the light, lossy index that guides research.
class MemoryState {
public:
    void append(Memo memo);
    const std::vector<Memo>& memos() const { return memos_; }
    bool empty() const { return memos_.empty(); }
    std::size_t size() const { return memos_.size(); }
    std::int64_t last_session_id() const;  // -1 when empty

private:
    std::vector<Memo> memos_;
};

// One line per memo: "[session {id} | pages {ids}] {text}", in append order.
std::string render_memory(const MemoryState& memory);

struct MemorizerConfig {
    std::size_t page_size = 2048;
    std::size_t memo_budget = 256;
    std::size_t header_budget = 128;
    std::size_t context_budget = 8192;
    std::size_t max_output_tokens = 1024;
    double temperature = 0.0;
};

// Produces the memo for one chunk; the caller appends it to the memory.
Memo memorize(const std::string& session_chunk, const MemoryState& memory,
              ModelBackend& backend, const MemorizerConfig& config = {});

// Produces the landmark header for one chunk. An empty completion degrades to
// an empty header rather than failing the page.
std::string make_header(const std::string& session_chunk, const MemoryState& memory,
                        ModelBackend& backend, const MemorizerConfig& config = {});

struct IngestResult {
    MemoryState memory;
    std::vector<PageId> page_ids;
};

// Segments the session, generates header + memo per chunk, and commits all
// pages and memos at once. A backend failure leaves store and memory exactly
// as they were.
IngestResult ingest(const Session& session, const MemoryState& memory, PageStore& store,
                    ModelBackend& backend, const MemorizerConfig& config = {});

}  // namespace gam
