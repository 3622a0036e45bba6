#include "gam/researcher.hpp"

#include <algorithm>
#include <future>
#include <sstream>

#include <json.hpp>

#include "gam/prompts.hpp"
#include "gam/text.hpp"

namespace gam {

using ordered_json = nlohmann::ordered_json;

bool RetrievedSet::contains(PageId id) const {
    for (const auto& page : pages) {
        if (page.id == id) return true;
    }
    return false;
}

std::vector<PageId> RetrievedSet::ids() const {
    std::vector<PageId> out;
    out.reserve(pages.size());
    for (const auto& page : pages) {
        out.push_back(page.id);
    }
    return out;
}

std::span<const Page> RetrievedSet::fresh() const {
    if (integrated_count >= pages.size()) return {};
    return std::span<const Page>(pages).subspan(integrated_count);
}

std::string to_string(Termination termination) {
    switch (termination) {
        case Termination::sufficient: return "sufficient";
        case Termination::no_new_calls: return "no_new_calls";
        case Termination::depth_reached: return "depth_reached";
        case Termination::memory_sufficient: return "memory_sufficient";
    }
    return "unknown";
}

std::string to_string(OutputFormat format) {
    switch (format) {
        case OutputFormat::integration_only: return "integration-only";
        case OutputFormat::integration_with_page: return "integration-with-page";
        case OutputFormat::integration_with_extraction: return "integration-with-extraction";
    }
    return "unknown";
}

OutputFormat output_format_from_string(const std::string& name) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "integration-only") return OutputFormat::integration_only;
    if (key == "integration-with-page") return OutputFormat::integration_with_page;
    if (key == "integration-with-extraction") return OutputFormat::integration_with_extraction;
    throw Error("unknown output format: " + name);
}

std::string extract_json_object(const std::string& completion) {
    std::string text;
    text.reserve(completion.size());
    std::istringstream lines(completion);
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t i = 0;
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (line.compare(i, 3, "```") == 0) continue;
        text += line;
        text += '\n';
    }

    const std::size_t start = text.find('{');
    if (start == std::string::npos) return "";
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return "";
}

std::string toolkit_description(std::span<const RetrievalTool> enabled) {
    static const std::vector<RetrievalTool> all = {RetrievalTool::bm25, RetrievalTool::embedding,
                                                   RetrievalTool::page_id};
    std::span<const RetrievalTool> tools = enabled.empty() ? std::span<const RetrievalTool>(all)
                                                           : enabled;
    std::string out;
    for (RetrievalTool tool : tools) {
        if (!out.empty()) out += '\n';
        switch (tool) {
            case RetrievalTool::bm25:
                out += "- bm25: keyword search over page headers and content; "
                       "call as {\"tool\": \"bm25\", \"query\": \"<keywords>\"}";
                break;
            case RetrievalTool::embedding:
                out += "- embedding: semantic similarity search over pages; "
                       "call as {\"tool\": \"embedding\", \"query\": \"<text>\"}";
                break;
            case RetrievalTool::page_id:
                out += "- page_id: fetch specific pages by id; "
                       "call as {\"tool\": \"page_id\", \"ids\": [<int>, ...]}";
                break;
        }
    }
    return out;
}

std::string render_page(const Page& page) {
    std::string out = "[page " + std::to_string(page.id) + "] ";
    out += page.header;
    out += " \xE2\x88\xA5 ";
    out += page.content;
    return out;
}

namespace {

RenderOptions render_options(const ResearcherConfig& config) {
    RenderOptions options;
    options.context_budget = config.context_budget;
    options.max_output_tokens = config.max_output_tokens;
    options.temperature = config.temperature;
    return options;
}

std::string snippet(const std::string& text) {
    std::string out = text.substr(0, 120);
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    if (text.size() > 120) out += "...";
    return out;
}

// Asks the backend until the completion yields a JSON object the parser
// accepts, retrying on malformed or invariant-violating output.
template <typename ErrorT, typename ParseFn>
auto complete_structured(ModelBackend& backend, const ChatExchange& exchange,
                         std::size_t retries, const char* op, ParseFn parse) {
    std::string last;
    for (std::size_t attempt = 0; attempt <= retries; ++attempt) {
        last = backend.complete(exchange);
        const std::string body = extract_json_object(last);
        if (body.empty()) continue;
        const auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded()) continue;
        if (auto parsed = parse(doc)) return std::move(*parsed);
    }
    throw ErrorT(std::string(op) + ": no usable completion after " + std::to_string(retries + 1) +
                 " attempts; last was \"" + snippet(last) + "\"");
}

std::optional<ToolCall> parse_call(const nlohmann::json& entry) {
    if (!entry.is_object()) return std::nullopt;
    const auto tool_it = entry.find("tool");
    if (tool_it == entry.end() || !tool_it->is_string()) return std::nullopt;
    ToolCall call;
    try {
        call.tool = retrieval_tool_from_string(tool_it->get<std::string>());
    } catch (const Error&) {
        return std::nullopt;
    }
    const auto query_it = entry.find("query");
    const auto ids_it = entry.find("ids");
    const bool has_query = query_it != entry.end() && query_it->is_string() &&
                           !query_it->get<std::string>().empty();
    const bool has_ids = ids_it != entry.end() && ids_it->is_array() && !ids_it->empty();
    if (call.tool == RetrievalTool::page_id) {
        if (!has_ids || has_query) return std::nullopt;
        for (const auto& id : *ids_it) {
            if (!id.is_number_integer()) return std::nullopt;
            call.ids.push_back(id.get<PageId>());
        }
    } else {
        if (!has_query || has_ids) return std::nullopt;
        call.query = query_it->get<std::string>();
    }
    return call;
}

std::optional<SearchPlan> parse_plan(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) return std::nullopt;
        SearchPlan plan;
        if (const auto it = doc.find("reasoning"); it != doc.end() && it->is_string()) {
            plan.reasoning = it->get<std::string>();
        }
        if (const auto it = doc.find("sufficient_from_memory"); it != doc.end()) {
            if (!it->is_boolean()) return std::nullopt;
            plan.sufficient_from_memory = it->get<bool>();
        }
        if (const auto it = doc.find("calls"); it != doc.end()) {
            if (!it->is_array()) return std::nullopt;
            for (const auto& entry : *it) {
                auto call = parse_call(entry);
                if (!call) return std::nullopt;
                plan.calls.push_back(std::move(*call));
            }
        }
        if (plan.sufficient_from_memory && !plan.calls.empty()) return std::nullopt;
        return plan;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

std::optional<IntegrationResult> parse_integration(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) return std::nullopt;
        const auto text_it = doc.find("text");
        if (text_it == doc.end() || !text_it->is_string()) return std::nullopt;
        IntegrationResult result;
        result.text = text_it->get<std::string>();
        if (const auto it = doc.find("cited"); it != doc.end()) {
            if (!it->is_array()) return std::nullopt;
            for (const auto& id : *it) {
                if (!id.is_number_integer()) return std::nullopt;
                result.cited_page_ids.push_back(id.get<PageId>());
            }
        }
        return result;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

std::optional<ReflectionOutcome> parse_reflection(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) return std::nullopt;
        const auto sufficient_it = doc.find("sufficient");
        if (sufficient_it == doc.end() || !sufficient_it->is_boolean()) return std::nullopt;
        ReflectionOutcome outcome;
        outcome.sufficient = sufficient_it->get<bool>();
        if (const auto it = doc.find("refined_request"); it != doc.end() && it->is_string()) {
            const auto text = it->get<std::string>();
            if (!text.empty()) outcome.refined_request = text;
        }
        if (const auto it = doc.find("reasoning"); it != doc.end() && it->is_string()) {
            outcome.reasoning = it->get<std::string>();
        }
        if (!outcome.sufficient && !outcome.refined_request) return std::nullopt;
        return outcome;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

IntegrationResult integrate_evidence(std::string evidence, const std::vector<PageId>& allowed,
                                     const IntegrationResult& previous, const Request& request,
                                     ModelBackend& backend, const ResearcherConfig& config) {
    if (evidence.empty()) evidence = "(none)";
    const auto exchange =
        render_prompt(builtin_template(PromptName::integrate),
                      {{"request", request.text},
                       {"previous", previous.text.empty() ? "(none)" : previous.text},
                       {"pages", std::move(evidence)}},
                      render_options(config));
    auto result = complete_structured<IntegrationParseError>(backend, exchange,
                                                             config.parse_retries, "integrate",
                                                             parse_integration);
    std::vector<PageId> cited;
    for (PageId id : result.cited_page_ids) {
        if (std::find(allowed.begin(), allowed.end(), id) == allowed.end()) continue;
        if (std::find(cited.begin(), cited.end(), id) != cited.end()) continue;
        cited.push_back(id);
    }
    result.cited_page_ids = std::move(cited);
    return result;
}

ordered_json call_to_json(const ToolCall& call) {
    ordered_json out;
    out["tool"] = to_string(call.tool);
    if (call.tool == RetrievalTool::page_id) {
        out["ids"] = call.ids;
    } else {
        out["query"] = call.query;
    }
    return out;
}

ordered_json trace_to_json(const ResearchTrace& trace) {
    ordered_json out;
    out["original_request"] = trace.original_request;
    out["termination"] = to_string(trace.termination);
    out["extraction_degraded"] = trace.extraction_degraded;
    out["iterations"] = ordered_json::array();
    for (const auto& iteration : trace.iterations) {
        ordered_json it;
        it["request"] = iteration.request_text;
        it["plan"] = {{"reasoning", iteration.plan.reasoning},
                      {"sufficient_from_memory", iteration.plan.sufficient_from_memory},
                      {"calls", ordered_json::array()}};
        for (const auto& call : iteration.plan.calls) {
            it["plan"]["calls"].push_back(call_to_json(call));
        }
        it["new_page_ids"] = iteration.new_page_ids;
        it["calls"] = ordered_json::array();
        for (const auto& record : iteration.call_records) {
            ordered_json rec;
            rec["call"] = call_to_json(record.call);
            rec["returned"] = record.returned;
            rec["missing"] = record.missing;
            rec["error"] = record.error;
            it["calls"].push_back(std::move(rec));
        }
        it["integration"] = {{"text", iteration.integration.text},
                             {"cited", iteration.integration.cited_page_ids}};
        if (iteration.reflection) {
            ordered_json refl;
            refl["sufficient"] = iteration.reflection->sufficient;
            if (iteration.reflection->refined_request) {
                refl["refined_request"] = *iteration.reflection->refined_request;
            } else {
                refl["refined_request"] = nullptr;
            }
            refl["reasoning"] = iteration.reflection->reasoning;
            it["reflection"] = std::move(refl);
        } else {
            it["reflection"] = nullptr;
        }
        out["iterations"].push_back(std::move(it));
    }
    return out;
}

}  // namespace

SearchPlan plan(const Request& request, const MemoryState& memory, const std::string& toolkit,
                ModelBackend& backend, const ResearcherConfig& config) {
    const auto exchange = render_prompt(builtin_template(PromptName::plan),
                                        {{"request", request.text},
                                         {"memory", render_memory(memory)},
                                         {"toolkit", toolkit}},
                                        render_options(config));
    return complete_structured<PlanParseError>(backend, exchange, config.parse_retries, "plan",
                                               parse_plan);
}

RetrievedSet execute_plan(const SearchPlan& plan, const PageStore& store, RetrievedSet accumulated,
                          std::size_t top_k, std::span<const RetrievalTool> enabled_tools) {
    struct RawResult {
        std::vector<PageId> returned;
        std::vector<PageId> missing;
        std::string error;
    };

    const auto tool_enabled = [&enabled_tools](RetrievalTool tool) {
        if (enabled_tools.empty()) return true;
        return std::find(enabled_tools.begin(), enabled_tools.end(), tool) != enabled_tools.end();
    };

    std::vector<std::future<RawResult>> futures;
    futures.reserve(plan.calls.size());
    for (const auto& call : plan.calls) {
        futures.push_back(std::async(
            std::launch::async, [&store, call, top_k, allowed = tool_enabled(call.tool)]() {
                RawResult raw;
                if (!allowed) {
                    raw.error = "tool " + to_string(call.tool) + " is not enabled";
                    return raw;
                }
                try {
                    switch (call.tool) {
                        case RetrievalTool::bm25:
                            for (const auto& hit : store.search_bm25(call.query, top_k)) {
                                raw.returned.push_back(hit.page_id);
                            }
                            break;
                        case RetrievalTool::embedding:
                            for (const auto& hit : store.search_embedding(call.query, top_k)) {
                                raw.returned.push_back(hit.page_id);
                            }
                            break;
                        case RetrievalTool::page_id: {
                            auto lookup = store.get_by_ids(call.ids);
                            for (const auto& page : lookup.pages) {
                                raw.returned.push_back(page.id);
                            }
                            raw.missing = std::move(lookup.missing);
                            break;
                        }
                    }
                } catch (const std::exception& e) {
                    raw.returned.clear();
                    raw.error = e.what();
                }
                return raw;
            }));
    }

    for (std::size_t i = 0; i < futures.size(); ++i) {
        RawResult raw = futures[i].get();
        for (PageId id : raw.returned) {
            if (!accumulated.contains(id)) accumulated.pages.push_back(store.page(id));
        }
        CallRecord record;
        record.call = plan.calls[i];
        record.returned = std::move(raw.returned);
        record.missing = std::move(raw.missing);
        record.error = std::move(raw.error);
        accumulated.records.push_back(std::move(record));
    }
    return accumulated;
}

IntegrationResult integrate(const RetrievedSet& retrieved, const IntegrationResult& previous,
                            const Request& request, ModelBackend& backend,
                            const ResearcherConfig& config) {
    std::string pages_text;
    for (const auto& page : retrieved.fresh()) {
        if (!pages_text.empty()) pages_text += "\n\n";
        pages_text += render_page(page);
    }
    return integrate_evidence(std::move(pages_text), retrieved.ids(), previous, request, backend,
                              config);
}

ReflectionOutcome reflect(const IntegrationResult& integration, const Request& request,
                          ModelBackend& backend, const ResearcherConfig& config) {
    const auto exchange =
        render_prompt(builtin_template(PromptName::reflect),
                      {{"request", request.text},
                       {"integration", integration.text.empty() ? "(none)" : integration.text}},
                      render_options(config));
    return complete_structured<ReflectionParseError>(backend, exchange, config.parse_retries,
                                                     "reflect", parse_reflection);
}

FinalContext assemble_output(const IntegrationResult& integration, const RetrievedSet& retrieved,
                             OutputFormat format, ModelBackend& backend,
                             const ResearcherConfig& config) {
    FinalContext out;
    out.format = format;
    out.context = integration.text;
    if (format == OutputFormat::integration_only) return out;

    std::vector<PageId> cited = integration.cited_page_ids;
    std::sort(cited.begin(), cited.end());
    std::vector<const Page*> pages;
    for (PageId id : cited) {
        for (const auto& page : retrieved.pages) {
            if (page.id == id) {
                pages.push_back(&page);
                break;
            }
        }
    }

    if (format == OutputFormat::integration_with_page) {
        for (const Page* page : pages) {
            out.context += "\n\n";
            out.context += render_page(*page);
        }
        return out;
    }

    if (pages.empty()) return out;
    std::string cited_text;
    for (const Page* page : pages) {
        if (!cited_text.empty()) cited_text += "\n\n";
        cited_text += render_page(*page);
    }
    try {
        const auto exchange = render_prompt(builtin_template(PromptName::extract),
                                            {{"integration", integration.text},
                                             {"pages", std::move(cited_text)}},
                                            render_options(config));
        const std::string snippets = backend.complete(exchange);
        if (is_blank(snippets)) throw EmptyCompletion("extraction returned nothing");
        out.context += "\n\n";
        out.context += snippets;
    } catch (const BackendError&) {
        out.context = integration.text;
        out.extraction_degraded = true;
    } catch (const EmptyCompletion&) {
        out.context = integration.text;
        out.extraction_degraded = true;
    } catch (const NoMatchingRule&) {
        out.context = integration.text;
        out.extraction_degraded = true;
    }
    return out;
}

ResearchResult research(const Request& request, const MemoryState& memory, const PageStore& store,
                        ModelBackend& backend, const ResearcherConfig& config) {
    if (request.text.empty()) {
        throw Error("research: request text is empty");
    }
    if (config.max_reflection_depth < 1) {
        throw Error("research: max_reflection_depth must be at least 1");
    }
    if (config.enabled_tools.empty()) {
        throw Error("research: enabled_tools must not be empty");
    }

    ResearchTrace trace;
    trace.original_request = request.text;

    const std::string toolkit = toolkit_description(config.enabled_tools);
    const Request original = request;
    Request active = request;

    RetrievedSet retrieved;
    IntegrationResult integration;

    try {
        for (std::size_t depth = 0; depth < config.max_reflection_depth; ++depth) {
            ResearchIteration iteration;
            iteration.request_text = active.text;
            iteration.plan = plan(active, memory, toolkit, backend, config);

            if (iteration.plan.sufficient_from_memory && depth == 0) {
                integration = integrate_evidence(render_memory(memory), {}, integration, original,
                                                 backend, config);
                iteration.integration = integration;
                trace.iterations.push_back(std::move(iteration));
                trace.termination = Termination::memory_sufficient;
                break;
            }
            if (iteration.plan.calls.empty()) {
                iteration.integration = integration;
                trace.iterations.push_back(std::move(iteration));
                trace.termination = Termination::no_new_calls;
                break;
            }

            const std::size_t pages_before = retrieved.pages.size();
            const std::size_t records_before = retrieved.records.size();
            retrieved = execute_plan(iteration.plan, store, std::move(retrieved), config.top_k,
                                     config.enabled_tools);
            for (std::size_t i = pages_before; i < retrieved.pages.size(); ++i) {
                iteration.new_page_ids.push_back(retrieved.pages[i].id);
            }
            iteration.call_records.assign(retrieved.records.begin() +
                                              static_cast<std::ptrdiff_t>(records_before),
                                          retrieved.records.end());

            integration = integrate(retrieved, integration, original, backend, config);
            retrieved.integrated_count = retrieved.pages.size();
            iteration.integration = integration;

            IntegrationResult shown = integration;
            if (config.reflect_sees_pages && !retrieved.pages.empty()) {
                shown.text += "\n\nRetrieved pages:";
                for (const auto& page : retrieved.pages) {
                    shown.text += "\n\n";
                    shown.text += render_page(page);
                }
            }
            const ReflectionOutcome outcome = reflect(shown, original, backend, config);
            iteration.reflection = outcome;
            trace.iterations.push_back(std::move(iteration));

            if (outcome.sufficient) {
                trace.termination = Termination::sufficient;
                break;
            }
            if (depth + 1 == config.max_reflection_depth) {
                trace.termination = Termination::depth_reached;
                break;
            }
            active.refined_from.push_back(active.text);
            active.text = *outcome.refined_request;
        }

        ResearchResult result;
        result.context = assemble_output(integration, retrieved, config.output_format, backend,
                                         config);
        trace.extraction_degraded = result.context.extraction_degraded;
        result.trace = std::move(trace);
        return result;
    } catch (const Error& e) {
        throw ResearchAborted(e.what(), std::move(trace));
    }
}

std::string trace_json(const ResearchTrace& trace) {
    return trace_to_json(trace).dump(2) + "\n";
}

std::string final_context_json(const FinalContext& context, const ResearchTrace& trace) {
    ordered_json out;
    out["context"] = context.context;
    out["format"] = to_string(context.format);
    out["trace"] = trace_to_json(trace);
    return out.dump();
}

}  // namespace gam
