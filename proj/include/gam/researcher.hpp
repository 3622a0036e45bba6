#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gam/backend.hpp"
#include "gam/memorizer.hpp"
#include "gam/pagestore.hpp"

namespace gam {

// The client request driving one research run. Reflection may refine it; the
// chain of superseded texts is kept oldest first.
struct Request {
    std::string text;
    std::vector<std::string> refined_from;
};

// One planned retrieval action: a query for bm25/embedding, ids for page_id.
struct ToolCall {
    RetrievalTool tool = RetrievalTool::bm25;
    std::string query;
    std::vector<PageId> ids;
};

struct SearchPlan {
    std::string reasoning;
    bool sufficient_from_memory = false;
    std::vector<ToolCall> calls;
};

// What one executed ToolCall produced. Failures are recorded, not thrown.
struct CallRecord {
    ToolCall call;
    std::vector<PageId> returned;
    std::vector<PageId> missing;  // page_id lookups with no page
    std::string error;            // empty when the call succeeded
};

// Everything retrieved so far in one run: unique pages in first-retrieval
// order plus per-call provenance. integrated_count marks how many of the
// pages have already been rendered to an integrate prompt.
struct RetrievedSet {
    std::vector<Page> pages;
    std::vector<CallRecord> records;
    std::size_t integrated_count = 0;

    bool contains(PageId id) const;
    std::vector<PageId> ids() const;
    std::span<const Page> fresh() const;  // pages not yet integrated
};

struct IntegrationResult {
    std::string text;
    std::vector<PageId> cited_page_ids;
};

struct ReflectionOutcome {
    bool sufficient = false;
    std::optional<std::string> refined_request;
    std::string reasoning;
};

enum class Termination { sufficient, no_new_calls, depth_reached, memory_sufficient };

std::string to_string(Termination termination);

struct ResearchIteration {
    std::string request_text;  // the active request this iteration planned for
    SearchPlan plan;
    std::vector<PageId> new_page_ids;
    std::vector<CallRecord> call_records;
    IntegrationResult integration;
    std::optional<ReflectionOutcome> reflection;
};

struct ResearchTrace {
    std::string original_request;
    std::vector<ResearchIteration> iterations;
    Termination termination = Termination::sufficient;
    bool extraction_degraded = false;
};

enum class OutputFormat { integration_only, integration_with_page, integration_with_extraction };

std::string to_string(OutputFormat format);
OutputFormat output_format_from_string(const std::string& name);

struct FinalContext {
    std::string context;
    OutputFormat format = OutputFormat::integration_only;
    bool extraction_degraded = false;
};

struct ResearcherConfig {
    std::size_t max_reflection_depth = 3;
    std::size_t top_k = 5;
    OutputFormat output_format = OutputFormat::integration_only;
    std::vector<RetrievalTool> enabled_tools = {RetrievalTool::bm25, RetrievalTool::embedding,
                                                RetrievalTool::page_id};
    std::size_t parse_retries = 2;
    bool reflect_sees_pages = false;
    std::size_t context_budget = 8192;
    std::size_t max_output_tokens = 1024;
    double temperature = 0.0;
};

// Raised when a research run dies partway; the trace covers the completed
// iterations so the failure stays auditable.
class ResearchAborted : public Error {
public:
    ResearchAborted(const std::string& message, ResearchTrace trace)
        : Error(message), trace_(std::make_shared<ResearchTrace>(std::move(trace))) {}

    const ResearchTrace& trace() const { return *trace_; }

private:
    std::shared_ptr<const ResearchTrace> trace_;
};

// Pulls the first balanced JSON object out of a completion, stripping any
// code fences first. Returns the empty string when there is none.
std::string extract_json_object(const std::string& completion);

// One line per tool explaining its call shape, for the plan prompt.
std::string toolkit_description(std::span<const RetrievalTool> enabled = {});

// How a page is shown to the model and in assembled output.
std::string render_page(const Page& page);

SearchPlan plan(const Request& request, const MemoryState& memory,
                const std::string& toolkit, ModelBackend& backend,
                const ResearcherConfig& config = {});

// Runs every call (concurrently) against the store snapshot and unions the
// results into the accumulated set. An empty enabled_tools span enables all.
RetrievedSet execute_plan(const SearchPlan& plan, const PageStore& store,
                          RetrievedSet accumulated, std::size_t top_k,
                          std::span<const RetrievalTool> enabled_tools = {});

IntegrationResult integrate(const RetrievedSet& retrieved, const IntegrationResult& previous,
                            const Request& request, ModelBackend& backend,
                            const ResearcherConfig& config = {});

ReflectionOutcome reflect(const IntegrationResult& integration, const Request& request,
                          ModelBackend& backend, const ResearcherConfig& config = {});

FinalContext assemble_output(const IntegrationResult& integration, const RetrievedSet& retrieved,
                             OutputFormat format, ModelBackend& backend,
                             const ResearcherConfig& config = {});

struct ResearchResult {
    FinalContext context;
    ResearchTrace trace;
};

// The full loop: plan, search, integrate, reflect, bounded by
// max_reflection_depth, then output assembly in the configured format.
ResearchResult research(const Request& request, const MemoryState& memory,
                        const PageStore& store, ModelBackend& backend,
                        const ResearcherConfig& config = {});

std::string trace_json(const ResearchTrace& trace);
std::string final_context_json(const FinalContext& context, const ResearchTrace& trace);

}  // namespace gam
