#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gam/backend.hpp"
#include "gam/memorizer.hpp"
#include "gam/researcher.hpp"

namespace gam {

// The engine's knobs, merged from defaults, config file, environment and
// caller overrides, in that order of increasing precedence.
struct EngineConfig {
    std::size_t page_size = 2048;
    std::size_t max_reflection_depth = 3;
    std::size_t top_k = 5;
    OutputFormat output_format = OutputFormat::integration_only;
    std::vector<RetrievalTool> enabled_tools = {RetrievalTool::bm25, RetrievalTool::embedding,
                                                RetrievalTool::page_id};
    std::string backend_kind = "http";  // "http" or "scripted"
    std::string scripted_rules;         // rules file path, scripted backend only
    std::string base_url;
    std::string api_key;
    std::string model = "gpt-4o-mini";
    std::filesystem::path store_path = "./gam-store";
    std::size_t context_budget = 8192;
    std::size_t max_output_tokens = 1024;
    std::size_t memo_budget = 256;
    std::size_t header_budget = 128;
};

// Parses a flat key = value document; keys mirror the EngineConfig field
// names. Lines starting with # and blank lines are skipped.
EngineConfig parse_config_file(const std::filesystem::path& path);

// GAM_API_KEY, GAM_BASE_URL, GAM_STORE.
void apply_env(EngineConfig& config);

// defaults <- optional config file <- environment.
EngineConfig load_config(const std::optional<std::filesystem::path>& file);

// Comma-separated tool list, e.g. "bm25,page_id".
std::vector<RetrievalTool> parse_tool_list(const std::string& text);

MemorizerConfig memorizer_config(const EngineConfig& config);
ResearcherConfig researcher_config(const EngineConfig& config);

// Constructs the configured backend: a rules file player or the HTTP client.
std::unique_ptr<ModelBackend> make_backend(const EngineConfig& config);

}  // namespace gam
