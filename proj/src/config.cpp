#include "gam/config.hpp"

#include <cstdlib>
#include <fstream>

namespace gam {

namespace {

std::string trim(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && (text[begin] == ' ' || text[begin] == '\t')) ++begin;
    while (end > begin && (text[end - 1] == ' ' || text[end - 1] == '\t' ||
                           text[end - 1] == '\r')) {
        --end;
    }
    return text.substr(begin, end - begin);
}

std::string strip_quotes(const std::string& text) {
    if (text.size() >= 2 && ((text.front() == '"' && text.back() == '"') ||
                             (text.front() == '\'' && text.back() == '\''))) {
        return text.substr(1, text.size() - 2);
    }
    return text;
}

std::size_t parse_count(const std::string& value, const std::string& key) {
    try {
        const long long parsed = std::stoll(value);
        if (parsed < 1) {
            throw Error("config key " + key + " must be positive, got " + value);
        }
        return static_cast<std::size_t>(parsed);
    } catch (const std::logic_error&) {
        throw Error("config key " + key + " needs an integer, got \"" + value + "\"");
    }
}

}  // namespace

std::vector<RetrievalTool> parse_tool_list(const std::string& text) {
    std::vector<RetrievalTool> tools;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item =
            trim(text.substr(pos, (comma == std::string::npos ? text.size() : comma) - pos));
        if (!item.empty()) {
            const RetrievalTool tool = retrieval_tool_from_string(item);
            bool seen = false;
            for (RetrievalTool existing : tools) {
                if (existing == tool) seen = true;
            }
            if (!seen) tools.push_back(tool);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (tools.empty()) {
        throw Error("enabled_tools must name at least one tool");
    }
    return tools;
}

EngineConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path.string());
    }

    EngineConfig config;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error("config line " + std::to_string(row) + ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = strip_quotes(trim(stripped.substr(eq + 1)));
        if (key == "page_size") {
            config.page_size = parse_count(value, key);
        } else if (key == "max_reflection_depth") {
            config.max_reflection_depth = parse_count(value, key);
        } else if (key == "top_k") {
            config.top_k = parse_count(value, key);
        } else if (key == "output_format") {
            config.output_format = output_format_from_string(value);
        } else if (key == "enabled_tools") {
            config.enabled_tools = parse_tool_list(value);
        } else if (key == "backend_kind") {
            if (value != "http" && value != "scripted") {
                throw Error("backend_kind must be http or scripted, got " + value);
            }
            config.backend_kind = value;
        } else if (key == "scripted_rules") {
            config.scripted_rules = value;
        } else if (key == "base_url") {
            config.base_url = value;
        } else if (key == "api_key") {
            config.api_key = value;
        } else if (key == "model") {
            config.model = value;
        } else if (key == "store_path") {
            config.store_path = value;
        } else if (key == "context_budget") {
            config.context_budget = parse_count(value, key);
        } else if (key == "max_output_tokens") {
            config.max_output_tokens = parse_count(value, key);
        } else if (key == "memo_budget") {
            config.memo_budget = parse_count(value, key);
        } else if (key == "header_budget") {
            config.header_budget = parse_count(value, key);
        } else {
            throw Error("config line " + std::to_string(row) + ": unknown key " + key);
        }
    }
    return config;
}

void apply_env(EngineConfig& config) {
    if (const char* value = std::getenv("GAM_API_KEY"); value && *value) {
        config.api_key = value;
    }
    if (const char* value = std::getenv("GAM_BASE_URL"); value && *value) {
        config.base_url = value;
    }
    if (const char* value = std::getenv("GAM_STORE"); value && *value) {
        config.store_path = value;
    }
}

EngineConfig load_config(const std::optional<std::filesystem::path>& file) {
    EngineConfig config;
    if (file) {
        config = parse_config_file(*file);
    }
    apply_env(config);
    return config;
}

MemorizerConfig memorizer_config(const EngineConfig& config) {
    MemorizerConfig out;
    out.page_size = config.page_size;
    out.memo_budget = config.memo_budget;
    out.header_budget = config.header_budget;
    out.context_budget = config.context_budget;
    out.max_output_tokens = config.max_output_tokens;
    return out;
}

ResearcherConfig researcher_config(const EngineConfig& config) {
    ResearcherConfig out;
    out.max_reflection_depth = config.max_reflection_depth;
    out.top_k = config.top_k;
    out.output_format = config.output_format;
    out.enabled_tools = config.enabled_tools;
    out.context_budget = config.context_budget;
    out.max_output_tokens = config.max_output_tokens;
    return out;
}

std::unique_ptr<ModelBackend> make_backend(const EngineConfig& config) {
    if (config.backend_kind == "scripted") {
        if (config.scripted_rules.empty()) {
            throw Error("scripted backend needs a rules file (scripted_rules)");
        }
        return std::make_unique<ScriptedBackend>(script_rules_from_file(config.scripted_rules));
    }
    if (config.backend_kind != "http") {
        throw Error("unknown backend kind: " + config.backend_kind);
    }
    if (config.base_url.empty()) {
        throw Error("http backend needs a base URL (base_url or GAM_BASE_URL)");
    }
    HttpBackendConfig http;
    http.base_url = config.base_url;
    http.api_key = config.api_key;
    http.model = config.model;
    return std::make_unique<HttpBackend>(std::move(http));
}

}  // namespace gam
