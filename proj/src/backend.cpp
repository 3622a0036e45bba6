#include "gam/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace gam {

using nlohmann::json;

const std::string& ChatExchange::last_user_message() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == ChatMessage::Role::user) {
            return it->content;
        }
    }
    throw Error("ChatExchange holds no user message");
}

// --- ScriptedBackend ---

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) {
    rules_.reserve(rules.size());
    for (auto& rule : rules) {
        rules_.push_back({std::move(rule), 0});
    }
}

void ScriptedBackend::add_rule(ScriptRule rule) {
    std::lock_guard lock(mutex_);
    rules_.push_back({std::move(rule), 0});
}

namespace {

bool rule_matches(const ScriptRule& rule, const std::string& message) {
    switch (rule.match) {
        case ScriptRule::Match::substring:
            return rule.pattern.empty() || message.find(rule.pattern) != std::string::npos;
        case ScriptRule::Match::prefix:
            return message.rfind(rule.pattern, 0) == 0;
        case ScriptRule::Match::exact:
            return message == rule.pattern;
        case ScriptRule::Match::regex: {
            const std::regex re(rule.pattern);
            return std::regex_search(message, re);
        }
    }
    return false;
}

ScriptRule::Match parse_match_kind(const std::string& kind) {
    if (kind == "substring") return ScriptRule::Match::substring;
    if (kind == "prefix") return ScriptRule::Match::prefix;
    if (kind == "exact") return ScriptRule::Match::exact;
    if (kind == "regex") return ScriptRule::Match::regex;
    throw Error("unknown script rule kind: " + kind);
}

}  // namespace

std::string ScriptedBackend::complete(const ChatExchange& exchange) {
    const std::string& message = exchange.last_user_message();
    std::lock_guard lock(mutex_);
    ++calls_;
    for (auto& state : rules_) {
        if (state.rule.max_uses && state.uses >= *state.rule.max_uses) {
            continue;
        }
        if (rule_matches(state.rule, message)) {
            ++state.uses;
            return state.rule.response;
        }
    }
    throw NoMatchingRule("no script rule matches: " + message.substr(0, 200));
}

std::size_t ScriptedBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<ScriptRule> script_rules_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("invalid script rules JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw Error("script rules file must hold a JSON array");
    }
    std::vector<ScriptRule> rules;
    for (const auto& row : doc) {
        ScriptRule rule;
        rule.pattern = row.value("match", std::string{});
        rule.match = parse_match_kind(row.value("kind", std::string{"substring"}));
        if (!row.contains("response")) {
            throw Error("script rule missing \"response\"");
        }
        rule.response = row.at("response").get<std::string>();
        if (row.contains("max_uses")) {
            rule.max_uses = row.at("max_uses").get<std::size_t>();
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<ScriptRule> script_rules_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open script rules file: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return script_rules_from_json(buffer.str());
}

ScriptedBackend ScriptedBackend::from_json_text(const std::string& json_text) {
    return ScriptedBackend(script_rules_from_json(json_text));
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    return ScriptedBackend(script_rules_from_file(path));
}

// --- HttpBackend ---

struct HttpBackend::Impl {
    explicit Impl(std::size_t max_in_flight) : gate(static_cast<std::ptrdiff_t>(max_in_flight)) {}
    std::counting_semaphore<4096> gate;
};

namespace {

// Splits "http://host:port/prefix" into the client target and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    const std::size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_begin = base_url.find('/', host_begin);
    if (path_begin == std::string::npos) {
        return {base_url, ""};
    }
    std::string prefix = base_url.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    return {base_url.substr(0, path_begin), prefix};
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_.max_in_flight)) {
    if (config_.base_url.empty()) {
        throw Error("HttpBackend requires a base URL (set GAM_BASE_URL)");
    }
}

HttpBackend::~HttpBackend() = default;

HttpBackend HttpBackend::from_env(const std::string& model) {
    HttpBackendConfig config;
    if (const char* url = std::getenv("GAM_BASE_URL")) {
        config.base_url = url;
    }
    if (const char* key = std::getenv("GAM_API_KEY")) {
        config.api_key = key;
    }
    config.model = model;
    return HttpBackend(std::move(config));
}

std::string HttpBackend::complete(const ChatExchange& exchange) {
    impl_->gate.acquire();
    struct Release {
        std::counting_semaphore<4096>& gate;
        ~Release() { gate.release(); }
    } release{impl_->gate};

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array();
    if (!exchange.system.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", exchange.system}});
    }
    for (const auto& message : exchange.messages) {
        body["messages"].push_back(
            {{"role", message.role == ChatMessage::Role::user ? "user" : "assistant"},
             {"content", message.content}});
    }
    body["temperature"] = exchange.temperature;
    body["max_tokens"] = exchange.max_output_tokens;
    const std::string payload = body.dump();

    const auto [target, prefix] = split_base_url(config_.base_url);
    const std::string path = prefix + "/chat/completions";

    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    auto backoff = config_.initial_backoff;
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Client client(target);
        client.set_connection_timeout(config_.timeout.count(), 0);
        client.set_read_timeout(config_.timeout.count(), 0);

        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            const bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                                   result.error() == httplib::Error::Read;
            if (attempt == config_.max_attempts) {
                throw BackendError(timed_out ? BackendError::Kind::timeout
                                             : BackendError::Kind::transport,
                                   "chat completion failed: " + last_error);
            }
        } else if (result->status >= 400 && result->status < 500) {
            throw BackendError(BackendError::Kind::status,
                               "chat completion rejected with status " +
                                   std::to_string(result->status) + ": " + result->body,
                               result->status);
        } else if (result->status >= 500) {
            last_error = "status " + std::to_string(result->status);
            if (attempt == config_.max_attempts) {
                throw BackendError(BackendError::Kind::status,
                                   "chat completion failed: " + last_error, result->status);
            }
        } else {
            try {
                const json reply = json::parse(result->body);
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw BackendError(BackendError::Kind::status,
                                   std::string("malformed completion response: ") + e.what(),
                                   result->status);
            }
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
    throw BackendError(BackendError::Kind::transport, "chat completion failed: " + last_error);
}

}  // namespace gam
