#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gam/errors.hpp"

namespace gam {

struct ChatMessage {
    enum class Role { user, assistant };
    Role role = Role::user;
    std::string content;
};

// One chat-completion request. Temperature stays 0 for every deterministic
// test configuration.
struct ChatExchange {
    std::string system;
    std::vector<ChatMessage> messages;
    std::size_t max_output_tokens = 1024;
    double temperature = 0.0;

    const std::string& last_user_message() const;
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::string complete(const ChatExchange& exchange) = 0;
};

// Deterministic test backend: rules are evaluated in declaration order against
// the last user message; the first match wins.
struct ScriptRule {
    enum class Match { substring, prefix, exact, regex };
    std::string pattern;
    Match match = Match::substring;
    std::string response;
    std::optional<std::size_t> max_uses;
};

// Rules file: JSON array of {"match": string, "kind": "substring"|"prefix"|
// "exact"|"regex", "response": string, "max_uses": optional int}.
std::vector<ScriptRule> script_rules_from_json(const std::string& json_text);
std::vector<ScriptRule> script_rules_from_file(const std::filesystem::path& path);

class ScriptedBackend final : public ModelBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptRule> rules);

    static ScriptedBackend from_file(const std::filesystem::path& path);
    static ScriptedBackend from_json_text(const std::string& json_text);

    void add_rule(ScriptRule rule);
    std::string complete(const ChatExchange& exchange) override;

    std::size_t call_count() const;

private:
    struct RuleState {
        ScriptRule rule;
        std::size_t uses = 0;
    };
    mutable std::mutex mutex_;
    std::vector<RuleState> rules_;
    std::size_t calls_ = 0;
};

// Chat-completion wire client: POST {base_url}/chat/completions with the
// OpenAI-style JSON body, reading choices[0].message.content. Transient
// transport errors and 5xx statuses are retried with exponential backoff;
// 4xx statuses are never retried.
struct HttpBackendConfig {
    std::string base_url;                 // e.g. "http://localhost:8000/v1"
    std::string api_key;                  // bearer token; empty sends no header
    std::string model = "gpt-4o-mini";
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::size_t max_in_flight = 4;
    std::chrono::seconds timeout{60};
};

class HttpBackend final : public ModelBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    ~HttpBackend() override;

    // Reads GAM_BASE_URL / GAM_API_KEY from the environment.
    static HttpBackend from_env(const std::string& model = "gpt-4o-mini");

    std::string complete(const ChatExchange& exchange) override;

    const HttpBackendConfig& config() const { return config_; }

private:
    struct Impl;
    HttpBackendConfig config_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gam
