#include "gam/prompts.hpp"

#include <algorithm>
#include <stdexcept>

#include "gam/text.hpp"
#include "gam_prompts_data.inc"

namespace gam {

namespace {

// Splits a raw asset into its [system] and [user] sections.
PromptTemplate parse_asset(PromptName name, std::string_view raw) {
    const auto system_tag = raw.find("[system]");
    const auto user_tag = raw.find("[user]");
    if (system_tag == std::string_view::npos || user_tag == std::string_view::npos) {
        throw Error("prompt asset missing [system]/[user] sections");
    }
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
        return std::string(s);
    };
    PromptTemplate tmpl;
    tmpl.name = name;
    tmpl.system = trim(raw.substr(system_tag + 8, user_tag - (system_tag + 8)));
    tmpl.user = trim(raw.substr(user_tag + 6));
    return tmpl;
}

// A placeholder is "{" + [a-z_]+ + "}"; anything else (such as JSON examples
// inside the instructions) passes through untouched.
bool read_placeholder(std::string_view text, std::size_t brace, std::string& name_out) {
    std::size_t i = brace + 1;
    while (i < text.size() && ((text[i] >= 'a' && text[i] <= 'z') || text[i] == '_')) {
        ++i;
    }
    if (i == brace + 1 || i >= text.size() || text[i] != '}') {
        return false;
    }
    name_out.assign(text.substr(brace + 1, i - brace - 1));
    return true;
}

void collect_placeholders(std::string_view text, std::vector<std::string>& out) {
    std::string name;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '{' && read_placeholder(text, i, name)) {
            if (std::find(out.begin(), out.end(), name) == out.end()) {
                out.push_back(name);
            }
            i += name.size() + 1;
        }
    }
}

std::string substitute(std::string_view text,
                       const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::string name;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '{' && read_placeholder(text, i, name)) {
            const auto it = values.find(name);
            if (it == values.end()) {
                throw MissingBinding("prompt placeholder {" + name + "} has no binding");
            }
            out += it->second;
            i += name.size() + 1;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

}  // namespace

const PromptTemplate& builtin_template(PromptName name) {
    static const std::map<PromptName, PromptTemplate> templates = [] {
        std::map<PromptName, PromptTemplate> m;
        m.emplace(PromptName::memorize, parse_asset(PromptName::memorize, k_prompt_memorize));
        m.emplace(PromptName::header, parse_asset(PromptName::header, k_prompt_header));
        m.emplace(PromptName::plan, parse_asset(PromptName::plan, k_prompt_plan));
        m.emplace(PromptName::integrate, parse_asset(PromptName::integrate, k_prompt_integrate));
        m.emplace(PromptName::reflect, parse_asset(PromptName::reflect, k_prompt_reflect));
        m.emplace(PromptName::extract, parse_asset(PromptName::extract, k_prompt_extract));
        return m;
    }();
    return templates.at(name);
}

std::string to_string(PromptName name) {
    switch (name) {
        case PromptName::memorize: return "memorize";
        case PromptName::header: return "header";
        case PromptName::plan: return "plan";
        case PromptName::integrate: return "integrate";
        case PromptName::reflect: return "reflect";
        case PromptName::extract: return "extract";
    }
    return "?";
}

std::vector<std::string> template_placeholders(const PromptTemplate& tmpl) {
    std::vector<std::string> names;
    collect_placeholders(tmpl.system, names);
    collect_placeholders(tmpl.user, names);
    return names;
}

ChatExchange render_prompt(const PromptTemplate& tmpl,
                           const std::map<std::string, std::string>& bindings,
                           const RenderOptions& options) {
    const auto placeholders = template_placeholders(tmpl);
    for (const auto& name : placeholders) {
        if (!bindings.count(name)) {
            throw MissingBinding("prompt placeholder {" + name + "} has no binding");
        }
    }

    std::map<std::string, std::string> values;
    std::size_t total = count_tokens(tmpl.system) + count_tokens(tmpl.user);
    for (const auto& name : placeholders) {
        const auto& value = bindings.at(name);
        values[name] = value;
        total += count_tokens(value);
    }

    // Squeeze the largest binding first until the exchange fits the budget.
    while (total > options.context_budget) {
        std::string* largest = nullptr;
        std::size_t largest_tokens = 2;  // truncate_middle floor
        for (auto& [name, value] : values) {
            const std::size_t tokens = count_tokens(value);
            if (tokens > largest_tokens) {
                largest_tokens = tokens;
                largest = &value;
            }
        }
        if (!largest) {
            break;
        }
        const std::size_t overflow = total - options.context_budget;
        const std::size_t target =
            largest_tokens > overflow + 2 ? largest_tokens - overflow : 2;
        *largest = truncate_middle(*largest, target);
        total = total - largest_tokens + count_tokens(*largest);
    }

    ChatExchange exchange;
    exchange.system = substitute(tmpl.system, values);
    std::string user = substitute(tmpl.user, values);

    // Fixed template text may still exceed the budget on its own; trim the
    // assembled user message as a last resort so the cap always holds.
    const std::size_t system_tokens = count_tokens(exchange.system);
    const std::size_t user_budget =
        options.context_budget > system_tokens + 2 ? options.context_budget - system_tokens : 2;
    if (count_tokens(user) > user_budget) {
        user = truncate_middle(user, user_budget);
    }

    exchange.messages.push_back({ChatMessage::Role::user, std::move(user)});
    exchange.max_output_tokens = options.max_output_tokens;
    exchange.temperature = options.temperature;
    return exchange;
}

}  // namespace gam
