#pragma once

#include <map>
#include <string>
#include <vector>

#include "gam/backend.hpp"

namespace gam {

enum class PromptName { memorize, header, plan, integrate, reflect, extract };

// A chat template with named {placeholder}s, split into a system part and a
// user part. The built-in templates are compiled in from assets/prompts/.
struct PromptTemplate {
    PromptName name;
    std::string system;
    std::string user;
};

const PromptTemplate& builtin_template(PromptName name);

std::string to_string(PromptName name);

struct RenderOptions {
    std::size_t context_budget = 8192;  // token cap for system + user text
    std::size_t max_output_tokens = 1024;
    double temperature = 0.0;
};

// Substitutes bindings into the template. When the result would exceed the
// context budget, bindings are squeezed with truncate_middle, largest first,
// until the exchange fits.
ChatExchange render_prompt(const PromptTemplate& tmpl,
                           const std::map<std::string, std::string>& bindings,
                           const RenderOptions& options = {});

// Placeholder names referenced by a template, in order of first appearance.
std::vector<std::string> template_placeholders(const PromptTemplate& tmpl);

}  // namespace gam
