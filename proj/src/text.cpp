#include "gam/text.hpp"

#include <stdexcept>

namespace gam {

namespace {

constexpr bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

constexpr char to_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

TokenizedText tokenize(std::string_view text) {
    TokenizedText out;
    out.source_len = text.size();
    std::string current;
    for (char c : text) {
        if (is_token_char(c)) {
            current.push_back(to_lower(c));
        } else if (!current.empty()) {
            out.tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        out.tokens.push_back(std::move(current));
    }
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_token_char(c)) {
            if (!in_token) {
                ++count;
                in_token = true;
            }
        } else {
            in_token = false;
        }
    }
    return count;
}

std::vector<TokenSpan> token_spans(std::string_view text) {
    std::vector<TokenSpan> spans;
    std::size_t begin = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_token_char(text[i])) {
            if (!in_token) {
                begin = i;
                in_token = true;
            }
        } else if (in_token) {
            spans.push_back({begin, i});
            in_token = false;
        }
    }
    if (in_token) {
        spans.push_back({begin, text.size()});
    }
    return spans;
}

std::vector<std::string> segment_into_pages(std::string_view text, std::size_t page_size) {
    if (page_size < 1) {
        throw std::invalid_argument("segment_into_pages: page_size must be >= 1");
    }
    if (text.empty()) {
        return {};
    }
    const auto spans = token_spans(text);
    if (spans.size() <= page_size) {
        return {std::string(text)};
    }
    // Chunk k covers everything from the end of chunk k-1's last token up to
    // the end of its own last token; the final chunk runs to the end of the
    // string. Concatenation therefore reproduces the input exactly.
    std::vector<std::string> chunks;
    std::size_t cursor = 0;
    for (std::size_t first = 0; first < spans.size(); first += page_size) {
        const std::size_t last = std::min(first + page_size, spans.size()) - 1;
        const bool is_final = last + 1 >= spans.size();
        const std::size_t end = is_final ? text.size() : spans[last].end;
        chunks.emplace_back(text.substr(cursor, end - cursor));
        cursor = end;
    }
    return chunks;
}

std::string truncate_middle(std::string_view text, std::size_t budget) {
    if (budget < 2) {
        throw std::invalid_argument("truncate_middle: budget must be >= 2");
    }
    const auto spans = token_spans(text);
    if (spans.size() <= budget) {
        return std::string(text);
    }
    const std::size_t head = (budget + 1) / 2;
    const std::size_t tail = budget / 2;
    std::string out;
    out.append(text.substr(0, spans[head - 1].end));
    out.append(" ... ");
    const std::size_t tail_begin = spans[spans.size() - tail].begin;
    out.append(text.substr(tail_begin));
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= static_cast<std::uint64_t>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

bool is_blank(std::string_view text) {
    for (char c : text) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v') {
            return false;
        }
    }
    return true;
}

}  // namespace gam
