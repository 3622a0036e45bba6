#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gam {

// A text split into lowercase alphanumeric tokens. Tokenization is pure and
// locale-free, so results are identical across runs, threads and platforms.
struct TokenizedText {
    std::vector<std::string> tokens;
    std::size_t source_len = 0;
};

// Character span [begin, end) of one token in the source text.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

TokenizedText tokenize(std::string_view text);

// Token count without materializing the token strings.
std::size_t count_tokens(std::string_view text);

std::vector<TokenSpan> token_spans(std::string_view text);

// Splits text into chunks of at most page_size tokens each; every chunk except
// possibly the last holds exactly page_size tokens. Chunk boundaries fall
// between tokens and the concatenation of all chunks is byte-identical to the
// input, so the page store stays lossless.
std::vector<std::string> segment_into_pages(std::string_view text, std::size_t page_size);

// Keeps the first ceil(budget/2) and last floor(budget/2) tokens, replacing the
// middle with a " ... " marker. Returns the input unchanged when it already
// fits. Original characters (spacing, punctuation) are preserved on both sides.
std::string truncate_middle(std::string_view text, std::size_t budget);

// FNV-1a 64-bit. Used for feature hashing and persistence checksums.
std::uint64_t fnv1a64(std::string_view data);

// True when the text is empty or all ASCII whitespace.
bool is_blank(std::string_view text);

}  // namespace gam
