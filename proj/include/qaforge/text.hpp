#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qaforge::text {

std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

char32_t fold_char(char32_t c);
// Lower-cases ASCII, Latin-1, Latin Extended-A, Greek and basic Cyrillic.
std::string fold_case(std::string_view s);

bool is_space(char32_t c);
bool is_punct(char32_t c);

// Trims, and collapses every whitespace run to one ASCII space.
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source
    std::size_t end = 0;
};
std::vector<Token> tokenize_with_offsets(std::string_view s);

// Removes every punctuation code point.
std::string remove_punctuation(std::string_view s);
// Removes punctuation only at the two ends.
std::string trim_punctuation(std::string_view s);

bool starts_with_folded(std::string_view text, std::string_view prefix);

std::string join(std::span<const std::string> parts, std::string_view sep);

// Length of the longest common subsequence.
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (const auto& x : a) {
        std::size_t diag = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            std::size_t up = row[j + 1];
            row[j + 1] = (x == b[j]) ? diag + 1 : std::max(row[j + 1], row[j]);
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
    return lcs_length(std::span<const char32_t>(a.data(), a.size()),
                      std::span<const char32_t>(b.data(), b.size()));
}

}  // namespace qaforge::text
