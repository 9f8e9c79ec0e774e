#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "qaforge/article.hpp"
#include "qaforge/ids.hpp"
#include "qaforge/providers/interfaces.hpp"

namespace qaforge::tagging {

inline constexpr double kDefaultMinRatio = 0.8;

struct TaggedSpan {
    std::string passage_id;
    std::size_t char_begin = 0;  // byte offsets into Passage::text
    std::size_t char_end = 0;
    std::size_t word_begin = 0;
    std::size_t word_end = 0;
    std::string text;

    friend bool operator==(const TaggedSpan&, const TaggedSpan&) = default;
};

enum class GroundingStatus { grounded, failed };

struct GroundingReport {
    std::string quote;
    double matched_ratio = 0.0;
    GroundingStatus status = GroundingStatus::failed;
};

struct Grounding {
    std::optional<TaggedSpan> span;  // set only when grounded
    GroundingReport report;
};

// Raw provider output. Throws TaggingError when the provider fails or
// returns nothing but whitespace.
std::string request_tag(std::string_view question, const Passage& passage, providers::QaTagProvider& provider);

// Token used for alignment: case-folded, boundary punctuation trimmed, lemmatized.
std::string alignment_key(std::string_view word, providers::LemmaProvider& lemmatizer);

// Searches word windows with lengths in [ceil(m/2), 2m] for the quote's m
// lemmas and picks the one with the longest common subsequence, preferring
// shorter then earlier windows.
Grounding ground_span(const Passage& passage, std::string_view quote, providers::LemmaProvider& lemmatizer,
                      double min_ratio = kDefaultMinRatio);

// Targets of links whose word range intersects the span.
std::set<EntityId> extract_answer_entities(const Passage& passage, const TaggedSpan& span);

}  // namespace qaforge::tagging
