#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/providers/interfaces.hpp"

namespace qaforge::questions {

enum class PrefixMethod { first_k, up_to_named_entity };

struct Prefix {
    std::string text;
    PrefixMethod method = PrefixMethod::first_k;
    unsigned k = 0;             // token count for first_k
    std::string ner_provider;   // for up_to_named_entity
    std::string source_question;

    friend bool operator==(const Prefix&, const Prefix&) = default;
};

struct CandidateQuestion {
    std::string text;
    Prefix prefix;
    std::string provider;
    std::size_t response_index = 0;
    bool drifted = false;  // completion does not extend the prefix
};

// Case-folded, whitespace-collapsed, trailing question marks replaced by one.
std::string normalize_question(std::string_view text);

// First 1, 2 and 3 tokens, plus per NER provider the text before the first
// named entity. Prefixes with equal text are collapsed; the first wins.
std::vector<Prefix> extract_prefixes(std::string_view question, std::span<providers::NerProvider* const> ner,
                                     providers::Tokenizer* tokenizer = nullptr);

// At most `max` completions, deduplicated by normalized text. A provider
// failure yields an empty list.
std::vector<CandidateQuestion> complete_prefix(const Prefix& prefix, providers::SuggestProvider& suggest,
                                               std::size_t max = 10);

// complete_prefix over many prefixes with deduplication across all of them.
std::vector<CandidateQuestion> formulate_questions(std::span<const Prefix> prefixes,
                                                   providers::SuggestProvider& suggest, std::size_t max = 10);

}  // namespace qaforge::questions
