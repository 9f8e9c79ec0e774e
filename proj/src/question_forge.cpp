#include "qaforge/question_forge.hpp"

#include <spdlog/spdlog.h>

#include <unordered_set>

#include "qaforge/errors.hpp"
#include "qaforge/text.hpp"

namespace qaforge::questions {

std::string normalize_question(std::string_view text) {
    auto s = text::collapse_whitespace(text::fold_case(text));
    while (!s.empty() && (s.back() == '?' || s.back() == ' ')) s.pop_back();
    if (s.empty()) return s;
    s.push_back('?');
    return s;
}

std::vector<Prefix> extract_prefixes(std::string_view question, std::span<providers::NerProvider* const> ner,
                                     providers::Tokenizer* tokenizer) {
    auto normalized = text::collapse_whitespace(question);
    std::vector<Prefix> out;
    auto add = [&](Prefix p) {
        if (p.text.empty()) return;
        for (const auto& existing : out)
            if (existing.text == p.text) return;
        out.push_back(std::move(p));
    };

    auto tokens = tokenizer ? tokenizer->tokenize(normalized) : text::split_whitespace(normalized);
    for (unsigned k = 1; k <= 3 && k <= tokens.size(); ++k) {
        std::vector<std::string> head(tokens.begin(), tokens.begin() + k);
        add(Prefix{text::join(head, " "), PrefixMethod::first_k, k, {}, normalized});
    }

    for (auto* provider : ner) {
        std::vector<providers::NamedEntitySpan> spans;
        try {
            spans = provider->entities(normalized);
        } catch (const Error& e) {
            spdlog::warn("NER provider {} failed: {}", provider->name(), e.what());
            continue;
        }
        if (spans.empty()) continue;
        std::size_t first = spans.front().begin;
        for (const auto& s : spans) first = std::min(first, s.begin);
        first = std::min(first, normalized.size());
        auto head = text::collapse_whitespace(std::string_view(normalized).substr(0, first));
        add(Prefix{head, PrefixMethod::up_to_named_entity, 0, provider->name(), normalized});
    }
    return out;
}

namespace {

void complete_into(const Prefix& prefix, providers::SuggestProvider& suggest, std::size_t max,
                   std::unordered_set<std::string>& seen, std::vector<CandidateQuestion>& out) {
    std::vector<std::string> completions;
    try {
        completions = suggest.suggest(prefix.text);
    } catch (const Error& e) {
        spdlog::warn("suggest provider {} failed for '{}': {}", suggest.name(), prefix.text, e.what());
        return;
    }
    for (std::size_t i = 0; i < completions.size() && i < max; ++i) {
        const auto& c = completions[i];
        auto key = normalize_question(c);
        if (key.empty() || !seen.insert(key).second) continue;
        CandidateQuestion q;
        q.text = text::collapse_whitespace(c);
        q.prefix = prefix;
        q.provider = suggest.name();
        q.response_index = i;
        q.drifted = !text::starts_with_folded(c, prefix.text);
        out.push_back(std::move(q));
    }
}

}  // namespace

std::vector<CandidateQuestion> complete_prefix(const Prefix& prefix, providers::SuggestProvider& suggest,
                                               std::size_t max) {
    std::unordered_set<std::string> seen;
    std::vector<CandidateQuestion> out;
    complete_into(prefix, suggest, max, seen, out);
    return out;
}

std::vector<CandidateQuestion> formulate_questions(std::span<const Prefix> prefixes,
                                                   providers::SuggestProvider& suggest, std::size_t max) {
    std::unordered_set<std::string> seen;
    std::vector<CandidateQuestion> out;
    for (const auto& p : prefixes) complete_into(p, suggest, max, seen, out);
    return out;
}

}  // namespace qaforge::questions
