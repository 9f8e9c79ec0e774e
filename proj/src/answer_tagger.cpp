#include "qaforge/answer_tagger.hpp"

#include <algorithm>
#include <tuple>
#include <vector>

#include "qaforge/errors.hpp"
#include "qaforge/text.hpp"

namespace qaforge::tagging {

namespace {

bool starts_with_punct(std::string_view s) {
    auto u = text::decode_utf8(s);
    return !u.empty() && text::is_punct(u.front());
}

bool ends_with_punct(std::string_view s) {
    auto u = text::decode_utf8(s);
    return !u.empty() && text::is_punct(u.back());
}

}  // namespace

std::string request_tag(std::string_view question, const Passage& passage, providers::QaTagProvider& provider) {
    std::string quote;
    try {
        quote = provider.tag(question, passage.text);
    } catch (const Error& e) {
        throw TaggingError("tagging provider " + provider.name() + " failed on passage " + passage.id + ": " +
                           e.what());
    }
    if (text::collapse_whitespace(quote).empty())
        throw TaggingError("tagging provider " + provider.name() + " returned an empty quote for passage " +
                           passage.id);
    return quote;
}

std::string alignment_key(std::string_view word, providers::LemmaProvider& lemmatizer) {
    auto folded = text::fold_case(word);
    auto trimmed = text::trim_punctuation(folded);
    if (trimmed.empty()) return folded;
    return lemmatizer.lemma(trimmed);
}

Grounding ground_span(const Passage& passage, std::string_view quote, providers::LemmaProvider& lemmatizer,
                      double min_ratio) {
    Grounding result;
    result.report.quote = std::string(quote);

    auto quote_words = text::split_whitespace(quote);
    if (quote_words.empty()) return result;

    std::vector<std::string> q;
    q.reserve(quote_words.size());
    for (const auto& w : quote_words) q.push_back(alignment_key(w, lemmatizer));
    std::vector<std::string> p;
    p.reserve(passage.words.size());
    for (const auto& w : passage.words) p.push_back(alignment_key(w, lemmatizer));

    const std::size_t m = q.size();
    const std::size_t n = p.size();
    const std::size_t min_len = (m + 1) / 2;
    const std::size_t max_len = 2 * m;

    // (lcs, length, start) of the best window; larger lcs wins, then shorter, then earlier.
    std::size_t best_lcs = 0, best_len = 0, best_start = 0;
    bool found = false;
    std::vector<std::size_t> row(m + 1);
    for (std::size_t start = 0; start < n; ++start) {
        std::fill(row.begin(), row.end(), 0);
        for (std::size_t len = 1; len <= max_len && start + len <= n; ++len) {
            // Extend the window by one passage token: row[i] = LCS(q[0..i), window).
            const auto& token = p[start + len - 1];
            std::size_t diag = 0;
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t up = row[i + 1];
                row[i + 1] = (q[i] == token) ? diag + 1 : std::max(row[i + 1], row[i]);
                diag = up;
            }
            if (len < min_len) continue;
            std::size_t lcs = row[m];
            if (!found || lcs > best_lcs || (lcs == best_lcs && len < best_len)) {
                best_lcs = lcs;
                best_len = len;
                best_start = start;
                found = true;
            }
        }
    }
    if (!found) return result;

    result.report.matched_ratio = static_cast<double>(best_lcs) / static_cast<double>(m);
    if (best_lcs == 0 || result.report.matched_ratio < min_ratio) return result;

    // Passage text is the words joined by single spaces.
    std::size_t offset = 0;
    for (std::size_t i = 0; i < best_start; ++i) offset += passage.words[i].size() + 1;
    std::size_t begin = offset;
    std::size_t end = begin;
    for (std::size_t i = best_start; i < best_start + best_len; ++i)
        end += passage.words[i].size() + (i + 1 < best_start + best_len ? 1 : 0);

    // Drop boundary punctuation the quote does not carry, e.g. a trailing comma.
    std::u32string span = text::decode_utf8(std::string_view(passage.text).substr(begin, end - begin));
    std::size_t lead = 0, trail = 0;
    if (!starts_with_punct(quote_words.front()))
        while (lead < span.size() && text::is_punct(span[lead])) ++lead;
    if (!ends_with_punct(quote_words.back()))
        while (trail + lead < span.size() && text::is_punct(span[span.size() - 1 - trail])) ++trail;
    if (lead + trail < span.size()) {
        begin += text::encode_utf8(std::u32string_view(span).substr(0, lead)).size();
        end -= text::encode_utf8(std::u32string_view(span).substr(span.size() - trail)).size();
    }

    TaggedSpan tagged;
    tagged.passage_id = passage.id;
    tagged.char_begin = begin;
    tagged.char_end = end;
    tagged.word_begin = best_start;
    tagged.word_end = best_start + best_len;
    tagged.text = passage.text.substr(begin, end - begin);
    result.span = std::move(tagged);
    result.report.status = GroundingStatus::grounded;
    return result;
}

std::set<EntityId> extract_answer_entities(const Passage& passage, const TaggedSpan& span) {
    std::set<EntityId> out;
    for (const auto& link : passage.links)
        if (link.target_entity && link.word_start < span.word_end && span.word_begin < link.word_end)
            out.insert(*link.target_entity);
    return out;
}

}  // namespace qaforge::tagging
