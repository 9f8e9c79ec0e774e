#include "qaforge/providers/local.hpp"

#include <algorithm>
#include <fstream>

#include "qaforge/entity_linker.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/text.hpp"

namespace qaforge::providers {

namespace {

bool is_capitalized(std::string_view word) {
    auto u = text::decode_utf8(word);
    std::size_t i = 0;
    while (i < u.size() && text::is_punct(u[i])) ++i;
    return i < u.size() && text::fold_char(u[i]) != u[i];
}

}  // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) { return text::split_whitespace(text); }

std::vector<NamedEntitySpan> CapitalizedNer::entities(std::string_view text) {
    auto tokens = text::tokenize_with_offsets(text);
    std::vector<NamedEntitySpan> out;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (!is_capitalized(tokens[i].text)) continue;
        std::size_t j = i;
        while (j + 1 < tokens.size() && is_capitalized(tokens[j + 1].text)) ++j;
        auto begin = tokens[i].begin;
        auto end = tokens[j].end;
        // Keep trailing punctuation such as '?' out of the span.
        auto trimmed = text::trim_punctuation(text.substr(begin, end - begin));
        auto lead = text.substr(begin, end - begin).find(trimmed);
        if (!trimmed.empty() && lead != std::string_view::npos) {
            begin += lead;
            end = begin + trimmed.size();
        }
        out.push_back(NamedEntitySpan{begin, end, "ENT"});
        i = j;
    }
    return out;
}

std::vector<NamedEntitySpan> PhraseNer::entities(std::string_view text) {
    auto folded = text::fold_case(text);
    std::vector<NamedEntitySpan> out;
    for (const auto& p : phrases_) {
        auto fp = text::fold_case(p);
        if (fp.empty() || fp.size() != p.size()) {
            // Folding changed the byte length; fall back to an exact match.
            auto pos = text.find(p);
            if (!p.empty() && pos != std::string_view::npos) out.push_back(NamedEntitySpan{pos, pos + p.size(), "ENT"});
            continue;
        }
        auto pos = folded.find(fp);
        if (pos != std::string::npos) out.push_back(NamedEntitySpan{pos, pos + fp.size(), "ENT"});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
    return out;
}

std::vector<std::string> TableSuggest::suggest(std::string_view prefix) {
    auto it = table_.find(std::string(prefix));
    return it == table_.end() ? std::vector<std::string>{} : it->second;
}

MapArticleFetch::MapArticleFetch(const std::vector<Article>& articles) {
    for (const auto& a : articles) add(a);
}

void MapArticleFetch::add(Article article) {
    auto key = text::fold_case(article.title);
    by_title_.insert_or_assign(std::move(key), std::move(article));
}

Article MapArticleFetch::fetch(std::string_view title) {
    auto it = by_title_.find(text::fold_case(title));
    if (it == by_title_.end()) throw ProviderError("no article titled '" + std::string(title) + "'");
    return it->second;
}

std::vector<Article> MapArticleFetch::all() const {
    std::vector<Article> out;
    for (const auto& [_, a] : by_title_) out.push_back(a);
    return out;
}

std::vector<WikiHit> TitleIndexSearch::search(std::string_view query) {
    std::set<std::string> qwords;
    for (const auto& w : text::split_whitespace(text::remove_punctuation(text::fold_case(query)))) qwords.insert(w);
    std::vector<std::pair<double, const WikiHit*>> scored;
    for (const auto& h : universe_) {
        bool shares = false;
        for (const auto& w : text::split_whitespace(text::remove_punctuation(text::fold_case(h.title))))
            if (qwords.contains(w)) {
                shares = true;
                break;
            }
        if (shares) scored.push_back({linking::title_similarity(query, h.title), &h});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->title < b.second->title;
    });
    std::vector<WikiHit> out;
    for (std::size_t i = 0; i < scored.size() && i < linking::kSearchCap; ++i) out.push_back(*scored[i].second);
    return out;
}

std::vector<double> OverlapReranker::score(std::string_view query, std::span<const std::string> passages) {
    std::set<std::string> q;
    for (const auto& w : text::split_whitespace(text::remove_punctuation(text::fold_case(query)))) q.insert(w);
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) {
        std::set<std::string> words;
        for (const auto& w : text::split_whitespace(text::remove_punctuation(text::fold_case(p)))) words.insert(w);
        std::size_t hit = 0;
        for (const auto& w : q) hit += words.contains(w);
        out.push_back(q.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(q.size()));
    }
    return out;
}

std::string FirstSentenceTagger::tag(std::string_view, std::string_view passage) {
    auto end = passage.find_first_of(".!?");
    return text::collapse_whitespace(passage.substr(0, end == std::string_view::npos ? passage.size() : end + 1));
}

DictionaryLemmatizer DictionaryLemmatizer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string(), 0, "cannot open");
    std::map<std::string, std::string> table;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw LoadError(path.string(), no, "expected form<TAB>lemma");
        table[text::fold_case(line.substr(0, tab))] = text::fold_case(line.substr(tab + 1));
    }
    return DictionaryLemmatizer(std::move(table));
}

std::string DictionaryLemmatizer::lemma(std::string_view word) {
    auto it = table_.find(std::string(word));
    return it == table_.end() ? std::string(word) : it->second;
}

RuleBasedPosTagger::RuleBasedPosTagger() : RuleBasedPosTagger(std::map<std::string, PosTag>{}) {}

RuleBasedPosTagger::RuleBasedPosTagger(std::map<std::string, PosTag> lexicon) : lexicon_(std::move(lexicon)) {
    stopwords_ = {"a",     "an",    "the",   "of",    "in",   "on",   "at",    "to",    "for",  "by",
                  "with",  "from",  "and",   "or",    "is",   "are",  "was",   "were",  "be",   "been",
                  "who",   "whom",  "whose", "what",  "which", "when", "where", "why",  "how",  "did",
                  "does",  "do",    "has",   "have",  "had",  "that", "this",  "these", "those", "it",
                  "its",   "as",    "into",  "than",  "then", "there", "their", "his",  "her",  "he",
                  "she",   "they",  "we",    "you",   "i",    "not",  "no",    "can",   "could", "will",
                  "would", "many",  "much",  "name",  "called"};
}

std::vector<PosTag> RuleBasedPosTagger::tag(std::span<const std::string> tokens) {
    std::vector<PosTag> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto key = text::fold_case(text::trim_punctuation(tokens[i]));
        if (auto it = lexicon_.find(key); it != lexicon_.end()) {
            out.push_back(it->second);
        } else if (stopwords_.contains(key)) {
            out.push_back(PosTag::other);
        } else if (key.empty()) {
            out.push_back(PosTag::other);
        } else if (i > 0 && is_capitalized(tokens[i])) {
            out.push_back(PosTag::proper_noun);
        } else {
            out.push_back(PosTag::noun);
        }
    }
    return out;
}

std::string EchoFactsLlm::complete(std::string_view prompt) {
    std::vector<std::string> answers;
    std::size_t pos = 0;
    while (answers.size() < max_answers_ && pos < prompt.size()) {
        auto nl = prompt.find('\n', pos);
        auto line = prompt.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? prompt.size() : nl + 1;
        if (line.size() < 2 || line.front() != '(' || line.back() != ')') continue;
        auto last = line.rfind(", ");
        if (last == std::string_view::npos) continue;
        std::string tail(line.substr(last + 2, line.size() - last - 3));
        if (std::find(answers.begin(), answers.end(), tail) == answers.end()) answers.push_back(tail);
    }
    return text::join(answers, ", ");
}

}  // namespace qaforge::providers
