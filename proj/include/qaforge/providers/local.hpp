#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/article.hpp"
#include "qaforge/providers/interfaces.hpp"

// Rule-based and table-driven providers that need no model or network.
namespace qaforge::providers {

class WhitespaceTokenizer : public Tokenizer {
public:
    std::string name() const override { return "whitespace"; }
    std::vector<std::string> tokenize(std::string_view text) override;
};

// Runs of capitalized words after the first word of the text.
class CapitalizedNer : public NerProvider {
public:
    std::string name() const override { return "capitalized"; }
    std::vector<NamedEntitySpan> entities(std::string_view text) override;
};

// Marks the first case-insensitive occurrence of each listed phrase.
class PhraseNer : public NerProvider {
public:
    explicit PhraseNer(std::vector<std::string> phrases, std::string name = "phrase")
        : phrases_(std::move(phrases)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    std::vector<NamedEntitySpan> entities(std::string_view text) override;

private:
    std::vector<std::string> phrases_;
    std::string name_;
};

class EchoSuggest : public SuggestProvider {
public:
    std::string name() const override { return "echo"; }
    std::vector<std::string> suggest(std::string_view prefix) override { return {std::string(prefix)}; }
};

// Completions looked up by exact prefix text; unknown prefixes yield nothing.
class TableSuggest : public SuggestProvider {
public:
    explicit TableSuggest(std::map<std::string, std::vector<std::string>> table) : table_(std::move(table)) {}
    std::string name() const override { return "table"; }
    std::vector<std::string> suggest(std::string_view prefix) override;

private:
    std::map<std::string, std::vector<std::string>> table_;
};

// Articles keyed by case-folded title.
class MapArticleFetch : public ArticleFetchProvider {
public:
    MapArticleFetch() = default;
    explicit MapArticleFetch(const std::vector<Article>& articles);
    void add(Article article);
    std::string name() const override { return "map"; }
    Article fetch(std::string_view title) override;  // NotFoundError wrapped as ProviderError
    std::vector<Article> all() const;

private:
    std::map<std::string, Article> by_title_;
};

// Offline wiki search over a fixed set of titles: hits share a word with the
// query and are ranked by title similarity, then title.
class TitleIndexSearch : public WikiSearchProvider {
public:
    explicit TitleIndexSearch(std::vector<WikiHit> universe) : universe_(std::move(universe)) {}
    std::string name() const override { return "title-index"; }
    std::vector<WikiHit> search(std::string_view query) override;

private:
    std::vector<WikiHit> universe_;
};

// Fraction of distinct question words that occur in the passage.
class OverlapReranker : public RerankProvider {
public:
    std::string name() const override { return "overlap"; }
    std::vector<double> score(std::string_view query, std::span<const std::string> passages) override;
};

class ConstantReranker : public RerankProvider {
public:
    std::string name() const override { return "constant"; }
    std::vector<double> score(std::string_view, std::span<const std::string> passages) override {
        return std::vector<double>(passages.size(), 0.0);
    }
};

// Returns the passage's first sentence.
class FirstSentenceTagger : public QaTagProvider {
public:
    std::string name() const override { return "first-sentence"; }
    std::string tag(std::string_view question, std::string_view passage) override;
};

class IdentityLemmatizer : public LemmaProvider {
public:
    std::string name() const override { return "identity"; }
    std::string lemma(std::string_view word) override { return std::string(word); }
};

// Form-to-lemma table; unknown forms map to themselves.
class DictionaryLemmatizer : public LemmaProvider {
public:
    explicit DictionaryLemmatizer(std::map<std::string, std::string> table) : table_(std::move(table)) {}
    // TSV `form<TAB>lemma`.
    static DictionaryLemmatizer load(const std::filesystem::path& path);
    std::string name() const override { return "dictionary"; }
    std::string lemma(std::string_view word) override;

private:
    std::map<std::string, std::string> table_;
};

// Lexicon lookup, then stopwords, then capitalization; everything else is a noun.
class RuleBasedPosTagger : public PosProvider {
public:
    RuleBasedPosTagger();
    explicit RuleBasedPosTagger(std::map<std::string, PosTag> lexicon);
    std::string name() const override { return "rule-based"; }
    std::vector<PosTag> tag(std::span<const std::string> tokens) override;

private:
    std::map<std::string, PosTag> lexicon_;
    std::set<std::string> stopwords_;
};

class IdentityRefiner : public RefineProvider {
public:
    std::string name() const override { return "identity"; }
    std::string refine(std::string_view question) override { return std::string(question); }
};

// Lists the tails of the first triples found in a KBQA prompt.
class EchoFactsLlm : public LlmProvider {
public:
    explicit EchoFactsLlm(std::size_t max_answers = 3) : max_answers_(max_answers) {}
    std::string name() const override { return "echo-facts"; }
    std::string complete(std::string_view prompt) override;

private:
    std::size_t max_answers_;
};

}  // namespace qaforge::providers
