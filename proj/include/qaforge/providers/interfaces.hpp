#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/article.hpp"
#include "qaforge/ids.hpp"

// Contracts for every external capability the pipeline consumes. Each has a
// live HTTP client, a replay fixture and, where sensible, a rule-based
// implementation. Implementations signal failure with ProviderError.
namespace qaforge::providers {

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
};

class Tokenizer : public Provider {
public:
    virtual std::vector<std::string> tokenize(std::string_view text) = 0;
};

struct NamedEntitySpan {
    std::size_t begin = 0;  // byte offsets into the analysed text
    std::size_t end = 0;
    std::string label;

    friend bool operator==(const NamedEntitySpan&, const NamedEntitySpan&) = default;
};

class NerProvider : public Provider {
public:
    virtual std::vector<NamedEntitySpan> entities(std::string_view text) = 0;
};

// Prefix in, ordered completions out.
class SuggestProvider : public Provider {
public:
    virtual std::vector<std::string> suggest(std::string_view prefix) = 0;
};

struct SearchHit {
    std::string title;
    std::string url;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

// Web search: question in, ranked results out.
class ArticleSearchProvider : public Provider {
public:
    virtual std::vector<SearchHit> search(std::string_view query) = 0;
};

// Encyclopedia article by title, with words and hyperlinks.
class ArticleFetchProvider : public Provider {
public:
    virtual Article fetch(std::string_view title) = 0;
};

class RerankProvider : public Provider {
public:
    // One score per passage, same order.
    virtual std::vector<double> score(std::string_view query, std::span<const std::string> passages) = 0;
};

// (question, passage text) -> quote from the passage, possibly imperfect.
class QaTagProvider : public Provider {
public:
    virtual std::string tag(std::string_view question, std::string_view passage) = 0;
};

class LemmaProvider : public Provider {
public:
    virtual std::string lemma(std::string_view word) = 0;
};

enum class PosTag { noun, adjective, proper_noun, unknown, verb, other };

class PosProvider : public Provider {
public:
    virtual std::vector<PosTag> tag(std::span<const std::string> tokens) = 0;
};

class DependencyProvider : public Provider {
public:
    // Head index per token, -1 for the root.
    virtual std::vector<int> heads(std::span<const std::string> tokens) = 0;
};

struct WikiHit {
    std::string title;
    std::optional<EntityId> entity;

    friend bool operator==(const WikiHit&, const WikiHit&) = default;
};

class WikiSearchProvider : public Provider {
public:
    virtual std::vector<WikiHit> search(std::string_view query) = 0;
};

// Inflection or paraphrasing of one question.
class RefineProvider : public Provider {
public:
    virtual std::string refine(std::string_view question) = 0;
};

class EmbedProvider : public Provider {
public:
    virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

class LlmProvider : public Provider {
public:
    virtual std::string complete(std::string_view prompt) = 0;
};

}  // namespace qaforge::providers
