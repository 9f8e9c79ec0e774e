#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/article.hpp"
#include "qaforge/providers/interfaces.hpp"

namespace qaforge::passages {

inline constexpr std::size_t kDefaultWindow = 120;
inline constexpr std::size_t kDefaultStep = 60;
inline constexpr std::size_t kSearchDepth = 10;

struct ArticleRef {
    std::string title;
    std::string url;
    std::size_t rank = 0;  // 1-based rank in the search results

    friend bool operator==(const ArticleRef&, const ArticleRef&) = default;
};

// True for `https://<lang>.wikipedia.org/wiki/<Title>` style URLs.
bool is_wiki_article_url(std::string_view url, std::string_view host_suffix = "wikipedia.org");
std::string title_from_wiki_url(std::string_view url);

// Encyclopedia articles among the top ten results, in rank order. An empty
// result means the question is discarded. Provider failures yield empty.
std::vector<ArticleRef> find_articles(std::string_view question, providers::ArticleSearchProvider& search,
                                      std::string_view host_suffix = "wikipedia.org");

// Sliding windows at starts 0, step, 2*step, ...; a window contained in the
// previously emitted one is dropped.
std::vector<Passage> segment(const Article& article, std::size_t window = kDefaultWindow,
                             std::size_t step = kDefaultStep);

struct ScoredPassage {
    Passage passage;
    double score = 0.0;
};

// Stable descending sort by reranker score. Throws ProviderError when the
// reranker fails or returns a malformed score list.
std::vector<ScoredPassage> rank_passages(std::string_view question, std::span<const Passage> passages,
                                         providers::RerankProvider& reranker);

struct Corpus {
    std::map<std::string, Passage> passages;
    std::set<std::string> tombstones;
};

// Same article and at least one shared word.
bool overlaps(const Passage& a, const Passage& b);

// All passages minus those overlapping a selected passage, plus the selected ones.
Corpus build_corpus(std::span<const Passage> all_passages, std::span<const Passage> selected);

}  // namespace qaforge::passages
