#include "qaforge/passage_builder.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "qaforge/errors.hpp"
#include "qaforge/text.hpp"

namespace qaforge::passages {

namespace {

std::string_view strip_scheme(std::string_view url) {
    auto pos = url.find("://");
    return pos == std::string_view::npos ? url : url.substr(pos + 3);
}

std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else if (s[i] == '_') {
            out.push_back(' ');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

}  // namespace

bool is_wiki_article_url(std::string_view url, std::string_view host_suffix) {
    auto rest = strip_scheme(url);
    auto slash = rest.find('/');
    if (slash == std::string_view::npos) return false;
    auto host = rest.substr(0, slash);
    auto path = rest.substr(slash);
    if (host.size() < host_suffix.size() || host.substr(host.size() - host_suffix.size()) != host_suffix) return false;
    if (path.rfind("/wiki/", 0) != 0 || path.size() <= 6) return false;
    // Namespaced pages (Special:, File:, Category:...) are not articles.
    return path.substr(6).find(':') == std::string_view::npos;
}

std::string title_from_wiki_url(std::string_view url) {
    auto rest = strip_scheme(url);
    auto pos = rest.find("/wiki/");
    if (pos == std::string_view::npos) return {};
    auto title = rest.substr(pos + 6);
    auto cut = title.find_first_of("?#");
    if (cut != std::string_view::npos) title = title.substr(0, cut);
    return percent_decode(title);
}

std::vector<ArticleRef> find_articles(std::string_view question, providers::ArticleSearchProvider& search,
                                      std::string_view host_suffix) {
    std::vector<providers::SearchHit> hits;
    try {
        hits = search.search(question);
    } catch (const Error& e) {
        spdlog::warn("search provider {} failed for '{}': {}", search.name(), question, e.what());
        return {};
    }
    std::vector<ArticleRef> out;
    for (std::size_t i = 0; i < hits.size() && i < kSearchDepth; ++i) {
        if (!is_wiki_article_url(hits[i].url, host_suffix)) continue;
        auto title = title_from_wiki_url(hits[i].url);
        if (title.empty()) title = hits[i].title;
        out.push_back(ArticleRef{std::move(title), hits[i].url, i + 1});
    }
    return out;
}

std::vector<Passage> segment(const Article& article, std::size_t window, std::size_t step) {
    if (window == 0 || step == 0 || step > window) throw std::invalid_argument("require 0 < step <= window");
    const std::size_t n = article.words.size();
    std::vector<Passage> out;
    std::size_t prev_end = 0;
    for (std::size_t start = 0; start < n; start += step) {
        std::size_t end = std::min(start + window, n);
        if (!out.empty() && end <= prev_end) continue;
        Passage p;
        p.article_id = article.page_id;
        p.article_title = article.title;
        p.id = article.page_id + ":" + std::to_string(start);
        p.word_start = start;
        p.word_end = end;
        p.words.assign(article.words.begin() + static_cast<std::ptrdiff_t>(start),
                       article.words.begin() + static_cast<std::ptrdiff_t>(end));
        p.text = text::join(p.words, " ");
        for (const auto& l : article.links) {
            if (l.word_end <= start || l.word_start >= end) continue;
            ArticleLink clipped = l;
            clipped.word_start = std::max(l.word_start, start) - start;
            clipped.word_end = std::min(l.word_end, end) - start;
            p.links.push_back(std::move(clipped));
        }
        prev_end = end;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ScoredPassage> rank_passages(std::string_view question, std::span<const Passage> passages,
                                         providers::RerankProvider& reranker) {
    if (passages.empty()) return {};
    std::vector<std::string> texts;
    texts.reserve(passages.size());
    for (const auto& p : passages) texts.push_back(p.text);
    std::vector<double> scores;
    try {
        scores = reranker.score(question, texts);
    } catch (const Error& e) {
        throw ProviderError("reranker " + reranker.name() + " failed: " + e.what());
    }
    if (scores.size() != passages.size())
        throw ProviderError("reranker " + reranker.name() + " returned " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(passages.size()) + " passages");
    for (double s : scores)
        if (!std::isfinite(s)) throw ProviderError("reranker " + reranker.name() + " returned a non-finite score");

    std::vector<std::size_t> order(passages.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<ScoredPassage> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(ScoredPassage{passages[i], scores[i]});
    return out;
}

bool overlaps(const Passage& a, const Passage& b) {
    return a.article_id == b.article_id && a.word_start < b.word_end && b.word_start < a.word_end;
}

Corpus build_corpus(std::span<const Passage> all_passages, std::span<const Passage> selected) {
    std::unordered_map<std::string, std::vector<const Passage*>> selected_by_article;
    for (const auto& s : selected) selected_by_article[s.article_id].push_back(&s);

    Corpus corpus;
    for (const auto& p : all_passages) {
        bool removed = false;
        auto it = selected_by_article.find(p.article_id);
        if (it != selected_by_article.end())
            for (const auto* s : it->second)
                if (s->id != p.id && overlaps(p, *s)) {
                    removed = true;
                    break;
                }
        if (removed)
            corpus.tombstones.insert(p.id);
        else
            corpus.passages.emplace(p.id, p);
    }
    for (const auto& s : selected) {
        corpus.tombstones.erase(s.id);
        corpus.passages.insert_or_assign(s.id, s);
    }
    return corpus;
}

}  // namespace qaforge::passages
