#include <doctest.h>

#include "qaforge/errors.hpp"
#include "qaforge/passage_builder.hpp"
#include "qaforge/providers/local.hpp"
#include "support.hpp"

using namespace qaforge;
using testsupport::Gen;

namespace {

Article article_of(std::size_t n, std::string page = "pg") {
    Article a;
    a.title = "Title";
    a.page_id = std::move(page);
    for (std::size_t i = 0; i < n; ++i) a.words.push_back("w" + std::to_string(i));
    return a;
}

// Starts that survive the containment rule: 0, and every later multiple of
// the step whose window reaches beyond the previous one.
std::vector<std::size_t> expected_starts(std::size_t n, std::size_t window, std::size_t step) {
    std::vector<std::size_t> out{0};
    for (std::size_t s = step; s < n; s += step)
        if (std::min(s + window, n) > std::min(s - step + window, n)) out.push_back(s);
    return out;
}

class FixedSearch : public providers::ArticleSearchProvider {
public:
    explicit FixedSearch(std::vector<providers::SearchHit> hits) : hits_(std::move(hits)) {}
    std::string name() const override { return "fixed"; }
    std::vector<providers::SearchHit> search(std::string_view) override { return hits_; }

private:
    std::vector<providers::SearchHit> hits_;
};

class FailingSearch : public providers::ArticleSearchProvider {
public:
    std::string name() const override { return "failing"; }
    std::vector<providers::SearchHit> search(std::string_view) override { throw ProviderError("down"); }
};

class ShortReranker : public providers::RerankProvider {
public:
    std::string name() const override { return "short"; }
    std::vector<double> score(std::string_view, std::span<const std::string>) override { return {1.0}; }
};

}  // namespace

TEST_SUITE("passages") {

TEST_CASE("segmentation properties over random word counts") {
    for (std::size_t n = 1; n <= 500; ++n) {
        CAPTURE(n);
        auto ps = passages::segment(article_of(n));
        std::vector<bool> covered(n, false);
        std::vector<std::size_t> starts;
        for (const auto& p : ps) {
            CHECK(p.word_end - p.word_start <= 120);
            CHECK(p.word_start % 60 == 0);
            CHECK(p.words.size() == p.word_end - p.word_start);
            for (auto i = p.word_start; i < p.word_end; ++i) covered[i] = true;
            starts.push_back(p.word_start);
        }
        CHECK(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
        for (std::size_t i = 0; i + 1 < ps.size(); ++i) CHECK(ps[i + 1].word_end > ps[i].word_end);
        CHECK(starts == expected_starts(n, 120, 60));
    }
    CHECK(passages::segment(article_of(120)).size() == 1);
    CHECK(passages::segment(article_of(180)).size() == 2);
    CHECK(passages::segment(article_of(0)).empty());
}

TEST_CASE("segment text, ids and clipped links") {
    auto a = article_of(130, "page-9");
    a.links.push_back({55, 65, EntityId("Q1"), "One"});
    a.links.push_back({125, 127, EntityId("Q2"), "Two"});
    auto ps = passages::segment(a);
    REQUIRE(ps.size() == 2);
    CHECK(ps[0].id == "page-9:0");
    CHECK(ps[1].id == "page-9:60");
    CHECK(ps[1].text.substr(0, 7) == "w60 w61");
    REQUIRE(ps[0].links.size() == 1);
    CHECK(ps[0].links[0].word_start == 55);
    REQUIRE(ps[1].links.size() == 2);
    CHECK(ps[1].links[0].word_start == 0);
    CHECK(ps[1].links[0].word_end == 5);
    CHECK(ps[1].links[1].word_start == 65);
    CHECK_THROWS_AS(passages::segment(a, 10, 20), std::invalid_argument);
}

TEST_CASE("other window sizes keep the same invariants") {
    Gen g(9);
    for (int i = 0; i < 200; ++i) {
        auto window = g.range(1, 50);
        auto step = g.range(1, window);
        auto n = g.range(1, 300);
        auto ps = passages::segment(article_of(n), window, step);
        std::vector<std::size_t> starts;
        for (const auto& p : ps) starts.push_back(p.word_start);
        CHECK(starts == expected_starts(n, window, step));
        CHECK(ps.back().word_end == n);
    }
}

TEST_CASE("wiki url detection and titles") {
    CHECK(passages::is_wiki_article_url("https://en.wikipedia.org/wiki/Ludwig_van_Beethoven"));
    CHECK(passages::is_wiki_article_url("https://pl.wikipedia.org/wiki/Fryderyk_Chopin"));
    CHECK_FALSE(passages::is_wiki_article_url("https://www.example.org/wiki/Beethoven"));
    CHECK_FALSE(passages::is_wiki_article_url("https://en.wikipedia.org/w/index.php?title=X"));
    CHECK(passages::title_from_wiki_url("https://en.wikipedia.org/wiki/%C5%BBelazowa_Wola") == "Żelazowa Wola");
}

TEST_CASE("article search keeps encyclopedia results from the top ten") {
    std::vector<providers::SearchHit> hits;
    hits.push_back({"Home", "https://www.example.org/"});
    hits.push_back({"Bonn - Wikipedia", "https://en.wikipedia.org/wiki/Bonn"});
    for (int i = 0; i < 9; ++i) hits.push_back({"x", "https://www.example.org/" + std::to_string(i)});
    hits.push_back({"late", "https://en.wikipedia.org/wiki/Late"});
    FixedSearch s(hits);
    auto refs = passages::find_articles("q", s);
    REQUIRE(refs.size() == 1);
    CHECK(refs[0].title == "Bonn");
    CHECK(refs[0].rank == 2);
    FailingSearch f;
    CHECK(passages::find_articles("q", f).empty());
}

TEST_CASE("ranking is a stable descending sort") {
    std::vector<Passage> ps;
    for (const auto& t : {"alpha beta", "gamma", "alpha", "beta alpha gamma"}) {
        Passage p;
        p.id = t;
        p.text = t;
        ps.push_back(p);
    }
    providers::OverlapReranker r;
    auto ranked = passages::rank_passages("alpha beta", ps, r);
    REQUIRE(ranked.size() == 4);
    CHECK(ranked[0].passage.id == "alpha beta");
    CHECK(ranked[1].passage.id == "beta alpha gamma");
    CHECK(ranked[2].passage.id == "alpha");
    ShortReranker bad;
    CHECK_THROWS_AS(passages::rank_passages("q", ps, bad), ProviderError);
}

TEST_CASE("corpus drops passages overlapping a selected one") {
    auto a = passages::segment(article_of(250, "a"));
    auto b = passages::segment(article_of(100, "b"));
    std::vector<Passage> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::vector<Passage> selected{a[1]};
    auto corpus = passages::build_corpus(all, selected);
    CHECK(corpus.passages.contains("a:60"));
    CHECK_FALSE(corpus.passages.contains("a:0"));
    CHECK_FALSE(corpus.passages.contains("a:120"));
    CHECK(corpus.tombstones == std::set<std::string>{"a:0", "a:120"});
    CHECK(corpus.passages.contains("b:0"));
    CHECK(passages::overlaps(a[0], a[1]));
    CHECK_FALSE(passages::overlaps(a[0], b[0]));
}

}
