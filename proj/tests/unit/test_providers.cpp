#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "qaforge/errors.hpp"
#include "qaforge/kg_retrieval.hpp"
#include "qaforge/prompts.hpp"
#include "qaforge/providers/http.hpp"
#include "qaforge/providers/local.hpp"
#include "qaforge/providers/replay.hpp"
#include "support.hpp"

using namespace qaforge;
using namespace qaforge::providers;
using nlohmann::json;

namespace {

kg::KnowledgeGraph composer_graph() {
    kg::KnowledgeGraph g;
    g.add_triple({EntityId("Q255"), RelationId("P19"), EntityId("Q586")});
    g.add_triple({EntityId("Q255"), RelationId("P20"), EntityId("Q1741")});
    g.add_triple({EntityId("Q586"), RelationId("P17"), EntityId("Q183")});
    g.add_triple({EntityId("Q1741"), RelationId("P17"), EntityId("Q40")});
    g.add_triple({EntityId("Q40"), RelationId("P36"), EntityId("Q1741")});
    g.set_entity_label(EntityId("Q255"), "Ludwig van Beethoven");
    g.set_entity_label(EntityId("Q586"), "Bonn");
    g.set_entity_label(EntityId("Q1741"), "Vienna");
    g.set_entity_label(EntityId("Q183"), "Germany");
    g.set_entity_label(EntityId("Q40"), "Austria");
    g.set_relation_label(RelationId("P19"), "place of birth");
    g.set_relation_label(RelationId("P20"), "place of death");
    g.set_relation_label(RelationId("P17"), "country");
    return g;
}

}  // namespace

TEST_SUITE("providers") {

TEST_CASE("replay store round trip and miss policies") {
    testsupport::TempDir dir("replay");
    ReplayStore store;
    store.record("suggest", json{{"prefix", "where was"}}, json::array({"where was chopin born"}));
    store.record("qa_tag", json{{"question", "where was chopin born?"}}, "Żelazowa Wola");
    store.save(dir / "r.jsonl");

    auto loaded = ReplayStore::load(dir / "r.jsonl");
    CHECK(loaded.size() == 2);
    ReplaySuggest suggest(loaded);
    CHECK(suggest.suggest("where was") == std::vector<std::string>{"where was chopin born"});
    ReplayQaTag tag(loaded);
    CHECK(tag.tag("Where was Chopin born", "irrelevant") == "Żelazowa Wola");

    CHECK_THROWS_AS(suggest.suggest("who"), ProviderError);
    CHECK(loaded.misses() == 1);
    loaded.set_policy(MissPolicy::empty);
    CHECK(suggest.suggest("who").empty());
    CHECK(tag.tag("Who?", "First. Second.").empty());
    loaded.set_policy(MissPolicy::echo);
    CHECK(suggest.suggest("who") == std::vector<std::string>{"who"});
    CHECK(tag.tag("Who?", "First. Second.") == "First.");
    CHECK(loaded.misses() == 5);

    ReplayArticleFetch fetch(loaded);
    CHECK_THROWS_AS(fetch.fetch("Chopin"), ProviderError);
    CHECK(ReplayStore::load(dir / "absent.jsonl").size() == 0);
    CHECK(parse_miss_policy("echo") == MissPolicy::echo);
    CHECK_THROWS_AS(parse_miss_policy("ignore"), ValidationError);
}

TEST_CASE("saved stores are byte-stable regardless of insertion order") {
    testsupport::TempDir dir("replay-order");
    ReplayStore a, b;
    for (int i = 0; i < 20; ++i) a.record("llm", json{{"prompt", std::to_string(i)}}, std::to_string(i * i));
    for (int i = 19; i >= 0; --i) b.record("llm", json{{"prompt", std::to_string(i)}}, std::to_string(i * i));
    a.save(dir / "a.jsonl");
    b.save(dir / "b.jsonl");
    CHECK(testsupport::read_file(dir / "a.jsonl") == testsupport::read_file(dir / "b.jsonl"));
}

TEST_CASE("local providers") {
    CapitalizedNer ner;
    auto spans = ner.entities("Where was Frederic Chopin born in Poland?");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].end - spans[0].begin == std::string("Frederic Chopin").size());
    CHECK(spans[1].end - spans[1].begin == 6);

    PhraseNer phrase({"van beethoven"});
    auto p = phrase.entities("Ludwig VAN Beethoven");
    REQUIRE(p.size() == 1);
    CHECK(p[0].begin == 7);

    TitleIndexSearch search({{"Vienna", EntityId("Q1741")}, {"Vienna State Opera", EntityId("Q209")},
                             {"Bonn", EntityId("Q586")}});
    auto hits = search.search("vienna");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].title == "Vienna");

    OverlapReranker rerank;
    std::vector<std::string> passages{"Beethoven was born in Bonn.", "Vienna is a city."};
    auto scores = rerank.score("Where was Beethoven born?", passages);
    CHECK(scores[0] == doctest::Approx(3.0 / 4.0));
    CHECK(scores[1] == doctest::Approx(0.0));

    RuleBasedPosTagger pos;
    std::vector<std::string> toks{"Where", "was", "Beethoven", "born"};
    auto tags = pos.tag(toks);
    CHECK(tags[2] == PosTag::proper_noun);

    EchoFactsLlm llm(2);
    CHECK(llm.complete("intro\n(A, b, C)\n(A, d, E)\n(A, f, G)\nQuestion: x") == "C, E");
    FirstSentenceTagger first;
    CHECK(first.tag("q", "One  two. Three.") == "One two.");
}

TEST_CASE("dictionary lemmatizer loads a table") {
    testsupport::TempDir dir("lemmas");
    testsupport::write_file(dir / "l.tsv", "Died\tdie\nborn\tbear\n");
    auto lem = DictionaryLemmatizer::load(dir / "l.tsv");
    CHECK(lem.lemma("died") == "die");
    CHECK(lem.lemma("unknown") == "unknown");
    testsupport::write_file(dir / "bad.tsv", "ok\tok\nbroken\n");
    CHECK_THROWS_AS(DictionaryLemmatizer::load(dir / "bad.tsv"), LoadError);
}

TEST_CASE("wikitext conversion keeps prose and links") {
    auto a = wikitext_to_article(
        "Bonn", "{{Infobox city|name=Bonn}}\n== History ==\n'''Bonn''' lies on the [[Rhine|river Rhine]] in "
                "[[Germany]].<ref>cite</ref>\n");
    CHECK(a.words == std::vector<std::string>{"Bonn", "lies", "on", "the", "river", "Rhine", "in", "Germany."});
    REQUIRE(a.links.size() == 2);
    CHECK(a.links[0].target_title == "Rhine");
    CHECK(a.links[0].word_start == 4);
    CHECK(a.links[0].word_end == 6);
}

TEST_CASE("http clients retry, cache and report failures") {
    std::atomic<int> calls{0}, flaky{0};
    httplib::Server server;
    server.Get("/complete/search", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        auto q = req.get_param_value("q");
        res.set_content(json::array({q, {q + " born", q + " died"}}).dump(), "application/json");
    });
    server.Post("/rerank", [&](const httplib::Request& req, httplib::Response& res) {
        if (flaky++ == 0) {
            res.status = 503;
            return;
        }
        auto body = json::parse(req.body);
        std::vector<double> s(body["passages"].size(), 0.5);
        res.set_content(json{{"scores", s}}.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    testsupport::TempDir dir("http");
    ResponseCache cache(dir.path());
    HttpOptions opts;
    opts.base_url = "http://127.0.0.1:" + std::to_string(port);
    opts.cache = &cache;
    opts.retries = 2;

    HttpSuggest suggest(opts, "en");
    CHECK(suggest.suggest("chopin") == std::vector<std::string>{"chopin born", "chopin died"});
    CHECK(suggest.suggest("chopin").size() == 2);
    CHECK(calls == 1);

    HttpReranker rerank(opts);
    std::vector<std::string> passages{"a", "b"};
    CHECK(rerank.score("q", passages) == std::vector<double>{0.5, 0.5});
    CHECK(flaky == 2);

    HttpOptions missing = opts;
    missing.cache = nullptr;
    missing.base_url += "/nothing";
    HttpSuggest broken(missing, "en");
    CHECK_THROWS_AS(broken.suggest("x"), ProviderError);

    server.stop();
    worker.join();
}

}

TEST_SUITE("prompts") {

TEST_CASE("kbqa prompts match the published wording") {
    auto plain = prompts::build_kbqa_prompt("Who?", nullptr);
    CHECK(plain == "Question: Who?\nEntities which are the answer: ");
    eval::RetrievedContext ctx;
    ctx.triples.push_back({{}, "(A, b, C)", 1.0});
    ctx.triples.push_back({{}, "(D, e, F)", 0.5});
    auto kg = prompts::build_kbqa_prompt("Who?", &ctx);
    CHECK(kg.rfind("Below are facts in the form of knowledge graph triples", 0) == 0);
    CHECK(kg.find("\n(A, b, C)\n(D, e, F)\nQuestion: Who?\nEntities which are the answer: ") != std::string::npos);
    auto pl = prompts::build_kbqa_prompt("Kto?", &ctx, prompts::Language::pl);
    CHECK(pl.rfind("Poniżej znajdują się fakty", 0) == 0);
    eval::RetrievedContext empty;
    CHECK(prompts::build_kbqa_prompt("Who?", &empty) == plain);
}

TEST_CASE("chat prompts alternate roles and end with the user turn") {
    for (auto lang : {prompts::Language::en, prompts::Language::pl}) {
        auto tagging = prompts::tagging_prompt("Q?", "CTX", lang);
        REQUIRE(tagging.size() >= 3);
        for (std::size_t i = 0; i < tagging.size(); ++i) CHECK(tagging[i].role == (i % 2 ? "assistant" : "user"));
        CHECK(tagging.back().role == "user");
        CHECK(tagging.back().content.find("[START]CTX[END]") != std::string::npos);
        CHECK(tagging.back().content.find("Q?") != std::string::npos);
        for (const auto& turns : {prompts::inflection_prompt("Q?", lang), prompts::paraphrase_prompt("Q?", lang)}) {
            REQUIRE_FALSE(turns.empty());
            CHECK(turns.back().role == "user");
            CHECK(turns.back().content.find("Q?") != std::string::npos);
            CHECK(turns.back().content.find("{question}") == std::string::npos);
        }
    }
}

TEST_CASE("substitution and quote stripping") {
    CHECK(prompts::substitute("{a} {b} {c", {{"a", "{b}"}, {"b", "x"}}) == "{b} x {c");
    CHECK(prompts::strip_quotes("  \"April 21, 1926\"\n") == "April 21, 1926");
    CHECK(prompts::strip_quotes("April 21, 1926\"") == "April 21, 1926");
    CHECK(prompts::strip_quotes("plain") == "plain");
    CHECK(prompts::parse_language("pl") == prompts::Language::pl);
    CHECK_THROWS_AS(prompts::parse_language("de"), ValidationError);
    CHECK_THROWS_AS(prompts::asset("missing.txt"), NotFoundError);
    auto turns = prompts::parse_chat("User:\nhello\n\nthere\nAssistant:\nhi\n");
    REQUIRE(turns.size() == 2);
    CHECK(turns[0].content == "hello\n\nthere");
}

}

TEST_SUITE("kg_retrieval") {

TEST_CASE("hashing embedder is deterministic and normalized by cosine") {
    eval::HashingEmbedder e(512);
    std::vector<std::string> texts{"Where was Beethoven born?", "where was beethoven born", "Vienna"};
    auto v = e.embed(texts);
    REQUIRE(v.size() == 3);
    CHECK(v[0].size() == 512);
    CHECK(eval::cosine(v[0], v[1]) == doctest::Approx(1.0));
    CHECK(eval::cosine(v[0], v[2]) < 0.5);
    CHECK(e.embed(texts) == v);
    std::vector<float> zero(512, 0.0f);
    CHECK(eval::cosine(zero, v[0]) == 0.0);
}

TEST_CASE("the best triple for a question comes first") {
    auto g = composer_graph();
    eval::HashingEmbedder e;
    auto ctx = eval::retrieve_triples(g, "place of birth of Ludwig van Beethoven", {EntityId("Q255")}, 2, e, 40);
    REQUIRE_FALSE(ctx.triples.empty());
    CHECK(ctx.triples[0].text == "(Ludwig van Beethoven, place of birth, Bonn)");
    for (std::size_t i = 1; i < ctx.triples.size(); ++i) CHECK(ctx.triples[i - 1].score >= ctx.triples[i].score);
    // P36 has no label, so that triple is never verbalized.
    for (const auto& t : ctx.triples) CHECK(t.triple.relation != RelationId("P36"));
    CHECK(ctx.triples.size() == 4);

    auto one = eval::retrieve_triples(g, "place of birth", {EntityId("Q255")}, 1, e, 40);
    CHECK(one.triples.size() == 2);
    CHECK(eval::retrieve_triples(g, "q", {EntityId("Q255")}, 2, e, 1).triples.size() == 1);
    CHECK(eval::retrieve_triples(g, "q", {EntityId("Q255")}, 0, e).triples.empty());
    CHECK(eval::retrieve_triples(g, "q", {}, 2, e).triples.empty());
}

}
