// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is non-zero when any criterion fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "demo.hpp"
#include "grounding_suite.hpp"
#include "metric_oracles.hpp"
#include "qaforge/bm25.hpp"
#include "qaforge/metrics.hpp"
#include "qaforge/passage_builder.hpp"
#include "qaforge/random.hpp"
#include "qaforge/records.hpp"
#include "qaforge/template_gen.hpp"
#include "qaforge/verification.hpp"
#include "template_cases.hpp"

using namespace qaforge;
using testsupport::Gen;
namespace oracle = testsupport::oracle;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Failure counter with the first few mismatch descriptions.
class Tally {
public:
    void check(bool ok, const std::string& what) {
        ++checks_;
        if (ok) return;
        ++failures_;
        if (notes_.size() < 3) notes_.push_back(what);
    }
    bool ok() const { return failures_ == 0; }
    std::size_t checks() const { return checks_; }
    std::string summary() const {
        std::ostringstream os;
        os << checks_ - failures_ << "/" << checks_ << " checks";
        for (const auto& n : notes_) os << "; " << n;
        return os.str();
    }

private:
    std::size_t checks_ = 0, failures_ = 0;
    std::vector<std::string> notes_;
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }

Outcome bgp_equivalence() {
    Gen gen(20240611);
    Tally t;
    double exec_seconds = 0;
    std::size_t queries = 0;
    for (int i = 0; i < 100; ++i) {
        auto rg = testsupport::random_graph(gen, 30);
        for (int j = 0; j < 5; ++j) {
            auto q = testsupport::random_query(gen, rg, 3);
            auto start = Clock::now();
            auto got = bgp::execute(rg.graph, q);
            exec_seconds += seconds_since(start);
            ++queries;
            t.check(got == testsupport::brute_force_bgp(rg.graph, q), "graph " + std::to_string(i) + ": " + bgp::to_string(q));
        }
    }
    t.check(exec_seconds < 10.0, "execution took " + std::to_string(exec_seconds) + " s");
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu queries on 100 graphs, execute %.3f s; ", queries, exec_seconds);
    return {t.ok(), buf + t.summary()};
}

Outcome worked_templates() {
    auto g = kg::load_graph(testsupport::fixture("beethoven/triples.tsv"), testsupport::fixture("beethoven/labels.tsv"));
    auto all = templates::load_templates(testsupport::source_dir() / "assets/templates/templates.en.json");
    Tally t;
    for (const auto& c : testsupport::worked_template_cases()) {
        auto it = std::find_if(all.begin(), all.end(), [&](const auto& x) { return x.name == c.template_name; });
        if (it == all.end()) {
            t.check(false, "no template " + c.template_name);
            continue;
        }
        auto inst = templates::instantiate(g, *it, c.inputs);
        std::set<std::string> got;
        for (const auto& a : inst.answers) got.insert(a.str());
        t.check(got == c.answers, c.template_name + " answers differ");
        t.check(inst.question_raw == c.question, c.template_name + " question differs");
    }
    return {t.ok() && t.checks() == 16, "8 templates; " + t.summary()};
}

eval::Ranking ranking_of(const std::string& qid, const std::vector<std::string>& ids) {
    eval::Ranking r{qid, {}};
    double s = static_cast<double>(ids.size());
    for (const auto& id : ids) r.docs.push_back({id, s--});
    return r;
}

Outcome metric_oracles() {
    Tally t;
    Gen g(4242);

    // Worked values.
    std::vector<eval::Ranking> rank3{ranking_of("q", {"d1", "d2", "d3"})};
    eval::Qrels one{{"q", {"d3"}}};
    std::vector<std::size_t> k10{10};
    t.check(close(eval::ir_metrics(rank3, one, k10)[10].ndcg, 0.5), "rank-3 ndcg@10");
    t.check(close(eval::token_f1("Danube river", "the Danube river basin"), 2.0 / 3.0), "2-of-4 f1");
    std::map<std::string, std::string> ka, kb;
    int n = 0;
    for (auto [count, x, y] : {std::tuple{45, "yes", "yes"}, {15, "yes", "no"}, {25, "no", "yes"}, {15, "no", "no"}})
        for (int i = 0; i < count; ++i, ++n) {
            ka["i" + std::to_string(n)] = x;
            kb["i" + std::to_string(n)] = y;
        }
    auto worked = verification::agreement(ka, kb);
    t.check(worked.kappa && std::abs(*worked.kappa - 0.1304) < 5e-5, "worked kappa");

    std::size_t cases = 0;
    for (int i = 0; i < 60; ++i, ++cases) {
        std::vector<std::string> preds, golds;
        double em = 0, f1 = 0;
        auto m = g.range(1, 10);
        for (std::size_t j = 0; j < m; ++j) {
            preds.push_back(oracle::random_phrase(g, 5));
            golds.push_back(g.chance(0.3) ? preds.back() : oracle::random_phrase(g, 5));
            em += oracle::em(preds.back(), golds.back());
            f1 += oracle::f1(preds.back(), golds.back());
        }
        auto s = eval::mrc_scores(preds, golds);
        t.check(close(s.exact_match, em / static_cast<double>(m)) && close(s.f1, f1 / static_cast<double>(m)),
                "em/f1 case " + std::to_string(i));
    }

    for (int i = 0; i < 60; ++i, ++cases) {
        eval::Qrels qrels;
        std::vector<eval::Ranking> rankings;
        std::vector<std::size_t> ks{1, 5, 10, 100};
        std::map<std::size_t, oracle::IrValues> expect;
        auto nq = g.range(1, 8);
        for (std::size_t q = 0; q < nq; ++q) {
            auto qid = "q" + std::to_string(q);
            std::set<std::string> rel;
            for (auto r = g.range(1, 4); rel.size() < r;) rel.insert("d" + std::to_string(g.below(30)));
            std::vector<std::string> order;
            for (auto idx : seeded_permutation(30, g.below(1000))) order.push_back("d" + std::to_string(idx));
            order.resize(g.range(0, 30));
            qrels[qid] = rel;
            rankings.push_back(ranking_of(qid, order));
            for (auto k : ks) {
                auto v = oracle::ir_one(order, rel, k);
                expect[k].ndcg += v.ndcg / static_cast<double>(nq);
                expect[k].mrr += v.mrr / static_cast<double>(nq);
                expect[k].recall += v.recall / static_cast<double>(nq);
            }
        }
        auto got = eval::ir_metrics(rankings, qrels, ks);
        for (auto k : ks)
            t.check(close(got[k].ndcg, expect[k].ndcg) && close(got[k].mrr, expect[k].mrr) &&
                        close(got[k].recall, expect[k].recall),
                    "ir case " + std::to_string(i) + " k=" + std::to_string(k));
    }

    const std::vector<std::string> cats{"correct", "incorrect_question", "incorrect_passage", "incorrect_fragment"};
    for (int i = 0; i < 60; ++i, ++cases) {
        std::map<std::string, std::string> a, b;
        auto items = g.range(2, 80), ncat = g.range(2, 4);
        for (std::size_t j = 0; j < items; ++j) {
            auto id = "i" + std::to_string(j);
            a[id] = cats[g.below(ncat)];
            b[id] = g.chance(0.6) ? a[id] : cats[g.below(ncat)];
        }
        double po = 0;
        auto expect = oracle::kappa(a, b, &po);
        auto r = verification::agreement(a, b);
        bool same = close(r.accuracy, po) && r.kappa.has_value() == expect.has_value() &&
                    (!expect || close(*r.kappa, *expect));
        t.check(same, "kappa case " + std::to_string(i));
    }

    for (int i = 0; i < 60; ++i) {
        std::vector<eval::KbqaGold> gold;
        std::vector<std::pair<std::string, std::vector<std::string>>> plain;
        std::map<std::string, std::string> responses;
        for (std::size_t q = 0, nq = g.range(1, 12); q < nq; ++q) {
            eval::KbqaGold kg{"q" + std::to_string(q), {}};
            std::vector<std::string> labels;
            bool usable = true;
            for (std::size_t a = 0, na = g.range(1, 3); a < na; ++a) {
                labels.push_back(oracle::random_phrase(g, 2));
                usable = usable && !oracle::normalize(labels.back()).empty();
                kg.answers.push_back({EntityId("Q" + std::to_string(a + 1)), labels.back()});
            }
            if (!usable) continue;
            gold.push_back(kg);
            plain.push_back({kg.question_id, labels});
            if (g.chance(0.9))
                responses[kg.question_id] = oracle::random_phrase(g, 8) + " " + (g.chance(0.5) ? labels[0] : "");
        }
        if (gold.empty()) continue;
        ++cases;
        t.check(close(eval::kbqa_accuracy(responses, gold), oracle::kbqa(responses, plain)),
                "kbqa case " + std::to_string(i));
    }
    return {t.ok() && cases >= 230, std::to_string(cases) + " random cases plus worked values; " + t.summary()};
}

Outcome nhop_sampling(const fs::path& demo_out) {
    Tally t;
    Gen gen(777);
    for (int i = 0; i < 100; ++i) {
        auto rg = testsupport::random_graph(gen, 30);
        std::set<EntityId> seeds{EntityId(gen.pick(rg.entities))};
        if (gen.chance(0.3)) seeds.insert(EntityId(gen.pick(rg.entities)));
        std::set<kg::Triple> prev;
        for (unsigned hops = 0; hops <= 3; ++hops) {
            auto cur = testsupport::triple_set(kg::neighborhood(rg.graph, seeds, hops));
            t.check(cur == testsupport::bfs_oracle(rg.graph, seeds, hops), "graph " + std::to_string(i));
            t.check(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()), "not monotone");
            prev = std::move(cur);
        }
    }
    auto nested = [&](const fs::path& small, const fs::path& large, const std::string& name) {
        auto a = testsupport::triple_set(kg::load_graph(small / "wikidata1h.triples.tsv", small / "wikidata1h.labels.tsv"));
        auto b = testsupport::triple_set(kg::load_graph(large / "wikidata2h.triples.tsv", large / "wikidata2h.labels.tsv"));
        t.check(!a.empty() && std::includes(b.begin(), b.end(), a.begin(), a.end()), name + ": 1H not within 2H");
    };
    nested(demo_out / "kg", demo_out / "kg", "demo");

    auto beethoven =
        kg::load_graph(testsupport::fixture("beethoven/triples.tsv"), testsupport::fixture("beethoven/labels.tsv"));
    std::set<EntityId> seeds{EntityId("Q255")};
    auto one = testsupport::triple_set(kg::neighborhood(beethoven, seeds, 1));
    auto two = testsupport::triple_set(kg::neighborhood(beethoven, seeds, 2));
    t.check(std::includes(two.begin(), two.end(), one.begin(), one.end()), "beethoven: 1H not within 2H");
    return {t.ok(), "100 random graphs, hops 0..3, demo and worked graphs; " + t.summary()};
}

Outcome segmentation() {
    Tally t;
    auto article = [](std::size_t n) {
        Article a;
        a.title = "T";
        a.page_id = "pg";
        for (std::size_t i = 0; i < n; ++i) a.words.push_back("w" + std::to_string(i));
        return a;
    };
    for (std::size_t n = 1; n <= 500; ++n) {
        auto ps = passages::segment(article(n));
        std::vector<bool> covered(n, false);
        bool ok = !ps.empty();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto& p = ps[i];
            ok = ok && p.word_end - p.word_start <= 120 && p.word_start % 60 == 0 && p.word_end <= n;
            for (auto w = p.word_start; w < p.word_end && w < n; ++w) covered[w] = true;
            // No window lies inside another.
            for (std::size_t j = 0; j < ps.size(); ++j)
                if (j != i) ok = ok && !(ps[j].word_start <= p.word_start && p.word_end <= ps[j].word_end);
        }
        ok = ok && std::all_of(covered.begin(), covered.end(), [](bool b) { return b; });
        t.check(ok, "n=" + std::to_string(n));
    }
    t.check(passages::segment(article(120)).size() == 1, "120 words");
    t.check(passages::segment(article(180)).size() == 2, "180 words");
    return {t.ok(), "word counts 1..500; " + t.summary()};
}

Outcome grounding() {
    providers::IdentityLemmatizer identity;
    testsupport::Lexicon lex(600);
    providers::DictionaryLemmatizer dict(lex.table());
    auto verbatim = testsupport::run_grounding(testsupport::grounding_cases(101, 300, false), identity);
    auto inflected = testsupport::run_grounding(testsupport::grounding_cases(102, 400, true, 0.03), dict);
    double rate = static_cast<double>(inflected.exact) / static_cast<double>(inflected.total);
    bool pass = verbatim.exact == verbatim.total && rate >= 0.95 && inflected.failed_at_or_above_threshold == 0 &&
                verbatim.failed_at_or_above_threshold == 0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "verbatim %zu/%zu exact; inflected %zu/%zu exact (%.1f%%), %zu failures, %zu at or above 0.8",
                  verbatim.exact, verbatim.total, inflected.exact, inflected.total, 100.0 * rate, inflected.failed,
                  inflected.failed_at_or_above_threshold);
    return {pass, buf};
}

Outcome bm25_ranking() {
    Gen g(9001);
    std::vector<std::string> vocab;
    for (int i = 0; i < 80; ++i) vocab.push_back("t" + std::to_string(i));
    std::vector<eval::Bm25Index::Document> docs;
    testsupport::BruteBm25 brute;
    for (int d = 0; d < 200; ++d) {
        std::vector<std::string> toks;
        std::string text;
        for (std::size_t i = 0, len = g.range(5, 40); i < len; ++i) {
            toks.push_back(vocab[std::min(g.below(80), g.below(80))]);
            text += (i ? " " : "") + toks.back();
        }
        char id[8];
        std::snprintf(id, sizeof id, "p%03d", d);
        docs.push_back({id, text});
        brute.docs.push_back(toks);
    }
    eval::Bm25Index idx(docs);
    Tally t;
    for (int q = 0; q < 100; ++q) {
        std::vector<std::string> query;
        std::string text;
        for (std::size_t i = 0, len = g.range(1, 5); i < len; ++i) {
            query.push_back(g.pick(vocab));
            text += (i ? " " : "") + query.back();
        }
        std::vector<std::pair<double, std::string>> scored;
        for (std::size_t d = 0; d < docs.size(); ++d)
            if (brute.matches(query, d)) scored.push_back({brute.score(query, d), docs[d].id});
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
        if (scored.size() > 10) scored.resize(10);
        auto got = idx.search(text, 10);
        std::vector<std::string> a, b;
        for (const auto& d : got.docs) a.push_back(d.id);
        for (const auto& s : scored) b.push_back(s.second);
        t.check(a == b, "query " + std::to_string(q) + " '" + text + "'");
    }
    return {t.ok(), "100 queries over 200 passages; " + t.summary()};
}

std::size_t count_lines(const fs::path& p, const std::string& must_contain = {}) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && (must_contain.empty() || line.find(must_contain) != std::string::npos)) ++n;
    return n;
}

Outcome demo_pipeline(const fs::path& a, const fs::path& b, double first_run_seconds) {
    Tally t;
    auto start = Clock::now();
    pipeline::Pipeline(testsupport::demo_config(b)).run_all();
    double second = seconds_since(start);
    t.check(first_run_seconds < 60.0 && second < 60.0, "too slow");

    auto ir = count_lines(a / "datasets/ir.jsonl");
    auto mrc = count_lines(a / "datasets/mrc.jsonl");
    auto kbqa_natural = count_lines(a / "datasets/kbqa.jsonl", "\"source\":\"natural\"");
    auto kbqa_all = count_lines(a / "datasets/kbqa.jsonl");
    t.check(ir >= mrc && mrc >= kbqa_natural && kbqa_natural > 0, "dataset sizes out of order");

    auto ha = testsupport::tree_hashes(a), hb = testsupport::tree_hashes(b);
    t.check(!ha.empty() && ha == hb, "outputs differ between runs");

    std::map<std::string, std::size_t> chain;
    for (const auto& row : pipeline::pipeline_chain(a)) chain[row.label] = row.count;
    const std::vector<std::vector<std::string>> monotone{
        {"Questions with successfully parsed tag", "Questions with correct passage",
         "Questions with correct textual answer", "Questions with verified answer entities",
         "Questions with verified topic entities", "KBQA examples (natural)"},
        {"Executed templates", "After filtering", "After verification"},
    };
    for (const auto& rows : monotone)
        for (std::size_t i = 0; i < rows.size(); ++i) {
            t.check(chain.contains(rows[i]), "missing row " + rows[i]);
            if (i > 0 && chain.contains(rows[i]) && chain.contains(rows[i - 1]))
                t.check(chain[rows[i]] <= chain[rows[i - 1]], rows[i] + " grows");
        }
    t.check(chain["IR examples"] == ir && chain["MRC examples"] == mrc, "reports disagree with datasets");

    char buf[200];
    std::snprintf(buf, sizeof buf, "runs %.2f s and %.2f s; IR %zu >= MRC %zu >= KBQA %zu (with templates %zu); %zu files identical; ",
                  first_run_seconds, second, ir, mrc, kbqa_natural, kbqa_all, ha.size());
    return {t.ok(), buf + t.summary()};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::err);
    testsupport::TempDir run_a("accept-a"), run_b("accept-b");

    auto start = Clock::now();
    std::string setup_error;
    try {
        pipeline::Pipeline(testsupport::demo_config(run_a.path())).run_all();
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    double first_run = seconds_since(start);

    auto needs_demo = [&](std::function<Outcome()> f) {
        return [f, &setup_error]() -> Outcome {
            if (!setup_error.empty()) return {false, "demo pipeline failed: " + setup_error};
            return f();
        };
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"bgp execution equals brute-force enumeration", bgp_equivalence},
        {"worked template examples return their answers", worked_templates},
        {"metrics equal independent oracles", metric_oracles},
        {"n-hop sampling equals bfs and nests", needs_demo([&] { return nhop_sampling(run_a.path()); })},
        {"passage segmentation properties", segmentation},
        {"span grounding recovers offsets", grounding},
        {"bm25 top ten equals brute force", bm25_ranking},
        {"end-to-end demo pipeline", needs_demo([&] { return demo_pipeline(run_a.path(), run_b.path(), first_run); })},
    };

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        auto t0 = Clock::now();
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %-48s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
