#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qaforge/bgp_query.hpp"
#include "qaforge/kg_store.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using qaforge::EntityId;
using qaforge::RelationId;

inline fs::path source_dir() { return fs::path(QAFORGE_SOURCE_DIR); }
inline fs::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = fs::temp_directory_path() / ("qaforge-" + tag + "-" + std::to_string(rng()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

// Small deterministic generator helpers over mt19937_64.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
    std::size_t range(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    bool chance(double p) { return static_cast<double>(rng_() % 1000000) < p * 1000000.0; }
    double unit() { return static_cast<double>(rng_() % 1000000007) / 1000000007.0; }
    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

struct RandomGraph {
    qaforge::kg::KnowledgeGraph graph;
    std::vector<std::string> entities;
    std::vector<std::string> relations;
};

// Up to max_entities entities, a handful of relations and a random edge set,
// everything labeled.
inline RandomGraph random_graph(Gen& g, std::size_t max_entities = 30, std::size_t max_relations = 5,
                                double density = 2.0) {
    RandomGraph r;
    auto n = g.range(2, max_entities);
    auto m = g.range(1, max_relations);
    for (std::size_t i = 0; i < n; ++i) {
        r.entities.push_back("Q" + std::to_string(i + 1));
        r.graph.set_entity_label(EntityId(r.entities.back()), "entity " + std::to_string(i + 1));
    }
    for (std::size_t i = 0; i < m; ++i) {
        r.relations.push_back("P" + std::to_string(i + 1));
        r.graph.set_relation_label(RelationId(r.relations.back()), "relation " + std::to_string(i + 1));
    }
    auto edges = static_cast<std::size_t>(density * static_cast<double>(n));
    edges = g.range(0, edges);
    for (std::size_t i = 0; i < edges; ++i)
        r.graph.add_triple({EntityId(g.pick(r.entities)), RelationId(g.pick(r.relations)), EntityId(g.pick(r.entities))});
    return r;
}

// Random query with 1..max_patterns patterns over entity variables ?a ?b ?c,
// an optional relation variable ?p and constants from the graph.
inline qaforge::bgp::BgpQuery random_query(Gen& g, const RandomGraph& rg, std::size_t max_patterns = 3) {
    using qaforge::bgp::Term;
    const std::vector<std::string> vars{"?a", "?b", "?c"};
    qaforge::bgp::BgpQuery q;
    q.select_variable = "?a";
    auto count = g.range(1, max_patterns);
    auto node = [&]() -> Term {
        if (g.chance(0.65)) return Term::variable(g.pick(vars));
        return Term::entity(g.pick(rg.entities));
    };
    for (std::size_t i = 0; i < count; ++i) {
        qaforge::bgp::TriplePattern p;
        p.subject = node();
        p.predicate = g.chance(0.2) ? Term::variable("?p") : Term::relation(g.pick(rg.relations));
        p.object = node();
        q.patterns.push_back(p);
    }
    // The select variable must occur as a subject or object.
    auto& first = q.patterns[g.below(q.patterns.size())];
    if (g.chance(0.5))
        first.subject = Term::variable("?a");
    else
        first.object = Term::variable("?a");
    return q;
}

// Tries every combination of graph triples, one per pattern, and keeps the
// consistent ones. Cost |T|^patterns, fine for tiny graphs.
inline std::set<EntityId> brute_force_bgp(const qaforge::kg::KnowledgeGraph& graph, const qaforge::bgp::BgpQuery& q) {
    const auto& triples = graph.triples();
    std::set<EntityId> answers;
    std::vector<std::size_t> choice(q.patterns.size(), 0);
    if (triples.empty()) return answers;
    for (;;) {
        std::map<std::string, std::string> bind;
        bool ok = true;
        auto unify = [&](const qaforge::bgp::Term& term, const std::string& value) {
            if (!term.is_variable()) return term.value == value;
            auto [it, inserted] = bind.emplace(term.value, value);
            return inserted || it->second == value;
        };
        for (std::size_t i = 0; i < q.patterns.size() && ok; ++i) {
            const auto& t = triples[choice[i]];
            const auto& p = q.patterns[i];
            ok = unify(p.subject, t.head.str()) && unify(p.predicate, t.relation.str()) && unify(p.object, t.tail.str());
        }
        if (ok) answers.insert(EntityId(bind.at(q.select_variable)));
        std::size_t k = 0;
        while (k < choice.size() && ++choice[k] == triples.size()) choice[k++] = 0;
        if (k == choice.size()) break;
    }
    return answers;
}

// Undirected shortest-path distances by repeated relaxation over the edge
// list, then every triple with an endpoint closer than `hops`.
inline std::set<qaforge::kg::Triple> bfs_oracle(const qaforge::kg::KnowledgeGraph& graph,
                                                const std::set<EntityId>& seeds, unsigned hops) {
    std::map<EntityId, unsigned> dist;
    for (const auto& s : seeds) dist[s] = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& t : graph.triples()) {
            for (int dir = 0; dir < 2; ++dir) {
                const auto& from = dir == 0 ? t.head : t.tail;
                const auto& to = dir == 0 ? t.tail : t.head;
                auto f = dist.find(from);
                if (f == dist.end()) continue;
                auto candidate = f->second + 1;
                auto it = dist.find(to);
                if (it == dist.end() || it->second > candidate) {
                    dist[to] = candidate;
                    changed = true;
                }
            }
        }
    }
    std::set<qaforge::kg::Triple> out;
    for (const auto& t : graph.triples()) {
        auto near = [&](const EntityId& e) {
            auto it = dist.find(e);
            return it != dist.end() && it->second < hops;
        };
        if (near(t.head) || near(t.tail)) out.insert(t);
    }
    return out;
}

inline std::set<qaforge::kg::Triple> triple_set(const qaforge::kg::KnowledgeGraph& g) {
    return {g.triples().begin(), g.triples().end()};
}

// Reference BM25 straight from the formula: Robertson idf floored at zero,
// one term per query token occurrence.
struct BruteBm25 {
    std::vector<std::vector<std::string>> docs;
    double k1 = 1.2;
    double b = 0.75;

    double score(const std::vector<std::string>& query, std::size_t d) const {
        double avg = 0;
        for (const auto& doc : docs) avg += static_cast<double>(doc.size());
        avg /= static_cast<double>(docs.size());
        const double N = static_cast<double>(docs.size());
        double s = 0;
        for (const auto& term : query) {
            double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), term));
            if (tf == 0) continue;
            double n = 0;
            for (const auto& doc : docs)
                if (std::find(doc.begin(), doc.end(), term) != doc.end()) n += 1;
            double idf = std::max(0.0, std::log((N - n + 0.5) / (n + 0.5)));
            double len = static_cast<double>(docs[d].size());
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * (len / avg)));
        }
        return s;
    }

    bool matches(const std::vector<std::string>& query, std::size_t d) const {
        for (const auto& term : query)
            if (std::find(docs[d].begin(), docs[d].end(), term) != docs[d].end()) return true;
        return false;
    }
};

}  // namespace testsupport
