#include "qaforge/bgp_query.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "qaforge/errors.hpp"

namespace qaforge::bgp {

Term Term::variable(std::string name) {
    if (name.empty() || name.front() != '?') name.insert(name.begin(), '?');
    return Term{TermKind::variable, std::move(name)};
}

namespace {

enum class TokKind { word, open, close, dot, end };

struct Tok {
    TokKind kind;
    std::string text;
    std::size_t pos;
};

bool id_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::vector<Tok> lex(std::string_view s) {
    std::vector<Tok> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '{') {
            out.push_back({TokKind::open, "{", i++});
        } else if (c == '}') {
            out.push_back({TokKind::close, "}", i++});
        } else if (c == '.') {
            out.push_back({TokKind::dot, ".", i++});
        } else {
            std::size_t start = i;
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '{' && s[i] != '}' &&
                   s[i] != '.')
                ++i;
            out.push_back({TokKind::word, std::string(s.substr(start, i - start)), start});
        }
    }
    out.push_back({TokKind::end, "", s.size()});
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
           });
}

bool valid_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), id_char);
}

Term parse_term(const Tok& tok, bool predicate_position) {
    const std::string& w = tok.text;
    if (!w.empty() && w.front() == '?') {
        if (!valid_name(std::string_view(w).substr(1))) throw ParseError(tok.pos, "invalid variable name '" + w + "'");
        return Term::variable(w);
    }
    auto colon = w.find(':');
    if (colon == std::string::npos) throw ParseError(tok.pos, "expected prefixed id or variable, got '" + w + "'");
    std::string prefix = w.substr(0, colon);
    std::string id = w.substr(colon + 1);
    if (!valid_name(id)) throw ParseError(tok.pos + colon + 1, "invalid id '" + id + "'");
    if (prefix == "wd") {
        if (predicate_position) throw ParseError(tok.pos, "entity constant in predicate position");
        return Term::entity(id);
    }
    if (prefix == "wdt") {
        if (!predicate_position) throw ParseError(tok.pos, "relation constant outside predicate position");
        return Term::relation(id);
    }
    throw ParseError(tok.pos, "unknown prefix '" + prefix + ":'");
}

}  // namespace

void validate(const BgpQuery& q) {
    if (q.select_variable.size() < 2 || q.select_variable.front() != '?')
        throw ParseError(0, "select variable must start with '?'");
    if (q.patterns.empty()) throw ParseError(0, "empty pattern list");
    if (q.patterns.size() > kMaxPatterns) throw ParseError(0, "more than " + std::to_string(kMaxPatterns) + " patterns");
    bool seen = false;
    for (const auto& p : q.patterns) {
        if (p.predicate.kind == TermKind::entity) throw ParseError(0, "entity constant in predicate position");
        if (p.subject.kind == TermKind::relation || p.object.kind == TermKind::relation)
            throw ParseError(0, "relation constant outside predicate position");
        if ((p.subject.is_variable() && p.subject.value == q.select_variable) ||
            (p.object.is_variable() && p.object.value == q.select_variable))
            seen = true;
    }
    if (!seen) throw ParseError(0, "select variable " + q.select_variable + " does not occur as subject or object");
}

BgpQuery parse_query(std::string_view text) {
    auto toks = lex(text);
    std::size_t i = 0;
    auto expect_word = [&](std::string_view kw) {
        if (toks[i].kind != TokKind::word || !iequals(toks[i].text, kw))
            throw ParseError(toks[i].pos, "expected " + std::string(kw));
        ++i;
    };

    BgpQuery q;
    expect_word("SELECT");
    if (toks[i].kind != TokKind::word || toks[i].text.empty() || toks[i].text.front() != '?')
        throw ParseError(toks[i].pos, "expected select variable");
    q.select_variable = parse_term(toks[i], false).value;
    ++i;
    if (toks[i].kind == TokKind::word && !iequals(toks[i].text, "WHERE"))
        throw ParseError(toks[i].pos, "only one select variable is supported");
    expect_word("WHERE");

    std::size_t depth = 0;
    while (toks[i].kind == TokKind::open) {
        ++depth;
        ++i;
    }
    if (depth == 0) throw ParseError(toks[i].pos, "expected '{'");
    if (depth > 2) throw ParseError(toks[i].pos, "too many '{'");

    while (toks[i].kind == TokKind::word) {
        std::array<Term, 3> terms;
        for (int k = 0; k < 3; ++k) {
            if (toks[i].kind != TokKind::word) throw ParseError(toks[i].pos, "incomplete triple pattern");
            terms[k] = parse_term(toks[i], k == 1);
            ++i;
        }
        if (toks[i].kind != TokKind::dot) throw ParseError(toks[i].pos, "missing '.' after triple pattern");
        ++i;
        q.patterns.push_back(TriplePattern{terms[0], terms[1], terms[2]});
    }
    if (toks[i].kind == TokKind::dot) throw ParseError(toks[i].pos, "unexpected '.'");
    std::size_t closed = 0;
    std::size_t close_pos = toks[i].pos;
    while (toks[i].kind == TokKind::close) {
        ++closed;
        ++i;
    }
    if (closed != depth) throw ParseError(close_pos, "unbalanced braces");
    if (toks[i].kind != TokKind::end) throw ParseError(toks[i].pos, "trailing input");
    if (q.patterns.empty()) throw ParseError(close_pos, "empty pattern list");
    if (q.patterns.size() > kMaxPatterns)
        throw ParseError(close_pos, "more than " + std::to_string(kMaxPatterns) + " patterns");

    validate(q);
    return q;
}

namespace {

std::string term_text(const Term& t) {
    switch (t.kind) {
        case TermKind::entity: return "wd:" + t.value;
        case TermKind::relation: return "wdt:" + t.value;
        case TermKind::variable: return t.value;
    }
    return {};
}

}  // namespace

std::string to_string(const BgpQuery& q) {
    std::string out = "SELECT " + q.select_variable + " WHERE {";
    for (const auto& p : q.patterns)
        out += " " + term_text(p.subject) + " " + term_text(p.predicate) + " " + term_text(p.object) + " .";
    out += " }";
    return out;
}

std::set<std::string> variables_of(std::span<const TriplePattern> patterns) {
    std::set<std::string> vars;
    for (const auto& p : patterns)
        for (const Term* t : {&p.subject, &p.predicate, &p.object})
            if (t->is_variable()) vars.insert(t->value);
    return vars;
}

namespace {

// Nested index-join evaluator. At each level the remaining pattern with the
// smallest index candidate list under the current binding is joined next.
class Solver {
public:
    Solver(const kg::KnowledgeGraph& g, std::span<const TriplePattern> patterns)
        : graph_(g), patterns_(patterns.begin(), patterns.end()), used_(patterns.size(), false) {}

    void run(Binding& binding, const std::function<void(const Binding&)>& emit) { step(binding, 0, emit); }

private:
    std::optional<std::string> resolve(const Term& t, const Binding& b) const {
        if (!t.is_variable()) return t.value;
        auto it = b.find(t.value);
        if (it == b.end()) return std::nullopt;
        return it->second;
    }

    std::span<const std::size_t> candidates(const TriplePattern& p, const Binding& b) const {
        if (auto s = resolve(p.subject, b)) return graph_.outgoing(EntityId(*s));
        if (auto o = resolve(p.object, b)) return graph_.incoming(EntityId(*o));
        if (auto r = resolve(p.predicate, b)) return graph_.with_relation(RelationId(*r));
        return {};
    }

    std::size_t estimate(const TriplePattern& p, const Binding& b) const {
        if (!resolve(p.subject, b) && !resolve(p.object, b) && !resolve(p.predicate, b))
            return graph_.triple_count();
        return candidates(p, b).size();
    }

    // Binds one position; false on conflict with an existing binding.
    static bool unify(const Term& t, const std::string& value, Binding& b, std::vector<std::string>& added) {
        if (!t.is_variable()) return t.value == value;
        auto [it, inserted] = b.emplace(t.value, value);
        if (inserted) {
            added.push_back(t.value);
            return true;
        }
        return it->second == value;
    }

    void match(const TriplePattern& p, const kg::Triple& t, Binding& b, std::size_t depth,
               const std::function<void(const Binding&)>& emit) {
        std::vector<std::string> added;
        bool ok = unify(p.subject, t.head.str(), b, added) && unify(p.predicate, t.relation.str(), b, added) &&
                  unify(p.object, t.tail.str(), b, added);
        if (ok) step(b, depth + 1, emit);
        for (const auto& v : added) b.erase(v);
    }

    void step(Binding& b, std::size_t depth, const std::function<void(const Binding&)>& emit) {
        if (depth == patterns_.size()) {
            emit(b);
            return;
        }
        std::size_t best = patterns_.size();
        std::size_t best_cost = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < patterns_.size(); ++i) {
            if (used_[i]) continue;
            auto cost = estimate(patterns_[i], b);
            if (cost < best_cost) {
                best_cost = cost;
                best = i;
            }
        }
        const TriplePattern& p = patterns_[best];
        used_[best] = true;
        bool any_bound = resolve(p.subject, b) || resolve(p.object, b) || resolve(p.predicate, b);
        if (any_bound) {
            auto cands = candidates(p, b);
            std::vector<std::size_t> snapshot(cands.begin(), cands.end());
            for (auto idx : snapshot) match(p, graph_.triples()[idx], b, depth, emit);
        } else {
            for (const auto& t : graph_.triples()) match(p, t, b, depth, emit);
        }
        used_[best] = false;
    }

    const kg::KnowledgeGraph& graph_;
    std::vector<TriplePattern> patterns_;
    std::vector<bool> used_;
};

}  // namespace

std::set<EntityId> execute(const kg::KnowledgeGraph& graph, const BgpQuery& query, const Binding& bindings) {
    std::set<EntityId> out;
    Binding b = bindings;
    Solver solver(graph, query.patterns);
    solver.run(b, [&](const Binding& full) {
        auto it = full.find(query.select_variable);
        if (it != full.end()) out.insert(EntityId(it->second));
    });
    return out;
}

std::vector<Binding> enumerate_bindings(const kg::KnowledgeGraph& graph, std::span<const TriplePattern> patterns,
                                        std::span<const std::string> free, const Binding& bindings) {
    auto vars = variables_of(patterns);
    for (const auto& f : free)
        if (!vars.contains(f)) throw std::invalid_argument("free variable " + f + " does not occur in the patterns");

    std::set<std::vector<std::string>> rows;
    Binding b = bindings;
    Solver solver(graph, patterns);
    solver.run(b, [&](const Binding& full) {
        std::vector<std::string> row;
        row.reserve(free.size());
        for (const auto& f : free) row.push_back(full.at(f));
        rows.insert(std::move(row));
    });

    std::vector<Binding> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        Binding r;
        for (std::size_t i = 0; i < free.size(); ++i) r[free[i]] = row[i];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace qaforge::bgp
