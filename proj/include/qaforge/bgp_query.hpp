#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/ids.hpp"
#include "qaforge/kg_store.hpp"

namespace qaforge::bgp {

enum class TermKind { entity, relation, variable };

struct Term {
    TermKind kind = TermKind::variable;
    std::string value;  // id text, or variable name including the leading '?'

    static Term variable(std::string name);
    static Term entity(std::string id) { return Term{TermKind::entity, std::move(id)}; }
    static Term relation(std::string id) { return Term{TermKind::relation, std::move(id)}; }

    bool is_variable() const noexcept { return kind == TermKind::variable; }

    friend auto operator<=>(const Term&, const Term&) = default;
    friend bool operator==(const Term&, const Term&) = default;
};

struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;

    friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
};

inline constexpr std::size_t kMaxPatterns = 4;

struct BgpQuery {
    std::string select_variable;
    std::vector<TriplePattern> patterns;

    friend bool operator==(const BgpQuery&, const BgpQuery&) = default;
};

// variable name (with '?') -> bound id
using Binding = std::map<std::string, std::string>;

// Dialect: `SELECT ?v WHERE { s p o . ... }` with `{{ }}` also accepted.
// Subjects/objects are `wd:<id>` or `?var`; predicates are `wdt:<id>` or `?var`.
// Every pattern ends with '.'.
BgpQuery parse_query(std::string_view text);

// Throws ParseError (position 0) when structural invariants do not hold.
void validate(const BgpQuery& query);

// Canonical single-line form; parse_query(to_string(q)) == q.
std::string to_string(const BgpQuery& query);

std::set<std::string> variables_of(std::span<const TriplePattern> patterns);

// Values of the select variable over all assignments satisfying every pattern.
std::set<EntityId> execute(const kg::KnowledgeGraph& graph, const BgpQuery& query, const Binding& bindings = {});

// Distinct assignments of `free` for which the patterns are satisfiable,
// sorted lexicographically by the bound ids in `free` order.
std::vector<Binding> enumerate_bindings(const kg::KnowledgeGraph& graph, std::span<const TriplePattern> patterns,
                                        std::span<const std::string> free, const Binding& bindings = {});

}  // namespace qaforge::bgp
