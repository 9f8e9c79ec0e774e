#include "qaforge/kg_store.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "qaforge/errors.hpp"

namespace qaforge::kg {

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

const std::vector<std::size_t> kNoTriples;

}  // namespace

void KnowledgeGraph::add_entity(const EntityId& id) {
    if (id.empty()) throw std::invalid_argument("empty entity id");
    entities_.try_emplace(id);
}

void KnowledgeGraph::add_relation(const RelationId& id) {
    if (id.empty()) throw std::invalid_argument("empty relation id");
    relations_.try_emplace(id);
}

void KnowledgeGraph::set_entity_label(const EntityId& id, std::string label, std::vector<std::string> aliases) {
    add_entity(id);
    auto& rec = entities_[id];
    rec.label = std::move(label);
    rec.aliases = std::move(aliases);
}

void KnowledgeGraph::set_relation_label(const RelationId& id, std::string label) {
    add_relation(id);
    relations_[id].label = std::move(label);
}

bool KnowledgeGraph::add_triple(const Triple& t) {
    if (triple_set_.contains(t)) return false;
    add_entity(t.head);
    add_entity(t.tail);
    add_relation(t.relation);
    triple_set_.insert(t);
    std::size_t index = triples_.size();
    triples_.push_back(t);
    out_[t.head].push_back(index);
    in_[t.tail].push_back(index);
    by_relation_[t.relation].push_back(index);
    return true;
}

const std::optional<std::string>* KnowledgeGraph::entity_label(const EntityId& id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second.label;
}

const std::optional<std::string>* KnowledgeGraph::relation_label(const RelationId& id) const {
    auto it = relations_.find(id);
    return it == relations_.end() ? nullptr : &it->second.label;
}

std::span<const std::size_t> KnowledgeGraph::outgoing(const EntityId& id) const {
    auto it = out_.find(id);
    return it == out_.end() ? std::span<const std::size_t>(kNoTriples) : std::span<const std::size_t>(it->second);
}

std::span<const std::size_t> KnowledgeGraph::incoming(const EntityId& id) const {
    auto it = in_.find(id);
    return it == in_.end() ? std::span<const std::size_t>(kNoTriples) : std::span<const std::size_t>(it->second);
}

std::span<const std::size_t> KnowledgeGraph::with_relation(const RelationId& id) const {
    auto it = by_relation_.find(id);
    return it == by_relation_.end() ? std::span<const std::size_t>(kNoTriples)
                                    : std::span<const std::size_t>(it->second);
}

std::vector<Triple> KnowledgeGraph::incident(const EntityId& id) const {
    std::vector<Triple> out;
    for (auto i : outgoing(id)) out.push_back(triples_[i]);
    for (auto i : incoming(id))
        if (triples_[i].head != id) out.push_back(triples_[i]);
    return out;
}

namespace {
bool is_property_id(const std::string& id) {
    return id.size() > 1 && id[0] == 'P' &&
           std::all_of(id.begin() + 1, id.end(), [](unsigned char c) { return std::isdigit(c); });
}
}  // namespace

KnowledgeGraph load_graph(std::istream& triples, std::istream& labels, std::string_view source) {
    KnowledgeGraph g;
    std::string line;
    std::size_t line_no = 0;
    const std::string triples_src = std::string(source) + "[triples]";
    while (std::getline(triples, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() != 3) throw LoadError(triples_src, line_no, "expected 3 tab-separated columns");
        for (const auto& c : cols)
            if (c.empty()) throw LoadError(triples_src, line_no, "empty id");
        g.add_triple(Triple{EntityId(cols[0]), RelationId(cols[1]), EntityId(cols[2])});
    }

    line_no = 0;
    const std::string labels_src = std::string(source) + "[labels]";
    while (std::getline(labels, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() < 2 || cols.size() > 3) throw LoadError(labels_src, line_no, "expected 2 or 3 tab-separated columns");
        if (cols[0].empty()) throw LoadError(labels_src, line_no, "empty id");
        std::vector<std::string> aliases;
        if (cols.size() == 3 && !cols[2].empty()) {
            std::size_t start = 0;
            while (true) {
                auto pos = cols[2].find('|', start);
                aliases.push_back(cols[2].substr(start, pos == std::string::npos ? std::string::npos : pos - start));
                if (pos == std::string::npos) break;
                start = pos + 1;
            }
        }
        RelationId rel(cols[0]);
        EntityId ent(cols[0]);
        // Labels for ids absent from the triples fall back to the Wikidata
        // convention that properties are P-prefixed.
        bool is_relation = g.has_relation(rel) || (!g.has_entity(ent) && is_property_id(cols[0]));
        if (is_relation) g.set_relation_label(rel, cols[1]);
        if (!is_relation || g.has_entity(ent)) g.set_entity_label(ent, cols[1], std::move(aliases));
    }
    return g;
}

KnowledgeGraph load_graph(const std::filesystem::path& triples_path, const std::filesystem::path& labels_path) {
    std::ifstream triples(triples_path);
    if (!triples) throw Error("cannot open " + triples_path.string());
    std::ifstream labels(labels_path);
    if (!labels) throw Error("cannot open " + labels_path.string());
    return load_graph(triples, labels, triples_path.string());
}

void write_graph(const KnowledgeGraph& graph, std::ostream& triples, std::ostream& labels) {
    std::set<Triple> sorted(graph.triples().begin(), graph.triples().end());
    for (const auto& t : sorted) triples << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
    for (const auto& [id, rec] : graph.entities()) {
        if (!rec.label) continue;
        labels << id << '\t' << *rec.label;
        if (!rec.aliases.empty()) {
            labels << '\t';
            for (std::size_t i = 0; i < rec.aliases.size(); ++i) labels << (i ? "|" : "") << rec.aliases[i];
        }
        labels << '\n';
    }
    for (const auto& [id, rec] : graph.relations())
        if (rec.label && !graph.has_entity(EntityId(id.str()))) labels << id << '\t' << *rec.label << '\n';
}

void write_graph(const KnowledgeGraph& graph, const std::filesystem::path& triples_path,
                 const std::filesystem::path& labels_path) {
    std::ofstream triples(triples_path, std::ios::binary | std::ios::trunc);
    std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
    if (!triples || !labels) throw Error("cannot write graph to " + triples_path.string());
    write_graph(graph, triples, labels);
}

KnowledgeGraph neighborhood(const KnowledgeGraph& graph, const std::set<EntityId>& seeds, unsigned hops) {
    for (const auto& s : seeds)
        if (!graph.has_entity(s)) throw UnknownIdError(s.str());

    KnowledgeGraph sub;
    auto copy_entity = [&](const EntityId& id) {
        if (sub.has_entity(id)) return;
        const auto& rec = graph.entities().at(id);
        if (rec.label)
            sub.set_entity_label(id, *rec.label, rec.aliases);
        else
            sub.add_entity(id);
    };
    for (const auto& s : seeds) copy_entity(s);

    std::unordered_set<EntityId> visited(seeds.begin(), seeds.end());
    std::vector<EntityId> frontier(seeds.begin(), seeds.end());
    std::set<Triple> kept;
    for (unsigned depth = 0; depth < hops && !frontier.empty(); ++depth) {
        std::vector<EntityId> next;
        for (const auto& e : frontier) {
            for (const auto& t : graph.incident(e)) {
                kept.insert(t);
                const EntityId& other = (t.head == e) ? t.tail : t.head;
                if (visited.insert(other).second) next.push_back(other);
            }
        }
        frontier = std::move(next);
    }

    for (const auto& t : kept) {
        copy_entity(t.head);
        copy_entity(t.tail);
        if (!sub.has_relation(t.relation)) {
            const auto& rec = graph.relations().at(t.relation);
            if (rec.label)
                sub.set_relation_label(t.relation, *rec.label);
            else
                sub.add_relation(t.relation);
        }
        sub.add_triple(t);
    }
    return sub;
}

void merge_into(KnowledgeGraph& into, const KnowledgeGraph& other) {
    for (const auto& [id, rec] : other.entities()) {
        if (rec.label)
            into.set_entity_label(id, *rec.label, rec.aliases);
        else
            into.add_entity(id);
    }
    for (const auto& [id, rec] : other.relations()) {
        if (rec.label)
            into.set_relation_label(id, *rec.label);
        else
            into.add_relation(id);
    }
    for (const auto& t : other.triples()) into.add_triple(t);
}

KnowledgeGraph sample_dataset_kg(const KnowledgeGraph& graph, std::span<const KbqaExample> examples, unsigned hops) {
    if (hops != 1 && hops != 2) throw std::invalid_argument("dataset KG samples use 1 or 2 hops");
    KnowledgeGraph out;
    for (const auto& ex : examples) {
        std::set<EntityId> seeds = ex.topic_entities;
        seeds.insert(ex.answer_entities.begin(), ex.answer_entities.end());
        merge_into(out, neighborhood(graph, seeds, hops));
    }
    return out;
}

std::string verbalize_triple(const KnowledgeGraph& graph, const Triple& t) {
    auto head = graph.entity_label(t.head);
    if (!head || !*head) throw MissingLabelError(t.head.str());
    auto rel = graph.relation_label(t.relation);
    if (!rel || !*rel) throw MissingLabelError(t.relation.str());
    auto tail = graph.entity_label(t.tail);
    if (!tail || !*tail) throw MissingLabelError(t.tail.str());
    return "(" + **head + ", " + **rel + ", " + **tail + ")";
}

}  // namespace qaforge::kg
