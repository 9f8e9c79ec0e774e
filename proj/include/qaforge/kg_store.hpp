#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaforge/dataset.hpp"
#include "qaforge/ids.hpp"

namespace qaforge::kg {

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    friend auto operator<=>(const Triple&, const Triple&) = default;
    friend bool operator==(const Triple&, const Triple&) = default;
};

struct EntityRecord {
    std::optional<std::string> label;
    std::vector<std::string> aliases;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct RelationRecord {
    std::optional<std::string> label;

    friend bool operator==(const RelationRecord&, const RelationRecord&) = default;
};

// Multi-relational graph with set semantics over triples and an incidence
// index in both directions. Read-only use is safe from many threads.
class KnowledgeGraph {
public:
    void add_entity(const EntityId& id);
    void add_relation(const RelationId& id);
    void set_entity_label(const EntityId& id, std::string label, std::vector<std::string> aliases = {});
    void set_relation_label(const RelationId& id, std::string label);

    // Returns false when the triple was already present.
    bool add_triple(const Triple& t);

    bool has_entity(const EntityId& id) const { return entities_.contains(id); }
    bool has_relation(const RelationId& id) const { return relations_.contains(id); }
    bool contains(const Triple& t) const { return triple_set_.contains(t); }

    const std::map<EntityId, EntityRecord>& entities() const noexcept { return entities_; }
    const std::map<RelationId, RelationRecord>& relations() const noexcept { return relations_; }
    // Triples in insertion order.
    const std::vector<Triple>& triples() const noexcept { return triples_; }
    std::size_t triple_count() const noexcept { return triples_.size(); }

    const std::optional<std::string>* entity_label(const EntityId& id) const;
    const std::optional<std::string>* relation_label(const RelationId& id) const;

    // Indices into triples().
    std::span<const std::size_t> outgoing(const EntityId& id) const;
    std::span<const std::size_t> incoming(const EntityId& id) const;
    std::span<const std::size_t> with_relation(const RelationId& id) const;

    // Every triple with id as head or tail; self-loops appear once.
    std::vector<Triple> incident(const EntityId& id) const;

    friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
        return a.entities_ == b.entities_ && a.relations_ == b.relations_ && a.triple_set_ == b.triple_set_;
    }

private:
    std::map<EntityId, EntityRecord> entities_;
    std::map<RelationId, RelationRecord> relations_;
    std::vector<Triple> triples_;
    std::set<Triple> triple_set_;
    std::unordered_map<EntityId, std::vector<std::size_t>> out_;
    std::unordered_map<EntityId, std::vector<std::size_t>> in_;
    std::unordered_map<RelationId, std::vector<std::size_t>> by_relation_;
};

// Triples: `head<TAB>relation<TAB>tail`. Labels: `id<TAB>label[<TAB>alias|alias...]`.
// Label ids that occur as a relation in the triples label that relation;
// every other label id labels an entity.
KnowledgeGraph load_graph(const std::filesystem::path& triples_path, const std::filesystem::path& labels_path);
KnowledgeGraph load_graph(std::istream& triples, std::istream& labels, std::string_view source = "<stream>");

// Writes both files sorted by id, so equal graphs produce identical bytes.
void write_graph(const KnowledgeGraph& graph, const std::filesystem::path& triples_path,
                 const std::filesystem::path& labels_path);
void write_graph(const KnowledgeGraph& graph, std::ostream& triples, std::ostream& labels);

// Subgraph of triples reachable by an undirected walk of at most `hops` edges
// from any seed. Seeds are always kept. Throws UnknownIdError for unknown seeds.
KnowledgeGraph neighborhood(const KnowledgeGraph& graph, const std::set<EntityId>& seeds, unsigned hops);

// Union of neighborhoods of each example's topic and answer entities.
// hops must be 1 or 2.
KnowledgeGraph sample_dataset_kg(const KnowledgeGraph& graph, std::span<const KbqaExample> examples, unsigned hops);

// Adds every entity, relation and triple of `other` into `into`.
void merge_into(KnowledgeGraph& into, const KnowledgeGraph& other);

// "(head label, relation label, tail label)"; throws MissingLabelError.
std::string verbalize_triple(const KnowledgeGraph& graph, const Triple& t);

}  // namespace qaforge::kg
