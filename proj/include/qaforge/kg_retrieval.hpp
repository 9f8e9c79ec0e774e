#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/ids.hpp"
#include "qaforge/kg_store.hpp"
#include "qaforge/providers/interfaces.hpp"

namespace qaforge::eval {

struct ScoredTriple {
    kg::Triple triple;
    std::string text;
    double score = 0.0;
};

struct RetrievedContext {
    std::vector<ScoredTriple> triples;
};

// Hashed bag of words (FNV-1a buckets over normalized tokens).
class HashingEmbedder : public providers::EmbedProvider {
public:
    explicit HashingEmbedder(std::size_t dim = 512) : dim_(dim) {}
    std::string name() const override { return "hashing"; }
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
};

double cosine(std::span<const float> a, std::span<const float> b);

// Verbalizes the labeled triples of the n-hop subgraph around the topic
// entities and returns the k closest to the question, best first.
RetrievedContext retrieve_triples(const kg::KnowledgeGraph& graph, std::string_view question,
                                  const std::set<EntityId>& topic_entities, unsigned hops,
                                  providers::EmbedProvider& embed, std::size_t k = 40);

}  // namespace qaforge::eval
