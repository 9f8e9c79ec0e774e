#include "qaforge/kg_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "qaforge/errors.hpp"
#include "qaforge/metrics.hpp"
#include "qaforge/text.hpp"

namespace qaforge::eval {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::vector<std::vector<float>> HashingEmbedder::embed(std::span<const std::string> texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        std::vector<float> v(dim_, 0.0f);
        for (const auto& tok : text::split_whitespace(normalize_answer(t))) v[fnv1a(tok) % dim_] += 1.0f;
        out.push_back(std::move(v));
    }
    return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ProviderError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

RetrievedContext retrieve_triples(const kg::KnowledgeGraph& graph, std::string_view question,
                                  const std::set<EntityId>& topic_entities, unsigned hops,
                                  providers::EmbedProvider& embed, std::size_t k) {
    RetrievedContext ctx;
    if (hops == 0 || k == 0 || topic_entities.empty()) return ctx;
    auto sub = kg::neighborhood(graph, topic_entities, hops);

    std::vector<kg::Triple> kept;
    std::vector<std::string> texts;
    for (const auto& t : sub.triples()) {
        try {
            texts.push_back(kg::verbalize_triple(sub, t));
            kept.push_back(t);
        } catch (const MissingLabelError&) {
        }
    }
    if (kept.empty()) return ctx;

    std::vector<std::string> batch{std::string(question)};
    batch.insert(batch.end(), texts.begin(), texts.end());
    auto vectors = embed.embed(batch);
    if (vectors.size() != batch.size()) throw ProviderError("embedder returned a wrong number of vectors");

    for (std::size_t i = 0; i < kept.size(); ++i)
        ctx.triples.push_back(ScoredTriple{kept[i], texts[i], cosine(vectors[0], vectors[i + 1])});
    std::sort(ctx.triples.begin(), ctx.triples.end(), [](const ScoredTriple& a, const ScoredTriple& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.text < b.text;
    });
    if (ctx.triples.size() > k) ctx.triples.resize(k);
    return ctx;
}

}  // namespace qaforge::eval
