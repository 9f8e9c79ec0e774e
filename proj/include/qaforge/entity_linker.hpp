#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/ids.hpp"
#include "qaforge/providers/interfaces.hpp"

namespace qaforge::linking {

inline constexpr double kDefaultSimThreshold = 0.85;
inline constexpr std::size_t kLinksPerPage = 5;
inline constexpr std::size_t kSearchCap = 10;

struct NeighborhoodMember {
    std::string title;
    std::optional<EntityId> entity;

    friend bool operator==(const NeighborhoodMember&, const NeighborhoodMember&) = default;
};

// Pages from a question's top search results plus the first links of each.
// Members are keyed by entity id when known, otherwise by normalized title.
class QuestionNeighborhood {
public:
    void add(const NeighborhoodMember& member);
    bool contains(const providers::WikiHit& hit) const;
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    const std::map<std::string, NeighborhoodMember>& members() const noexcept { return members_; }

    static std::string key_of(const NeighborhoodMember& member);

private:
    std::map<std::string, NeighborhoodMember> members_;
    std::set<std::string> titles_;
};

QuestionNeighborhood build_neighborhood(std::string_view question, providers::ArticleSearchProvider& search,
                                        providers::ArticleFetchProvider& fetch);

// max(char LCS, common prefix) / longer length, over case-folded code points.
double title_similarity(std::string_view a, std::string_view b);

struct LinkedEntities {
    std::set<EntityId> exact;
    std::set<EntityId> nbhd;
    std::set<EntityId> named;
    std::set<EntityId> comb;
    // Combined-query provenance: "dependency" or "adjacent".
    std::string children_source;
    std::vector<std::string> comb_queries;

    std::set<EntityId> all() const;
};

struct LinkerProviders {
    providers::PosProvider* pos = nullptr;
    providers::NerProvider* ner = nullptr;
    providers::LemmaProvider* lemma = nullptr;
    providers::DependencyProvider* dep = nullptr;  // optional
    providers::WikiSearchProvider* search = nullptr;
};

// Question tokens as used by the linker: whitespace split, boundary punctuation trimmed.
std::vector<std::string> linker_tokens(std::string_view question);

LinkedEntities link_entities(std::string_view question, const LinkerProviders& providers,
                             const QuestionNeighborhood& nbhd, double sim_threshold = kDefaultSimThreshold);

}  // namespace qaforge::linking
