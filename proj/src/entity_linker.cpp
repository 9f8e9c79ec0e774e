#include "qaforge/entity_linker.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <stdexcept>

#include "qaforge/errors.hpp"
#include "qaforge/passage_builder.hpp"
#include "qaforge/text.hpp"

namespace qaforge::linking {

namespace {

std::string title_key(std::string_view title) { return "title:" + text::collapse_whitespace(text::fold_case(title)); }

std::vector<providers::WikiHit> safe_search(providers::WikiSearchProvider& search, std::string_view query) {
    try {
        auto hits = search.search(query);
        if (hits.size() > kSearchCap) hits.resize(kSearchCap);
        return hits;
    } catch (const Error& e) {
        spdlog::warn("wiki search {} failed for '{}': {}", search.name(), query, e.what());
        return {};
    }
}

bool in_lexical_class(providers::PosTag t) {
    using providers::PosTag;
    return t == PosTag::noun || t == PosTag::adjective || t == PosTag::proper_noun || t == PosTag::unknown;
}

}  // namespace

std::string QuestionNeighborhood::key_of(const NeighborhoodMember& member) {
    return member.entity ? "id:" + member.entity->str() : title_key(member.title);
}

void QuestionNeighborhood::add(const NeighborhoodMember& member) {
    members_.emplace(key_of(member), member);
    if (!member.title.empty()) titles_.insert(title_key(member.title));
}

bool QuestionNeighborhood::contains(const providers::WikiHit& hit) const {
    if (hit.entity && members_.contains("id:" + hit.entity->str())) return true;
    return titles_.contains(title_key(hit.title));
}

QuestionNeighborhood build_neighborhood(std::string_view question, providers::ArticleSearchProvider& search,
                                        providers::ArticleFetchProvider& fetch) {
    QuestionNeighborhood nbhd;
    for (const auto& ref : passages::find_articles(question, search)) {
        Article article;
        try {
            article = fetch.fetch(ref.title);
        } catch (const Error& e) {
            spdlog::warn("article fetch {} failed for '{}': {}", fetch.name(), ref.title, e.what());
            nbhd.add(NeighborhoodMember{ref.title, std::nullopt});
            continue;
        }
        nbhd.add(NeighborhoodMember{article.title.empty() ? ref.title : article.title, article.entity});
        std::set<std::string> seen;
        for (const auto& link : article.links) {
            if (seen.size() == kLinksPerPage) break;
            NeighborhoodMember m{link.target_title, link.target_entity};
            if (seen.insert(QuestionNeighborhood::key_of(m)).second) nbhd.add(m);
        }
    }
    return nbhd;
}

double title_similarity(std::string_view a, std::string_view b) {
    auto ua = text::decode_utf8(text::fold_case(a));
    auto ub = text::decode_utf8(text::fold_case(b));
    const std::size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::size_t prefix = 0;
    while (prefix < ua.size() && prefix < ub.size() && ua[prefix] == ub[prefix]) ++prefix;
    std::size_t lcs = text::lcs_length(ua, ub);
    return static_cast<double>(std::max(lcs, prefix)) / static_cast<double>(longest);
}

std::set<EntityId> LinkedEntities::all() const {
    std::set<EntityId> out = exact;
    out.insert(nbhd.begin(), nbhd.end());
    out.insert(named.begin(), named.end());
    out.insert(comb.begin(), comb.end());
    return out;
}

std::vector<std::string> linker_tokens(std::string_view question) {
    std::vector<std::string> out;
    for (auto& w : text::split_whitespace(question)) {
        auto t = text::trim_punctuation(w);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

LinkedEntities link_entities(std::string_view question, const LinkerProviders& p, const QuestionNeighborhood& nbhd,
                             double sim_threshold) {
    if (!p.pos || !p.ner || !p.lemma || !p.search) throw std::invalid_argument("linker providers are incomplete");
    if (!(sim_threshold > 0.0 && sim_threshold <= 1.0)) throw std::invalid_argument("sim_threshold must be in (0, 1]");

    LinkedEntities out;
    const auto tokens = linker_tokens(question);
    std::vector<providers::PosTag> tags;
    try {
        tags = p.pos->tag(tokens);
    } catch (const Error& e) {
        spdlog::warn("pos provider {} failed: {}", p.pos->name(), e.what());
    }
    tags.resize(tokens.size(), providers::PosTag::unknown);

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!in_lexical_class(tags[i])) continue;
        auto hits = safe_search(*p.search, tokens[i]);
        std::string lemma;
        try {
            lemma = p.lemma->lemma(text::fold_case(tokens[i]));
        } catch (const Error& e) {
            spdlog::warn("lemma provider {} failed on '{}': {}", p.lemma->name(), tokens[i], e.what());
            lemma = text::fold_case(tokens[i]);
        }
        for (const auto& h : hits) {
            if (!h.entity) continue;
            if (title_similarity(h.title, lemma) >= sim_threshold) out.exact.insert(*h.entity);
            if (nbhd.contains(h)) out.nbhd.insert(*h.entity);
        }
    }

    std::vector<providers::NamedEntitySpan> spans;
    try {
        spans = p.ner->entities(question);
    } catch (const Error& e) {
        spdlog::warn("ner provider {} failed: {}", p.ner->name(), e.what());
    }
    for (const auto& span : spans) {
        if (span.end > question.size() || span.begin >= span.end) continue;
        for (const auto& h : safe_search(*p.search, question.substr(span.begin, span.end - span.begin)))
            if (h.entity && nbhd.contains(h)) out.named.insert(*h.entity);
    }

    std::vector<int> heads;
    if (p.dep) {
        try {
            heads = p.dep->heads(tokens);
            if (heads.size() != tokens.size()) heads.clear();
        } catch (const Error& e) {
            spdlog::warn("dependency provider {} failed: {}", p.dep->name(), e.what());
            heads.clear();
        }
    }
    out.children_source = heads.empty() ? "adjacent" : "dependency";

    using providers::PosTag;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tags[i] != PosTag::noun) continue;
        std::vector<std::size_t> children;
        if (!heads.empty()) {
            for (std::size_t c = 0; c < tokens.size(); ++c)
                if (heads[c] == static_cast<int>(i)) children.push_back(c);
        } else {
            if (i > 0) children.push_back(i - 1);
            if (i + 1 < tokens.size()) children.push_back(i + 1);
        }
        for (auto c : children) {
            if (tags[c] != PosTag::noun && tags[c] != PosTag::proper_noun && tags[c] != PosTag::adjective) continue;
            auto query = c < i ? tokens[c] + " " + tokens[i] : tokens[i] + " " + tokens[c];
            out.comb_queries.push_back(query);
            for (const auto& h : safe_search(*p.search, query))
                if (h.entity && nbhd.contains(h)) out.comb.insert(*h.entity);
        }
    }
    return out;
}

}  // namespace qaforge::linking
