#include "qaforge/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "qaforge/text.hpp"

namespace qaforge::eval {

std::vector<std::string> default_analyzer(std::string_view text) { return text::split_whitespace(normalize_answer(text)); }

Bm25Index::Bm25Index(std::vector<Document> docs, Bm25Params params, Analyzer analyzer)
    : params_(params), analyzer_(std::move(analyzer)) {
    if (docs.empty()) throw std::invalid_argument("BM25 corpus is empty");
    std::set<std::string> seen;
    std::size_t total = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (!seen.insert(docs[d].id).second) throw std::invalid_argument("duplicate document id " + docs[d].id);
        auto tokens = analyzer_(docs[d].text);
        std::map<std::string, std::size_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) postings_[term].push_back(Posting{d, count});
        ids_.push_back(std::move(docs[d].id));
        lengths_.push_back(tokens.size());
        total += tokens.size();
    }
    avgdl_ = static_cast<double>(total) / static_cast<double>(ids_.size());
}

double Bm25Index::idf(const std::string& term) const {
    auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(ids_.size());
    return std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
}

double Bm25Index::term_score(double idf, std::size_t tf, std::size_t doc) const {
    const double f = static_cast<double>(tf);
    const double norm = avgdl_ > 0.0 ? static_cast<double>(lengths_[doc]) / avgdl_ : 0.0;
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

double Bm25Index::score(std::string_view query, std::size_t doc) const {
    double s = 0.0;
    for (const auto& term : analyzer_(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        auto p = std::lower_bound(it->second.begin(), it->second.end(), doc,
                                  [](const Posting& x, std::size_t d) { return x.doc < d; });
        if (p != it->second.end() && p->doc == doc) s += term_score(idf(term), p->tf, doc);
    }
    return s;
}

Ranking Bm25Index::search(std::string_view query, std::size_t top, std::string query_id) const {
    Ranking r{std::move(query_id), {}};
    std::unordered_map<std::size_t, double> acc;
    for (const auto& term : analyzer_(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& p : it->second) acc[p.doc] += term_score(w, p.tf, p.doc);
    }
    std::vector<std::pair<std::size_t, double>> hits(acc.begin(), acc.end());
    std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return ids_[a.first] < ids_[b.first];
    });
    if (hits.size() > top) hits.resize(top);
    for (const auto& [doc, s] : hits) r.docs.push_back(ScoredDoc{ids_[doc], s});
    return r;
}

}  // namespace qaforge::eval
