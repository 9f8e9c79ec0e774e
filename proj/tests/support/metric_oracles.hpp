#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

// Reference implementations written from the metric definitions, over ASCII
// input only so they need no Unicode handling.
namespace testsupport::oracle {

inline std::string normalize(const std::string& s) {
    std::string kept;
    for (unsigned char c : s)
        if (!std::ispunct(c)) kept.push_back(static_cast<char>(std::tolower(c)));
    std::istringstream in(kept);
    std::string w, out;
    while (in >> w) out += (out.empty() ? "" : " ") + w;
    return out;
}

inline std::vector<std::string> tokens(const std::string& s) {
    std::istringstream in(normalize(s));
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

inline double em(const std::string& p, const std::string& g) { return normalize(p) == normalize(g) ? 1.0 : 0.0; }

inline double f1(const std::string& p, const std::string& g) {
    auto pt = tokens(p), gt = tokens(g);
    if (pt.empty() || gt.empty()) return pt.empty() && gt.empty() ? 1.0 : 0.0;
    std::map<std::string, int> pc, gc;
    for (const auto& t : pt) ++pc[t];
    for (const auto& t : gt) ++gc[t];
    double common = 0;
    for (const auto& [t, n] : pc)
        if (gc.count(t)) common += std::min(n, gc[t]);
    if (common == 0) return 0.0;
    double prec = common / static_cast<double>(pt.size()), rec = common / static_cast<double>(gt.size());
    return 2 * prec * rec / (prec + rec);
}

struct IrValues {
    double ndcg = 0, mrr = 0, recall = 0;
};

inline IrValues ir_one(const std::vector<std::string>& ranked, const std::set<std::string>& relevant, std::size_t k) {
    IrValues v;
    double dcg = 0, idcg = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (!relevant.count(ranked[i])) continue;
        dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        ++hits;
        if (v.mrr == 0) v.mrr = 1.0 / static_cast<double>(i + 1);
    }
    for (std::size_t i = 0; i < relevant.size() && i < k; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    v.ndcg = idcg > 0 ? dcg / idcg : 0;
    v.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
    return v;
}

// Per-question share of distinct gold labels found in the response.
inline double kbqa(const std::map<std::string, std::string>& responses,
                   const std::vector<std::pair<std::string, std::vector<std::string>>>& gold) {
    if (gold.empty()) return 0;
    double total = 0;
    for (const auto& [qid, labels] : gold) {
        auto it = responses.find(qid);
        if (it == responses.end()) continue;
        auto resp = normalize(it->second);
        std::set<std::string> distinct;
        for (const auto& l : labels) distinct.insert(normalize(l));
        double found = 0;
        for (const auto& l : distinct)
            if (resp.find(l) != std::string::npos) found += 1;
        total += found / static_cast<double>(distinct.size());
    }
    return total / static_cast<double>(gold.size());
}

// Cohen's kappa from the contingency table of two label maps.
inline std::optional<double> kappa(const std::map<std::string, std::string>& a,
                                   const std::map<std::string, std::string>& b, double* observed = nullptr) {
    std::map<std::string, std::map<std::string, double>> table;
    std::set<std::string> cats;
    double n = 0;
    for (const auto& [id, la] : a) {
        auto it = b.find(id);
        if (it == b.end()) continue;
        table[la][it->second] += 1;
        cats.insert(la);
        cats.insert(it->second);
        n += 1;
    }
    double po = 0, pe = 0;
    for (const auto& c : cats) {
        po += table[c][c];
        double row = 0, col = 0;
        for (const auto& d : cats) {
            row += table[c][d];
            col += table[d][c];
        }
        pe += (row / n) * (col / n);
    }
    po /= n;
    if (observed) *observed = po;
    if (pe >= 1.0) return std::nullopt;
    return (po - pe) / (1 - pe);
}

inline std::string random_phrase(Gen& g, std::size_t max_words) {
    static const std::vector<std::string> vocab{"the", "city", "of", "Vienna", "river", "Danube", "old", "town",
                                                "a",   "Bonn", "music", "composer", "North", "sea", "Bach", "in"};
    std::string out;
    auto n = g.range(1, max_words);
    for (std::size_t i = 0; i < n; ++i) {
        auto w = g.pick(vocab);
        if (g.chance(0.2)) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (g.chance(0.1)) w += g.chance(0.5) ? "," : ".";
        out += (i ? (g.chance(0.1) ? "  " : " ") : "") + w;
    }
    return out;
}

}  // namespace testsupport::oracle
