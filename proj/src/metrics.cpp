#include "qaforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "qaforge/errors.hpp"
#include "qaforge/text.hpp"

namespace qaforge::eval {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string(), 0, "cannot open");
    return in;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    return text::collapse_whitespace(text::remove_punctuation(text::fold_case(s)));
}

double kbqa_accuracy(const std::map<std::string, std::string>& responses, std::span<const KbqaGold> gold) {
    if (gold.empty()) return 0.0;
    double total = 0.0;
    for (const auto& g : gold) {
        std::set<std::string> labels;
        for (const auto& a : g.answers) {
            auto n = normalize_answer(a.label);
            if (!n.empty()) labels.insert(n);
        }
        if (labels.empty()) continue;
        auto it = responses.find(g.question_id);
        if (it == responses.end()) continue;
        const auto response = normalize_answer(it->second);
        std::size_t hit = 0;
        for (const auto& l : labels) hit += response.find(l) != std::string::npos;
        total += static_cast<double>(hit) / static_cast<double>(labels.size());
    }
    return total / static_cast<double>(gold.size());
}

double exact_match(std::string_view prediction, std::string_view gold) {
    return normalize_answer(prediction) == normalize_answer(gold) ? 1.0 : 0.0;
}

double token_f1(std::string_view prediction, std::string_view gold) {
    auto p = text::split_whitespace(normalize_answer(prediction));
    auto g = text::split_whitespace(normalize_answer(gold));
    if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;
    std::unordered_map<std::string, long> counts;
    for (const auto& t : g) ++counts[t];
    long common = 0;
    for (const auto& t : p)
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    if (common == 0) return 0.0;
    double precision = static_cast<double>(common) / static_cast<double>(p.size());
    double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

MrcScores mrc_scores(std::span<const std::string> predictions, std::span<const std::string> golds) {
    if (predictions.size() != golds.size()) throw std::invalid_argument("predictions and golds differ in length");
    MrcScores s;
    if (golds.empty()) return s;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        s.exact_match += exact_match(predictions[i], golds[i]);
        s.f1 += token_f1(predictions[i], golds[i]);
    }
    s.exact_match /= static_cast<double>(golds.size());
    s.f1 /= static_cast<double>(golds.size());
    return s;
}

std::map<std::size_t, IrAtK> ir_metrics(std::span<const Ranking> rankings, const Qrels& qrels,
                                        std::span<const std::size_t> k_values) {
    std::map<std::string, const Ranking*> by_query;
    for (const auto& r : rankings) by_query.emplace(r.query_id, &r);

    std::map<std::size_t, IrAtK> out;
    for (auto k : k_values) {
        IrAtK acc;
        std::size_t queries = 0;
        for (const auto& [qid, relevant] : qrels) {
            if (relevant.empty()) continue;
            ++queries;
            auto it = by_query.find(qid);
            if (it == by_query.end()) continue;
            const auto& docs = it->second->docs;
            double dcg = 0.0, rr = 0.0;
            std::size_t found = 0;
            std::set<std::string> seen;
            for (std::size_t i = 0; i < docs.size() && i < k; ++i) {
                if (!relevant.contains(docs[i].id) || !seen.insert(docs[i].id).second) continue;
                ++found;
                dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
                if (rr == 0.0) rr = 1.0 / static_cast<double>(i + 1);
            }
            double idcg = 0.0;
            for (std::size_t i = 0; i < relevant.size() && i < k; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
            acc.ndcg += idcg > 0.0 ? dcg / idcg : 0.0;
            acc.mrr += rr;
            acc.recall += static_cast<double>(found) / static_cast<double>(relevant.size());
        }
        if (queries > 0) {
            acc.ndcg /= static_cast<double>(queries);
            acc.mrr /= static_cast<double>(queries);
            acc.recall /= static_cast<double>(queries);
        }
        out[k] = acc;
    }
    return out;
}

Qrels read_qrels(const std::filesystem::path& path) {
    auto in = open_in(path);
    Qrels q;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() < 2 || cols.size() > 3 || cols[0].empty() || cols[1].empty())
            throw LoadError(path.string(), no, "expected query_id, passage_id[, relevance]");
        if (cols.size() == 3 && cols[2] == "0") continue;
        q[cols[0]].insert(cols[1]);
    }
    return q;
}

void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
    std::ofstream out(path);
    for (const auto& [qid, docs] : qrels)
        for (const auto& d : docs) out << qid << '\t' << d << "\t1\n";
}

std::vector<Ranking> read_rankings(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::map<std::string, std::vector<std::pair<long, ScoredDoc>>> rows;
    std::vector<std::string> order;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() != 4) throw LoadError(path.string(), no, "expected query_id, passage_id, rank, score");
        long rank = 0;
        double score = 0.0;
        try {
            rank = std::stol(cols[2]);
            score = std::stod(cols[3]);
        } catch (const std::exception&) {
            throw LoadError(path.string(), no, "rank and score must be numeric");
        }
        if (!rows.contains(cols[0])) order.push_back(cols[0]);
        rows[cols[0]].push_back({rank, ScoredDoc{cols[1], score}});
    }
    std::vector<Ranking> out;
    for (const auto& qid : order) {
        auto& r = rows[qid];
        std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Ranking ranking{qid, {}};
        for (auto& [_, d] : r) ranking.docs.push_back(std::move(d));
        out.push_back(std::move(ranking));
    }
    return out;
}

void write_rankings(std::span<const Ranking> rankings, const std::filesystem::path& path) {
    std::ofstream out(path);
    out.precision(17);
    for (const auto& r : rankings)
        for (std::size_t i = 0; i < r.docs.size(); ++i)
            out << r.query_id << '\t' << r.docs[i].id << '\t' << (i + 1) << '\t' << r.docs[i].score << '\n';
}

}  // namespace qaforge::eval
