#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/ids.hpp"

namespace qaforge::eval {

struct GoldAnswer {
    EntityId entity;
    std::string label;
};

struct KbqaGold {
    std::string question_id;
    std::vector<GoldAnswer> answers;
};

// Case-fold, drop punctuation, collapse whitespace.
std::string normalize_answer(std::string_view s);

// Mean over questions of the fraction of distinct gold labels contained in the
// response after normalization. A missing response scores 0.
double kbqa_accuracy(const std::map<std::string, std::string>& responses, std::span<const KbqaGold> gold);

struct MrcScores {
    double exact_match = 0.0;
    double f1 = 0.0;
};

double exact_match(std::string_view prediction, std::string_view gold);
double token_f1(std::string_view prediction, std::string_view gold);
// Throws std::invalid_argument when the lists differ in length.
MrcScores mrc_scores(std::span<const std::string> predictions, std::span<const std::string> golds);

struct ScoredDoc {
    std::string id;
    double score = 0.0;
};

struct Ranking {
    std::string query_id;
    std::vector<ScoredDoc> docs;  // best first
};

using Qrels = std::map<std::string, std::set<std::string>>;

struct IrAtK {
    double ndcg = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
};

// Macro-averaged over the queries in qrels with binary relevance and a log2
// discount. Queries absent from rankings score 0.
std::map<std::size_t, IrAtK> ir_metrics(std::span<const Ranking> rankings, const Qrels& qrels,
                                        std::span<const std::size_t> k_values);

// TSV `query_id<TAB>passage_id[<TAB>relevance]`; relevance 0 rows are ignored.
Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const Qrels& qrels, const std::filesystem::path& path);
// TSV `query_id<TAB>passage_id<TAB>rank<TAB>score`, rank 1-based.
std::vector<Ranking> read_rankings(const std::filesystem::path& path);
void write_rankings(std::span<const Ranking> rankings, const std::filesystem::path& path);

}  // namespace qaforge::eval
