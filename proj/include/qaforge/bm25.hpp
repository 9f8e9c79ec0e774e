#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qaforge/metrics.hpp"

namespace qaforge::eval {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

using Analyzer = std::function<std::vector<std::string>(std::string_view)>;

// Answer normalization followed by whitespace tokenization.
std::vector<std::string> default_analyzer(std::string_view text);

class Bm25Index {
public:
    struct Document {
        std::string id;
        std::string text;
    };

    // Throws std::invalid_argument for an empty corpus or duplicate ids.
    explicit Bm25Index(std::vector<Document> docs, Bm25Params params = {}, Analyzer analyzer = default_analyzer);

    // Documents sharing at least one query term, by descending score then id.
    Ranking search(std::string_view query, std::size_t top = 100, std::string query_id = {}) const;

    // Score of one document, including documents with no query term (0).
    double score(std::string_view query, std::size_t doc) const;

    std::size_t size() const noexcept { return ids_.size(); }
    const std::string& id(std::size_t doc) const { return ids_.at(doc); }
    double idf(const std::string& term) const;
    const Bm25Params& params() const noexcept { return params_; }
    double average_length() const noexcept { return avgdl_; }

private:
    struct Posting {
        std::size_t doc;
        std::size_t tf;
    };

    double term_score(double idf, std::size_t tf, std::size_t doc) const;

    Bm25Params params_;
    Analyzer analyzer_;
    std::vector<std::string> ids_;
    std::vector<std::size_t> lengths_;
    double avgdl_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace qaforge::eval
