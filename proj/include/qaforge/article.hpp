#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qaforge/ids.hpp"

namespace qaforge {

// Hyperlink over the word range [word_start, word_end).
struct ArticleLink {
    std::size_t word_start = 0;
    std::size_t word_end = 0;
    std::optional<EntityId> target_entity;
    std::string target_title;

    friend bool operator==(const ArticleLink&, const ArticleLink&) = default;
};

struct Article {
    std::string title;
    std::string page_id;
    std::optional<EntityId> entity;  // the entity the article itself describes
    std::vector<std::string> words;
    std::vector<ArticleLink> links;

    friend bool operator==(const Article&, const Article&) = default;
};

// A window of an article. Links are clipped to the window and their word
// offsets are relative to the passage.
struct Passage {
    std::string id;  // "<page_id>:<start>"
    std::string article_id;
    std::string article_title;
    std::size_t word_start = 0;
    std::size_t word_end = 0;
    std::vector<std::string> words;
    std::string text;  // words joined by single spaces
    std::vector<ArticleLink> links;

    friend bool operator==(const Passage&, const Passage&) = default;
};

}  // namespace qaforge
