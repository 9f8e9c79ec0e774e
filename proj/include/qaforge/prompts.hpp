#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/kg_retrieval.hpp"

namespace qaforge::prompts {

enum class Language { en, pl };

Language parse_language(std::string_view s);

struct ChatTurn {
    std::string role;  // "user" or "assistant"
    std::string content;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

// Replaces `{name}` for every name in values in one pass; other braces are kept.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& values);

// Parses a chat asset: turns open with a line `User:` or `Assistant:`.
std::vector<ChatTurn> parse_chat(std::string_view asset);

// Prompt for the KBQA baseline. Without triples this is the plain question prompt.
std::string build_kbqa_prompt(std::string_view question, const eval::RetrievedContext* context,
                              Language lang = Language::en);

std::vector<ChatTurn> tagging_prompt(std::string_view question, std::string_view context,
                                     Language lang = Language::en);
std::vector<ChatTurn> inflection_prompt(std::string_view question, Language lang = Language::en);
std::vector<ChatTurn> paraphrase_prompt(std::string_view question, Language lang = Language::en);

// Raw asset text by file name, e.g. "kbqa_en.txt".
std::string_view asset(std::string_view name);

// Removes surrounding whitespace and one pair of enclosing (or one trailing)
// double quotes, as chat answers to the quote-style prompts carry them.
std::string strip_quotes(std::string_view reply);

}  // namespace qaforge::prompts
