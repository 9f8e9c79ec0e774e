#include "qaforge/prompts.hpp"

#include <stdexcept>

#include "qaforge/errors.hpp"
#include "qaforge/prompt_assets.hpp"

namespace qaforge::prompts {

Language parse_language(std::string_view s) {
    if (s == "en") return Language::en;
    if (s == "pl") return Language::pl;
    throw ValidationError("language", "unsupported language '" + std::string(s) + "'");
}

std::string_view asset(std::string_view name) {
    static const std::map<std::string_view, std::string_view> table{
        {"kbqa_en.txt", assets::kbqa_en_txt},
        {"kbqa_pl.txt", assets::kbqa_pl_txt},
        {"kbqa_kg_en.txt", assets::kbqa_kg_en_txt},
        {"kbqa_kg_pl.txt", assets::kbqa_kg_pl_txt},
        {"tagging_en.txt", assets::tagging_en_txt},
        {"tagging_pl.txt", assets::tagging_pl_txt},
        {"inflection_en.txt", assets::inflection_en_txt},
        {"inflection_pl.txt", assets::inflection_pl_txt},
        {"paraphrase_en.txt", assets::paraphrase_en_txt},
        {"paraphrase_pl.txt", assets::paraphrase_pl_txt},
    };
    auto it = table.find(name);
    if (it == table.end()) throw NotFoundError("no prompt asset " + std::string(name));
    return it->second;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            auto close = text.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::vector<ChatTurn> parse_chat(std::string_view asset_text) {
    std::vector<ChatTurn> turns;
    std::size_t pos = 0;
    while (pos <= asset_text.size()) {
        auto nl = asset_text.find('\n', pos);
        auto line = asset_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (line == "User:" || line == "Assistant:") {
            turns.push_back(ChatTurn{line == "User:" ? "user" : "assistant", {}});
        } else if (!turns.empty()) {
            auto& c = turns.back().content;
            if (!c.empty() || !line.empty()) {
                if (!c.empty()) c.push_back('\n');
                c += line;
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    for (auto& t : turns)
        while (!t.content.empty() && t.content.back() == '\n') t.content.pop_back();
    return turns;
}

namespace {

std::string_view pick(Language lang, std::string_view en, std::string_view pl) { return lang == Language::en ? en : pl; }

std::vector<ChatTurn> render(std::string_view asset_text, const std::map<std::string, std::string>& values) {
    auto turns = parse_chat(asset_text);
    for (auto& t : turns) t.content = substitute(t.content, values);
    return turns;
}

}  // namespace

std::string build_kbqa_prompt(std::string_view question, const eval::RetrievedContext* context, Language lang) {
    if (!context || context->triples.empty())
        return substitute(pick(lang, assets::kbqa_en_txt, assets::kbqa_pl_txt), {{"question", std::string(question)}});
    std::string triples;
    for (const auto& t : context->triples) {
        if (!triples.empty()) triples.push_back('\n');
        triples += t.text;
    }
    return substitute(pick(lang, assets::kbqa_kg_en_txt, assets::kbqa_kg_pl_txt),
                      {{"question", std::string(question)}, {"triples", triples}});
}

std::vector<ChatTurn> tagging_prompt(std::string_view question, std::string_view context, Language lang) {
    return render(pick(lang, assets::tagging_en_txt, assets::tagging_pl_txt),
                  {{"question", std::string(question)}, {"context", std::string(context)}});
}

std::vector<ChatTurn> inflection_prompt(std::string_view question, Language lang) {
    return render(pick(lang, assets::inflection_en_txt, assets::inflection_pl_txt),
                  {{"question", std::string(question)}});
}

std::vector<ChatTurn> paraphrase_prompt(std::string_view question, Language lang) {
    return render(pick(lang, assets::paraphrase_en_txt, assets::paraphrase_pl_txt),
                  {{"question", std::string(question)}});
}

std::string strip_quotes(std::string_view reply) {
    std::size_t b = 0, e = reply.size();
    auto ws = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
    while (b < e && ws(reply[b])) ++b;
    while (e > b && ws(reply[e - 1])) --e;
    if (e > b && reply[e - 1] == '"') {
        --e;
        if (e > b && reply[b] == '"') ++b;
    }
    return std::string(reply.substr(b, e - b));
}

}  // namespace qaforge::prompts
