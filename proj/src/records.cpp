#include "qaforge/records.hpp"

#include <fstream>
#include <sstream>

#include "qaforge/errors.hpp"

namespace qaforge {

namespace {

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<T>();
}

}  // namespace

void to_json(json& j, const ArticleLink& l) {
    j = json{{"word_start", l.word_start}, {"word_end", l.word_end}, {"target_title", l.target_title}};
    j["target_entity"] = l.target_entity ? json(l.target_entity->str()) : json(nullptr);
}

void from_json(const json& j, ArticleLink& l) {
    l.word_start = j.at("word_start").get<std::size_t>();
    l.word_end = j.at("word_end").get<std::size_t>();
    l.target_title = value_or<std::string>(j, "target_title", "");
    l.target_entity = opt<EntityId>(j, "target_entity");
}

void to_json(json& j, const Article& a) {
    j = json{{"title", a.title}, {"page_id", a.page_id}, {"words", a.words}, {"links", a.links}};
    j["entity"] = a.entity ? json(a.entity->str()) : json(nullptr);
}

void from_json(const json& j, Article& a) {
    a.title = j.at("title").get<std::string>();
    a.page_id = value_or<std::string>(j, "page_id", a.title);
    a.entity = opt<EntityId>(j, "entity");
    if (j.contains("words"))
        a.words = j.at("words").get<std::vector<std::string>>();
    else if (j.contains("text")) {
        std::istringstream ss(j.at("text").get<std::string>());
        for (std::string w; ss >> w;) a.words.push_back(w);
    }
    a.links = value_or<std::vector<ArticleLink>>(j, "links", {});
    for (const auto& l : a.links)
        if (l.word_start >= l.word_end || l.word_end > a.words.size())
            throw ValidationError("links", "link out of bounds in article " + a.title);
}

void to_json(json& j, const Passage& p) {
    j = json{{"id", p.id},         {"article_id", p.article_id}, {"title", p.article_title},
             {"word_start", p.word_start}, {"word_end", p.word_end}, {"text", p.text},
             {"links", p.links}};
}

void from_json(const json& j, Passage& p) {
    p.id = j.at("id").get<std::string>();
    p.article_id = value_or<std::string>(j, "article_id", "");
    p.article_title = value_or<std::string>(j, "title", "");
    p.word_start = value_or<std::size_t>(j, "word_start", 0);
    p.text = j.at("text").get<std::string>();
    std::istringstream ss(p.text);
    p.words.clear();
    for (std::string w; ss >> w;) p.words.push_back(w);
    p.word_end = value_or<std::size_t>(j, "word_end", p.word_start + p.words.size());
    p.links = value_or<std::vector<ArticleLink>>(j, "links", {});
}

std::string_view to_string(QuestionSource s) { return s == QuestionSource::natural ? "natural" : "template"; }

QuestionSource parse_source(std::string_view s) {
    if (s == "natural") return QuestionSource::natural;
    if (s == "template") return QuestionSource::template_based;
    throw ValidationError("source", "unknown question source '" + std::string(s) + "'");
}

void to_json(json& j, const KbqaExample& e) {
    j = json{{"id", e.id},
             {"question", e.question},
             {"topic_entities", e.topic_entities},
             {"answer_entities", e.answer_entities},
             {"source", to_string(e.source)}};
    if (!e.template_name.empty()) j["template"] = e.template_name;
}

void from_json(const json& j, KbqaExample& e) {
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.topic_entities = j.at("topic_entities").get<std::set<EntityId>>();
    e.answer_entities = j.at("answer_entities").get<std::set<EntityId>>();
    e.source = parse_source(value_or<std::string>(j, "source", "natural"));
    e.template_name = value_or<std::string>(j, "template", "");
}

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw LoadError(path.string(), 0, "cannot open");
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw LoadError(path.string(), no, e.what());
        }
        try {
            fn(j, no);
        } catch (const json::exception& e) {
            throw LoadError(path.string(), no, e.what());
        } catch (const ValidationError& e) {
            throw LoadError(path.string(), no, e.what());
        }
    }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(j); });
    return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<json>& records) {
    std::string content;
    for (const auto& r : records) {
        content += r.dump(-1, ' ', false, json::error_handler_t::replace);
        content.push_back('\n');
    }
    write_text_atomic(path, content);
}

}  // namespace qaforge

namespace qaforge::providers {

void to_json(nlohmann::json& j, const SearchHit& h) { j = nlohmann::json{{"title", h.title}, {"url", h.url}}; }
void from_json(const nlohmann::json& j, SearchHit& h) {
    h.title = j.value("title", "");
    h.url = j.at("url").get<std::string>();
}

void to_json(nlohmann::json& j, const WikiHit& h) {
    j = nlohmann::json{{"title", h.title}};
    j["entity"] = h.entity ? nlohmann::json(h.entity->str()) : nlohmann::json(nullptr);
}
void from_json(const nlohmann::json& j, WikiHit& h) {
    h.title = j.at("title").get<std::string>();
    h.entity = opt<EntityId>(j, "entity");
}

void to_json(nlohmann::json& j, const NamedEntitySpan& s) {
    j = nlohmann::json{{"begin", s.begin}, {"end", s.end}, {"label", s.label}};
}
void from_json(const nlohmann::json& j, NamedEntitySpan& s) {
    s.begin = j.at("begin").get<std::size_t>();
    s.end = j.at("end").get<std::size_t>();
    s.label = j.value("label", "");
}

std::string_view to_string(PosTag t) {
    switch (t) {
        case PosTag::noun: return "NOUN";
        case PosTag::adjective: return "ADJ";
        case PosTag::proper_noun: return "PROPN";
        case PosTag::unknown: return "X";
        case PosTag::verb: return "VERB";
        case PosTag::other: return "OTHER";
    }
    return "X";
}

PosTag parse_pos(std::string_view s) {
    if (s == "NOUN") return PosTag::noun;
    if (s == "ADJ") return PosTag::adjective;
    if (s == "PROPN") return PosTag::proper_noun;
    if (s == "X") return PosTag::unknown;
    if (s == "VERB") return PosTag::verb;
    return PosTag::other;
}

}  // namespace qaforge::providers

namespace qaforge::tagging {

void to_json(nlohmann::json& j, const TaggedSpan& s) {
    j = nlohmann::json{{"passage_id", s.passage_id}, {"char_begin", s.char_begin}, {"char_end", s.char_end},
                       {"word_begin", s.word_begin}, {"word_end", s.word_end},     {"text", s.text}};
}
void from_json(const nlohmann::json& j, TaggedSpan& s) {
    s.passage_id = j.at("passage_id").get<std::string>();
    s.char_begin = j.at("char_begin").get<std::size_t>();
    s.char_end = j.at("char_end").get<std::size_t>();
    s.word_begin = j.at("word_begin").get<std::size_t>();
    s.word_end = j.at("word_end").get<std::size_t>();
    s.text = j.at("text").get<std::string>();
}

}  // namespace qaforge::tagging

namespace qaforge::questions {

void to_json(nlohmann::json& j, const Prefix& p) {
    j = nlohmann::json{{"text", p.text},
                       {"method", p.method == PrefixMethod::first_k ? "first_k" : "up_to_named_entity"},
                       {"source_question", p.source_question}};
    if (p.method == PrefixMethod::first_k) j["k"] = p.k;
    else j["ner_provider"] = p.ner_provider;
}
void from_json(const nlohmann::json& j, Prefix& p) {
    p.text = j.at("text").get<std::string>();
    p.method = j.value("method", "first_k") == "first_k" ? PrefixMethod::first_k : PrefixMethod::up_to_named_entity;
    p.k = j.value("k", 0u);
    p.ner_provider = j.value("ner_provider", "");
    p.source_question = j.value("source_question", "");
}

void to_json(nlohmann::json& j, const CandidateQuestion& c) {
    j = nlohmann::json{{"text", c.text},
                       {"prefix", c.prefix},
                       {"provider", c.provider},
                       {"response_index", c.response_index},
                       {"drifted", c.drifted}};
}
void from_json(const nlohmann::json& j, CandidateQuestion& c) {
    c.text = j.at("text").get<std::string>();
    c.prefix = j.at("prefix").get<Prefix>();
    c.provider = j.value("provider", "");
    c.response_index = j.value("response_index", std::size_t{0});
    c.drifted = j.value("drifted", false);
}

}  // namespace qaforge::questions

namespace qaforge::templates {

void to_json(nlohmann::json& j, const TemplateInstance& t) {
    j = nlohmann::json{{"id", t.id},
                       {"template", t.template_name},
                       {"inputs", t.inputs},
                       {"question_raw", t.question_raw},
                       {"query", t.query},
                       {"topic_entities", t.topic_entities},
                       {"answers", t.answers},
                       {"status", to_string(t.status)},
                       {"refine_failed", t.refine_failed}};
    j["question_refined"] = t.question_refined ? nlohmann::json(*t.question_refined) : nlohmann::json(nullptr);
}
void from_json(const nlohmann::json& j, TemplateInstance& t) {
    t.id = j.at("id").get<std::string>();
    t.template_name = j.at("template").get<std::string>();
    t.inputs = j.at("inputs").get<InputMap>();
    t.question_raw = j.at("question_raw").get<std::string>();
    t.question_refined = opt<std::string>(j, "question_refined");
    t.query = j.value("query", "");
    t.topic_entities = j.value("topic_entities", std::set<EntityId>{});
    t.answers = j.at("answers").get<std::set<EntityId>>();
    t.status = parse_status(j.value("status", "unverified"));
    t.refine_failed = j.value("refine_failed", false);
}

}  // namespace qaforge::templates

namespace qaforge::verification {

void to_json(nlohmann::json& j, const CandidateExample& c) {
    j = nlohmann::json{{"id", c.id},
                       {"question", c.question},
                       {"passage", c.passage},
                       {"answer", c.answer},
                       {"candidate_answers", c.candidate_answers},
                       {"candidate_topics", c.candidate_topics}};
}
void from_json(const nlohmann::json& j, CandidateExample& c) {
    c.id = j.at("id").get<std::string>();
    c.question = j.at("question").get<std::string>();
    c.passage = j.at("passage").get<Passage>();
    c.answer = j.at("answer").get<tagging::TaggedSpan>();
    c.candidate_answers = j.value("candidate_answers", std::set<EntityId>{});
    c.candidate_topics = j.value("candidate_topics", std::set<EntityId>{});
}

void to_json(nlohmann::json& j, const Stage1Decision& d) {
    j = nlohmann::json{{"stage", 1},
                       {"item_id", d.item_id},
                       {"annotator_id", d.annotator_id},
                       {"flag", to_string(d.flag)},
                       {"timestamp", d.timestamp}};
}
void from_json(const nlohmann::json& j, Stage1Decision& d) {
    if (!j.contains("item_id") || !j["item_id"].is_string()) throw ValidationError("item_id", "missing");
    if (!j.contains("annotator_id") || !j["annotator_id"].is_string()) throw ValidationError("annotator_id", "missing");
    if (!j.contains("flag") || !j["flag"].is_string()) throw ValidationError("flag", "missing");
    d.item_id = j["item_id"].get<std::string>();
    d.annotator_id = j["annotator_id"].get<std::string>();
    d.flag = parse_flag(j["flag"].get<std::string>());
    d.timestamp = j.value("timestamp", "");
}

void to_json(nlohmann::json& j, const Stage2Decision& d) {
    j = nlohmann::json{{"stage", 2},
                       {"item_id", d.item_id},
                       {"annotator_id", d.annotator_id},
                       {"accepted_answer_entities", d.accepted_answer_entities},
                       {"accepted_topic_entities", d.accepted_topic_entities},
                       {"rejected", d.rejected},
                       {"timestamp", d.timestamp}};
}
void from_json(const nlohmann::json& j, Stage2Decision& d) {
    if (!j.contains("item_id") || !j["item_id"].is_string()) throw ValidationError("item_id", "missing");
    if (!j.contains("annotator_id") || !j["annotator_id"].is_string()) throw ValidationError("annotator_id", "missing");
    auto ids = [&](const char* field) {
        std::set<EntityId> out;
        auto it = j.find(field);
        if (it == j.end() || it->is_null()) return out;
        if (!it->is_array()) throw ValidationError(field, "must be a list of entity ids");
        for (const auto& v : *it) {
            if (!v.is_string() || v.get<std::string>().empty()) throw ValidationError(field, "must hold entity ids");
            out.insert(EntityId(v.get<std::string>()));
        }
        return out;
    };
    d.item_id = j["item_id"].get<std::string>();
    d.annotator_id = j["annotator_id"].get<std::string>();
    d.accepted_answer_entities = ids("accepted_answer_entities");
    d.accepted_topic_entities = ids("accepted_topic_entities");
    auto r = j.find("rejected");
    if (r != j.end() && !r->is_boolean()) throw ValidationError("rejected", "must be a boolean");
    d.rejected = r != j.end() && r->get<bool>();
    d.timestamp = j.value("timestamp", "");
}

namespace {

// Files carry code-point offsets, as extractive QA readers expect.
std::size_t bytes_to_code_points(std::string_view s, std::size_t bytes) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < bytes && i < s.size(); ++i)
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) ++n;
    return n;
}

std::size_t code_points_to_bytes(std::string_view s, std::size_t points) {
    std::size_t i = 0;
    for (std::size_t n = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
        if (n++ == points) return i;
    }
    if (bytes_to_code_points(s, s.size()) != points) throw ValidationError("answer_start", "beyond the context");
    return i;
}

}  // namespace

void to_json(nlohmann::json& j, const MrcExample& e) {
    j = nlohmann::json{{"id", e.id},           {"question", e.question},       {"passage_id", e.passage_id},
                       {"context", e.context}, {"answer_text", e.answer_text},
                       {"answer_start", bytes_to_code_points(e.context, e.answer_start)}};
}
void from_json(const nlohmann::json& j, MrcExample& e) {
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.passage_id = j.at("passage_id").get<std::string>();
    e.context = j.value("context", "");
    e.answer_text = j.at("answer_text").get<std::string>();
    e.answer_start = code_points_to_bytes(e.context, j.value("answer_start", std::size_t{0}));
}

void to_json(nlohmann::json& j, const IrExample& e) {
    j = nlohmann::json{{"id", e.id}, {"question", e.question}, {"passage_id", e.passage_id}};
}
void from_json(const nlohmann::json& j, IrExample& e) {
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.passage_id = j.at("passage_id").get<std::string>();
}

}  // namespace qaforge::verification
