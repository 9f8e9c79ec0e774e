#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qaforge/answer_tagger.hpp"
#include "qaforge/article.hpp"
#include "qaforge/dataset.hpp"
#include "qaforge/ids.hpp"
#include "qaforge/providers/interfaces.hpp"
#include "qaforge/question_forge.hpp"
#include "qaforge/template_gen.hpp"
#include "qaforge/verification.hpp"

// JSON forms of the pipeline records and line-delimited file helpers.
namespace qaforge {

using json = nlohmann::json;

template <typename Tag>
void to_json(json& j, const StrongId<Tag>& id) {
    j = id.str();
}
template <typename Tag>
void from_json(const json& j, StrongId<Tag>& id) {
    id = StrongId<Tag>(j.get<std::string>());
}

void to_json(json& j, const ArticleLink& l);
void from_json(const json& j, ArticleLink& l);
void to_json(json& j, const Article& a);
void from_json(const json& j, Article& a);
void to_json(json& j, const Passage& p);
void from_json(const json& j, Passage& p);
void to_json(json& j, const KbqaExample& e);
void from_json(const json& j, KbqaExample& e);

std::string_view to_string(QuestionSource s);
QuestionSource parse_source(std::string_view s);

// Reads every non-blank line as JSON; throws LoadError with the line number.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn);

// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<json>& records);

template <typename T>
std::vector<T> load_records(const std::filesystem::path& path) {
    std::vector<T> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(j.get<T>()); });
    return out;
}

template <typename T>
void save_records(const std::filesystem::path& path, const std::vector<T>& records) {
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(json(r));
    write_jsonl_atomic(path, rows);
}

}  // namespace qaforge

namespace qaforge::providers {
void to_json(nlohmann::json& j, const SearchHit& h);
void from_json(const nlohmann::json& j, SearchHit& h);
void to_json(nlohmann::json& j, const WikiHit& h);
void from_json(const nlohmann::json& j, WikiHit& h);
void to_json(nlohmann::json& j, const NamedEntitySpan& s);
void from_json(const nlohmann::json& j, NamedEntitySpan& s);
std::string_view to_string(PosTag t);
PosTag parse_pos(std::string_view s);
}  // namespace qaforge::providers

namespace qaforge::tagging {
void to_json(nlohmann::json& j, const TaggedSpan& s);
void from_json(const nlohmann::json& j, TaggedSpan& s);
}  // namespace qaforge::tagging

namespace qaforge::questions {
void to_json(nlohmann::json& j, const Prefix& p);
void from_json(const nlohmann::json& j, Prefix& p);
void to_json(nlohmann::json& j, const CandidateQuestion& c);
void from_json(const nlohmann::json& j, CandidateQuestion& c);
}  // namespace qaforge::questions

namespace qaforge::templates {
void to_json(nlohmann::json& j, const TemplateInstance& t);
void from_json(const nlohmann::json& j, TemplateInstance& t);
}  // namespace qaforge::templates

namespace qaforge::verification {
void to_json(nlohmann::json& j, const CandidateExample& c);
void from_json(const nlohmann::json& j, CandidateExample& c);
void to_json(nlohmann::json& j, const Stage1Decision& d);
void from_json(const nlohmann::json& j, Stage1Decision& d);
void to_json(nlohmann::json& j, const Stage2Decision& d);
void from_json(const nlohmann::json& j, Stage2Decision& d);
void to_json(nlohmann::json& j, const MrcExample& e);
void from_json(const nlohmann::json& j, MrcExample& e);
void to_json(nlohmann::json& j, const IrExample& e);
void from_json(const nlohmann::json& j, IrExample& e);
}  // namespace qaforge::verification
