#include "qaforge/providers/replay.hpp"

#include <fstream>

#include "qaforge/errors.hpp"
#include "qaforge/question_forge.hpp"
#include "qaforge/records.hpp"

namespace qaforge::providers {

using nlohmann::json;

MissPolicy parse_miss_policy(std::string_view s) {
    if (s == "error") return MissPolicy::error;
    if (s == "empty") return MissPolicy::empty;
    if (s == "echo") return MissPolicy::echo;
    throw ValidationError("miss_policy", "expected error, empty or echo, got '" + std::string(s) + "'");
}

ReplayStore::ReplayStore(const ReplayStore& other) {
    std::lock_guard lock(other.mutex_);
    policy_ = other.policy_;
    entries_ = other.entries_;
    misses_ = other.misses_;
}

ReplayStore& ReplayStore::operator=(const ReplayStore& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    policy_ = other.policy_;
    entries_ = other.entries_;
    misses_ = other.misses_;
    return *this;
}

std::string ReplayStore::key(std::string_view provider, const json& request) {
    return std::string(provider) + '\n' + request.dump();
}

ReplayStore ReplayStore::load(const std::filesystem::path& path, MissPolicy policy) {
    ReplayStore store(policy);
    if (std::filesystem::exists(path)) store.merge_file(path);
    return store;
}

void ReplayStore::merge_file(const std::filesystem::path& path) {
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        record(j.at("provider").get<std::string>(), j.at("request"), j.at("response"));
    });
}

void ReplayStore::save(const std::filesystem::path& path) const {
    std::vector<json> rows;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [_, entry] : entries_) rows.push_back(entry.first);
    }
    write_jsonl_atomic(path, rows);
}

void ReplayStore::record(std::string_view provider, const json& request, json response) {
    json row{{"provider", provider}, {"request", request}, {"response", response}};
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(key(provider, request), std::make_pair(std::move(row), std::move(response)));
}

std::optional<json> ReplayStore::find(std::string_view provider, const json& request) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(provider, request));
    if (it == entries_.end()) return std::nullopt;
    return it->second.second;
}

std::optional<json> ReplayStore::lookup(std::string_view provider, const json& request) const {
    if (auto hit = find(provider, request)) return hit;
    {
        std::lock_guard lock(mutex_);
        ++misses_;
    }
    if (policy_ == MissPolicy::error)
        throw ProviderError("no recorded response for " + std::string(provider) + " " + request.dump());
    return std::nullopt;
}

std::size_t ReplayStore::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t ReplayStore::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::vector<std::string> ReplaySuggest::suggest(std::string_view prefix) {
    auto r = store_.lookup("suggest", json{{"prefix", prefix}});
    if (r) return r->get<std::vector<std::string>>();
    if (store_.policy() == MissPolicy::echo) return {std::string(prefix)};
    return {};
}

std::vector<SearchHit> ReplayArticleSearch::search(std::string_view query) {
    auto r = store_.lookup("search", json{{"query", questions::normalize_question(query)}});
    return r ? r->get<std::vector<SearchHit>>() : std::vector<SearchHit>{};
}

Article ReplayArticleFetch::fetch(std::string_view title) {
    auto r = store_.lookup("article", json{{"title", title}});
    if (!r) throw ProviderError("no recorded article '" + std::string(title) + "'");
    return r->get<Article>();
}

std::string ReplayQaTag::tag(std::string_view question, std::string_view passage) {
    auto r = store_.lookup("qa_tag", json{{"question", questions::normalize_question(question)}});
    if (r) return r->get<std::string>();
    if (store_.policy() == MissPolicy::echo) {
        auto end = passage.find_first_of(".!?");
        return std::string(passage.substr(0, end == std::string_view::npos ? passage.size() : end + 1));
    }
    return {};
}

std::vector<WikiHit> ReplayWikiSearch::search(std::string_view query) {
    auto r = store_.lookup("wiki_search", json{{"query", query}});
    return r ? r->get<std::vector<WikiHit>>() : std::vector<WikiHit>{};
}

std::string ReplayRefine::refine(std::string_view question) {
    auto r = store_.lookup(channel_, json{{"question", question}});
    if (r) return r->get<std::string>();
    if (store_.policy() == MissPolicy::echo) return std::string(question);
    throw ProviderError("no recorded " + channel_ + " response");
}

std::string ReplayLlm::complete(std::string_view prompt) {
    auto r = store_.lookup("llm", json{{"prompt", prompt}});
    return r ? r->get<std::string>() : std::string{};
}

std::vector<NamedEntitySpan> ReplayNer::entities(std::string_view text) {
    auto r = store_.lookup("ner", json{{"text", text}});
    return r ? r->get<std::vector<NamedEntitySpan>>() : std::vector<NamedEntitySpan>{};
}

std::vector<double> ReplayRerank::score(std::string_view query, std::span<const std::string> passages) {
    json texts = json::array();
    for (const auto& p : passages) texts.push_back(p);
    auto r = store_.lookup("rerank", json{{"query", query}, {"passages", texts}});
    if (r) return r->get<std::vector<double>>();
    return std::vector<double>(passages.size(), 0.0);
}

}  // namespace qaforge::providers
