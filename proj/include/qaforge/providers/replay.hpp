#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qaforge/providers/interfaces.hpp"

namespace qaforge::providers {

enum class MissPolicy { error, empty, echo };

MissPolicy parse_miss_policy(std::string_view s);

// Recorded request/response pairs, one JSON record per line:
// {"provider": ..., "request": {...}, "response": ...}.
class ReplayStore {
public:
    explicit ReplayStore(MissPolicy policy = MissPolicy::error) : policy_(policy) {}

    // A missing file yields an empty store.
    static ReplayStore load(const std::filesystem::path& path, MissPolicy policy = MissPolicy::error);
    void merge_file(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void record(std::string_view provider, const nlohmann::json& request, nlohmann::json response);
    std::optional<nlohmann::json> find(std::string_view provider, const nlohmann::json& request) const;

    MissPolicy policy() const noexcept { return policy_; }
    void set_policy(MissPolicy p) noexcept { policy_ = p; }
    std::size_t size() const;
    std::size_t misses() const;

    // Response for the request, or nullopt when missing and the policy is not
    // `error`. Throws ProviderError on a miss under the `error` policy.
    std::optional<nlohmann::json> lookup(std::string_view provider, const nlohmann::json& request) const;

    ReplayStore(const ReplayStore& other);
    ReplayStore& operator=(const ReplayStore& other);

private:
    static std::string key(std::string_view provider, const nlohmann::json& request);

    MissPolicy policy_;
    mutable std::mutex mutex_;
    std::map<std::string, std::pair<nlohmann::json, nlohmann::json>> entries_;  // key -> (record, response)
    mutable std::size_t misses_ = 0;
};

class ReplaySuggest : public SuggestProvider {
public:
    explicit ReplaySuggest(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-suggest"; }
    std::vector<std::string> suggest(std::string_view prefix) override;

private:
    const ReplayStore& store_;
};

class ReplayArticleSearch : public ArticleSearchProvider {
public:
    explicit ReplayArticleSearch(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-search"; }
    std::vector<SearchHit> search(std::string_view query) override;

private:
    const ReplayStore& store_;
};

class ReplayArticleFetch : public ArticleFetchProvider {
public:
    explicit ReplayArticleFetch(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-article"; }
    Article fetch(std::string_view title) override;

private:
    const ReplayStore& store_;
};

// Keyed by the normalized question only.
class ReplayQaTag : public QaTagProvider {
public:
    explicit ReplayQaTag(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-qa-tag"; }
    std::string tag(std::string_view question, std::string_view passage) override;

private:
    const ReplayStore& store_;
};

class ReplayWikiSearch : public WikiSearchProvider {
public:
    explicit ReplayWikiSearch(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-wiki-search"; }
    std::vector<WikiHit> search(std::string_view query) override;

private:
    const ReplayStore& store_;
};

// One store channel per refinement step, e.g. "inflect" or "paraphrase".
class ReplayRefine : public RefineProvider {
public:
    ReplayRefine(const ReplayStore& store, std::string channel) : store_(store), channel_(std::move(channel)) {}
    std::string name() const override { return "replay-" + channel_; }
    std::string refine(std::string_view question) override;

private:
    const ReplayStore& store_;
    std::string channel_;
};

class ReplayLlm : public LlmProvider {
public:
    explicit ReplayLlm(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-llm"; }
    std::string complete(std::string_view prompt) override;

private:
    const ReplayStore& store_;
};

class ReplayNer : public NerProvider {
public:
    explicit ReplayNer(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-ner"; }
    std::vector<NamedEntitySpan> entities(std::string_view text) override;

private:
    const ReplayStore& store_;
};

class ReplayRerank : public RerankProvider {
public:
    explicit ReplayRerank(const ReplayStore& store) : store_(store) {}
    std::string name() const override { return "replay-rerank"; }
    std::vector<double> score(std::string_view query, std::span<const std::string> passages) override;

private:
    const ReplayStore& store_;
};

}  // namespace qaforge::providers
