#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qaforge/article.hpp"
#include "qaforge/prompts.hpp"
#include "qaforge/providers/interfaces.hpp"

// Live clients for the external services. Every response is cached on disk
// by request hash, so reruns do not hit the network.
namespace qaforge::providers {

// Spaces calls at least `min_interval` apart across all clients sharing it.
class RateGate {
public:
    explicit RateGate(std::chrono::milliseconds min_interval) : interval_(min_interval) {}
    void wait();

private:
    std::chrono::milliseconds interval_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_{};
};

// `<dir>/<provider>/<sha256 of request>.json`, holding the request, the
// response and a checksum of the response that is verified on read.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::optional<nlohmann::json> get(std::string_view provider, const nlohmann::json& request) const;
    void put(std::string_view provider, const nlohmann::json& request, const nlohmann::json& response) const;
    std::filesystem::path path_for(std::string_view provider, const nlohmann::json& request) const;

private:
    std::filesystem::path dir_;
};

struct HttpOptions {
    std::string base_url;  // scheme://host[:port][/path-prefix]
    std::map<std::string, std::string> headers;
    std::chrono::seconds timeout{30};
    int retries = 3;
    ResponseCache* cache = nullptr;
    RateGate* gate = nullptr;
};

class HttpJsonClient {
public:
    HttpJsonClient(std::string provider, HttpOptions options);

    nlohmann::json get(const std::string& path, const std::map<std::string, std::string>& params);
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

private:
    nlohmann::json send(const nlohmann::json& request);

    std::string provider_;
    HttpOptions options_;
    std::string host_;
    std::string prefix_;
};

// Suggestion endpoint answering `[query, [completion, ...]]`.
class HttpSuggest : public SuggestProvider {
public:
    HttpSuggest(HttpOptions options, std::string language);
    std::string name() const override { return "http-suggest"; }
    std::vector<std::string> suggest(std::string_view prefix) override;

private:
    HttpJsonClient client_;
    std::string language_;
};

// Custom-search JSON API (`items[].title`, `items[].link`).
class HttpWebSearch : public ArticleSearchProvider {
public:
    HttpWebSearch(HttpOptions options, std::string api_key, std::string engine_id);
    std::string name() const override { return "http-web-search"; }
    std::vector<SearchHit> search(std::string_view query) override;

private:
    HttpJsonClient client_;
    std::string api_key_;
    std::string engine_id_;
};

// MediaWiki search with the linked knowledge-graph item of each page.
class MediaWikiSearch : public WikiSearchProvider {
public:
    explicit MediaWikiSearch(HttpOptions options);
    std::string name() const override { return "mediawiki-search"; }
    std::vector<WikiHit> search(std::string_view query) override;

private:
    HttpJsonClient client_;
};

// Words and links of a wikitext page: templates, references, tables and
// markup are dropped; `[[Target|text]]` becomes a link over `text`.
Article wikitext_to_article(std::string_view title, std::string_view wikitext);

class MediaWikiArticle : public ArticleFetchProvider {
public:
    explicit MediaWikiArticle(HttpOptions options);
    std::string name() const override { return "mediawiki-article"; }
    Article fetch(std::string_view title) override;

private:
    HttpJsonClient client_;
};

// OpenAI-compatible chat completions.
class ChatClient {
public:
    ChatClient(HttpOptions options, std::string model);
    std::string chat(const std::vector<prompts::ChatTurn>& turns);

private:
    HttpJsonClient client_;
    std::string model_;
};

class ChatQaTagger : public QaTagProvider {
public:
    ChatQaTagger(ChatClient& chat, prompts::Language lang) : chat_(chat), lang_(lang) {}
    std::string name() const override { return "chat-qa-tag"; }
    std::string tag(std::string_view question, std::string_view passage) override;

private:
    ChatClient& chat_;
    prompts::Language lang_;
};

class ChatRefiner : public RefineProvider {
public:
    enum class Mode { inflect, paraphrase };
    ChatRefiner(ChatClient& chat, Mode mode, prompts::Language lang) : chat_(chat), mode_(mode), lang_(lang) {}
    std::string name() const override { return mode_ == Mode::inflect ? "chat-inflect" : "chat-paraphrase"; }
    std::string refine(std::string_view question) override;

private:
    ChatClient& chat_;
    Mode mode_;
    prompts::Language lang_;
};

class ChatLlm : public LlmProvider {
public:
    explicit ChatLlm(ChatClient& chat) : chat_(chat) {}
    std::string name() const override { return "chat-llm"; }
    std::string complete(std::string_view prompt) override;

private:
    ChatClient& chat_;
};

// OpenAI-compatible embeddings.
class HttpEmbedder : public EmbedProvider {
public:
    HttpEmbedder(HttpOptions options, std::string model);
    std::string name() const override { return "http-embed"; }
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    HttpJsonClient client_;
    std::string model_;
};

// POST {query, passages} -> {scores: [...]}.
class HttpReranker : public RerankProvider {
public:
    explicit HttpReranker(HttpOptions options);
    std::string name() const override { return "http-rerank"; }
    std::vector<double> score(std::string_view query, std::span<const std::string> passages) override;

private:
    HttpJsonClient client_;
};

}  // namespace qaforge::providers
