#include "qaforge/providers/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include "qaforge/errors.hpp"
#include "qaforge/hash.hpp"
#include "qaforge/records.hpp"
#include "qaforge/text.hpp"

namespace qaforge::providers {

using nlohmann::json;

void RateGate::wait() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_);
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

std::filesystem::path ResponseCache::path_for(std::string_view provider, const json& request) const {
    return dir_ / std::string(provider) / (sha256_hex(request.dump()) + ".json");
}

std::optional<json> ResponseCache::get(std::string_view provider, const json& request) const {
    auto path = path_for(provider, request);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        const auto& response = j.at("response");
        if (j.at("request") != request || j.at("sha256").get<std::string>() != sha256_hex(response.dump())) {
            spdlog::warn("discarding corrupt cache entry {}", path.string());
            return std::nullopt;
        }
        return response;
    } catch (const json::exception&) {
        spdlog::warn("discarding unreadable cache entry {}", path.string());
        return std::nullopt;
    }
}

void ResponseCache::put(std::string_view provider, const json& request, const json& response) const {
    json j{{"request", request}, {"response", response}, {"sha256", sha256_hex(response.dump())}};
    write_text_atomic(path_for(provider, request), j.dump(1));
}

HttpJsonClient::HttpJsonClient(std::string provider, HttpOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
    auto scheme = options_.base_url.find("://");
    auto path_start = options_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    host_ = options_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (host_.empty()) throw ValidationError("base_url", "missing host in '" + options_.base_url + "'");
}

json HttpJsonClient::get(const std::string& path, const std::map<std::string, std::string>& params) {
    json p = json::object();
    for (const auto& [k, v] : params) p[k] = v;
    return send(json{{"method", "GET"}, {"path", prefix_ + path}, {"params", p}});
}

json HttpJsonClient::post(const std::string& path, const json& body) {
    return send(json{{"method", "POST"}, {"path", prefix_ + path}, {"body", body}});
}

json HttpJsonClient::send(const json& request) {
    // The cache key leaves out headers so rotating credentials keeps hits.
    json keyed = request;
    keyed["host"] = host_;
    if (options_.cache)
        if (auto hit = options_.cache->get(provider_, keyed)) return *hit;

    httplib::Client client(host_);
    client.set_follow_location(true);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : options_.headers) headers.emplace(k, v);

    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500 << attempt));
        if (options_.gate) options_.gate->wait();
        httplib::Result res;
        const auto path = request.at("path").get<std::string>();
        if (request.at("method") == "GET") {
            httplib::Params params;
            for (const auto& [k, v] : request.at("params").items()) params.emplace(k, v.get<std::string>());
            res = client.Get(path, params, headers);
        } else {
            res = client.Post(path, headers, request.at("body").dump(), "application/json");
        }
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw ProviderError(provider_ + ": HTTP " + std::to_string(res->status) + " for " + path);
        json body;
        try {
            body = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderError(provider_ + ": response is not JSON: " + e.what());
        }
        if (options_.cache) options_.cache->put(provider_, keyed, body);
        return body;
    }
    throw ProviderError(provider_ + ": request failed after retries: " + last_error);
}

HttpSuggest::HttpSuggest(HttpOptions options, std::string language)
    : client_("suggest", std::move(options)), language_(std::move(language)) {}

std::vector<std::string> HttpSuggest::suggest(std::string_view prefix) {
    auto r = client_.get("/complete/search", {{"client", "firefox"}, {"hl", language_}, {"q", std::string(prefix)}});
    if (!r.is_array() || r.size() < 2 || !r[1].is_array()) throw ProviderError("suggest: unexpected response shape");
    std::vector<std::string> out;
    for (const auto& s : r[1])
        if (s.is_string()) out.push_back(s.get<std::string>());
    return out;
}

HttpWebSearch::HttpWebSearch(HttpOptions options, std::string api_key, std::string engine_id)
    : client_("web-search", std::move(options)), api_key_(std::move(api_key)), engine_id_(std::move(engine_id)) {}

std::vector<SearchHit> HttpWebSearch::search(std::string_view query) {
    auto r = client_.get("/customsearch/v1",
                         {{"key", api_key_}, {"cx", engine_id_}, {"q", std::string(query)}, {"num", "10"}});
    std::vector<SearchHit> out;
    if (!r.contains("items")) return out;
    for (const auto& item : r["items"]) out.push_back(SearchHit{item.value("title", ""), item.value("link", "")});
    return out;
}

MediaWikiSearch::MediaWikiSearch(HttpOptions options) : client_("mediawiki-search", std::move(options)) {}

std::vector<WikiHit> MediaWikiSearch::search(std::string_view query) {
    auto r = client_.get("/w/api.php", {{"action", "query"},
                                        {"format", "json"},
                                        {"generator", "search"},
                                        {"gsrsearch", std::string(query)},
                                        {"gsrlimit", "10"},
                                        {"prop", "pageprops"},
                                        {"ppprop", "wikibase_item"}});
    std::vector<std::pair<long, WikiHit>> ranked;
    if (!r.contains("query") || !r["query"].contains("pages")) return {};
    for (const auto& [_, page] : r["query"]["pages"].items()) {
        WikiHit h{page.value("title", ""), std::nullopt};
        if (page.contains("pageprops") && page["pageprops"].contains("wikibase_item"))
            h.entity = EntityId(page["pageprops"]["wikibase_item"].get<std::string>());
        ranked.push_back({page.value("index", 0L), std::move(h)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<WikiHit> out;
    for (auto& [_, h] : ranked) out.push_back(std::move(h));
    return out;
}

namespace {

// Removes `open ... close` regions, honouring nesting.
std::string strip_nested(std::string_view s, std::string_view open, std::string_view close) {
    std::string out;
    int depth = 0;
    for (std::size_t i = 0; i < s.size();) {
        if (s.substr(i, open.size()) == open) {
            ++depth;
            i += open.size();
        } else if (depth > 0 && s.substr(i, close.size()) == close) {
            --depth;
            i += close.size();
        } else {
            if (depth == 0) out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

std::string strip_between(std::string_view s, std::string_view open, std::string_view close) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = s.find(open, i);
        if (b == std::string_view::npos) break;
        auto e = s.find(close, b + open.size());
        out.append(s.substr(i, b - i));
        if (e == std::string_view::npos) return out;
        i = e + close.size();
    }
    out.append(s.substr(std::min(i, s.size())));
    return out;
}

bool namespaced(std::string_view target) {
    auto colon = target.find(':');
    return colon != std::string_view::npos && colon > 0;
}

}  // namespace

Article wikitext_to_article(std::string_view title, std::string_view wikitext) {
    std::string s = strip_between(wikitext, "<!--", "-->");
    s = strip_between(s, "<ref", "</ref>");
    s = strip_nested(s, "{{", "}}");
    s = strip_nested(s, "{|", "|}");

    // Drop headings and namespaced links such as files and categories.
    std::string body;
    std::istringstream lines(s);
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty() && line.front() == '=') continue;
        body += line;
        body.push_back('\n');
    }

    Article a;
    a.title = std::string(title);
    a.page_id = a.title;
    // Text glued to the end of a link ("[[Germany]].") extends its last word.
    auto add_words = [&](std::string_view chunk, bool glued = false) {
        std::string clean;
        bool in_tag = false;
        for (char c : chunk) {
            if (c == '<') in_tag = true;
            else if (c == '>' && in_tag) in_tag = false;
            else if (!in_tag && c != '\'') clean.push_back(c);
        }
        auto words = text::split_whitespace(clean);
        if (glued && !a.words.empty() && !words.empty() && !clean.empty() &&
            !std::isspace(static_cast<unsigned char>(clean.front()))) {
            a.words.back() += words.front();
            words.erase(words.begin());
        }
        a.words.insert(a.words.end(), words.begin(), words.end());
        return words.size();
    };

    std::size_t i = 0;
    bool after_link = false;
    while (i < body.size()) {
        const bool glued = std::exchange(after_link, false);
        auto open = body.find("[[", i);
        auto ext = body.find('[', i);
        if (ext != std::string::npos && ext < open && (ext + 1 >= body.size() || body[ext + 1] != '[')) {
            // External link: keep the label only.
            add_words(std::string_view(body).substr(i, ext - i), glued);
            auto close = body.find(']', ext);
            if (close == std::string::npos) break;
            auto inner = std::string_view(body).substr(ext + 1, close - ext - 1);
            auto sp = inner.find(' ');
            if (sp != std::string_view::npos) add_words(inner.substr(sp + 1));
            i = close + 1;
            continue;
        }
        if (open == std::string::npos) {
            add_words(std::string_view(body).substr(i), glued);
            break;
        }
        add_words(std::string_view(body).substr(i, open - i), glued);
        auto close = body.find("]]", open);
        if (close == std::string::npos) break;
        auto inner = std::string_view(body).substr(open + 2, close - open - 2);
        i = close + 2;
        auto bar = inner.find('|');
        auto target = text::collapse_whitespace(inner.substr(0, bar));
        auto label = bar == std::string_view::npos ? inner : inner.substr(bar + 1);
        if (namespaced(target)) {
            // Nested links inside file captions are not article text.
            auto nested_close = body.find("]]", i);
            auto nested_open = body.find("[[", i);
            while (nested_close != std::string::npos && nested_open != std::string::npos && nested_open < nested_close) {
                i = nested_close + 2;
                nested_close = body.find("]]", i);
                nested_open = body.find("[[", i);
            }
            continue;
        }
        // Trailing letters glued to the link belong to its label ("[[cat]]s").
        std::string tail;
        while (i < body.size() && std::isalpha(static_cast<unsigned char>(body[i]))) tail.push_back(body[i++]);
        std::size_t start = a.words.size();
        std::size_t count = add_words(std::string(label) + tail);
        if (count > 0) {
            if (auto hash = target.find('#'); hash != std::string::npos) target.resize(hash);
            if (!target.empty()) target[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(target[0])));
            a.links.push_back(ArticleLink{start, start + count, std::nullopt, target});
            after_link = true;
        }
    }
    return a;
}

MediaWikiArticle::MediaWikiArticle(HttpOptions options) : client_("mediawiki-article", std::move(options)) {}

Article MediaWikiArticle::fetch(std::string_view title) {
    auto r = client_.get("/w/api.php", {{"action", "parse"},
                                        {"format", "json"},
                                        {"formatversion", "2"},
                                        {"redirects", "1"},
                                        {"page", std::string(title)},
                                        {"prop", "wikitext|properties"}});
    if (r.contains("error")) throw ProviderError("mediawiki: " + r["error"].value("info", "error"));
    const auto& p = r.at("parse");
    auto a = wikitext_to_article(p.value("title", std::string(title)), p.value("wikitext", ""));
    a.page_id = std::to_string(p.value("pageid", 0L));
    if (p.contains("properties")) {
        const auto& props = p["properties"];
        if (props.is_object() && props.contains("wikibase_item"))
            a.entity = EntityId(props["wikibase_item"].get<std::string>());
        else if (props.is_array())
            for (const auto& prop : props)
                if (prop.value("name", "") == "wikibase_item") a.entity = EntityId(prop.value("value", ""));
    }
    return a;
}

ChatClient::ChatClient(HttpOptions options, std::string model)
    : client_("chat", std::move(options)), model_(std::move(model)) {}

std::string ChatClient::chat(const std::vector<prompts::ChatTurn>& turns) {
    json messages = json::array();
    for (const auto& t : turns) messages.push_back(json{{"role", t.role}, {"content", t.content}});
    auto r = client_.post("/v1/chat/completions", json{{"model", model_}, {"messages", messages}, {"temperature", 0}});
    try {
        return r.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ProviderError("chat: unexpected response shape");
    }
}

std::string ChatQaTagger::tag(std::string_view question, std::string_view passage) {
    return prompts::strip_quotes(chat_.chat(prompts::tagging_prompt(question, passage, lang_)));
}

std::string ChatRefiner::refine(std::string_view question) {
    auto turns = mode_ == Mode::inflect ? prompts::inflection_prompt(question, lang_)
                                        : prompts::paraphrase_prompt(question, lang_);
    auto out = prompts::strip_quotes(chat_.chat(turns));
    if (out.empty()) throw ProviderError(name() + ": empty reply");
    return out;
}

std::string ChatLlm::complete(std::string_view prompt) {
    return chat_.chat({prompts::ChatTurn{"user", std::string(prompt)}});
}

HttpEmbedder::HttpEmbedder(HttpOptions options, std::string model)
    : client_("embed", std::move(options)), model_(std::move(model)) {}

std::vector<std::vector<float>> HttpEmbedder::embed(std::span<const std::string> texts) {
    json input = json::array();
    for (const auto& t : texts) input.push_back(t);
    auto r = client_.post("/v1/embeddings", json{{"model", model_}, {"input", input}});
    std::vector<std::vector<float>> out;
    for (const auto& d : r.at("data")) out.push_back(d.at("embedding").get<std::vector<float>>());
    if (out.size() != texts.size()) throw ProviderError("embed: wrong number of vectors");
    return out;
}

HttpReranker::HttpReranker(HttpOptions options) : client_("rerank", std::move(options)) {}

std::vector<double> HttpReranker::score(std::string_view query, std::span<const std::string> passages) {
    json ps = json::array();
    for (const auto& p : passages) ps.push_back(p);
    auto r = client_.post("/rerank", json{{"query", query}, {"passages", ps}});
    return r.at("scores").get<std::vector<double>>();
}

}  // namespace qaforge::providers
