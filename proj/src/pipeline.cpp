#include "qaforge/pipeline.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "qaforge/annotation_service.hpp"
#include "qaforge/answer_tagger.hpp"
#include "qaforge/bgp_query.hpp"
#include "qaforge/bm25.hpp"
#include "qaforge/entity_linker.hpp"
#include "qaforge/hash.hpp"
#include "qaforge/kg_retrieval.hpp"
#include "qaforge/kg_store.hpp"
#include "qaforge/metrics.hpp"
#include "qaforge/passage_builder.hpp"
#include "qaforge/providers/http.hpp"
#include "qaforge/providers/local.hpp"
#include "qaforge/providers/replay.hpp"
#include "qaforge/question_forge.hpp"
#include "qaforge/records.hpp"
#include "qaforge/template_gen.hpp"
#include "qaforge/text.hpp"
#include "qaforge/verification.hpp"

namespace qaforge::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

fs::path Config::path(const std::string& pointer) const {
    auto p = optional_path(pointer);
    if (!p) throw ValidationError(pointer, "required path setting is missing");
    return *p;
}

std::optional<fs::path> Config::optional_path(const std::string& pointer) const {
    auto ptr = json::json_pointer(pointer);
    if (!raw.contains(ptr) || raw.at(ptr).is_null()) return std::nullopt;
    if (!raw.at(ptr).is_string()) throw ValidationError(pointer, "must be a path string");
    fs::path p = raw.at(ptr).get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
}

std::vector<fs::path> Config::paths(const std::string& pointer) const {
    auto ptr = json::json_pointer(pointer);
    std::vector<fs::path> out;
    if (!raw.contains(ptr) || raw.at(ptr).is_null()) return out;
    const auto& v = raw.at(ptr);
    if (v.is_string()) return {path(pointer)};
    if (!v.is_array()) throw ValidationError(pointer, "must be a path or a list of paths");
    for (const auto& e : v) {
        fs::path p = e.get<std::string>();
        out.push_back(p.is_absolute() ? p : base_dir / p);
    }
    return out;
}

namespace {

void require_range(const Config& c, const std::string& pointer, double lo, double hi, double fallback) {
    double v = c.get<double>(pointer, fallback);
    if (!(v >= lo && v <= hi)) {
        std::string field = pointer.substr(1);
        std::replace(field.begin(), field.end(), '/', '.');
        std::ostringstream range;
        range << "must lie in [" << lo << ", " << hi << "]";
        throw ValidationError(field, range.str());
    }
}

}  // namespace

void validate_config(const Config& c) {
    if (!c.raw.is_object()) throw ValidationError("config", "must be an object");
    require_range(c, "/passages/window", 1, 1e6, 120);
    require_range(c, "/passages/step", 1, c.get<double>("/passages/window", 120), 60);
    require_range(c, "/tagging/min_ratio", 0, 1, tagging::kDefaultMinRatio);
    require_range(c, "/linking/sim_threshold", 0, 1, linking::kDefaultSimThreshold);
    require_range(c, "/templates/similarity_threshold", 0, 1, 0.6);
    require_range(c, "/verification/overlap", 0, 1, annotation::kDefaultOverlap);
    require_range(c, "/assemble/test_fraction", 0, 1, 0.2);
    require_range(c, "/eval/k", 1, 1e6, 40);
    require_range(c, "/questions/max_completions", 1, 1e6, 10);
    for (const auto* slot : {"suggest", "search", "article", "qa_tag", "wiki_search", "inflect", "paraphrase"}) {
        auto v = c.get<std::string>(std::string("/providers/") + slot, c.get<std::string>("/providers/mode", "replay"));
        if (v != "replay" && v != "live" && v != "local")
            throw ValidationError(std::string("providers.") + slot, "must be replay, live or local");
    }
    const std::map<std::string, std::pair<std::string, std::set<std::string>>> model_slots{
        {"rerank", {"overlap", {"overlap", "constant", "replay", "live"}}},
        {"llm", {"echo-facts", {"echo-facts", "replay", "live"}}},
        {"embed", {"hashing", {"hashing", "live"}}},
    };
    for (const auto& [slot, spec] : model_slots) {
        auto v = c.get<std::string>("/providers/" + slot, spec.first);
        if (!spec.second.contains(v)) throw ValidationError("providers." + slot, "unknown provider '" + v + "'");
    }
    providers::parse_miss_policy(c.get<std::string>("/providers/miss_policy", "error"));
    if (c.has("/verification/annotators")) {
        auto a = c.raw.at(json::json_pointer("/verification/annotators"));
        if (!a.is_array() || a.empty()) throw ValidationError("verification.annotators", "must be a non-empty list");
    }
}

Config make_config(json raw, const fs::path& base_dir) {
    Config c;
    c.raw = std::move(raw);
    c.base_dir = base_dir;
    try {
        c.seed = c.get<std::uint64_t>("/seed", 0);
        c.language = prompts::parse_language(c.get<std::string>("/language", "en"));
    } catch (const json::exception& e) {
        throw ValidationError("config", e.what());
    }
    c.output_dir = c.optional_path("/output_dir").value_or(base_dir / "out");
    try {
        validate_config(c);
    } catch (const json::exception& e) {
        throw ValidationError("config", e.what());
    }
    return c;
}

Config load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open " + path.string());
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config", path.string() + ": " + e.what());
    }
    return make_config(std::move(raw), fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Reports

std::optional<std::size_t> StageReport::count(const std::string& label) const {
    for (const auto& r : rows)
        if (r.label == label) return r.count;
    return std::nullopt;
}

json to_json(const StageReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back(json{{"label", row.label}, {"count", row.count}});
    return json{{"stage", r.stage}, {"rows", rows}};
}

StageReport report_from_json(const json& j) {
    StageReport r;
    r.stage = j.at("stage").get<std::string>();
    for (const auto& row : j.at("rows"))
        r.rows.push_back({row.at("label").get<std::string>(), row.at("count").get<std::size_t>()});
    return r;
}

std::string format_report(const StageReport& report) {
    std::size_t width = 4;
    for (const auto& r : report.rows) width = std::max(width, r.label.size());
    std::ostringstream os;
    os << "stage " << report.stage << (report.cached ? " (cached)" : "") << '\n';
    os << "  " << std::left << std::setw(static_cast<int>(width)) << "Data" << "  " << std::right << std::setw(8)
       << "#" << "  reduction\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        os << "  " << std::left << std::setw(static_cast<int>(width)) << r.label << "  " << std::right << std::setw(8)
           << r.count;
        if (i > 0 && report.rows[i - 1].count > 0) {
            double prev = static_cast<double>(report.rows[i - 1].count);
            double red = 100.0 * (prev - static_cast<double>(r.count)) / prev;
            os << "  " << std::fixed << std::setprecision(1) << red << '%';
        }
        os << '\n';
    }
    return os.str();
}

const std::vector<std::string>& stage_order() {
    static const std::vector<std::string> order = {
        "kg-import", "questions",  "passages", "tag",       "link",      "verify-export", "verify-import",
        "templates", "assemble",   "kg-sample", "eval-kbqa", "eval-mrc", "eval-ir",       "stats"};
    return order;
}

bool is_stage(const std::string& name) {
    const auto& o = stage_order();
    return name == "serve" || std::find(o.begin(), o.end(), name) != o.end();
}

std::vector<ReportRow> pipeline_chain(const fs::path& output_dir) {
    std::vector<ReportRow> out;
    std::set<std::string> seen;
    for (const auto& stage : stage_order()) {
        auto p = output_dir / "reports" / (stage + ".json");
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        auto r = report_from_json(json::parse(in));
        for (const auto& row : r.rows)
            if (seen.insert(row.label).second) out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string item_id_for(std::string_view question) {
    return "q" + sha256_hex(questions::normalize_question(question)).substr(0, 12);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw LoadError(p.string(), 1, e.what());
    }
}

void write_json(const fs::path& p, const json& j) { write_text_atomic(p, j.dump(2) + "\n"); }

void write_graph_atomic(const kg::KnowledgeGraph& g, const fs::path& triples, const fs::path& labels) {
    std::ostringstream t, l;
    kg::write_graph(g, t, l);
    write_text_atomic(triples, t.str());
    write_text_atomic(labels, l.str());
}

std::vector<std::string> read_seed_questions(const fs::path& p) {
    std::vector<std::string> out;
    if (p.extension() == ".jsonl") {
        for_each_jsonl(p, [&](const json& j, std::size_t) { out.push_back(j.at("question").get<std::string>()); });
        return out;
    }
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        auto q = text::collapse_whitespace(line);
        if (!q.empty()) out.push_back(q);
    }
    return out;
}

std::map<std::string, providers::PosTag> read_pos_lexicon(const fs::path& p) {
    std::map<std::string, providers::PosTag> out;
    std::istringstream in(read_file(p));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw LoadError(p.string(), n, "expected word<TAB>tag");
        out[text::fold_case(line.substr(0, tab))] = providers::parse_pos(line.substr(tab + 1));
    }
    return out;
}

// TSV `title<TAB>entity id`; the id column may be empty.
std::vector<providers::WikiHit> read_wiki_titles(const fs::path& p) {
    std::vector<providers::WikiHit> out;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        providers::WikiHit h{line.substr(0, tab), std::nullopt};
        if (tab != std::string::npos && tab + 1 < line.size()) h.entity = EntityId(line.substr(tab + 1));
        out.push_back(std::move(h));
    }
    return out;
}

// Explicit statuses by instance id first, then the first matching rule, then the default.
templates::VerificationStatus review_status(const json& review, const templates::TemplateInstance& inst,
                                            templates::VerificationStatus fallback) {
    auto ids = review.value("statuses", json::object());
    if (ids.contains(inst.id)) return templates::parse_status(ids[inst.id].get<std::string>());
    for (const auto& rule : review.value("rules", json::array())) {
        if (rule.contains("template") && rule["template"] != inst.template_name) continue;
        if (rule.contains("input")) {
            auto want = rule["input"].get<std::string>();
            bool found = false;
            for (const auto& [_, v] : inst.inputs) found = found || v == want;
            if (!found) continue;
        }
        return templates::parse_status(rule.at("status").get<std::string>());
    }
    return fallback;
}

std::string getenv_or_empty(const std::string& name) {
    if (name.empty()) return {};
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

std::set<std::size_t> k_values_of(const Config& c) {
    auto ks = c.get<std::vector<std::size_t>>("/eval/k_values", {10, 100});
    return {ks.begin(), ks.end()};
}

}  // namespace

struct StageDef {
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    json params;
    std::function<StageReport()> body;
};

struct Pipeline::Impl {
    explicit Impl(const Config& c) : cfg(c) {}

    const Config& cfg;
    std::unique_ptr<providers::ReplayStore> store;
    std::unique_ptr<providers::ResponseCache> cache;
    std::unique_ptr<providers::RateGate> gate;
    std::unique_ptr<providers::ChatClient> chat;
    std::map<std::string, std::unique_ptr<providers::Provider>> owned;
    std::unique_ptr<providers::LemmaProvider> lemmatizer;

    fs::path out(const std::string& rel) const { return cfg.output_dir / rel; }

    std::string slot(const std::string& name, const std::string& fallback) const {
        return cfg.get<std::string>("/providers/" + name, fallback);
    }
    std::string network_slot(const std::string& name) const {
        return slot(name, cfg.get<std::string>("/providers/mode", "replay"));
    }

    std::vector<fs::path> replay_files() const { return cfg.paths("/providers/replay"); }

    providers::ReplayStore& replay() {
        if (!store) {
            auto policy = providers::parse_miss_policy(cfg.get<std::string>("/providers/miss_policy", "error"));
            store = std::make_unique<providers::ReplayStore>(policy);
            for (const auto& f : replay_files()) store->merge_file(f);
        }
        return *store;
    }

    providers::HttpOptions http(const std::string& url_key) {
        if (!cache) cache = std::make_unique<providers::ResponseCache>(
                        cfg.optional_path("/providers/cache_dir").value_or(cfg.output_dir / "cache"));
        if (!gate) gate = std::make_unique<providers::RateGate>(
                       std::chrono::milliseconds(cfg.get<int>("/providers/rate_limit_ms", 100)));
        providers::HttpOptions o;
        o.base_url = cfg.get<std::string>("/providers/live/" + url_key, "");
        if (o.base_url.empty()) throw ValidationError("providers.live." + url_key, "required for live providers");
        auto key = getenv_or_empty(cfg.get<std::string>("/providers/live/api_key_env", ""));
        if (!key.empty()) o.headers["Authorization"] = "Bearer " + key;
        o.retries = cfg.get<int>("/providers/live/retries", 3);
        o.cache = cache.get();
        o.gate = gate.get();
        return o;
    }

    providers::ChatClient& chat_client() {
        if (!chat)
            chat = std::make_unique<providers::ChatClient>(
                http("chat_url"), cfg.get<std::string>("/providers/live/chat_model", "gpt-3.5-turbo"));
        return *chat;
    }

    template <typename T>
    T& keep(const std::string& key, std::unique_ptr<T> p) {
        auto& slot_ref = owned[key];
        slot_ref = std::move(p);
        return static_cast<T&>(*slot_ref);
    }

    template <typename T, typename Make>
    T& provider(const std::string& key, Make make) {
        auto it = owned.find(key);
        if (it != owned.end()) return dynamic_cast<T&>(*it->second);
        return keep<T>(key, make());
    }

    providers::SuggestProvider& suggest() {
        return provider<providers::SuggestProvider>("suggest", [&]() -> std::unique_ptr<providers::SuggestProvider> {
            auto s = network_slot("suggest");
            if (s == "live")
                return std::make_unique<providers::HttpSuggest>(http("suggest_url"),
                                                                cfg.get<std::string>("/language", "en"));
            if (s == "local") return std::make_unique<providers::EchoSuggest>();
            return std::make_unique<providers::ReplaySuggest>(replay());
        });
    }

    providers::ArticleSearchProvider& search() {
        return provider<providers::ArticleSearchProvider>(
            "search", [&]() -> std::unique_ptr<providers::ArticleSearchProvider> {
                if (network_slot("search") == "live")
                    return std::make_unique<providers::HttpWebSearch>(
                        http("search_url"), getenv_or_empty(cfg.get<std::string>("/providers/live/search_key_env", "")),
                        cfg.get<std::string>("/providers/live/engine_id", ""));
                return std::make_unique<providers::ReplayArticleSearch>(replay());
            });
    }

    providers::ArticleFetchProvider& fetch() {
        return provider<providers::ArticleFetchProvider>(
            "article", [&]() -> std::unique_ptr<providers::ArticleFetchProvider> {
                if (network_slot("article") == "live")
                    return std::make_unique<providers::MediaWikiArticle>(http("wiki_url"));
                return std::make_unique<providers::ReplayArticleFetch>(replay());
            });
    }

    providers::WikiSearchProvider& wiki_search() {
        return provider<providers::WikiSearchProvider>(
            "wiki_search", [&]() -> std::unique_ptr<providers::WikiSearchProvider> {
                auto s = network_slot("wiki_search");
                if (s == "live") return std::make_unique<providers::MediaWikiSearch>(http("wiki_url"));
                if (s == "local") return std::make_unique<providers::TitleIndexSearch>(read_wiki_titles(cfg.path("/linking/wiki_titles")));
                return std::make_unique<providers::ReplayWikiSearch>(replay());
            });
    }

    providers::RerankProvider& reranker() {
        return provider<providers::RerankProvider>("rerank", [&]() -> std::unique_ptr<providers::RerankProvider> {
            auto s = slot("rerank", "overlap");
            if (s == "live") return std::make_unique<providers::HttpReranker>(http("rerank_url"));
            if (s == "replay") return std::make_unique<providers::ReplayRerank>(replay());
            if (s == "constant") return std::make_unique<providers::ConstantReranker>();
            if (s != "overlap") throw ValidationError("providers.rerank", "unknown reranker '" + s + "'");
            return std::make_unique<providers::OverlapReranker>();
        });
    }

    providers::QaTagProvider& qa_tagger() {
        return provider<providers::QaTagProvider>("qa_tag", [&]() -> std::unique_ptr<providers::QaTagProvider> {
            auto s = network_slot("qa_tag");
            if (s == "live") return std::make_unique<providers::ChatQaTagger>(chat_client(), cfg.language);
            if (s == "local") return std::make_unique<providers::FirstSentenceTagger>();
            return std::make_unique<providers::ReplayQaTag>(replay());
        });
    }

    providers::RefineProvider& refiner(const std::string& channel) {
        return provider<providers::RefineProvider>(channel, [&]() -> std::unique_ptr<providers::RefineProvider> {
            auto s = network_slot(channel);
            if (s == "live")
                return std::make_unique<providers::ChatRefiner>(
                    chat_client(),
                    channel == "inflect" ? providers::ChatRefiner::Mode::inflect
                                         : providers::ChatRefiner::Mode::paraphrase,
                    cfg.language);
            if (s == "local") return std::make_unique<providers::IdentityRefiner>();
            return std::make_unique<providers::ReplayRefine>(replay(), channel);
        });
    }

    providers::LlmProvider& llm() {
        return provider<providers::LlmProvider>("llm", [&]() -> std::unique_ptr<providers::LlmProvider> {
            auto s = slot("llm", "echo-facts");
            if (s == "live") return std::make_unique<providers::ChatLlm>(chat_client());
            if (s == "replay") return std::make_unique<providers::ReplayLlm>(replay());
            if (s != "echo-facts") throw ValidationError("providers.llm", "unknown llm '" + s + "'");
            return std::make_unique<providers::EchoFactsLlm>();
        });
    }

    providers::EmbedProvider& embedder() {
        return provider<providers::EmbedProvider>("embed", [&]() -> std::unique_ptr<providers::EmbedProvider> {
            if (slot("embed", "hashing") == "live")
                return std::make_unique<providers::HttpEmbedder>(
                    http("embed_url"), cfg.get<std::string>("/providers/live/embed_model", ""));
            return std::make_unique<eval::HashingEmbedder>(cfg.get<std::size_t>("/eval/embed_dim", 512));
        });
    }

    std::vector<providers::NerProvider*> ner_providers() {
        std::vector<providers::NerProvider*> out;
        for (const auto& kind : cfg.get<std::vector<std::string>>("/questions/ner", {"capitalized"})) {
            if (kind == "capitalized")
                out.push_back(&provider<providers::NerProvider>(
                    "ner:capitalized", [] { return std::make_unique<providers::CapitalizedNer>(); }));
            else if (kind == "replay")
                out.push_back(&provider<providers::NerProvider>(
                    "ner:replay", [&] { return std::make_unique<providers::ReplayNer>(replay()); }));
            else
                throw ValidationError("questions.ner", "unknown NER provider '" + kind + "'");
        }
        return out;
    }

    providers::LemmaProvider& lemma() {
        if (!lemmatizer) {
            auto p = cfg.optional_path("/tagging/lemmas");
            if (p)
                lemmatizer = std::make_unique<providers::DictionaryLemmatizer>(providers::DictionaryLemmatizer::load(*p));
            else
                lemmatizer = std::make_unique<providers::IdentityLemmatizer>();
        }
        return *lemmatizer;
    }

    providers::PosProvider& pos() {
        return provider<providers::PosProvider>("pos", [&]() -> std::unique_ptr<providers::PosProvider> {
            auto p = cfg.optional_path("/linking/pos_lexicon");
            if (p) return std::make_unique<providers::RuleBasedPosTagger>(read_pos_lexicon(*p));
            return std::make_unique<providers::RuleBasedPosTagger>();
        });
    }

    kg::KnowledgeGraph graph() const { return kg::load_graph(out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv")); }

    json provider_params() const {
        json p = cfg.raw.value("providers", json::object());
        json hashes = json::object();
        for (const auto& f : replay_files()) hashes[f.string()] = fs::exists(f) ? sha256_file(f) : "";
        p["replay_hashes"] = hashes;
        return p;
    }

    json section(const std::string& name) const { return cfg.raw.value(name, json::object()); }

    StageDef define(const std::string& stage);

    std::string producer_of(const fs::path& p) {
        for (const auto& s : stage_order()) {
            auto d = define(s);
            if (std::find(d.outputs.begin(), d.outputs.end(), p) != d.outputs.end()) return s;
        }
        return {};
    }

    StageReport kg_import();
    StageReport questions_stage();
    StageReport passages_stage();
    StageReport tag_stage();
    StageReport link_stage();
    StageReport verify_export();
    StageReport verify_import();
    StageReport templates_stage();
    StageReport assemble_stage();
    StageReport kg_sample();
    StageReport eval_kbqa();
    StageReport eval_mrc();
    StageReport eval_ir();
    StageReport stats();

    std::vector<verification::CandidateExample> candidates() const {
        return load_records<verification::CandidateExample>(out("link/candidates.jsonl"));
    }
    std::map<EntityId, std::string> entity_labels(const kg::KnowledgeGraph& g) const {
        std::map<EntityId, std::string> labels;
        for (const auto& [id, rec] : g.entities())
            if (rec.label) labels[id] = *rec.label;
        return labels;
    }
    verification::Stage1Result stage1_result() const;
    json splits() const { return read_json(out("datasets/splits.json")); }
};

StageDef Pipeline::Impl::define(const std::string& stage) {
    StageDef d;
    const auto seed = cfg.seed;
    auto replay_inputs = [&] {
        std::vector<fs::path> v;
        for (const auto& f : replay_files())
            if (fs::exists(f)) v.push_back(f);
        return v;
    };
    auto add = [](std::vector<fs::path>& v, const std::vector<fs::path>& more) { v.insert(v.end(), more.begin(), more.end()); };

    if (stage == "kg-import") {
        d.inputs = {cfg.path("/kg/triples"), cfg.path("/kg/labels")};
        d.outputs = {out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv")};
        d.body = [this] { return kg_import(); };
    } else if (stage == "questions") {
        d.inputs = {cfg.path("/questions/seeds")};
        add(d.inputs, replay_inputs());
        d.outputs = {out("questions/prefixes.jsonl"), out("questions/questions.jsonl")};
        d.params = {{"questions", section("questions")}, {"providers", provider_params()}};
        d.body = [this] { return questions_stage(); };
    } else if (stage == "passages") {
        d.inputs = {out("questions/questions.jsonl")};
        add(d.inputs, replay_inputs());
        d.outputs = {out("passages/selected.jsonl"), out("passages/all_passages.jsonl")};
        d.params = {{"passages", section("passages")}, {"providers", provider_params()}};
        d.body = [this] { return passages_stage(); };
    } else if (stage == "tag") {
        d.inputs = {out("passages/selected.jsonl")};
        if (auto l = cfg.optional_path("/tagging/lemmas")) d.inputs.push_back(*l);
        add(d.inputs, replay_inputs());
        d.outputs = {out("tag/tagged.jsonl"), out("tag/failures.jsonl")};
        d.params = {{"tagging", section("tagging")}, {"providers", provider_params()}};
        d.body = [this] { return tag_stage(); };
    } else if (stage == "link") {
        d.inputs = {out("tag/tagged.jsonl"), out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv")};
        if (auto l = cfg.optional_path("/tagging/lemmas")) d.inputs.push_back(*l);
        if (auto l = cfg.optional_path("/linking/pos_lexicon")) d.inputs.push_back(*l);
        if (auto l = cfg.optional_path("/linking/wiki_titles")) d.inputs.push_back(*l);
        add(d.inputs, replay_inputs());
        d.outputs = {out("link/candidates.jsonl"), out("link/linking.jsonl")};
        d.params = {{"linking", section("linking")}, {"providers", provider_params()}};
        d.body = [this] { return link_stage(); };
    } else if (stage == "verify-export") {
        d.inputs = {out("link/candidates.jsonl"), out("kg/graph.labels.tsv"), out("kg/graph.triples.tsv")};
        d.outputs = {out("verification/stage1_items.jsonl")};
        d.body = [this] { return verify_export(); };
    } else if (stage == "verify-import") {
        d.inputs = {out("link/candidates.jsonl")};
        for (const auto* k : {"/verification/script", "/verification/stage1_decisions", "/verification/stage2_decisions"})
            if (auto p = cfg.optional_path(k)) d.inputs.push_back(*p);
        d.outputs = {out("verification/stage1_decisions.jsonl"), out("verification/stage2_decisions.jsonl"),
                     out("verification/stage1_result.json"), out("verification/kbqa_natural.jsonl"),
                     out("verification/agreement.json")};
        d.params = {{"verification", section("verification")}, {"seed", seed}};
        d.body = [this] { return verify_import(); };
    } else if (stage == "templates") {
        d.inputs = {out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv"), cfg.path("/templates/file")};
        if (auto p = cfg.optional_path("/templates/review")) d.inputs.push_back(*p);
        add(d.inputs, replay_inputs());
        d.outputs = {out("templates/instances.jsonl"), out("templates/kbqa_template.jsonl"),
                     out("templates/tally.tsv")};
        d.params = {{"templates", section("templates")}, {"seed", seed}, {"providers", provider_params()}};
        d.body = [this] { return templates_stage(); };
    } else if (stage == "assemble") {
        d.inputs = {out("link/candidates.jsonl"), out("verification/stage1_result.json"),
                    out("verification/kbqa_natural.jsonl"), out("templates/kbqa_template.jsonl"),
                    out("passages/all_passages.jsonl")};
        d.outputs = {out("datasets/kbqa.jsonl"),   out("datasets/mrc.jsonl"),  out("datasets/ir.jsonl"),
                     out("datasets/corpus.jsonl"), out("datasets/qrels.tsv"),  out("datasets/splits.json")};
        d.params = {{"assemble", section("assemble")}, {"seed", seed}};
        d.body = [this] { return assemble_stage(); };
    } else if (stage == "kg-sample") {
        d.inputs = {out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv"), out("datasets/kbqa.jsonl")};
        d.outputs = {out("kg/wikidata1h.triples.tsv"), out("kg/wikidata1h.labels.tsv"),
                     out("kg/wikidata2h.triples.tsv"), out("kg/wikidata2h.labels.tsv")};
        d.body = [this] { return kg_sample(); };
    } else if (stage == "eval-kbqa") {
        d.inputs = {out("datasets/kbqa.jsonl"), out("datasets/splits.json"), out("kg/graph.labels.tsv"),
                    out("kg/graph.triples.tsv"),  out("kg/wikidata1h.triples.tsv"), out("kg/wikidata1h.labels.tsv"),
                    out("kg/wikidata2h.triples.tsv"), out("kg/wikidata2h.labels.tsv")};
        add(d.inputs, replay_inputs());
        d.outputs = {out("eval/kbqa.json"), out("eval/kbqa_responses.jsonl")};
        d.params = {{"eval", section("eval")}, {"language", cfg.get<std::string>("/language", "en")},
                    {"providers", provider_params()}};
        d.body = [this] { return eval_kbqa(); };
    } else if (stage == "eval-mrc") {
        d.inputs = {out("datasets/mrc.jsonl"), out("datasets/splits.json")};
        d.outputs = {out("eval/mrc.json")};
        d.params = {{"eval", section("eval")}};
        d.body = [this] { return eval_mrc(); };
    } else if (stage == "eval-ir") {
        d.inputs = {out("datasets/ir.jsonl"), out("datasets/corpus.jsonl"), out("datasets/splits.json")};
        d.outputs = {out("eval/ir.json"), out("eval/ir_rankings.tsv")};
        d.params = {{"eval", section("eval")}};
        d.body = [this] { return eval_ir(); };
    } else if (stage == "stats") {
        d.inputs = {out("datasets/kbqa.jsonl"), out("datasets/mrc.jsonl"), out("datasets/ir.jsonl"),
                    out("datasets/corpus.jsonl"), out("datasets/splits.json"), out("templates/instances.jsonl")};
        d.outputs = {out("stats/stats.json"), out("stats/stats.txt")};
        d.body = [this] { return stats(); };
    } else {
        throw ValidationError("stage", "unknown stage '" + stage + "'");
    }
    return d;
}

// -- kg-import --------------------------------------------------------------

StageReport Pipeline::Impl::kg_import() {
    auto g = kg::load_graph(cfg.path("/kg/triples"), cfg.path("/kg/labels"));
    write_graph_atomic(g, out("kg/graph.triples.tsv"), out("kg/graph.labels.tsv"));
    std::size_t labeled = 0;
    for (const auto& [id, rec] : g.entities())
        if (rec.label && !rec.label->empty()) ++labeled;
    return {"kg-import",
            {{"Triples", g.triple_count()},
             {"Entities", g.entities().size()},
             {"Labeled entities", labeled},
             {"Relations", g.relations().size()}}};
}

// -- questions --------------------------------------------------------------

StageReport Pipeline::Impl::questions_stage() {
    auto seeds = read_seed_questions(cfg.path("/questions/seeds"));
    auto ners = ner_providers();
    providers::WhitespaceTokenizer tokenizer;
    std::vector<questions::Prefix> prefixes;
    std::set<std::string> seen;
    for (const auto& q : seeds)
        for (auto& p : questions::extract_prefixes(q, ners, &tokenizer))
            if (seen.insert(p.text).second) prefixes.push_back(std::move(p));
    auto formulated =
        questions::formulate_questions(prefixes, suggest(), cfg.get<std::size_t>("/questions/max_completions", 10));
    save_records(out("questions/prefixes.jsonl"), prefixes);
    save_records(out("questions/questions.jsonl"), formulated);
    return {"questions",
            {{"Questions from existing QA datasets", seeds.size()},
             {"Extracted Prefixes", prefixes.size()},
             {"Formulated questions", formulated.size()}}};
}

// -- passages ---------------------------------------------------------------

StageReport Pipeline::Impl::passages_stage() {
    auto qs = load_records<questions::CandidateQuestion>(out("questions/questions.jsonl"));
    const auto window = cfg.get<std::size_t>("/passages/window", passages::kDefaultWindow);
    const auto step = cfg.get<std::size_t>("/passages/step", passages::kDefaultStep);
    const auto host = cfg.get<std::string>("/passages/host_suffix", "wikipedia.org");

    std::map<std::string, Passage> all;
    std::set<std::string> articles;
    std::vector<json> selected;
    std::set<std::string> done;
    for (const auto& q : qs) {
        auto id = item_id_for(q.text);
        if (!done.insert(id).second) continue;
        auto refs = passages::find_articles(q.text, search(), host);
        if (refs.empty()) continue;
        std::vector<Passage> pool;
        for (const auto& ref : refs) {
            Article a;
            try {
                a = fetch().fetch(ref.title);
            } catch (const ProviderError& e) {
                spdlog::warn("article '{}' unavailable: {}", ref.title, e.what());
                continue;
            }
            articles.insert(a.page_id);
            for (auto& p : passages::segment(a, window, step)) {
                all.emplace(p.id, p);
                pool.push_back(std::move(p));
            }
        }
        if (pool.empty()) continue;
        std::vector<passages::ScoredPassage> ranked;
        try {
            ranked = passages::rank_passages(q.text, pool, reranker());
        } catch (const ProviderError& e) {
            spdlog::warn("ranking for '{}' failed: {}", q.text, e.what());
            continue;
        }
        selected.push_back(json{{"id", id}, {"question", q.text}, {"passage", ranked.front().passage},
                                {"score", ranked.front().score}});
    }
    std::vector<json> rows;
    for (const auto& [_, p] : all) rows.push_back(json(p));
    write_jsonl_atomic(out("passages/selected.jsonl"), selected);
    write_jsonl_atomic(out("passages/all_passages.jsonl"), rows);
    return {"passages",
            {{"Formulated questions", qs.size()},
             {"Retrieved Wikipedia articles", articles.size()},
             {"Questions for textual answer tagging", selected.size()},
             {"Passages", all.size()}}};
}

// -- tag --------------------------------------------------------------------

StageReport Pipeline::Impl::tag_stage() {
    const auto min_ratio = cfg.get<double>("/tagging/min_ratio", tagging::kDefaultMinRatio);
    std::vector<json> tagged, failures;
    std::size_t total = 0;
    for_each_jsonl(out("passages/selected.jsonl"), [&](const json& j, std::size_t) {
        ++total;
        auto id = j.at("id").get<std::string>();
        auto question = j.at("question").get<std::string>();
        auto passage = j.at("passage").get<Passage>();
        std::string quote;
        try {
            quote = tagging::request_tag(question, passage, qa_tagger());
        } catch (const TaggingError& e) {
            failures.push_back(json{{"id", id}, {"reason", e.what()}});
            return;
        }
        auto g = tagging::ground_span(passage, quote, lemma(), min_ratio);
        if (!g.span) {
            failures.push_back(json{{"id", id}, {"quote", quote}, {"ratio", g.report.matched_ratio},
                                    {"reason", "below ratio threshold"}});
            return;
        }
        tagged.push_back(json{{"id", id}, {"question", question}, {"passage", passage}, {"answer", *g.span},
                              {"quote", quote}, {"ratio", g.report.matched_ratio}});
    });
    write_jsonl_atomic(out("tag/tagged.jsonl"), tagged);
    write_jsonl_atomic(out("tag/failures.jsonl"), failures);
    return {"tag",
            {{"Questions for textual answer tagging", total}, {"Questions with successfully parsed tag", tagged.size()}}};
}

// -- link -------------------------------------------------------------------

StageReport Pipeline::Impl::link_stage() {
    auto g = graph();
    const auto threshold = cfg.get<double>("/linking/sim_threshold", linking::kDefaultSimThreshold);
    auto ners = ner_providers();
    linking::LinkerProviders lp;
    lp.pos = &pos();
    lp.ner = ners.empty() ? nullptr : ners.front();
    lp.lemma = &lemma();
    lp.search = &wiki_search();

    std::vector<json> candidates, details;
    std::size_t total = 0, with_answers = 0, with_topics = 0;
    for_each_jsonl(out("tag/tagged.jsonl"), [&](const json& j, std::size_t) {
        ++total;
        verification::CandidateExample c;
        c.id = j.at("id").get<std::string>();
        c.question = j.at("question").get<std::string>();
        c.passage = j.at("passage").get<Passage>();
        c.answer = j.at("answer").get<tagging::TaggedSpan>();
        for (const auto& e : tagging::extract_answer_entities(c.passage, c.answer))
            if (g.has_entity(e)) c.candidate_answers.insert(e);
        auto nbhd = linking::build_neighborhood(c.question, search(), fetch());
        auto linked = linking::link_entities(c.question, lp, nbhd, threshold);
        for (const auto& e : linked.all())
            if (g.has_entity(e)) c.candidate_topics.insert(e);
        with_answers += !c.candidate_answers.empty();
        with_topics += !c.candidate_answers.empty() && !c.candidate_topics.empty();
        details.push_back(json{{"id", c.id},
                               {"exact", linked.exact},
                               {"nbhd", linked.nbhd},
                               {"named", linked.named},
                               {"comb", linked.comb},
                               {"children_source", linked.children_source},
                               {"comb_queries", linked.comb_queries},
                               {"neighborhood_size", nbhd.size()}});
        candidates.push_back(json(c));
    });
    write_jsonl_atomic(out("link/candidates.jsonl"), candidates);
    write_jsonl_atomic(out("link/linking.jsonl"), details);
    return {"link",
            {{"Questions with successfully parsed tag", total},
             {"Questions with candidate answer entities", with_answers},
             {"Questions with candidate answer and topic entities", with_topics}}};
}

// -- verification -----------------------------------------------------------

StageReport Pipeline::Impl::verify_export() {
    auto items = candidates();
    auto labels = entity_labels(graph());
    annotation::StoreOptions opts;
    opts.annotators = cfg.get<std::vector<std::string>>("/verification/annotators", {"annotator-1", "annotator-2"});
    opts.labels = labels;
    annotation::AnnotationStore store(items, {}, opts);
    std::vector<json> rows;
    for (const auto& c : items) rows.push_back(store.item(c.id, 1));
    write_jsonl_atomic(out("verification/stage1_items.jsonl"), rows);
    return {"verify-export", {{"Questions for verification", items.size()}}};
}

namespace {

// Scripted annotator: gold decisions per normalized question, with optional
// per-annotator deviations.
class AnnotationScript {
public:
    explicit AnnotationScript(json doc) : doc_(std::move(doc)) {}

    json decide(const std::string& annotator, const verification::CandidateExample& item, int stage) const {
        auto key = questions::normalize_question(item.question);
        json d = gold(key);
        auto dev = doc_.value("deviations", json::object());
        if (dev.contains(annotator) && dev[annotator].contains(key)) d.update(dev[annotator][key]);
        json rec{{"stage", stage}, {"item_id", item.id}, {"annotator_id", annotator}, {"timestamp", "scripted"}};
        if (stage == 1) {
            rec["flag"] = d.value("flag", doc_.value("default_flag", "incorrect_question"));
            return rec;
        }
        bool rejected = d.value("reject", false);
        std::set<EntityId> answers, topics;
        if (!rejected) {
            for (const auto& e : d.value("answers", std::vector<std::string>{}))
                if (item.candidate_answers.contains(EntityId(e))) answers.insert(EntityId(e));
            for (const auto& e : d.value("topics", std::vector<std::string>{}))
                if (item.candidate_topics.contains(EntityId(e))) topics.insert(EntityId(e));
        }
        rec["accepted_answer_entities"] = answers;
        rec["accepted_topic_entities"] = topics;
        rec["rejected"] = rejected;
        return rec;
    }

    json gold(const std::string& key) const {
        auto g = doc_.value("gold", json::object());
        return g.contains(key) ? g[key] : json::object();
    }

private:
    json doc_;
};

template <typename Decision>
std::vector<Decision> read_decisions(const fs::path& p) {
    return load_records<Decision>(p);
}

}  // namespace

StageReport Pipeline::Impl::verify_import() {
    auto items = candidates();
    auto annotators = cfg.get<std::vector<std::string>>("/verification/annotators", {"annotator-1", "annotator-2"});
    const auto super = cfg.get<std::string>("/verification/super_annotator", std::string(verification::kSuperAnnotator));
    auto script_path = cfg.optional_path("/verification/script");
    auto s1_path = cfg.optional_path("/verification/stage1_decisions");
    auto s2_path = cfg.optional_path("/verification/stage2_decisions");
    if (!script_path && !(s1_path && s2_path))
        throw ValidationError("verification", "needs a script or both decision files");
    std::optional<AnnotationScript> script;
    if (script_path) script.emplace(read_json(*script_path));

    auto base_options = [&](const std::string& log_name) {
        annotation::StoreOptions o;
        o.annotators = annotators;
        o.overlap_fraction = cfg.get<double>("/verification/overlap", annotation::kDefaultOverlap);
        o.seed = cfg.seed;
        o.super_annotator = super;
        o.snapshot_every = 0;
        auto log = out("verification/" + log_name);
        fs::create_directories(log.parent_path());
        fs::remove(log);
        o.log_path = log;
        return o;
    };

    // Every annotator works through their queue; the super-annotator settles
    // stage-1 disagreements on the shared items with the gold flag.
    auto run_script = [&](annotation::AnnotationStore& store, const std::vector<verification::CandidateExample>& pool,
                          int stage) {
        std::map<std::string, const verification::CandidateExample*> by_id;
        for (const auto& c : pool) by_id[c.id] = &c;
        for (const auto& a : annotators) {
            for (;;) {
                auto next = store.next_item(a, stage);
                if (next.is_null()) break;
                const auto& item = *by_id.at(next.at("item_id").get<std::string>());
                store.submit(script->decide(a, item, stage));
            }
        }
        if (stage != 1) return;
        std::map<std::string, std::set<std::string>> flags;
        for (const auto& d : store.stage1_decisions()) flags[d.item_id].insert(std::string(to_string(d.flag)));
        for (const auto& [id, f] : flags)
            if (f.size() > 1) {
                auto rec = script->decide(super, *by_id.at(id), 1);
                store.submit(rec);
            }
    };

    std::vector<verification::Stage1Decision> d1;
    if (s1_path) {
        d1 = read_decisions<verification::Stage1Decision>(*s1_path);
    } else {
        annotation::AnnotationStore store(items, {}, base_options("stage1.log"));
        run_script(store, items, 1);
        d1 = store.stage1_decisions();
    }
    auto s1 = verification::apply_stage1(items, d1, super);

    std::vector<verification::Stage2Decision> d2;
    if (s2_path) {
        d2 = read_decisions<verification::Stage2Decision>(*s2_path);
    } else {
        annotation::AnnotationStore store({}, s1.mrc_pass, base_options("stage2.log"));
        run_script(store, s1.mrc_pass, 2);
        d2 = store.stage2_decisions();
    }
    auto s2 = verification::apply_stage2(s1.mrc_pass, d2, super);

    json agreement = json::object();
    if (annotators.size() >= 2) {
        auto report = [&](const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
            try {
                auto r = verification::agreement(a, b);
                return json{{"items", r.items}, {"accuracy", r.accuracy},
                            {"kappa", r.kappa ? json(*r.kappa) : json(nullptr)}};
            } catch (const std::invalid_argument&) {
                return json{{"items", 0}, {"accuracy", nullptr}, {"kappa", nullptr}};
            }
        };
        agreement["annotators"] = {annotators[0], annotators[1]};
        agreement["stage1"] = report(verification::stage1_labels(d1, annotators[0]),
                                     verification::stage1_labels(d1, annotators[1]));
        agreement["stage2"] = report(verification::stage2_labels(d2, annotators[0]),
                                     verification::stage2_labels(d2, annotators[1]));
    }

    auto ids = [](const std::vector<verification::CandidateExample>& v) {
        std::vector<std::string> out;
        for (const auto& c : v) out.push_back(c.id);
        return out;
    };
    save_records(out("verification/stage1_decisions.jsonl"), d1);
    save_records(out("verification/stage2_decisions.jsonl"), d2);
    write_json(out("verification/stage1_result.json"),
               json{{"ir_pass", ids(s1.ir_pass)}, {"mrc_pass", ids(s1.mrc_pass)}, {"rejected", ids(s1.rejected)}});
    save_records(out("verification/kbqa_natural.jsonl"), s2.kbqa);
    write_json(out("verification/agreement.json"), agreement);
    return {"verify-import",
            {{"Questions for verification", items.size()},
             {"Questions with correct passage", s1.ir_pass.size()},
             {"Questions with correct textual answer", s1.mrc_pass.size()},
             {"Questions with verified answer entities", s2.with_answers},
             {"Questions with verified topic entities", s2.with_topics},
             {"KBQA examples (natural)", s2.kbqa.size()}}};
}

verification::Stage1Result Pipeline::Impl::stage1_result() const {
    auto items = candidates();
    std::map<std::string, verification::CandidateExample> by_id;
    for (auto& c : items) by_id.emplace(c.id, std::move(c));
    auto ids = read_json(out("verification/stage1_result.json"));
    auto pick = [&](const char* key) {
        std::vector<verification::CandidateExample> v;
        for (const auto& id : ids.at(key)) {
            auto it = by_id.find(id.get<std::string>());
            if (it == by_id.end()) throw AssemblyError("stage-1 result names unknown item " + id.get<std::string>());
            v.push_back(it->second);
        }
        return v;
    };
    verification::Stage1Result r;
    r.ir_pass = pick("ir_pass");
    r.mrc_pass = pick("mrc_pass");
    r.rejected = pick("rejected");
    return r;
}

// -- templates --------------------------------------------------------------

StageReport Pipeline::Impl::templates_stage() {
    auto g = graph();
    auto tmpls = templates::load_templates(cfg.path("/templates/file"));
    std::set<EntityId> ents;
    std::set<RelationId> rels;
    if (cfg.has("/templates/allowed_entities")) {
        for (const auto& e : cfg.get<std::vector<std::string>>("/templates/allowed_entities", {})) ents.emplace(e);
    } else {
        for (const auto& [id, rec] : g.entities())
            if (rec.label) ents.insert(id);
    }
    if (cfg.has("/templates/allowed_relations")) {
        for (const auto& r : cfg.get<std::vector<std::string>>("/templates/allowed_relations", {})) rels.emplace(r);
    } else {
        for (const auto& [id, rec] : g.relations())
            if (rec.label) rels.insert(id);
    }
    const auto limit = cfg.get<std::size_t>("/templates/limit_per_template", 20);
    const auto threshold = cfg.get<double>("/templates/similarity_threshold", 0.6);
    spdlog::info("template similarity threshold {}", threshold);

    json review = json::object();
    if (auto p = cfg.optional_path("/templates/review")) review = read_json(*p);
    const auto default_status =
        templates::parse_status(cfg.get<std::string>("/templates/default_status", "correct"));

    std::vector<templates::TemplateInstance> executed, kept;
    for (std::size_t i = 0; i < tmpls.size(); ++i) {
        for (const auto& in : templates::gather_inputs(g, tmpls[i], ents, rels, limit, cfg.seed + 1000 + i)) {
            try {
                executed.push_back(templates::instantiate(g, tmpls[i], in));
            } catch (const Error& e) {
                spdlog::warn("template {} skipped: {}", tmpls[i].name, e.what());
            }
        }
    }
    for (auto& inst : executed) {
        auto refined = templates::refine_question(inst, refiner("inflect"), refiner("paraphrase"));
        if (refined.refine_failed || !refined.question_refined) continue;
        if (!templates::similarity_filter(refined.question_raw, *refined.question_refined, threshold)) continue;
        templates::set_status(refined, review_status(review, refined, default_status));
        kept.push_back(std::move(refined));
    }
    auto tally = templates::tally_verification(kept);
    std::ostringstream tsv;
    tsv << "template\tcorrect\tincorrect\tresembling\n";
    for (const auto& t : tmpls) {
        auto n = [&](templates::VerificationStatus s) {
            auto it = tally.find({t.name, s});
            return it == tally.end() ? std::size_t{0} : it->second;
        };
        tsv << t.name << '\t' << n(templates::VerificationStatus::correct) << '\t'
            << n(templates::VerificationStatus::incorrect) << '\t' << n(templates::VerificationStatus::resembling)
            << '\n';
    }
    auto verified = templates::emit_verified(kept);
    save_records(out("templates/instances.jsonl"), kept);
    save_records(out("templates/kbqa_template.jsonl"), verified);
    write_text_atomic(out("templates/tally.tsv"), tsv.str());
    return {"templates",
            {{"Executed templates", executed.size()},
             {"After filtering", kept.size()},
             {"After verification", verified.size()}}};
}

// -- assemble ---------------------------------------------------------------

StageReport Pipeline::Impl::assemble_stage() {
    auto s1 = stage1_result();
    auto natural = load_records<KbqaExample>(out("verification/kbqa_natural.jsonl"));
    auto tmpl = load_records<KbqaExample>(out("templates/kbqa_template.jsonl"));
    auto all = load_records<Passage>(out("passages/all_passages.jsonl"));
    std::vector<Passage> selected;
    for (const auto& c : s1.ir_pass) selected.push_back(c.passage);
    auto corpus = passages::build_corpus(all, selected);
    auto a = verification::assemble(s1, natural, tmpl, std::move(corpus), cfg.seed + 7,
                                    cfg.get<double>("/assemble/test_fraction", 0.2));
    const auto& d = a.datasets;
    save_records(out("datasets/kbqa.jsonl"), d.kbqa);
    save_records(out("datasets/mrc.jsonl"), d.mrc);
    save_records(out("datasets/ir.jsonl"), d.ir);
    std::vector<json> corpus_rows;
    for (const auto& [id, p] : d.corpus.passages)
        corpus_rows.push_back(json{{"id", id}, {"title", p.article_title}, {"text", p.text}});
    write_jsonl_atomic(out("datasets/corpus.jsonl"), corpus_rows);
    eval::Qrels qrels;
    for (const auto& e : d.ir) qrels[e.id].insert(e.passage_id);
    eval::write_qrels(qrels, out("datasets/qrels.tsv"));
    auto split = [](const verification::Split& s) { return json{{"train", s.train}, {"test", s.test}}; };
    write_json(out("datasets/splits.json"),
               json{{"kbqa", split(a.kbqa_split)}, {"mrc", split(a.mrc_split)}, {"ir", split(a.ir_split)}});
    return {"assemble",
            {{"KBQA examples", natural.size()},
             {"MRC examples", d.mrc.size()},
             {"IR examples", d.ir.size()},
             {"KBQA examples (template)", tmpl.size()},
             {"KBQA examples (all)", d.kbqa.size()},
             {"IR corpus passages", d.corpus.passages.size()}}};
}

// -- kg-sample --------------------------------------------------------------

StageReport Pipeline::Impl::kg_sample() {
    auto g = graph();
    auto kbqa = load_records<KbqaExample>(out("datasets/kbqa.jsonl"));
    auto h1 = kg::sample_dataset_kg(g, kbqa, 1);
    auto h2 = kg::sample_dataset_kg(g, kbqa, 2);
    write_graph_atomic(h1, out("kg/wikidata1h.triples.tsv"), out("kg/wikidata1h.labels.tsv"));
    write_graph_atomic(h2, out("kg/wikidata2h.triples.tsv"), out("kg/wikidata2h.labels.tsv"));
    return {"kg-sample",
            {{"Triples (full)", g.triple_count()},
             {"Triples (2H)", h2.triple_count()},
             {"Triples (1H)", h1.triple_count()},
             {"Entities (2H)", h2.entities().size()},
             {"Entities (1H)", h1.entities().size()}}};
}

// -- evaluation -------------------------------------------------------------

namespace {

std::set<std::string> split_ids(const json& splits, const std::string& task, const std::string& which) {
    std::set<std::string> out;
    if (which == "all") {
        for (const auto* part : {"train", "test"})
            for (const auto& id : splits.at(task).at(part)) out.insert(id.get<std::string>());
        return out;
    }
    for (const auto& id : splits.at(task).at(which)) out.insert(id.get<std::string>());
    return out;
}

std::string lead_words(std::string_view context, std::size_t n) {
    auto words = text::split_whitespace(context);
    if (words.size() > n) words.resize(n);
    return text::join(words, " ");
}

}  // namespace

StageReport Pipeline::Impl::eval_kbqa() {
    auto full = graph();
    auto kbqa = load_records<KbqaExample>(out("datasets/kbqa.jsonl"));
    auto ids = split_ids(splits(), "kbqa", cfg.get<std::string>("/eval/split", "test"));
    const auto k = cfg.get<std::size_t>("/eval/k", 40);

    std::vector<eval::KbqaGold> gold;
    std::vector<const KbqaExample*> chosen;
    for (const auto& e : kbqa) {
        if (!ids.contains(e.id)) continue;
        eval::KbqaGold gd{e.id, {}};
        for (const auto& a : e.answer_entities) {
            const auto* label = full.entity_label(a);
            if (label && *label) gd.answers.push_back({a, **label});
        }
        if (gd.answers.empty()) continue;
        gold.push_back(std::move(gd));
        chosen.push_back(&e);
    }

    struct Setting {
        std::string name;
        std::optional<kg::KnowledgeGraph> graph;
        unsigned hops = 0;
    };
    std::vector<Setting> settings;
    settings.push_back({"without-kg", std::nullopt, 0});
    settings.push_back({"wikidata1h", kg::load_graph(out("kg/wikidata1h.triples.tsv"), out("kg/wikidata1h.labels.tsv")),
                        cfg.get<unsigned>("/eval/hops_1h", 3)});
    settings.push_back({"wikidata2h", kg::load_graph(out("kg/wikidata2h.triples.tsv"), out("kg/wikidata2h.labels.tsv")),
                        cfg.get<unsigned>("/eval/hops_2h", 2)});

    json metrics = json::object();
    std::vector<json> responses_out;
    for (const auto& s : settings) {
        std::map<std::string, std::string> responses;
        for (const auto* e : chosen) {
            std::string prompt;
            if (s.graph) {
                auto ctx = eval::retrieve_triples(*s.graph, e->question, e->topic_entities, s.hops, embedder(), k);
                prompt = prompts::build_kbqa_prompt(e->question, &ctx, cfg.language);
            } else {
                prompt = prompts::build_kbqa_prompt(e->question, nullptr, cfg.language);
            }
            std::string reply;
            try {
                reply = llm().complete(prompt);
            } catch (const ProviderError& err) {
                spdlog::warn("llm failed on {}: {}", e->id, err.what());
                continue;
            }
            responses[e->id] = reply;
            responses_out.push_back(json{{"setting", s.name}, {"id", e->id}, {"response", reply}});
        }
        metrics[s.name] = json{{"questions", gold.size()}, {"accuracy", eval::kbqa_accuracy(responses, gold)}};
    }
    write_json(out("eval/kbqa.json"), metrics);
    write_jsonl_atomic(out("eval/kbqa_responses.jsonl"), responses_out);
    return {"eval-kbqa", {{"KBQA questions evaluated", gold.size()}}};
}

StageReport Pipeline::Impl::eval_mrc() {
    auto mrc = load_records<verification::MrcExample>(out("datasets/mrc.jsonl"));
    auto ids = split_ids(splits(), "mrc", cfg.get<std::string>("/eval/split", "test"));
    const auto n = cfg.get<std::size_t>("/eval/mrc_lead_words", 3);
    std::vector<std::string> preds, golds;
    for (const auto& e : mrc) {
        if (!ids.contains(e.id)) continue;
        preds.push_back(lead_words(e.context, n));
        golds.push_back(e.answer_text);
    }
    auto s = eval::mrc_scores(preds, golds);
    write_json(out("eval/mrc.json"), json{{"baseline", "lead-" + std::to_string(n)},
                                          {"questions", golds.size()},
                                          {"exact_match", s.exact_match},
                                          {"f1", s.f1}});
    return {"eval-mrc", {{"MRC questions evaluated", golds.size()}}};
}

StageReport Pipeline::Impl::eval_ir() {
    auto ir = load_records<verification::IrExample>(out("datasets/ir.jsonl"));
    auto ids = split_ids(splits(), "ir", cfg.get<std::string>("/eval/split", "test"));
    std::vector<eval::Bm25Index::Document> docs;
    for_each_jsonl(out("datasets/corpus.jsonl"), [&](const json& j, std::size_t) {
        docs.push_back({j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    });
    auto ks = k_values_of(cfg);
    std::vector<std::size_t> kv(ks.begin(), ks.end());
    eval::Qrels qrels;
    std::vector<eval::Ranking> rankings;
    if (!docs.empty()) {
        eval::Bm25Index index(std::move(docs),
                              {cfg.get<double>("/eval/bm25_k1", 1.2), cfg.get<double>("/eval/bm25_b", 0.75)});
        for (const auto& e : ir) {
            if (!ids.contains(e.id)) continue;
            qrels[e.id].insert(e.passage_id);
            rankings.push_back(index.search(e.question, kv.empty() ? 100 : kv.back(), e.id));
        }
    }
    json metrics = json::object();
    for (const auto& [k, m] : eval::ir_metrics(rankings, qrels, kv))
        metrics[std::to_string(k)] = json{{"ndcg", m.ndcg}, {"mrr", m.mrr}, {"recall", m.recall}};
    write_json(out("eval/ir.json"), json{{"retriever", "bm25"}, {"queries", qrels.size()}, {"at", metrics}});
    eval::write_rankings(rankings, out("eval/ir_rankings.tsv"));
    return {"eval-ir", {{"IR queries evaluated", qrels.size()}}};
}

// -- stats ------------------------------------------------------------------

StageReport Pipeline::Impl::stats() {
    auto kbqa = load_records<KbqaExample>(out("datasets/kbqa.jsonl"));
    auto mrc = load_records<verification::MrcExample>(out("datasets/mrc.jsonl"));
    auto ir = load_records<verification::IrExample>(out("datasets/ir.jsonl"));
    auto instances = load_records<templates::TemplateInstance>(out("templates/instances.jsonl"));
    std::size_t corpus = 0;
    for_each_jsonl(out("datasets/corpus.jsonl"), [&](const json&, std::size_t) { ++corpus; });
    auto sp = splits();
    auto test_kbqa = split_ids(sp, "kbqa", "test");

    std::map<std::string, std::set<RelationId>> relations_of;
    for (const auto& inst : instances) {
        for (const auto& p : bgp::parse_query(inst.query).patterns)
            if (!p.predicate.is_variable()) relations_of[inst.id].insert(RelationId(p.predicate.value));
    }

    json subsets = json::object();
    std::ostringstream txt;
    txt << "subset\tsplit\tsize\tunique_topics\tunique_answers\tunique_relations\n";
    for (auto source : {QuestionSource::natural, QuestionSource::template_based}) {
        for (const auto* part : {"train", "test"}) {
            std::size_t n = 0;
            std::set<EntityId> topics, answers;
            std::set<RelationId> rels;
            for (const auto& e : kbqa) {
                if (e.source != source || test_kbqa.contains(e.id) != (std::string(part) == "test")) continue;
                ++n;
                topics.insert(e.topic_entities.begin(), e.topic_entities.end());
                answers.insert(e.answer_entities.begin(), e.answer_entities.end());
                auto it = relations_of.find(e.id);
                if (it != relations_of.end()) rels.insert(it->second.begin(), it->second.end());
            }
            const bool natural = source == QuestionSource::natural;
            json row{{"size", n}, {"unique_topics", topics.size()}, {"unique_answers", answers.size()}};
            row["unique_relations"] = natural ? json(nullptr) : json(rels.size());
            subsets[std::string(to_string(source))][part] = row;
            txt << to_string(source) << '\t' << part << '\t' << n << '\t' << topics.size() << '\t' << answers.size()
                << '\t' << (natural ? std::string("-") : std::to_string(rels.size())) << '\n';
        }
    }

    json per_template = json::object();
    txt << "\ntemplate\ttrain\ttest\n";
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& e : kbqa) {
        if (e.source != QuestionSource::template_based) continue;
        auto& c = counts[e.template_name];
        (test_kbqa.contains(e.id) ? c.second : c.first)++;
    }
    for (const auto& [name, c] : counts) {
        per_template[name] = json{{"train", c.first}, {"test", c.second}};
        txt << name << '\t' << c.first << '\t' << c.second << '\n';
    }

    auto sizes = [&](const std::string& task) {
        return json{{"train", sp.at(task).at("train").size()}, {"test", sp.at(task).at("test").size()}};
    };
    json doc{{"kbqa", sizes("kbqa")},
             {"mrc", sizes("mrc")},
             {"ir", {{"queries", ir.size()}, {"corpus", corpus}}},
             {"subsets", subsets},
             {"templates", per_template}};
    txt << "\nmrc\ttrain " << sp["mrc"]["train"].size() << "\ttest " << sp["mrc"]["test"].size() << '\n';
    txt << "ir\tqueries " << ir.size() << "\tcorpus " << corpus << '\n';
    write_json(out("stats/stats.json"), doc);
    write_text_atomic(out("stats/stats.txt"), txt.str());
    return {"stats", {{"KBQA examples (all)", kbqa.size()}, {"MRC examples", mrc.size()}, {"IR examples", ir.size()}}};
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(Config config) : config_(std::move(config)), impl_(std::make_unique<Impl>(config_)) {}
Pipeline::~Pipeline() = default;

namespace {

json hashes_of(const std::vector<fs::path>& files) {
    json h = json::object();
    for (const auto& f : files) h[f.string()] = sha256_file(f);
    return h;
}

}  // namespace

StageReport Pipeline::run(const std::string& stage, bool force) {
    if (stage == "serve") throw ValidationError("stage", "serve is interactive; use serve()");
    auto def = impl_->define(stage);
    for (const auto& in : def.inputs) {
        if (fs::exists(in)) continue;
        auto producer = impl_->producer_of(in);
        if (!producer.empty()) throw MissingArtifactError(in, producer);
        throw ValidationError("input", "file not found: " + in.string());
    }
    auto manifest_path = out("manifests/" + stage + ".json");
    auto inputs = hashes_of(def.inputs);
    auto params_hash = sha256_hex(def.params.dump());

    if (!force && fs::exists(manifest_path)) {
        try {
            auto m = read_json(manifest_path);
            bool hit = m.at("params_sha256") == params_hash && m.at("inputs") == inputs;
            for (const auto& o : def.outputs) {
                if (!hit) break;
                hit = fs::exists(o) && m.at("outputs").value(o.string(), "") == sha256_file(o);
            }
            if (hit) {
                auto r = report_from_json(m.at("report"));
                r.cached = true;
                write_json(out("reports/" + stage + ".json"), to_json(r));
                spdlog::info("stage {} is up to date", stage);
                return r;
            }
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable manifest {}: {}", manifest_path.string(), e.what());
        }
    }

    for (const auto& o : def.outputs) fs::create_directories(o.parent_path());
    spdlog::info("running stage {}", stage);
    auto report = def.body();
    report.stage = stage;
    json manifest{{"stage", stage},
                  {"params_sha256", params_hash},
                  {"inputs", inputs},
                  {"outputs", hashes_of(def.outputs)},
                  {"report", to_json(report)}};
    write_json(manifest_path, manifest);
    write_json(out("reports/" + stage + ".json"), to_json(report));
    return report;
}

std::vector<StageReport> Pipeline::run_all(bool force) {
    std::vector<StageReport> out;
    for (const auto& s : stage_order()) out.push_back(run(s, force));
    return out;
}

std::vector<PlannedStage> Pipeline::plan(const std::vector<std::string>& stages) const {
    std::vector<PlannedStage> out;
    std::set<std::string> will_run;
    for (const auto& s : stages) {
        auto def = impl_->define(s);
        PlannedStage p{s, def.inputs, def.outputs, "run"};
        bool upstream_pending = false, missing = false;
        for (const auto& in : def.inputs) {
            if (fs::exists(in)) continue;
            auto producer = impl_->producer_of(in);
            if (producer.empty() || !will_run.contains(producer)) missing = true;
            upstream_pending = true;
        }
        if (missing) {
            p.status = "blocked";
        } else if (!upstream_pending) {
            auto mp = config_.output_dir / "manifests" / (s + ".json");
            if (fs::exists(mp)) {
                try {
                    auto m = read_json(mp);
                    bool hit = m.at("params_sha256") == sha256_hex(def.params.dump()) &&
                               m.at("inputs") == hashes_of(def.inputs);
                    for (const auto& o : def.outputs)
                        hit = hit && fs::exists(o) && m.at("outputs").value(o.string(), "") == sha256_file(o);
                    if (hit) p.status = "cached";
                } catch (const std::exception&) {
                }
            }
        }
        if (p.status != "blocked") will_run.insert(s);
        out.push_back(std::move(p));
    }
    return out;
}

void Pipeline::serve(const std::string& host, int port) {
    auto items = impl_->candidates();
    std::vector<verification::CandidateExample> stage2;
    auto d1_path = out("verification/stage1_decisions.jsonl");
    if (fs::exists(d1_path)) {
        auto d1 = load_records<verification::Stage1Decision>(d1_path);
        try {
            stage2 = verification::apply_stage1(items, d1).mrc_pass;
        } catch (const ValidationError& e) {
            spdlog::warn("stage 2 queue left empty: {}", e.what());
        }
    }
    annotation::StoreOptions o;
    o.annotators =
        config_.get<std::vector<std::string>>("/verification/annotators", {"annotator-1", "annotator-2"});
    o.overlap_fraction = config_.get<double>("/verification/overlap", annotation::kDefaultOverlap);
    o.seed = config_.seed;
    o.super_annotator = config_.get<std::string>("/verification/super_annotator", std::string(verification::kSuperAnnotator));
    o.log_path = out("verification/service.log");
    o.labels = impl_->entity_labels(impl_->graph());
    fs::create_directories(o.log_path->parent_path());
    annotation::AnnotationStore store(std::move(items), std::move(stage2), o);
    httplib::Server server;
    annotation::register_routes(server, store);
    spdlog::info("annotation service listening on {}:{}", host, port);
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace qaforge::pipeline
