#include "qaforge/annotation_service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "qaforge/errors.hpp"
#include "qaforge/random.hpp"
#include "qaforge/records.hpp"

namespace qaforge::annotation {

using nlohmann::json;

namespace {

int parse_stage(const json& j) {
    if (!j.contains("stage") || !j["stage"].is_number_integer()) throw ValidationError("stage", "must be 1 or 2");
    int s = j["stage"].get<int>();
    if (s != 1 && s != 2) throw ValidationError("stage", "must be 1 or 2");
    return s;
}

}  // namespace

AnnotationStore::AnnotationStore(std::vector<verification::CandidateExample> stage1_items,
                                 std::vector<verification::CandidateExample> stage2_items, StoreOptions options)
    : options_(std::move(options)) {
    if (options_.annotators.empty()) throw ValidationError("annotators", "at least one annotator is required");
    if (!(options_.overlap_fraction >= 0.0 && options_.overlap_fraction <= 1.0))
        throw ValidationError("overlap_fraction", "must be in [0, 1]");
    for (const auto& a : options_.annotators) {
        if (a.empty() || a == options_.super_annotator)
            throw ValidationError("annotators", "invalid annotator id '" + a + "'");
        if (!annotators_.insert(a).second) throw ValidationError("annotators", "duplicate annotator '" + a + "'");
    }
    stages_[0].items = std::move(stage1_items);
    stages_[1].items = std::move(stage2_items);
    build_queues(stages_[0], options_.seed);
    build_queues(stages_[1], options_.seed + 1);

    if (options_.log_path) {
        if (std::filesystem::exists(*options_.log_path)) {
            for_each_jsonl(*options_.log_path, [&](const json& j, std::size_t) {
                apply(j);
                if (j.value("type", "") == "decision") ++log_records_;
            });
        } else if (options_.log_path->has_parent_path()) {
            std::filesystem::create_directories(options_.log_path->parent_path());
        }
        log_.open(*options_.log_path, std::ios::app);
        if (!log_) throw Error("cannot open decision log " + options_.log_path->string());
    }
}

AnnotationStore::~AnnotationStore() {
    try {
        if (options_.log_path && options_.snapshot_every > 0) write_snapshot();
    } catch (const std::exception& e) {
        spdlog::warn("snapshot failed: {}", e.what());
    }
}

void AnnotationStore::build_queues(StageData& s, std::uint64_t seed) {
    const std::size_t n = s.items.size();
    for (std::size_t i = 0; i < n; ++i)
        if (!s.index.emplace(s.items[i].id, i).second) throw ValidationError("item_id", "duplicate item " + s.items[i].id);

    const auto pool = static_cast<std::size_t>(std::llround(options_.overlap_fraction * static_cast<double>(n)));
    auto perm = seeded_permutation(n, seed);
    std::vector<bool> in_pool(n, false);
    for (std::size_t i = 0; i < pool; ++i) in_pool[perm[i]] = true;

    std::vector<std::string> overlap;
    std::map<std::string, std::vector<std::string>> shares;
    std::size_t turn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_pool[i]) {
            overlap.push_back(s.items[i].id);
            s.overlap.insert(s.items[i].id);
        } else {
            shares[options_.annotators[turn++ % options_.annotators.size()]].push_back(s.items[i].id);
        }
    }
    // Spread the overlap items evenly through each annotator's own share.
    for (const auto& a : options_.annotators) {
        const auto& own = shares[a];
        auto& q = s.queues[a];
        const std::size_t total = own.size() + overlap.size();
        std::size_t oi = 0, si = 0;
        for (std::size_t pos = 0; pos < total; ++pos) {
            bool take_overlap = oi < overlap.size() &&
                                (si == own.size() || (oi + 1) * total <= (pos + 1) * overlap.size());
            q.push_back(take_overlap ? overlap[oi++] : own[si++]);
        }
    }
}

const AnnotationStore::StageData& AnnotationStore::stage_data(int stage) const {
    if (stage != 1 && stage != 2) throw ValidationError("stage", "must be 1 or 2");
    return stages_[stage - 1];
}

void AnnotationStore::require_annotator(const std::string& annotator) const {
    if (annotator.empty()) throw ValidationError("annotator_id", "missing");
    if (!annotators_.contains(annotator) && annotator != options_.super_annotator)
        throw NotFoundError("unknown annotator '" + annotator + "'");
}

std::string AnnotationStore::label_of(const EntityId& id) const {
    auto it = options_.labels.find(id);
    return it == options_.labels.end() ? id.str() : it->second;
}

json AnnotationStore::payload(const verification::CandidateExample& item, int stage) const {
    if (stage == 1)
        return json{{"question", item.question},
                    {"passage_id", item.passage.id},
                    {"passage_title", item.passage.article_title},
                    {"passage", item.passage.text},
                    {"span", json{{"char_begin", item.answer.char_begin},
                                  {"char_end", item.answer.char_end},
                                  {"text", item.answer.text}}}};
    auto entities = [&](const std::set<EntityId>& ids) {
        json arr = json::array();
        for (const auto& id : ids) arr.push_back(json{{"id", id.str()}, {"label", label_of(id)}});
        return arr;
    };
    return json{{"question", item.question},
                {"answer_text", item.answer.text},
                {"passage", item.passage.text},
                {"candidate_answers", entities(item.candidate_answers)},
                {"candidate_topics", entities(item.candidate_topics)}};
}

json AnnotationStore::next_item(const std::string& annotator, int stage) {
    const auto& s = stage_data(stage);
    require_annotator(annotator);
    if (!annotators_.contains(annotator)) return nullptr;  // the super-annotator has no queue

    std::unique_lock lock(mutex_);
    for (const auto& id : s.queues.at(annotator)) {
        if (effective_.contains({stage, id, annotator})) continue;
        auto& served = served_[{annotator, stage}];
        if (!served.contains(id)) {
            json rec{{"type", "serve"}, {"annotator_id", annotator}, {"stage", stage}, {"item_id", id}};
            append_log(rec);
            served.insert(id);
        }
        const auto& item = s.items[s.index.at(id)];
        return json{{"item_id", id},
                    {"stage", stage},
                    {"assigned_to", annotator},
                    {"overlap", s.overlap.contains(id)},
                    {"payload", payload(item, stage)}};
    }
    return nullptr;
}

json AnnotationStore::item(const std::string& item_id, int stage) const {
    const auto& s = stage_data(stage);
    auto it = s.index.find(item_id);
    if (it == s.index.end()) throw NotFoundError("unknown item '" + item_id + "'");
    return json{{"item_id", item_id},
                {"stage", stage},
                {"overlap", s.overlap.contains(item_id)},
                {"payload", payload(s.items[it->second], stage)}};
}

std::size_t AnnotationStore::submit(const json& decision) {
    if (!decision.is_object()) throw ValidationError("decision", "must be an object");
    const int stage = parse_stage(decision);
    json record;
    std::string item_id, annotator;
    if (stage == 1) {
        auto d = decision.get<verification::Stage1Decision>();
        item_id = d.item_id;
        annotator = d.annotator_id;
        record = d;
    } else {
        auto d = decision.get<verification::Stage2Decision>();
        item_id = d.item_id;
        annotator = d.annotator_id;
        require_annotator(annotator);
        const auto& s = stage_data(2);
        auto it = s.index.find(item_id);
        if (it == s.index.end()) throw NotFoundError("unknown item '" + item_id + "'");
        verification::validate_stage2(d, s.items[it->second]);
        record = d;
    }
    require_annotator(annotator);
    const auto& s = stage_data(stage);
    if (!s.index.contains(item_id)) throw NotFoundError("unknown item '" + item_id + "'");

    std::unique_lock lock(mutex_);
    if (annotator != options_.super_annotator) {
        auto served = served_.find({annotator, stage});
        if (served == served_.end() || !served->second.contains(item_id))
            throw ValidationError("item_id", "item '" + item_id + "' was not served to " + annotator);
    }
    record["type"] = "decision";
    append_log(record);
    apply(record);
    if (options_.log_path && options_.snapshot_every > 0 && ++since_snapshot_ >= options_.snapshot_every) {
        since_snapshot_ = 0;
        lock.unlock();
        write_snapshot();
        lock.lock();
    }
    return static_cast<std::size_t>(std::count_if(effective_.begin(), effective_.end(),
                                                  [&](const auto& e) { return std::get<0>(e.first) == stage; }));
}

void AnnotationStore::append_log(const json& record) {
    if (record.value("type", "") == "decision") ++log_records_;
    if (!log_.is_open()) return;
    log_ << record.dump() << '\n';
    log_.flush();
}

void AnnotationStore::apply(const json& record) {
    const auto type = record.value("type", "");
    const int stage = parse_stage(record);
    if (type == "serve") {
        served_[{record.at("annotator_id").get<std::string>(), stage}].insert(record.at("item_id").get<std::string>());
    } else if (type == "decision") {
        json clean = record;
        clean.erase("type");
        effective_[{stage, record.at("item_id").get<std::string>(), record.at("annotator_id").get<std::string>()}] =
            std::move(clean);
    } else {
        throw ValidationError("type", "unknown log record type '" + type + "'");
    }
}

std::vector<json> AnnotationStore::export_decisions(int stage) const {
    stage_data(stage);
    std::shared_lock lock(mutex_);
    std::vector<json> out;
    for (const auto& [key, rec] : effective_)
        if (std::get<0>(key) == stage) out.push_back(rec);
    return out;
}

std::vector<verification::Stage1Decision> AnnotationStore::stage1_decisions() const {
    std::vector<verification::Stage1Decision> out;
    for (const auto& j : export_decisions(1)) out.push_back(j.get<verification::Stage1Decision>());
    return out;
}

std::vector<verification::Stage2Decision> AnnotationStore::stage2_decisions() const {
    std::vector<verification::Stage2Decision> out;
    for (const auto& j : export_decisions(2)) out.push_back(j.get<verification::Stage2Decision>());
    return out;
}

std::map<std::string, std::map<int, Progress>> AnnotationStore::progress() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, std::map<int, Progress>> out;
    for (const auto& a : options_.annotators)
        for (int stage = 1; stage <= 2; ++stage) {
            auto& p = out[a][stage];
            p.queued = stages_[stage - 1].queues.at(a).size();
            if (auto it = served_.find({a, stage}); it != served_.end()) p.served = it->second.size();
        }
    for (const auto& [key, _] : effective_) {
        const auto& annotator = std::get<2>(key);
        out[annotator][std::get<0>(key)].decided += 1;
    }
    return out;
}

json AnnotationStore::progress_json() const {
    json out = json::object();
    for (const auto& [annotator, stages] : progress()) {
        json a = json::object();
        for (const auto& [stage, p] : stages)
            a["stage" + std::to_string(stage)] = json{{"queued", p.queued}, {"served", p.served}, {"decided", p.decided}};
        out[annotator] = a;
    }
    return out;
}

std::size_t AnnotationStore::audit_log_size() const {
    std::shared_lock lock(mutex_);
    return log_records_;
}

const std::vector<std::string>& AnnotationStore::queue(const std::string& annotator, int stage) const {
    const auto& s = stage_data(stage);
    auto it = s.queues.find(annotator);
    if (it == s.queues.end()) throw NotFoundError("unknown annotator '" + annotator + "'");
    return it->second;
}

const std::set<std::string>& AnnotationStore::overlap_pool(int stage) const { return stage_data(stage).overlap; }

void AnnotationStore::write_snapshot() const {
    if (!options_.log_path) return;
    json snap{{"stage1", export_decisions(1)}, {"stage2", export_decisions(2)}, {"progress", progress_json()}};
    auto path = *options_.log_path;
    path += ".snapshot.json";
    write_text_atomic(path, snap.dump(1));
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        send_json(res, 404, json{{"error", e.what()}});
    } catch (const ValidationError& e) {
        send_json(res, 422, json{{"error", e.what()}, {"field", e.field()}});
    } catch (const json::exception& e) {
        send_json(res, 422, json{{"error", e.what()}});
    } catch (const std::exception& e) {
        send_json(res, 500, json{{"error", e.what()}});
    }
}

int stage_param(const httplib::Request& req) {
    if (!req.has_param("stage")) throw ValidationError("stage", "missing");
    auto s = req.get_param_value("stage");
    if (s == "1") return 1;
    if (s == "2") return 2;
    throw ValidationError("stage", "must be 1 or 2");
}

}  // namespace

void register_routes(httplib::Server& server, AnnotationStore& store) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/items/next", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!req.has_param("annotator")) throw ValidationError("annotator", "missing");
            auto item = store.next_item(req.get_param_value("annotator"), stage_param(req));
            send_json(res, 200, json{{"item", item}});
        });
    });
    server.Get(R"(/items/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            int stage = req.has_param("stage") ? stage_param(req) : 1;
            send_json(res, 200, store.item(req.matches[1].str(), stage));
        });
    });
    server.Post("/decisions", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            json body = json::parse(req.body);
            auto n = store.submit(body);
            send_json(res, 200, json{{"ack", true}, {"effective", n}});
        });
    });
    server.Get("/progress", [&](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, store.progress_json()); });
    });
    server.Get("/export", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::string body;
            for (const auto& r : store.export_decisions(stage_param(req))) body += r.dump() + "\n";
            res.status = 200;
            res.set_content(body, "application/x-ndjson");
        });
    });
}

}  // namespace qaforge::annotation
