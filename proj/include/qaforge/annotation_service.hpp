#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qaforge/verification.hpp"

namespace httplib {
class Server;
}

namespace qaforge::annotation {

inline constexpr double kDefaultOverlap = 0.10;

struct StoreOptions {
    std::vector<std::string> annotators;
    double overlap_fraction = kDefaultOverlap;
    std::uint64_t seed = 0;
    std::string super_annotator = std::string(verification::kSuperAnnotator);
    std::optional<std::filesystem::path> log_path;  // append-only decision log
    std::size_t snapshot_every = 50;                // decisions between snapshots; 0 disables
    std::map<EntityId, std::string> labels;         // shown next to candidate entities
};

struct Progress {
    std::size_t queued = 0;
    std::size_t served = 0;
    std::size_t decided = 0;
};

// Work queues, serving state and decisions for both verification stages.
// The effective state is the fold of the log; readers run concurrently and
// writers are serialized.
class AnnotationStore {
public:
    AnnotationStore(std::vector<verification::CandidateExample> stage1_items,
                    std::vector<verification::CandidateExample> stage2_items, StoreOptions options);
    ~AnnotationStore();

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    // The first undecided item of the annotator's queue, now marked served;
    // null when the queue is exhausted. Throws NotFoundError for unknown
    // annotators and ValidationError for a stage other than 1 or 2.
    nlohmann::json next_item(const std::string& annotator, int stage);

    nlohmann::json item(const std::string& item_id, int stage) const;

    // Validates, appends to the log and applies. Returns the number of
    // effective decisions for the stage.
    std::size_t submit(const nlohmann::json& decision);

    // Effective decisions in (item, annotator) order, as verification reads them.
    std::vector<nlohmann::json> export_decisions(int stage) const;
    std::vector<verification::Stage1Decision> stage1_decisions() const;
    std::vector<verification::Stage2Decision> stage2_decisions() const;

    std::map<std::string, std::map<int, Progress>> progress() const;
    nlohmann::json progress_json() const;

    // Decision records ever submitted, overwritten ones included.
    std::size_t audit_log_size() const;
    const std::vector<std::string>& queue(const std::string& annotator, int stage) const;
    const std::set<std::string>& overlap_pool(int stage) const;

    void write_snapshot() const;

private:
    struct StageData {
        std::vector<verification::CandidateExample> items;
        std::map<std::string, std::size_t> index;
        std::set<std::string> overlap;
        std::map<std::string, std::vector<std::string>> queues;
    };

    void build_queues(StageData& s, std::uint64_t seed);
    void apply(const nlohmann::json& record);
    void append_log(const nlohmann::json& record);
    const StageData& stage_data(int stage) const;
    void require_annotator(const std::string& annotator) const;
    nlohmann::json payload(const verification::CandidateExample& item, int stage) const;
    std::string label_of(const EntityId& id) const;

    StoreOptions options_;
    StageData stages_[2];
    std::set<std::string> annotators_;

    mutable std::shared_mutex mutex_;
    // (annotator, stage) -> served item ids
    std::map<std::pair<std::string, int>, std::set<std::string>> served_;
    // (stage, item, annotator) -> decision record
    std::map<std::tuple<int, std::string, std::string>, nlohmann::json> effective_;
    std::size_t log_records_ = 0;
    std::size_t since_snapshot_ = 0;
    std::ofstream log_;
};

// Routes: GET /items/next, POST /decisions, GET /progress, GET /export,
// GET /items/{id}.
void register_routes(httplib::Server& server, AnnotationStore& store);

}  // namespace qaforge::annotation
