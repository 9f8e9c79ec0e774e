#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qaforge/errors.hpp"
#include "qaforge/prompts.hpp"

namespace qaforge::pipeline {

// An upstream artifact is absent; names the stage that produces it.
class MissingArtifactError : public Error {
public:
    MissingArtifactError(const std::filesystem::path& path, const std::string& stage)
        : Error("missing " + path.string() + "; run stage '" + stage + "' first"), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// The JSON configuration with paths resolved against the file's directory.
struct Config {
    nlohmann::json raw;
    std::filesystem::path base_dir;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    prompts::Language language = prompts::Language::en;

    // Value at a '/'-separated pointer, or the fallback when absent.
    template <typename T>
    T get(const std::string& pointer, T fallback) const {
        auto p = nlohmann::json::json_pointer(pointer);
        return raw.contains(p) ? raw.at(p).get<T>() : fallback;
    }
    bool has(const std::string& pointer) const { return raw.contains(nlohmann::json::json_pointer(pointer)); }
    // Path setting resolved against base_dir; throws ValidationError when absent.
    std::filesystem::path path(const std::string& pointer) const;
    std::optional<std::filesystem::path> optional_path(const std::string& pointer) const;
    std::vector<std::filesystem::path> paths(const std::string& pointer) const;
};

// Throws ValidationError for missing or out-of-range settings.
Config load_config(const std::filesystem::path& path);
Config make_config(nlohmann::json raw, const std::filesystem::path& base_dir);
void validate_config(const Config& config);

struct ReportRow {
    std::string label;
    std::size_t count = 0;
};

struct StageReport {
    std::string stage;
    std::vector<ReportRow> rows;
    bool cached = false;

    std::optional<std::size_t> count(const std::string& label) const;
};

nlohmann::json to_json(const StageReport& r);
StageReport report_from_json(const nlohmann::json& j);

// Rows with counts and the reduction relative to the previous row.
std::string format_report(const StageReport& report);

// Stages in execution order; `serve` is interactive and not part of it.
const std::vector<std::string>& stage_order();
bool is_stage(const std::string& name);

struct PlannedStage {
    std::string stage;
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::string status;  // "cached", "run" or "blocked"
};

class Pipeline {
public:
    explicit Pipeline(Config config);
    ~Pipeline();

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    // Runs one stage unless its manifest shows unchanged inputs, parameters
    // and outputs. Throws MissingArtifactError when an input is absent.
    StageReport run(const std::string& stage, bool force = false);
    std::vector<StageReport> run_all(bool force = false);

    std::vector<PlannedStage> plan(const std::vector<std::string>& stages) const;

    // Serves the annotation service until interrupted.
    void serve(const std::string& host, int port);

    const Config& config() const noexcept { return config_; }
    std::filesystem::path out(const std::string& relative) const { return config_.output_dir / relative; }

private:
    struct Impl;
    Config config_;
    std::unique_ptr<Impl> impl_;
};

// Table-8 style chain of every stage report found under the output directory.
std::vector<ReportRow> pipeline_chain(const std::filesystem::path& output_dir);

}  // namespace qaforge::pipeline
