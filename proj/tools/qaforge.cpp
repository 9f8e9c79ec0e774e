#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "qaforge/errors.hpp"
#include "qaforge/pipeline.hpp"

namespace {

using namespace qaforge;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const LoadError*>(&e) ||
        dynamic_cast<const ParseError*>(&e) || dynamic_cast<const TemplateError*>(&e) ||
        dynamic_cast<const pipeline::MissingArtifactError*>(&e))
        return 1;
    return 2;
}

void print_plan(const pipeline::Pipeline& p, const std::vector<std::string>& stages) {
    for (const auto& s : p.plan(stages)) {
        std::cout << s.stage << "  [" << s.status << "]\n";
        for (const auto& in : s.inputs) std::cout << "    in  " << in.string() << '\n';
        for (const auto& out : s.outputs) std::cout << "    out " << out.string() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qaforge: build KBQA, MRC and IR datasets from seed questions and a knowledge graph"};
    app.require_subcommand(1);

    std::string config_path = "config.json";
    bool dry_run = false, force = false, verbose = false;
    app.add_option("-c,--config", config_path, "Pipeline configuration (JSON)");
    app.add_flag("--dry-run", dry_run, "Print the stage plan without running anything");
    app.add_flag("-f,--force", force, "Rerun stages even when their manifests are current");
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    std::vector<std::string> stages;
    for (const auto& s : pipeline::stage_order()) app.add_subcommand(s, "Run the " + s + " stage");
    app.add_subcommand("all", "Run every stage in order");
    auto* serve = app.add_subcommand("serve", "Serve the annotation HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    app.add_subcommand("report", "Print the stage report chain of the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    const auto command = app.get_subcommands().front()->get_name();
    try {
        pipeline::Pipeline p(pipeline::load_config(config_path));
        if (command == "report") {
            std::cout << pipeline::format_report({"pipeline", pipeline::pipeline_chain(p.config().output_dir)});
            return 0;
        }
        if (command == "serve") {
            if (dry_run) {
                std::cout << "serve on " << host << ':' << port << " from " << p.out("link/candidates.jsonl").string()
                          << '\n';
                return 0;
            }
            p.serve(host, port);
            return 0;
        }
        if (command == "all")
            stages = pipeline::stage_order();
        else
            stages = {command};
        if (dry_run) {
            print_plan(p, stages);
            return 0;
        }
        for (const auto& s : stages) std::cout << pipeline::format_report(p.run(s, force));
        return 0;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e);
    }
}
