#include <doctest.h>

#include "demo.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/pipeline.hpp"

using namespace qaforge;
using namespace qaforge::pipeline;
using testsupport::TempDir;

TEST_SUITE("pipeline") {

TEST_CASE("stage order and names") {
    const auto& order = stage_order();
    CHECK(order.front() == "kg-import");
    CHECK(order.back() == "stats");
    CHECK(is_stage("serve"));
    CHECK(is_stage("eval-ir"));
    CHECK_FALSE(is_stage("train"));
}

TEST_CASE("config validation names the offending field") {
    TempDir dir("config");
    auto raw = testsupport::demo_config(dir.path()).raw;
    CHECK_NOTHROW(validate_config(make_config(raw, testsupport::demo_dir())));

    auto bad = raw;
    bad["providers"]["rerank"] = "telepathy";
    try {
        validate_config(make_config(bad, testsupport::demo_dir()));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "providers.rerank");
    }
    bad = raw;
    bad["verification"]["annotators"] = nlohmann::json::array();
    CHECK_THROWS_AS(validate_config(make_config(bad, testsupport::demo_dir())), ValidationError);
    CHECK_THROWS_AS(load_config(dir / "absent.json"), ValidationError);
}

TEST_CASE("a missing upstream artifact names the stage to run") {
    TempDir dir("missing");
    Pipeline p(testsupport::demo_config(dir.path()));
    try {
        p.run("tag");
        FAIL("expected MissingArtifactError");
    } catch (const MissingArtifactError& e) {
        CHECK(e.stage() == "passages");
        CHECK(std::string(e.what()).find("passages") != std::string::npos);
    }
}

TEST_CASE("dry-run plan marks blocked, pending and cached stages") {
    TempDir dir("plan");
    Pipeline p(testsupport::demo_config(dir.path()));
    auto fresh = p.plan(stage_order());
    for (const auto& s : fresh) CHECK(s.status == "run");
    auto partial = p.plan({"tag"});
    CHECK(partial[0].status == "blocked");
    CHECK(testsupport::tree_hashes(dir.path()).empty());

    p.run("kg-import");
    auto after = p.plan({"kg-import", "questions"});
    CHECK(after[0].status == "cached");
    CHECK(after[1].status == "run");
}

TEST_CASE("reruns hit the manifest cache and force bypasses it") {
    TempDir dir("cache");
    Pipeline p(testsupport::demo_config(dir.path()));
    auto first = p.run("kg-import");
    CHECK_FALSE(first.cached);
    auto second = p.run("kg-import");
    CHECK(second.cached);
    CHECK(to_json(second).at("rows") == to_json(first).at("rows"));
    CHECK_FALSE(p.run("kg-import", true).cached);

    // Editing an output invalidates the manifest.
    testsupport::write_file(dir / "kg/graph.triples.tsv", "Q1\tP1\tQ2\n");
    CHECK_FALSE(p.run("kg-import").cached);
}

TEST_CASE("full runs are byte-identical across output directories") {
    TempDir a("run-a"), b("run-b");
    Pipeline pa(testsupport::demo_config(a.path()));
    Pipeline pb(testsupport::demo_config(b.path()));
    pa.run_all();
    pb.run_all();
    auto ha = testsupport::tree_hashes(a.path()), hb = testsupport::tree_hashes(b.path());
    CHECK(ha.size() > 20);
    CHECK(ha == hb);

    auto again = pa.run_all();
    for (const auto& r : again) CHECK(r.cached);
    CHECK(testsupport::tree_hashes(a.path()).at("datasets/kbqa.jsonl") == ha.at("datasets/kbqa.jsonl"));
}

TEST_CASE("report formatting and round trip") {
    StageReport r{"tag", {{"Questions", 10}, {"Tagged", 8}, {"Grounded", 8}}, false};
    auto back = report_from_json(to_json(r));
    CHECK(back.count("Tagged") == 8u);
    CHECK_FALSE(back.count("Nothing"));
    auto text = format_report(r);
    CHECK(text.find("20.0%") != std::string::npos);
    CHECK(text.find("0.0%") != std::string::npos);
}

}
