#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "grounding_suite.hpp"
#include "qaforge/annotation_service.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/records.hpp"

using namespace qaforge;
using namespace qaforge::annotation;
using nlohmann::json;

namespace {

std::vector<verification::CandidateExample> items(std::size_t n) {
    std::vector<verification::CandidateExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        verification::CandidateExample c;
        c.id = "item" + std::to_string(1000 + i);
        c.question = "Where was composer " + std::to_string(i) + " born?";
        c.passage = testsupport::make_passage({"He", "was", "born", "in", "Bonn."}, "page:" + std::to_string(i));
        c.answer = {c.passage.id, 12, 16, 3, 4, "in Bonn"};
        c.candidate_answers = {EntityId("Q586")};
        c.candidate_topics = {EntityId("Q255")};
        out.push_back(c);
    }
    return out;
}

StoreOptions opts(std::uint64_t seed = 1) {
    StoreOptions o;
    o.annotators = {"ann1", "ann2"};
    o.seed = seed;
    o.snapshot_every = 0;
    o.labels = {{EntityId("Q586"), "Bonn"}, {EntityId("Q255"), "Ludwig van Beethoven"}};
    return o;
}

json stage1(const std::string& item, const std::string& who, const std::string& flag) {
    return {{"stage", 1}, {"item_id", item}, {"annotator_id", who}, {"flag", flag}, {"timestamp", "t"}};
}

}  // namespace

TEST_SUITE("annotation") {

TEST_CASE("overlap pool arithmetic") {
    AnnotationStore store(items(100), items(100), opts());
    CHECK(store.overlap_pool(1).size() == 10);
    const auto& q1 = store.queue("ann1", 1);
    const auto& q2 = store.queue("ann2", 1);
    CHECK(q1.size() == 55);
    CHECK(q2.size() == 55);
    std::set<std::string> s1(q1.begin(), q1.end()), s2(q2.begin(), q2.end()), shared;
    std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(), std::inserter(shared, shared.end()));
    CHECK(shared == store.overlap_pool(1));
    std::set<std::string> all(s1);
    all.insert(s2.begin(), s2.end());
    CHECK(all.size() == 100);
}

TEST_CASE("queues are deterministic for a seed") {
    AnnotationStore a(items(40), {}, opts(5)), b(items(40), {}, opts(5)), c(items(40), {}, opts(6));
    CHECK(a.queue("ann1", 1) == b.queue("ann1", 1));
    CHECK(a.overlap_pool(1) == b.overlap_pool(1));
    CHECK(a.overlap_pool(1) != c.overlap_pool(1));
}

TEST_CASE("next item repeats until decided and then advances") {
    AnnotationStore store(items(10), {}, opts());
    auto first = store.next_item("ann1", 1);
    CHECK(first.at("payload").at("question").is_string());
    CHECK(store.next_item("ann1", 1) == first);
    store.submit(stage1(first["item_id"], "ann1", "correct"));
    CHECK(store.next_item("ann1", 1)["item_id"] != first["item_id"]);
    for (;;) {
        auto it = store.next_item("ann1", 1);
        if (it.is_null()) break;
        store.submit(stage1(it["item_id"], "ann1", "correct"));
    }
    CHECK(store.progress().at("ann1").at(1).decided == store.queue("ann1", 1).size());
    CHECK_THROWS_AS(store.next_item("nobody", 1), NotFoundError);
    CHECK_THROWS_AS(store.next_item("ann1", 3), ValidationError);
}

TEST_CASE("submissions are validated") {
    AnnotationStore store(items(10), items(10), opts());
    auto it = store.next_item("ann1", 1);
    CHECK_THROWS_AS(store.submit(stage1(it["item_id"], "ann1", "perhaps")), ValidationError);
    CHECK_THROWS_AS(store.submit(stage1("nope", "ann1", "correct")), NotFoundError);
    CHECK_THROWS_AS(store.submit(stage1(it["item_id"], "ghost", "correct")), NotFoundError);
    auto other = store.queue("ann2", 1).back();
    CHECK_THROWS_AS(store.submit(stage1(other, "ann2", "correct")), ValidationError);
    CHECK_NOTHROW(store.submit(stage1(other, "super", "correct")));

    auto s2 = store.next_item("ann1", 2);
    json bad{{"stage", 2}, {"item_id", s2["item_id"]}, {"annotator_id", "ann1"},
             {"accepted_answer_entities", {"Q999"}}, {"accepted_topic_entities", json::array()},
             {"rejected", false}, {"timestamp", "t"}};
    try {
        store.submit(bad);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "accepted_answer_entities");
    }
    bad["accepted_answer_entities"] = {"Q586"};
    CHECK_NOTHROW(store.submit(bad));
}

TEST_CASE("resubmission overwrites and both are logged") {
    testsupport::TempDir dir("annotation");
    auto o = opts();
    o.log_path = dir / "decisions.log";
    std::string id;
    {
        AnnotationStore store(items(10), {}, o);
        id = store.next_item("ann1", 1)["item_id"];
        store.submit(stage1(id, "ann1", "correct"));
        store.submit(stage1(id, "ann1", "incorrect_passage"));
        CHECK(store.audit_log_size() == 2);
        auto ex = store.export_decisions(1);
        REQUIRE(ex.size() == 1);
        CHECK(ex[0]["flag"] == "incorrect_passage");
    }
    // The state is the fold of the log.
    AnnotationStore reopened(items(10), {}, o);
    CHECK(reopened.audit_log_size() == 2);
    REQUIRE(reopened.stage1_decisions().size() == 1);
    CHECK(reopened.stage1_decisions()[0].flag == verification::Stage1Flag::incorrect_passage);
    CHECK(reopened.next_item("ann1", 1)["item_id"] != id);
}

TEST_CASE("http endpoints") {
    AnnotationStore store(items(20), items(20), opts());
    httplib::Server server;
    register_routes(server, store);
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto res = client.Get("/items/next?annotator=ann1&stage=1");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto item = json::parse(res->body)["item"];
    std::string id = item["item_id"];

    CHECK(client.Get("/items/next?annotator=ghost&stage=1")->status == 404);
    CHECK(client.Get("/items/next?annotator=ann1&stage=7")->status == 422);
    CHECK(client.Get("/items/next?stage=1")->status == 422);
    CHECK(client.Get("/items/" + id + "?stage=1")->status == 200);
    CHECK(client.Get("/items/missing?stage=1")->status == 404);

    auto post = [&](const json& body) { return client.Post("/decisions", body.dump(), "application/json"); };
    auto bad = post(stage1(id, "ann1", "perhaps"));
    CHECK(bad->status == 422);
    CHECK(json::parse(bad->body)["field"] == "flag");
    CHECK(client.Post("/decisions", "{not json", "application/json")->status == 422);
    auto ok = post(stage1(id, "ann1", "correct"));
    CHECK(ok->status == 200);
    CHECK(json::parse(ok->body)["effective"] == 1);
    CHECK(post(stage1(id, "ann1", "incorrect_fragment"))->status == 200);
    CHECK(store.audit_log_size() == 2);

    auto progress = json::parse(client.Get("/progress")->body);
    CHECK(progress["ann1"]["stage1"]["decided"] == 1);
    auto exported = client.Get("/export?stage=1");
    CHECK(exported->status == 200);
    auto line = json::parse(exported->body.substr(0, exported->body.find('\n')));
    CHECK(line["flag"] == "incorrect_fragment");
    CHECK(client.Get("/export")->status == 422);

    server.stop();
    worker.join();
}

}
