#include <doctest.h>

#include "grounding_suite.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/records.hpp"
#include "qaforge/verification.hpp"

using namespace qaforge;
using namespace qaforge::verification;

namespace {

CandidateExample item(const std::string& id, std::size_t start = 0) {
    CandidateExample c;
    c.id = id;
    c.question = "Question " + id + "?";
    c.passage = testsupport::make_passage({"born", "in", "Bonn"}, "page-" + id + ":" + std::to_string(start));
    c.answer.passage_id = c.passage.id;
    c.answer.char_begin = 8;
    c.answer.char_end = 12;
    c.answer.word_begin = 2;
    c.answer.word_end = 3;
    c.answer.text = "Bonn";
    c.candidate_answers = {EntityId("Q586")};
    c.candidate_topics = {EntityId("Q255"), EntityId("Q1")};
    return c;
}

Stage1Decision s1(const std::string& id, const std::string& who, Stage1Flag f) { return {id, who, f, "t"}; }

Stage2Decision s2(const std::string& id, const std::string& who, std::set<EntityId> answers,
                  std::set<EntityId> topics, bool rejected = false) {
    return {id, who, std::move(answers), std::move(topics), rejected, "t"};
}

}  // namespace

TEST_SUITE("verification") {

TEST_CASE("flags round-trip through text") {
    for (auto f : {Stage1Flag::correct, Stage1Flag::incorrect_question, Stage1Flag::incorrect_passage,
                   Stage1Flag::incorrect_fragment})
        CHECK(parse_flag(to_string(f)) == f);
    CHECK_THROWS_AS(parse_flag("maybe"), ValidationError);
}

TEST_CASE("stage one resolution") {
    std::vector<Stage1Decision> agree{s1("a", "x", Stage1Flag::correct), s1("a", "y", Stage1Flag::correct)};
    CHECK(resolve_stage1(agree).at("a") == Stage1Flag::correct);
    std::vector<Stage1Decision> conflict{s1("a", "x", Stage1Flag::correct), s1("a", "y", Stage1Flag::incorrect_passage)};
    CHECK_THROWS_AS(resolve_stage1(conflict), ValidationError);
    conflict.push_back(s1("a", "super", Stage1Flag::incorrect_passage));
    CHECK(resolve_stage1(conflict).at("a") == Stage1Flag::incorrect_passage);
}

TEST_CASE("stage one routes items by flag") {
    std::vector<CandidateExample> items{item("a"), item("b"), item("c"), item("d")};
    std::vector<Stage1Decision> d{s1("a", "x", Stage1Flag::correct), s1("b", "x", Stage1Flag::incorrect_fragment),
                                  s1("c", "x", Stage1Flag::incorrect_passage),
                                  s1("d", "x", Stage1Flag::incorrect_question)};
    auto r = apply_stage1(items, d);
    CHECK(r.ir_pass.size() == 2);
    CHECK(r.mrc_pass.size() == 1);
    CHECK(r.rejected.size() == 2);
    CHECK(r.ir_pass.size() >= r.mrc_pass.size());
    d.pop_back();
    CHECK_THROWS_AS(apply_stage1(items, d), ValidationError);
}

TEST_CASE("stage two selections must stay within the candidates") {
    auto it = item("a");
    CHECK_NOTHROW(validate_stage2(s2("a", "x", {EntityId("Q586")}, {EntityId("Q255")}), it));
    CHECK_THROWS_AS(validate_stage2(s2("a", "x", {EntityId("Q9")}, {}), it), ValidationError);
    CHECK_THROWS_AS(validate_stage2(s2("a", "x", {}, {EntityId("Q9")}), it), ValidationError);
    CHECK_THROWS_AS(validate_stage2(s2("a", "x", {EntityId("Q586")}, {}, true), it), ValidationError);
}

TEST_CASE("stage two combination") {
    std::vector<CandidateExample> items{item("a"), item("b"), item("c"), item("d")};
    std::vector<Stage2Decision> d{
        s2("a", "x", {EntityId("Q586")}, {EntityId("Q255"), EntityId("Q1")}),
        s2("a", "y", {EntityId("Q586")}, {EntityId("Q255")}),
        s2("b", "x", {EntityId("Q586")}, {}),
        s2("c", "x", {}, {}, true),
        s2("d", "x", {}, {EntityId("Q255")}),
        s2("d", "y", {EntityId("Q586")}, {EntityId("Q255")}),
        s2("d", "super", {EntityId("Q586")}, {EntityId("Q1")}),
    };
    auto r = apply_stage2(items, d);
    CHECK(r.rejected == 1);
    CHECK(r.with_answers == 3);
    CHECK(r.with_topics == 2);
    REQUIRE(r.kbqa.size() == 2);
    CHECK(r.kbqa[0].topic_entities == std::set<EntityId>{EntityId("Q255")});
    CHECK(r.kbqa[1].topic_entities == std::set<EntityId>{EntityId("Q1")});
    CHECK(r.kbqa[0].source == QuestionSource::natural);
    d.erase(d.begin() + 3);
    CHECK_THROWS_AS(apply_stage2(items, d), ValidationError);
}

TEST_CASE("seeded splits") {
    std::vector<std::string> ids;
    for (int i = 0; i < 11; ++i) ids.push_back("id" + std::to_string(i));
    auto s = seeded_split(ids, 3, 0.2);
    CHECK(s.test.size() == 3);
    CHECK(s.train.size() == 8);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    auto reversed = ids;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(seeded_split(reversed, 3, 0.2).test == s.test);
    CHECK(seeded_split(ids, 3, 0.0).test.empty());
    CHECK(seeded_split(ids, 3, 1.0).train.empty());
    CHECK_THROWS_AS(seeded_split(ids, 3, 1.5), std::invalid_argument);
}

TEST_CASE("assembly keeps the size chain and stratifies the split") {
    Stage1Result st;
    st.ir_pass = {item("a"), item("b"), item("c")};
    st.mrc_pass = {item("a"), item("b")};
    std::vector<KbqaExample> natural{{"a", "Q?", {EntityId("Q255")}, {EntityId("Q586")}, QuestionSource::natural, ""}};
    std::vector<KbqaExample> tmpl;
    for (int i = 0; i < 10; ++i)
        tmpl.push_back({"t" + std::to_string(i), "T?", {EntityId("Q1")}, {EntityId("Q2")},
                        QuestionSource::template_based, "one-hop"});
    auto a = assemble(st, natural, tmpl, {}, 7, 0.2);
    CHECK(a.datasets.ir.size() == 3);
    CHECK(a.datasets.mrc.size() == 2);
    CHECK(a.datasets.kbqa.size() == 11);
    CHECK(a.datasets.mrc[0].context.substr(a.datasets.mrc[0].answer_start, 4) == "Bonn");
    CHECK(a.kbqa_split.test.size() == 1 + 2);

    std::vector<KbqaExample> too_many(3, natural[0]);
    CHECK_THROWS_AS(assemble(st, too_many, tmpl, {}, 7), AssemblyError);
    auto bad = natural;
    bad[0].topic_entities.clear();
    CHECK_THROWS_AS(assemble(st, bad, tmpl, {}, 7), AssemblyError);
}

TEST_CASE("mrc answer offsets are stored as code points") {
    MrcExample e;
    e.id = "m";
    e.question = "Gdzie urodził się Chopin?";
    e.passage_id = "p:0";
    e.context = "Chopin urodził się w Żelazowej Woli.";
    e.answer_text = "Żelazowej Woli";
    e.answer_start = e.context.find(e.answer_text);
    nlohmann::json j = e;
    CHECK(j["answer_start"] == 21);
    auto back = j.get<MrcExample>();
    CHECK(back.answer_start == e.answer_start);
    CHECK(back.context.substr(back.answer_start, back.answer_text.size()) == back.answer_text);
    j["answer_start"] = 99;
    CHECK_THROWS_AS(j.get<MrcExample>(), ValidationError);
}

}
