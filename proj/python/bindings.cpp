#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qaforge/bgp_query.hpp"
#include "qaforge/bm25.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/kg_store.hpp"
#include "qaforge/metrics.hpp"
#include "qaforge/passage_builder.hpp"
#include "qaforge/pipeline.hpp"
#include "qaforge/providers/local.hpp"
#include "qaforge/question_forge.hpp"
#include "qaforge/answer_tagger.hpp"
#include "qaforge/text.hpp"
#include "qaforge/verification.hpp"

namespace py = pybind11;
using namespace qaforge;

namespace {

Article article_from(std::vector<std::string> words, std::string page_id, std::string title) {
    Article a;
    a.title = std::move(title);
    a.page_id = std::move(page_id);
    a.words = std::move(words);
    return a;
}

py::dict passage_dict(const Passage& p) {
    py::dict d;
    d["id"] = p.id;
    d["word_start"] = p.word_start;
    d["word_end"] = p.word_end;
    d["text"] = p.text;
    return d;
}

py::dict report_dict(const pipeline::StageReport& r) {
    py::dict d;
    d["stage"] = r.stage;
    d["cached"] = r.cached;
    py::list rows;
    for (const auto& row : r.rows) rows.append(py::make_tuple(row.label, row.count));
    d["rows"] = rows;
    return d;
}

std::set<EntityId> entity_set(const std::vector<std::string>& ids) {
    std::set<EntityId> out;
    for (const auto& id : ids) out.insert(EntityId(id));
    return out;
}

std::vector<std::string> id_list(const std::set<EntityId>& ids) {
    std::vector<std::string> out;
    for (const auto& id : ids) out.push_back(id.str());
    return out;
}

}  // namespace

PYBIND11_MODULE(_qaforge, m) {
    m.doc() = "Dataset construction toolkit for KBQA, MRC and IR";

    auto base = py::register_exception<Error>(m, "QaforgeError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<pipeline::MissingArtifactError>(m, "MissingArtifactError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<UnknownIdError>(m, "UnknownIdError", base.ptr());

    m.def("normalize_question", &questions::normalize_question, py::arg("text"));
    m.def("fold_case", [](std::string_view s) { return text::fold_case(s); }, py::arg("text"));

    m.def(
        "segment",
        [](std::vector<std::string> words, std::string page_id, std::string title, std::size_t window,
           std::size_t step) {
            py::list out;
            for (const auto& p : passages::segment(article_from(std::move(words), std::move(page_id), std::move(title)),
                                                   window, step))
                out.append(passage_dict(p));
            return out;
        },
        py::arg("words"), py::arg("page_id") = "page", py::arg("title") = "",
        py::arg("window") = passages::kDefaultWindow, py::arg("step") = passages::kDefaultStep,
        "Overlapping word windows of an article, as dicts with id, word_start, word_end and text.");

    m.def(
        "ground_span",
        [](std::vector<std::string> words, std::string_view quote, std::map<std::string, std::string> lemmas,
           double min_ratio) -> py::dict {
            auto ps = passages::segment(article_from(std::move(words), "p", ""), 1u << 30, 1u << 30);
            if (ps.empty()) throw ValidationError("words", "must not be empty");
            providers::DictionaryLemmatizer lemmatizer(std::move(lemmas));
            auto g = tagging::ground_span(ps.front(), quote, lemmatizer, min_ratio);
            py::dict d;
            d["grounded"] = g.report.status == tagging::GroundingStatus::grounded;
            d["matched_ratio"] = g.report.matched_ratio;
            if (g.span) {
                d["char_begin"] = g.span->char_begin;
                d["char_end"] = g.span->char_end;
                d["word_begin"] = g.span->word_begin;
                d["word_end"] = g.span->word_end;
                d["text"] = g.span->text;
            }
            return d;
        },
        py::arg("words"), py::arg("quote"), py::arg("lemmas") = std::map<std::string, std::string>{},
        py::arg("min_ratio") = tagging::kDefaultMinRatio,
        "Locates a possibly inflected quote in a passage given as words.");

    m.def("exact_match", &eval::exact_match, py::arg("prediction"), py::arg("gold"));
    m.def("token_f1", &eval::token_f1, py::arg("prediction"), py::arg("gold"));
    m.def(
        "ir_metrics",
        [](const std::map<std::string, std::vector<std::string>>& runs, const eval::Qrels& qrels,
           std::vector<std::size_t> ks) {
            std::vector<eval::Ranking> rankings;
            for (const auto& [qid, ids] : runs) {
                eval::Ranking r{qid, {}};
                double s = static_cast<double>(ids.size());
                for (const auto& id : ids) r.docs.push_back({id, s--});
                rankings.push_back(std::move(r));
            }
            py::dict out;
            for (const auto& [k, v] : eval::ir_metrics(rankings, qrels, ks)) {
                py::dict d;
                d["ndcg"] = v.ndcg;
                d["mrr"] = v.mrr;
                d["recall"] = v.recall;
                out[py::int_(k)] = d;
            }
            return out;
        },
        py::arg("runs"), py::arg("qrels"), py::arg("k_values") = std::vector<std::size_t>{1, 5, 10, 100},
        "Mean NDCG, MRR and recall at each k; runs map a query id to document ids, best first.");
    m.def(
        "kbqa_accuracy",
        [](const std::map<std::string, std::string>& responses,
           const std::map<std::string, std::vector<std::string>>& gold_labels) {
            std::vector<eval::KbqaGold> gold;
            for (const auto& [qid, labels] : gold_labels) {
                eval::KbqaGold g{qid, {}};
                for (std::size_t i = 0; i < labels.size(); ++i)
                    g.answers.push_back({EntityId("Q" + std::to_string(i + 1)), labels[i]});
                gold.push_back(std::move(g));
            }
            return eval::kbqa_accuracy(responses, gold);
        },
        py::arg("responses"), py::arg("gold_labels"));
    m.def(
        "agreement",
        [](const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
            auto r = verification::agreement(a, b);
            py::dict d;
            d["items"] = r.items;
            d["accuracy"] = r.accuracy;
            d["kappa"] = r.kappa ? py::cast(*r.kappa) : py::none();
            return d;
        },
        py::arg("a"), py::arg("b"), "Raw agreement and Cohen's kappa over shared ids.");

    py::class_<eval::Bm25Index>(m, "Bm25Index")
        .def(py::init([](const std::vector<std::pair<std::string, std::string>>& docs) {
                 std::vector<eval::Bm25Index::Document> d;
                 for (const auto& [id, text] : docs) d.push_back({id, text});
                 return eval::Bm25Index(std::move(d));
             }),
             py::arg("documents"))
        .def(
            "search",
            [](const eval::Bm25Index& idx, std::string_view query, std::size_t top) {
                std::vector<std::pair<std::string, double>> out;
                for (const auto& d : idx.search(query, top).docs) out.emplace_back(d.id, d.score);
                return out;
            },
            py::arg("query"), py::arg("top") = 10);

    py::class_<kg::KnowledgeGraph>(m, "KnowledgeGraph")
        .def(py::init<>())
        .def_static(
            "load",
            [](const std::filesystem::path& triples, const std::filesystem::path& labels) {
                return kg::load_graph(triples, labels);
            },
            py::arg("triples"), py::arg("labels"))
        .def(
            "add_triple",
            [](kg::KnowledgeGraph& g, const std::string& h, const std::string& r, const std::string& t) {
                return g.add_triple({EntityId(h), RelationId(r), EntityId(t)});
            },
            py::arg("head"), py::arg("relation"), py::arg("tail"))
        .def(
            "set_label",
            [](kg::KnowledgeGraph& g, const std::string& id, std::string label) {
                if (g.has_relation(RelationId(id)) && !g.has_entity(EntityId(id)))
                    g.set_relation_label(RelationId(id), std::move(label));
                else
                    g.set_entity_label(EntityId(id), std::move(label));
            },
            py::arg("id"), py::arg("label"))
        .def_property_readonly("triple_count", &kg::KnowledgeGraph::triple_count)
        .def("triples",
             [](const kg::KnowledgeGraph& g) {
                 std::vector<std::tuple<std::string, std::string, std::string>> out;
                 for (const auto& t : g.triples()) out.emplace_back(t.head.str(), t.relation.str(), t.tail.str());
                 return out;
             })
        .def(
            "neighborhood",
            [](const kg::KnowledgeGraph& g, const std::vector<std::string>& seeds, unsigned hops) {
                return kg::neighborhood(g, entity_set(seeds), hops);
            },
            py::arg("seeds"), py::arg("hops"))
        .def(
            "query",
            [](const kg::KnowledgeGraph& g, std::string_view sparql) {
                return id_list(bgp::execute(g, bgp::parse_query(sparql)));
            },
            py::arg("sparql"), "Answers of a basic graph pattern query, sorted by id.");

    m.def(
        "stages", [] { return pipeline::stage_order(); }, "Pipeline stages in execution order.");
    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config, std::vector<std::string> stages, bool force) {
            pipeline::Pipeline p(pipeline::load_config(config));
            if (stages.empty()) stages = pipeline::stage_order();
            py::list out;
            for (const auto& s : stages) out.append(report_dict(p.run(s, force)));
            return out;
        },
        py::arg("config"), py::arg("stages") = std::vector<std::string>{}, py::arg("force") = false,
        "Runs the given stages (all when empty) and returns their reports.");
    m.def(
        "plan",
        [](const std::filesystem::path& config, std::vector<std::string> stages) {
            pipeline::Pipeline p(pipeline::load_config(config));
            if (stages.empty()) stages = pipeline::stage_order();
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& s : p.plan(stages)) out.emplace_back(s.stage, s.status);
            return out;
        },
        py::arg("config"), py::arg("stages") = std::vector<std::string>{});
    m.def(
        "report_chain",
        [](const std::filesystem::path& output_dir) {
            std::vector<std::pair<std::string, std::size_t>> out;
            for (const auto& r : pipeline::pipeline_chain(output_dir)) out.emplace_back(r.label, r.count);
            return out;
        },
        py::arg("output_dir"));
}
