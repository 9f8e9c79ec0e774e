import json
import math
import pathlib
import shutil

import pytest

import qaforge

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_normalize_and_metrics():
    assert qaforge.normalize_question("  Where WAS Chopin born ??") == "where was chopin born?"
    assert qaforge.exact_match("The Danube", "the danube.") == 1.0
    assert math.isclose(qaforge.token_f1("Danube river", "the Danube river basin"), 2 / 3)
    m = qaforge.ir_metrics({"q": ["d1", "d2", "d3"]}, {"q": {"d3"}}, [10])
    assert math.isclose(m[10]["ndcg"], 0.5)
    assert math.isclose(m[10]["mrr"], 1 / 3)
    assert qaforge.kbqa_accuracy({"a": "Vienna"}, {"a": ["Vienna", "Bonn"]}) == 0.5


def test_kappa_worked_table():
    a, b = {}, {}
    i = 0
    for count, x, y in [(45, "y", "y"), (15, "y", "n"), (25, "n", "y"), (15, "n", "n")]:
        for _ in range(count):
            a[str(i)], b[str(i)] = x, y
            i += 1
    r = qaforge.agreement(a, b)
    assert r["items"] == 100
    assert abs(r["kappa"] - 0.1304) < 1e-4


def test_segmentation():
    words = [f"w{i}" for i in range(180)]
    ps = qaforge.segment(words, page_id="pg")
    assert [p["word_start"] for p in ps] == [0, 60]
    assert ps[0]["id"] == "pg:0"
    assert len(qaforge.segment(words[:120])) == 1


def test_grounding_with_lemmas():
    words = "Chopin died in Paris in 1849 .".split()
    r = qaforge.ground_span(words, "dies in Paris", {"died": "die", "dies": "die"})
    assert r["grounded"]
    assert r["text"] == "died in Paris"
    assert not qaforge.ground_span(words, "completely unrelated words here")["grounded"]


def test_bm25():
    idx = qaforge.Bm25Index([("a", "the danube flows through vienna"), ("b", "bonn lies on the rhine")])
    hits = idx.search("rhine")
    assert [h[0] for h in hits] == ["b"]
    with pytest.raises(Exception):
        qaforge.Bm25Index([])


def test_graph_queries_and_neighborhood():
    g = qaforge.KnowledgeGraph()
    g.add_triple("Q255", "P19", "Q586")
    g.add_triple("Q586", "P17", "Q183")
    g.add_triple("Q183", "P36", "Q64")
    assert g.triple_count == 3
    assert g.query("SELECT ?x WHERE { wd:Q255 wdt:P19 ?y. ?y wdt:P17 ?x. }") == ["Q183"]
    assert g.neighborhood(["Q255"], 1).triple_count == 1
    assert g.neighborhood(["Q255"], 2).triple_count == 2
    with pytest.raises(qaforge.ParseError):
        g.query("SELECT ?x WHERE { }")
    with pytest.raises(qaforge.UnknownIdError):
        g.neighborhood(["Q1"], 1)


def test_demo_pipeline(tmp_path):
    demo = tmp_path / "data" / "demo"
    shutil.copytree(ROOT / "data" / "demo", demo, ignore=shutil.ignore_patterns("out"))
    shutil.copytree(ROOT / "assets" / "templates", tmp_path / "assets" / "templates")
    config = demo / "config.json"

    assert all(status == "run" for _, status in qaforge.plan(config))
    with pytest.raises(qaforge.MissingArtifactError):
        qaforge.run_pipeline(config, ["tag"])

    reports = qaforge.run_pipeline(config)
    assert [r["stage"] for r in reports] == qaforge.stages()
    chain = dict(qaforge.report_chain(demo / "out"))
    assert chain["IR examples"] >= chain["MRC examples"] >= chain["KBQA examples"] > 0
    assert all(r["cached"] for r in qaforge.run_pipeline(config))

    rows = [json.loads(line) for line in (demo / "out" / "datasets" / "mrc.jsonl").read_text().splitlines()]
    for row in rows:
        start = row["answer_start"]
        assert row["context"][start:start + len(row["answer_text"])] == row["answer_text"]


def test_invalid_config(tmp_path):
    cfg = json.loads((ROOT / "data" / "demo" / "config.json").read_text())
    cfg["passages"]["step"] = 0
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    with pytest.raises(qaforge.ValidationError):
        qaforge.run_pipeline(path, ["kg-import"])
