"""End-to-end pipeline runs through the command line, exit codes, and
report rendering (CSV plus figure files)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from entailbench.cli import main

import fixtures_synthesis as fx

STUB = f"{sys.executable} {Path(__file__).parent / 'stub_scorer.py'}"

GRAPH_EDGES = """\
(walk.to.1,walk.to.2)\t(go.to.1,go.to.2)\t0.8
(visit.1,visit.2)\t(go.1,go.to.2)\t0.9
(visit.1,visit.2)\t(walk.to.1,walk.to.2)\t0.2
"""


@pytest.fixture
def workspace(tmp_path):
    articles = tmp_path / "articles.jsonl"
    triples = tmp_path / "triples.jsonl"
    with open(articles, "w", encoding="utf8") as fh:
        for a in fx.ARTICLES:
            fh.write(json.dumps(a) + "\n")
    with open(triples, "w", encoding="utf8") as fh:
        for t in fx.TRIPLES:
            fh.write(json.dumps(t) + "\n")
    from conftest import FIXTURE_LEXICON

    lexicon = tmp_path / "lexicon.json"
    lexicon.write_text(json.dumps(FIXTURE_LEXICON), encoding="utf8")
    config = tmp_path / "config.toml"
    config.write_text(
        "\n".join(
            [
                "window_span_days = 3",
                "min_articles = 2",
                "min_predicates = 2",
                "min_argpairs = 2",
                "target_positives = 3",
                "seed = 13",
                'boundary_date = "2016-01-04"',
            ]
        )
        + "\n",
        encoding="utf8",
    )
    graph_dir = tmp_path / "graph"
    graph_dir.mkdir()
    (graph_dir / "person#location.tsv").write_text(GRAPH_EDGES, encoding="utf8")
    return tmp_path


def run(argv) -> int:
    return main([str(a) for a in argv])


class TestPipeline:
    def test_end_to_end(self, workspace, capsys):
        ws = workspace
        assert run(["ingest", "--articles", ws / "articles.jsonl",
                    "--triples", ws / "triples.jsonl",
                    "--out", ws / "index"]) == 0
        assert (ws / "index" / "manifest.json").exists()

        assert run(["synthesize", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--lexicon", ws / "lexicon.json",
                    "--out", ws / "population.jsonl"]) == 0
        population = (ws / "population.jsonl").read_text().strip().splitlines()
        assert population
        assert (ws / "population.jsonl.manifest.json").exists()

        assert run(["sample", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--population", ws / "population.jsonl",
                    "--out-dir", ws / "sampled",
                    "--audit-size", "2"]) == 0
        assert (ws / "sampled" / "dataset.jsonl").exists()
        assert (ws / "sampled" / "dev.jsonl").exists()
        assert (ws / "sampled" / "test.jsonl").exists()
        assert (ws / "sampled" / "audit-sample.jsonl").exists()

        assert run(["evaluate", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--dataset", ws / "sampled" / "dataset.jsonl",
                    "--scorer", "eg", "--graph-dir", ws / "graph", "--fuzzy",
                    "--out", ws / "eg.json"]) == 0
        payload = json.loads((ws / "eg.json").read_text())
        assert payload["report"] is not None
        assert "manifest" in payload

        assert run(["evaluate", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--dataset", ws / "sampled" / "dataset.jsonl",
                    "--scorer", "constant",
                    "--out", ws / "const.json"]) == 0
        const = json.loads((ws / "const.json").read_text())
        assert const["report"]["auc_norm"] == 0.0

        assert run(["report", "--results", ws / "eg.json", ws / "const.json",
                    "--out-dir", ws / "report"]) == 0
        out = capsys.readouterr().out
        assert "auc_norm" in out
        assert (ws / "report" / "summary.csv").exists()
        assert (ws / "report" / "pr-curves.png").stat().st_size > 0
        assert (ws / "report" / "eg-curve.csv").exists()
        summary = (ws / "report" / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("name,scorer,xi,")
        assert len(summary) == 3

    def test_determinism_byte_identical_rerun(self, workspace):
        ws = workspace
        run(["ingest", "--articles", ws / "articles.jsonl",
             "--triples", ws / "triples.jsonl", "--out", ws / "index"])
        for tag in ("one", "two"):
            run(["synthesize", "--config", ws / "config.toml",
                 "--store", ws / "index", "--lexicon", ws / "lexicon.json",
                 "--out", ws / f"population-{tag}.jsonl"])
            run(["sample", "--config", ws / "config.toml",
                 "--store", ws / "index",
                 "--population", ws / f"population-{tag}.jsonl",
                 "--out-dir", ws / f"sampled-{tag}"])
        assert (ws / "population-one.jsonl").read_bytes() == \
            (ws / "population-two.jsonl").read_bytes()
        assert (ws / "sampled-one" / "dataset.jsonl").read_bytes() == \
            (ws / "sampled-two" / "dataset.jsonl").read_bytes()
        assert (ws / "population-one.jsonl.manifest.json").read_bytes() == \
            (ws / "population-two.jsonl.manifest.json").read_bytes()

    def test_evaluate_through_bridge_stub(self, workspace):
        ws = workspace
        run(["ingest", "--articles", ws / "articles.jsonl",
             "--triples", ws / "triples.jsonl", "--out", ws / "index"])
        run(["synthesize", "--config", ws / "config.toml",
             "--store", ws / "index", "--lexicon", ws / "lexicon.json",
             "--out", ws / "population.jsonl"])
        assert run(["evaluate", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--dataset", ws / "population.jsonl",
                    "--scorer", "bridge",
                    "--bridge-cmd", f"{STUB} hash",
                    "--out", ws / "bridge.json"]) == 0
        payload = json.loads((ws / "bridge.json").read_text())
        assert payload["coverage"] == 1.0


class TestMeshAndProbe:
    def test_mesh_then_probe(self, workspace, tmp_path):
        ws = workspace
        tsv = tmp_path / "pairs.tsv"
        rows = []
        for i in range(8):
            rows.append(f"a,p{i},b\ta,q{i},b\tTrue")
            rows.append(f"a,q{i},b\ta,p{i},b\tFalse")
        for i in range(4):
            rows.append(f"c,r{i},d\tc,s{i},d\tTrue")
            rows.append(f"c,s{i},d\tc,r{i},d\tTrue")
        tsv.write_text("\n".join(rows) + "\n", encoding="utf8")
        assert run(["mesh", "--dev", tsv, "--out-dir", ws / "mesh"]) == 0
        counts = json.loads((ws / "mesh" / "subgroup-counts.json").read_text())
        assert counts["dev"]["DirTrue"] == 8
        assert counts["dev"]["Paraphrases"] == 8
        subset = ws / "mesh" / "DirTrue-DirFalse.jsonl"
        assert subset.exists()

        assert run(["probe", "--subset", subset,
                    "--subsplit", "8", "4",
                    "--out-dir", ws / "probe"]) == 0
        train = (ws / "probe" / "honly-train.jsonl").read_text().splitlines()
        assert train
        for line in train:
            record = json.loads(line)
            assert record["premise"] == "true"

    def test_probe_dataset_mode_masks_arguments(self, workspace):
        ws = workspace
        run(["ingest", "--articles", ws / "articles.jsonl",
             "--triples", ws / "triples.jsonl", "--out", ws / "index"])
        run(["synthesize", "--config", ws / "config.toml",
             "--store", ws / "index", "--lexicon", ws / "lexicon.json",
             "--out", ws / "population.jsonl"])
        types = ws / "types.json"
        types.write_text(json.dumps({"john": "person", "ikea": "organization"}),
                         encoding="utf8")
        assert run(["probe", "--dataset", ws / "population.jsonl",
                    "--types", types, "--subsplit", "6", "3",
                    "--out-dir", ws / "probe"]) == 0
        lines = [
            json.loads(l)
            for l in (ws / "probe" / "honly-train.jsonl").read_text().splitlines()
        ] + [
            json.loads(l)
            for l in (ws / "probe" / "honly-dev2.jsonl").read_text().splitlines()
        ]
        assert lines
        assert all(l["premise"] == "true" for l in lines)
        assert not any("john" in l["hypothesis"] for l in lines)
        assert any("person" in l["hypothesis"] for l in lines)


class TestExitCodes:
    def test_usage_error_is_one(self):
        assert run(["evaluate", "--store", "x", "--dataset", "y",
                    "--out", "z", "--scorer", "eg"]) == 1  # missing graph dir

    def test_unknown_config_key_is_usage(self, workspace):
        bad = workspace / "bad.toml"
        bad.write_text("not_a_key = 1\n", encoding="utf8")
        assert run(["synthesize", "--config", bad, "--store", "s",
                    "--lexicon", "l", "--out", "o"]) == 1

    def test_input_format_error_is_two(self, workspace):
        ws = workspace
        broken = ws / "broken.jsonl"
        broken.write_text("{not json\n", encoding="utf8")
        assert run(["ingest", "--articles", broken,
                    "--triples", ws / "triples.jsonl",
                    "--out", ws / "index"]) == 2

    def test_missing_file_is_two(self, workspace):
        assert run(["ingest", "--articles", "nope.jsonl",
                    "--triples", "nope.jsonl", "--out", "x"]) == 2

    def test_scorer_failure_is_three(self, workspace):
        ws = workspace
        run(["ingest", "--articles", ws / "articles.jsonl",
             "--triples", ws / "triples.jsonl", "--out", ws / "index"])
        run(["synthesize", "--config", ws / "config.toml",
             "--store", ws / "index", "--lexicon", ws / "lexicon.json",
             "--out", ws / "population.jsonl"])
        assert run(["evaluate", "--config", ws / "config.toml",
                    "--store", ws / "index",
                    "--dataset", ws / "population.jsonl",
                    "--scorer", "bridge",
                    "--bridge-cmd", f"{STUB} error",
                    "--out", ws / "out.json"]) == 3
