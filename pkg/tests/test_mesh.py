"""Sub-group classification, split repair, subset labeling, prompts,
hypothesis-only transform, masking, and dev sub-splitting."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from entailbench.mesh import (
    DEFAULT_TEMPLATES,
    EntailmentPair,
    MeshError,
    PromptTemplate,
    StaticTypeAssigner,
    SubGroup,
    all_subsets,
    build_subset,
    classify_subgroups,
    emit_subsets,
    fix_split_leakage,
    honly_transform,
    link_converses,
    mask_arguments,
    read_pairs_tsv,
    render_prompts,
    subgroup_counts,
    subsplit_dev,
)
from entailbench.synthesis import POSITIVE, Proposition


def pair(pid, premise, hypothesis, label, split="train", converse=None):
    return EntailmentPair(
        pair_id=pid, premise=premise, hypothesis=hypothesis,
        label=label, split=split, converse_id=converse,
    )


def converse_fixture():
    """One couple per sub-group, hand-labeled."""
    raw = [
        # DirTrue / DirFalse couple
        pair("p1", "x,shop in,y", "x,go to,y", 1),
        pair("p2", "x,go to,y", "x,shop in,y", 0),
        # Paraphrases couple
        pair("p3", "x,arrive at,y", "x,get to,y", 1),
        pair("p4", "x,get to,y", "x,arrive at,y", 1),
        # Unrelated couple
        pair("p5", "x,shop in,y", "x,fall ill in,y", 0),
        pair("p6", "x,fall ill in,y", "x,shop in,y", 0),
    ]
    linked, unpaired = link_converses(raw)
    assert unpaired == []
    return linked


HAND_LABELS = {
    "p1": SubGroup.DIR_TRUE,
    "p2": SubGroup.DIR_FALSE,
    "p3": SubGroup.PARAPHRASES,
    "p4": SubGroup.PARAPHRASES,
    "p5": SubGroup.UNRELATED,
    "p6": SubGroup.UNRELATED,
}


class TestClassification:
    def test_hand_labels(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        assert groups == HAND_LABELS

    def test_all_label_combinations_covered(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        assert set(groups.values()) == set(SubGroup)

    def test_partition_and_dir_balance(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        counts = subgroup_counts(linked, groups)["train"]
        assert counts["DirTrue"] == counts["DirFalse"]
        assert sum(counts.values()) == len(linked)

    def test_unpaired_routed_to_diagnostics(self):
        raw = [
            pair("p1", "a,p,b", "a,q,b", 1),
            pair("p2", "a,q,b", "a,p,b", 0),
            pair("p3", "a,r,b", "a,s,b", 1),  # no converse
        ]
        linked, unpaired = link_converses(raw)
        assert [p.pair_id for p in unpaired] == ["p3"]
        groups = classify_subgroups(linked)
        assert set(groups) == {"p1", "p2"}

    def test_missing_converse_is_error_in_classify(self):
        with pytest.raises(MeshError, match="converse"):
            classify_subgroups([pair("p1", "a,p,b", "a,q,b", 1)])


class TestSplitLeakage:
    def test_straddling_couple_co_located(self):
        raw = [
            pair("p1", "a,p,b", "a,q,b", 1, split="train"),
            pair("p2", "a,q,b", "a,p,b", 0, split="dev"),
        ]
        linked, _ = link_converses(raw)
        fixed = fix_split_leakage(linked, seed=5)
        splits = {p.split for p in fixed}
        assert len(splits) == 1
        assert splits <= {"train", "dev"}

    def test_co_located_unchanged(self):
        raw = [
            pair("p1", "a,p,b", "a,q,b", 1, split="test"),
            pair("p2", "a,q,b", "a,p,b", 0, split="test"),
        ]
        linked, _ = link_converses(raw)
        fixed = fix_split_leakage(linked, seed=5)
        assert all(p.split == "test" for p in fixed)

    def test_deterministic_under_seed(self):
        raw = [
            pair(f"p{i}", f"a,p{i},b", f"a,q{i},b", 1,
                 split="train" if i % 2 else "dev")
            for i in range(10)
        ] + [
            pair(f"c{i}", f"a,q{i},b", f"a,p{i},b", 0,
                 split="dev" if i % 2 else "train")
            for i in range(10)
        ]
        linked, _ = link_converses(raw)
        one = [p.split for p in fix_split_leakage(linked, seed=9)]
        two = [p.split for p in fix_split_leakage(linked, seed=9)]
        assert one == two
        leaky = {
            p.pair_id: p.split for p in fix_split_leakage(linked, seed=9)
        }
        by_id = {p.pair_id: p for p in linked}
        for p in linked:
            assert leaky[p.pair_id] == leaky[by_id[p.converse_id].pair_id]


class TestSubsets:
    def test_directional_subset_keeps_labels(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        entries = build_subset(SubGroup.DIR_TRUE, SubGroup.DIR_FALSE,
                               linked, groups)
        got = {(e.pair_id, e.label) for e in entries}
        assert got == {("p1", 1), ("p2", 0)}

    def test_symmetric_subset_keeps_labels(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        entries = build_subset(SubGroup.PARAPHRASES, SubGroup.UNRELATED,
                               linked, groups)
        got = {(e.pair_id, e.label) for e in entries}
        assert got == {("p3", 1), ("p4", 1), ("p5", 0), ("p6", 0)}

    def test_same_label_relabeling_para_dirtrue(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        entries = build_subset(SubGroup.PARAPHRASES, SubGroup.DIR_TRUE,
                               linked, groups)
        labels = {e.pair_id: e.label for e in entries}
        assert labels == {"p3": 1, "p4": 1, "p1": 0}

    def test_same_label_relabeling_dirfalse_unrelated(self):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        entries = build_subset(SubGroup.DIR_FALSE, SubGroup.UNRELATED,
                               linked, groups)
        labels = {e.pair_id: e.label for e in entries}
        # DirFalse is semi-paraphrastic: it takes label 1 here.
        assert labels == {"p2": 1, "p5": 0, "p6": 0}

    def test_six_subsets_emitted(self, tmp_path):
        linked = converse_fixture()
        groups = classify_subgroups(linked)
        assert len(all_subsets(linked, groups)) == 6
        written = emit_subsets(tmp_path, linked, groups)
        names = {p.name for p in written}
        assert "DirTrue-DirFalse.jsonl" in names
        assert "Paraphrases-Unrelated.jsonl" in names
        assert len(names) == 6


class TestPrompts:
    def test_single_template_forward_only(self):
        p = pair("p1", "John shopped in IKEA", "John went to IKEA", 1)
        instances = render_prompts(p, DEFAULT_TEMPLATES, symmetric=False)
        assert len(instances) == 1
        assert instances[0].text == (
            "John shopped in IKEA, which means that John went to IKEA"
        )
        assert instances[0].direction == "forward"

    def test_symmetric_doubles_count(self):
        p = pair("p1", "a", "b", 1)
        templates = tuple(
            PromptTemplate(f"t{i}", "{premise} => {hypothesis} #" + str(i))
            for i in range(5)
        )
        instances = render_prompts(p, templates, symmetric=True)
        assert len(instances) == 10
        forwards = [i for i in instances if i.direction == "forward"]
        reversed_ = [i for i in instances if i.direction == "reversed"]
        assert len(forwards) == len(reversed_) == 5
        # Every forward instance has its exact reversed counterpart.
        for f in forwards:
            template = next(t for t in templates if t.template_id == f.template_id)
            mirror = template.render(p.hypothesis, p.premise)
            assert any(
                r.template_id == f.template_id and r.text == mirror
                for r in reversed_
            )

    def test_empty_templates_rejected(self):
        with pytest.raises(MeshError):
            render_prompts(pair("p1", "a", "b", 1), (), symmetric=False)


class TestHonly:
    def test_premise_masked_hypothesis_untouched(self):
        p = pair("p1", "John shopped in IKEA", "John went to IKEA", 1)
        out = honly_transform(p)
        assert out.premise == "true"
        assert out.hypothesis == p.hypothesis

    def test_idempotent(self):
        p = pair("p1", "a", "b", 0)
        once = honly_transform(p)
        twice = honly_transform(once)
        assert once == twice

    def test_chinese_mask(self):
        p = pair("p1", "a", "b", 1)
        assert honly_transform(p, language="zh").premise == "正确"

    def test_unknown_language_rejected(self):
        with pytest.raises(MeshError):
            honly_transform(pair("p1", "a", "b", 1), language="xx")


class TestMaskArguments:
    def _prop(self, subject, obj):
        return Proposition(
            prop_id="pos-m", subject=subject, object=obj,
            predicate=("says", "in"), window_id="2016-01-01",
            label=POSITIVE, bundle_id=None,
            source_sentences=frozenset({("a", "s")}),
            parent_positive_id=None, predicate_frequency=5,
        )

    def test_gazetteer_masking(self):
        assigner = StaticTypeAssigner(
            {"mark zuckerburg": "person", "facebook": "organization"}
        )
        got = mask_arguments(self._prop("Mark Zuckerburg", "Facebook"), assigner)
        assert (got.subject, got.object) == ("person", "organization")
        assert got.predicate == ("says", "in")

    def test_fallback_entity_with_diagnostic(self):
        diags = []
        got = mask_arguments(self._prop("nobody", "nothing"),
                             StaticTypeAssigner({}), diags)
        assert (got.subject, got.object) == ("entity", "entity")
        assert len(diags) == 2

    def test_idempotent_under_identity_assigner(self):
        assigner = StaticTypeAssigner({"person": "person", "organization": "organization"})
        first = mask_arguments(self._prop("person", "organization"), assigner)
        second = mask_arguments(first, assigner)
        assert first == second

    def test_assigner_exception_falls_back(self):
        def broken(argument):
            raise RuntimeError("offline")

        diags = []
        got = mask_arguments(self._prop("a", "b"), broken, diags)
        assert got.subject == "entity" and got.object == "entity"
        assert any("failed" in d for d in diags)


class TestSubsplit:
    def test_overlapping_hypotheses_co_located(self):
        pairs = [
            pair("p1", "a,p,b", "x,h,y", 1, split="dev"),
            pair("p2", "c,q,d", "x,h,y", 0, split="dev"),  # same hypothesis
            pair("p3", "e,r,f", "u,h2,v", 1, split="dev"),
            pair("p4", "g,s,h", "w,h3,z", 0, split="dev"),
        ]
        train, dev2 = subsplit_dev(pairs, target_sizes=(2, 2), seed=1)
        train_hyps = {p.hypothesis for p in train}
        dev2_hyps = {p.hypothesis for p in dev2}
        assert not (train_hyps & dev2_hyps)
        where = [bool([p for p in train if p.hypothesis == "x,h,y"]),
                 bool([p for p in dev2 if p.hypothesis == "x,h,y"])]
        assert where.count(True) == 1

    def test_exact_sizes_without_duplicates(self):
        pairs = [
            pair(f"p{i}", f"a,p{i},b", f"x,h{i},y", i % 2, split="dev")
            for i in range(10)
        ]
        train, dev2 = subsplit_dev(pairs, target_sizes=(6, 4), seed=3)
        assert len(train) == 6 and len(dev2) == 4

    def test_deterministic(self):
        pairs = [
            pair(f"p{i}", f"a,p{i},b", f"x,h{i},y", i % 2, split="dev")
            for i in range(20)
        ]
        a = subsplit_dev(pairs, target_sizes=(12, 8), seed=7)
        b = subsplit_dev(pairs, target_sizes=(12, 8), seed=7)
        assert [p.pair_id for p in a[0]] == [p.pair_id for p in b[0]]
        assert [p.pair_id for p in a[1]] == [p.pair_id for p in b[1]]

    def test_infeasible_targets_best_effort(self):
        pairs = [pair("p1", "a,p,b", "x,h,y", 1, split="dev")]
        diags = []
        train, dev2 = subsplit_dev(pairs, target_sizes=(5, 5), seed=1,
                                   diagnostics=diags)
        assert len(train) + len(dev2) == 1
        assert diags


class TestTsvReader:
    def test_three_column_format(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text(
            "x,shop in,y\tx,go to,y\tTrue\n"
            "x,go to,y\tx,shop in,y\tFalse\n",
            encoding="utf8",
        )
        pairs = read_pairs_tsv(path, "train")
        assert pairs[0].premise == "x,shop in,y"
        assert pairs[0].label == 1 and pairs[1].label == 0

    def test_four_column_release_format(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        # hypothesis, premise, label, lang
        path.write_text("x,go to,y\tx,shop in,y\tTrue\ten\n", encoding="utf8")
        (p,) = read_pairs_tsv(path, "dev")
        assert p.premise == "x,shop in,y"
        assert p.hypothesis == "x,go to,y"

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\tmaybe\n", encoding="utf8")
        with pytest.raises(MeshError, match="label"):
            read_pairs_tsv(path, "train")


LEVYHOLT_DIR = os.environ.get("LEVYHOLT_DIR")

# Published per-split sub-group sizes of the converse-paired benchmark.
LEVYHOLT_EXPECTED = {
    "train": {"DirTrue": 251, "DirFalse": 251, "Paraphrases": 615,
              "Unrelated": 3255},
    "dev": {"DirTrue": 64, "DirFalse": 64, "Paraphrases": 155,
            "Unrelated": 831},
    "test": {"DirTrue": 892, "DirFalse": 892, "Paraphrases": 1939,
             "Unrelated": 9198},
}


@pytest.mark.skipif(
    not LEVYHOLT_DIR,
    reason="set LEVYHOLT_DIR to the released train/dev/test TSVs",
)
def test_levyholt_release_subgroup_counts():
    pairs = []
    for split in ("train", "dev", "test"):
        path = Path(LEVYHOLT_DIR) / f"{split}.tsv"
        pairs.extend(read_pairs_tsv(path, split))
    linked, _ = link_converses(pairs)
    groups = classify_subgroups(linked)
    counts = subgroup_counts(linked, groups)
    for split, expected in LEVYHOLT_EXPECTED.items():
        for name, value in expected.items():
            assert counts[split][name] == value, (split, name)
