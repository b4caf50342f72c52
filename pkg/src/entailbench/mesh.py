"""Converse-pair analysis toolkit for premise/hypothesis datasets:
sub-group classification, leak-free splits, pairwise subsets with the
same-label relabeling rule, prompt rendering, symmetric-prompt and
hypothesis-only transforms, argument-type masking, and dev
sub-splitting with overlap dedup.

Every entry is linked to its converse (premise and hypothesis swapped);
the pair of labels determines the sub-group:

* (1, 0) DirTrue: the premise entails the hypothesis, not vice versa;
* (0, 1) DirFalse: only the reverse direction holds;
* (1, 1) Paraphrases: both directions hold;
* (0, 0) Unrelated: neither does.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

from .synthesis import Proposition


class MeshError(ValueError):
    pass


class SubGroup(Enum):
    DIR_TRUE = "DirTrue"
    DIR_FALSE = "DirFalse"
    PARAPHRASES = "Paraphrases"
    UNRELATED = "Unrelated"


# Relabeling rank for same-label subsets: the more paraphrastic
# sub-group takes label 1. DirTrue and DirFalse share a rank but carry
# opposite original labels, so the rule never has to order them.
_PARAPHRASTICITY = {
    SubGroup.PARAPHRASES: 3,
    SubGroup.DIR_TRUE: 2,
    SubGroup.DIR_FALSE: 2,
    SubGroup.UNRELATED: 1,
}

_ORIGINAL_LABEL = {
    SubGroup.DIR_TRUE: 1,
    SubGroup.PARAPHRASES: 1,
    SubGroup.DIR_FALSE: 0,
    SubGroup.UNRELATED: 0,
}

HONLY_MASKS = {"en": "true", "zh": "正确"}

# Sub-splitting the dev set targets the train/dev sizes of the standard
# premise/hypothesis benchmark splits.
DEFAULT_SUBSPLIT_SIZES = (4372, 1114)


@dataclass(frozen=True)
class EntailmentPair:
    pair_id: str
    premise: str
    hypothesis: str
    label: int
    split: str
    converse_id: Optional[str] = None

    def swapped_key(self) -> tuple[str, str]:
        return (self.hypothesis.strip(), self.premise.strip())

    def key(self) -> tuple[str, str]:
        return (self.premise.strip(), self.hypothesis.strip())


@dataclass(frozen=True)
class PromptInstance:
    template_id: str
    text: str
    direction: str  # "forward" | "reversed"


def _parse_label(raw: str) -> int:
    value = raw.strip().casefold()
    if value in ("1", "true", "yes", "y"):
        return 1
    if value in ("0", "false", "no", "n"):
        return 0
    raise MeshError(f"unrecognized label: {raw!r}")


def read_pairs_tsv(path: str | Path, split: str) -> list[EntailmentPair]:
    """Read a premise/hypothesis TSV.

    Three columns are (premise, hypothesis, label); the four-column
    release variant is (hypothesis, premise, label, lang).
    """
    pairs = []
    with open(path, encoding="utf8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) == 3:
                premise, hypothesis, label = cols
            elif len(cols) == 4:
                hypothesis, premise, label, _lang = cols
            else:
                raise MeshError(
                    f"{path}:{line_no}: expected 3 or 4 columns, got {len(cols)}"
                )
            pairs.append(
                EntailmentPair(
                    pair_id=f"{split}-{line_no:06d}",
                    premise=premise.strip(),
                    hypothesis=hypothesis.strip(),
                    label=_parse_label(label),
                    split=split,
                )
            )
    return pairs


def link_converses(
    pairs: Sequence[EntailmentPair],
) -> tuple[list[EntailmentPair], list[EntailmentPair]]:
    """Attach converse ids by exact swapped-text match.

    Returns (linked pairs, unpaired diagnostic bucket). Entries without
    a converse are excluded from the mesh rather than guessed.
    """
    by_key: dict[tuple[str, str], list[EntailmentPair]] = {}
    for pair in pairs:
        by_key.setdefault(pair.key(), []).append(pair)
    linked, unpaired = [], []
    for pair in pairs:
        matches = by_key.get(pair.swapped_key(), [])
        partner = next((m for m in matches if m.pair_id != pair.pair_id), None)
        if partner is None:
            unpaired.append(pair)
        else:
            linked.append(replace(pair, converse_id=partner.pair_id))
    return linked, unpaired


def classify_subgroups(
    pairs: Sequence[EntailmentPair],
) -> dict[str, SubGroup]:
    """Map each converse-linked pair to its sub-group."""
    by_id = {p.pair_id: p for p in pairs}
    groups: dict[str, SubGroup] = {}
    for pair in pairs:
        if pair.converse_id is None or pair.converse_id not in by_id:
            raise MeshError(f"pair {pair.pair_id!r} has no linked converse")
        converse = by_id[pair.converse_id]
        groups[pair.pair_id] = {
            (1, 0): SubGroup.DIR_TRUE,
            (0, 1): SubGroup.DIR_FALSE,
            (1, 1): SubGroup.PARAPHRASES,
            (0, 0): SubGroup.UNRELATED,
        }[(pair.label, converse.label)]
    return groups


def subgroup_counts(
    pairs: Sequence[EntailmentPair], groups: dict[str, SubGroup]
) -> dict[str, dict[str, int]]:
    counts: dict[str, dict[str, int]] = {}
    for pair in pairs:
        split = counts.setdefault(pair.split, {g.value: 0 for g in SubGroup})
        split[groups[pair.pair_id].value] += 1
    return counts


def fix_split_leakage(
    pairs: Sequence[EntailmentPair], seed: int
) -> list[EntailmentPair]:
    """Co-locate every converse pair in one split, chosen seeded-uniform
    between the two original splits."""
    by_id = {p.pair_id: p for p in pairs}
    assigned: dict[str, str] = {}
    for pair in pairs:
        if pair.pair_id in assigned:
            continue
        converse = by_id.get(pair.converse_id) if pair.converse_id else None
        if converse is None:
            assigned[pair.pair_id] = pair.split
            continue
        if pair.split == converse.split:
            assigned[pair.pair_id] = pair.split
            assigned[converse.pair_id] = pair.split
            continue
        couple_key = "|".join(sorted((pair.pair_id, converse.pair_id)))
        rng = random.Random(f"{seed}:{couple_key}")
        target = rng.choice(sorted((pair.split, converse.split)))
        assigned[pair.pair_id] = target
        assigned[converse.pair_id] = target
    return [replace(p, split=assigned[p.pair_id]) for p in pairs]


@dataclass(frozen=True)
class SubsetEntry:
    pair_id: str
    premise: str
    hypothesis: str
    label: int
    subgroup: str
    split: str

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "label": self.label,
            "subgroup": self.subgroup,
            "split": self.split,
        }


def build_subset(
    group_a: SubGroup,
    group_b: SubGroup,
    pairs: Sequence[EntailmentPair],
    groups: dict[str, SubGroup],
) -> list[SubsetEntry]:
    """Two-sub-group classification dataset.

    Opposite-label pairings keep the original labels; same-label
    pairings relabel by paraphrasticity (the more paraphrastic group
    gets 1).
    """
    if group_a == group_b:
        raise MeshError("subset needs two distinct sub-groups")
    label_a = _ORIGINAL_LABEL[group_a]
    label_b = _ORIGINAL_LABEL[group_b]
    if label_a != label_b:
        relabel = {group_a: label_a, group_b: label_b}
    else:
        rank_a = _PARAPHRASTICITY[group_a]
        rank_b = _PARAPHRASTICITY[group_b]
        assert rank_a != rank_b, "equal-rank same-label pairing is unreachable"
        relabel = {
            group_a: 1 if rank_a > rank_b else 0,
            group_b: 1 if rank_b > rank_a else 0,
        }
    out = []
    for pair in pairs:
        group = groups.get(pair.pair_id)
        if group not in (group_a, group_b):
            continue
        out.append(
            SubsetEntry(
                pair_id=pair.pair_id,
                premise=pair.premise,
                hypothesis=pair.hypothesis,
                label=relabel[group],
                subgroup=group.value,
                split=pair.split,
            )
        )
    return out


def all_subsets(
    pairs: Sequence[EntailmentPair], groups: dict[str, SubGroup]
) -> dict[str, list[SubsetEntry]]:
    """The six pairwise subsets of the sub-group mesh."""
    order = [
        SubGroup.DIR_TRUE,
        SubGroup.DIR_FALSE,
        SubGroup.PARAPHRASES,
        SubGroup.UNRELATED,
    ]
    out = {}
    for i, a in enumerate(order):
        for b in order[i + 1 :]:
            out[f"{a.value}-{b.value}"] = build_subset(a, b, pairs, groups)
    return out


def emit_subsets(
    directory: str | Path,
    pairs: Sequence[EntailmentPair],
    groups: dict[str, SubGroup],
) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, entries in sorted(all_subsets(pairs, groups).items()):
        path = directory / f"{name}.jsonl"
        with open(path, "w", encoding="utf8") as fh:
            for entry in entries:
                fh.write(
                    json.dumps(entry.to_record(), sort_keys=True, ensure_ascii=False)
                    + "\n"
                )
        written.append(path)
    return written


# -- prompt rendering and probes -----------------------------------------


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    text: str  # with {premise} and {hypothesis} slots

    def render(self, premise: str, hypothesis: str) -> str:
        return self.text.format(premise=premise, hypothesis=hypothesis)


DEFAULT_TEMPLATES = (
    PromptTemplate("means", "{premise}, which means that {hypothesis}"),
)


def load_templates(path: str | Path) -> tuple[PromptTemplate, ...]:
    data = json.loads(Path(path).read_text(encoding="utf8"))
    templates = tuple(
        PromptTemplate(str(t["id"]), str(t["text"]))
        for t in data.get("templates", [])
    )
    if not templates:
        raise MeshError(f"no templates in {path}")
    return templates


def render_prompts(
    pair: EntailmentPair,
    templates: Sequence[PromptTemplate] = DEFAULT_TEMPLATES,
    symmetric: bool = False,
) -> list[PromptInstance]:
    """Forward instances per template; with ``symmetric`` every template
    also yields its premise/hypothesis-swapped reverse, exactly doubling
    the count so no directional signal survives in the input."""
    if not templates:
        raise MeshError("template list must be non-empty")
    instances = []
    for template in templates:
        instances.append(
            PromptInstance(
                template_id=template.template_id,
                text=template.render(pair.premise, pair.hypothesis),
                direction="forward",
            )
        )
        if symmetric:
            instances.append(
                PromptInstance(
                    template_id=template.template_id,
                    text=template.render(pair.hypothesis, pair.premise),
                    direction="reversed",
                )
            )
    return instances


def honly_transform(
    pair: EntailmentPair, language: str = "en"
) -> EntailmentPair:
    """Mask the premise with a constant truth token; the hypothesis is
    never altered. Idempotent."""
    mask = HONLY_MASKS.get(language)
    if mask is None:
        raise MeshError(f"no hypothesis-only mask for language {language!r}")
    return replace(pair, premise=mask)


TypeAssigner = Callable[[str], Optional[str]]


@dataclass
class StaticTypeAssigner:
    """Gazetteer-backed entity typing for fixtures and offline runs."""

    mapping: dict[str, str]
    default: Optional[str] = None

    def __call__(self, argument: str) -> Optional[str]:
        return self.mapping.get(argument.strip().casefold(), self.default)


def mask_arguments(
    proposition: Proposition,
    type_assigner: TypeAssigner,
    diagnostics: Optional[list[str]] = None,
) -> Proposition:
    """Replace subject/object with their entity types; the predicate is
    untouched. Assigner misses fall back to the label "entity"."""

    def assign(argument: str) -> str:
        try:
            label = type_assigner(argument)
        except Exception as exc:
            label = None
            if diagnostics is not None:
                diagnostics.append(f"type assigner failed on {argument!r}: {exc}")
        if label is None:
            if diagnostics is not None:
                diagnostics.append(f"no type for {argument!r}; using 'entity'")
            return "entity"
        return str(label)

    return replace(
        proposition,
        subject=assign(proposition.subject),
        object=assign(proposition.object),
    )


def subsplit_dev(
    dev_pairs: Sequence[EntailmentPair],
    target_sizes: tuple[int, int] = DEFAULT_SUBSPLIT_SIZES,
    seed: int = 0,
    diagnostics: Optional[list[str]] = None,
) -> tuple[list[EntailmentPair], list[EntailmentPair]]:
    """Split a dev set into (train, dev2) of the target sizes.

    Entries sharing an identical hypothesis, regardless of label, are
    kept on one side only. Infeasible targets degrade to best effort
    with a diagnostic.
    """
    if not dev_pairs:
        raise MeshError("dev set must be non-empty")
    train_target, dev2_target = target_sizes
    groups: dict[str, list[EntailmentPair]] = {}
    for pair in dev_pairs:
        groups.setdefault(pair.hypothesis.strip(), []).append(pair)
    keys = sorted(groups)
    random.Random(f"{seed}:subsplit").shuffle(keys)
    train: list[EntailmentPair] = []
    dev2: list[EntailmentPair] = []
    for key in keys:
        bucket = groups[key]
        if len(train) < train_target:
            train.extend(bucket)
        elif len(dev2) < dev2_target:
            dev2.extend(bucket)
        # else: dropped; both sides full
    if diagnostics is not None and (
        len(train) != train_target or len(dev2) != dev2_target
    ):
        diagnostics.append(
            f"subsplit best effort: train {len(train)}/{train_target}, "
            f"dev2 {len(dev2)}/{dev2_target}"
        )
    train = [replace(p, split="train") for p in train]
    dev2 = [replace(p, split="dev2") for p in dev2]
    return train, dev2
