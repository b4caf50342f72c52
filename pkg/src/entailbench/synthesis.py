"""Benchmark construction: starring-pair selection, positive selection,
hyponym-substitution negatives with felicitousness and context-absence
filters, bundle formation, and bucket-matched sampling.

Positives are propositions whose predicate clears a corpus-wide
distinct-argument-pair threshold and whose argument pair is heavily
discussed inside a context window. Negatives replace a predicate span
with a hyponym and must themselves be felicitous while being absent
(together with their synonyms) from the window with the same arguments.
Sampling is bundle-atomic, window-proportional over positives, and
matches the negative predicate-frequency histogram to the positive
population's.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import random
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .corpus import CorpusStore, window_start_date
from .lexicon import Lexicon
from .text import join_tokens, norm_tokens, unordered_pair_key

# Frequency bucket boundaries for histogram matching of sampled negatives.
DEFAULT_BUCKET_BOUNDARIES: tuple[int, ...] = (
    60, 100, 300, 500, 700, 1000, 1500, 2000, 2500, 3000, 4000, 5000,
    6000, 8000, 10000, 15000, 20000, 30000, 50000, 100000,
)

DEFAULT_MIN_ARTICLES = 15
DEFAULT_MIN_PREDICATES = 15
DEFAULT_MIN_ARGPAIRS = 30
MAX_NEGATIVES_PER_POSITIVE = 2

POSITIVE = "positive"
NEGATIVE = "negative"


class SynthesisError(ValueError):
    pass


def _digest(*parts: str) -> str:
    return hashlib.sha1("|".join(parts).encode("utf8")).hexdigest()[:12]


@dataclass(frozen=True)
class Proposition:
    prop_id: str
    subject: str
    object: str
    predicate: tuple[str, ...]
    window_id: str
    label: str
    bundle_id: Optional[str]
    source_sentences: frozenset[tuple[str, str]]
    parent_positive_id: Optional[str]
    predicate_frequency: int
    # Generation bookkeeping for negatives (which span was replaced and
    # with which lemma); not part of the dataset wire format.
    replaced_span: Optional[tuple[int, int]] = None
    replacement_lemma: Optional[str] = None

    def __post_init__(self) -> None:
        if self.label == NEGATIVE and self.parent_positive_id is None:
            raise SynthesisError("negative proposition needs a parent positive")
        if self.label == POSITIVE and not self.source_sentences:
            raise SynthesisError("positive proposition needs source sentences")

    @property
    def text(self) -> str:
        return f"{self.subject} {join_tokens(self.predicate)} {self.object}"

    def to_record(self) -> dict:
        return {
            "bundle_id": self.bundle_id,
            "label": self.label,
            "subject": self.subject,
            "object": self.object,
            "predicate": list(self.predicate),
            "window_id": self.window_id,
            "parent_positive_id": self.parent_positive_id,
            "source_sentences": sorted(
                [a, s] for a, s in self.source_sentences
            ),
            "predicate_frequency": self.predicate_frequency,
        }


def proposition_from_record(record: dict) -> Proposition:
    label = record["label"]
    predicate = tuple(record["predicate"])
    prop_id = _prop_id(
        label, record["window_id"], record["subject"], record["object"], predicate
    )
    return Proposition(
        prop_id=prop_id,
        subject=record["subject"],
        object=record["object"],
        predicate=predicate,
        window_id=record["window_id"],
        label=label,
        bundle_id=record.get("bundle_id"),
        source_sentences=frozenset(
            (a, s) for a, s in record.get("source_sentences", [])
        ),
        parent_positive_id=record.get("parent_positive_id"),
        predicate_frequency=int(record.get("predicate_frequency", 0)),
    )


def _prop_id(
    label: str, window_id: str, subject: str, obj: str, predicate: Sequence[str]
) -> str:
    prefix = "pos" if label == POSITIVE else "neg"
    return f"{prefix}-{_digest(window_id, subject, obj, join_tokens(predicate))}"


@dataclass(frozen=True)
class Bundle:
    bundle_id: str
    positive: Proposition
    negatives: tuple[Proposition, ...]

    def __post_init__(self) -> None:
        if len(self.negatives) > MAX_NEGATIVES_PER_POSITIVE:
            raise SynthesisError("a bundle holds at most two negatives")
        for neg in self.negatives:
            if neg.parent_positive_id != self.positive.prop_id:
                raise SynthesisError("bundle negative from a different positive")
            if (neg.subject, neg.object, neg.window_id) != (
                self.positive.subject,
                self.positive.object,
                self.positive.window_id,
            ):
                raise SynthesisError("bundle members must share pair and window")
        predicates = {self.positive.predicate} | {
            n.predicate for n in self.negatives
        }
        if len(predicates) != 1 + len(self.negatives):
            raise SynthesisError("bundle members must have distinct predicates")

    def members(self) -> tuple[Proposition, ...]:
        return (self.positive, *self.negatives)


class FrequencyBuckets:
    """Ascending integer boundaries; the top bucket is open-ended."""

    def __init__(self, boundaries: Sequence[int] = DEFAULT_BUCKET_BOUNDARIES):
        boundaries = tuple(int(b) for b in boundaries)
        if any(b2 <= b1 for b1, b2 in zip(boundaries, boundaries[1:])):
            raise SynthesisError("bucket boundaries must be strictly ascending")
        self.boundaries = boundaries

    @property
    def n_buckets(self) -> int:
        return len(self.boundaries) + 1

    def bucket_of(self, frequency: int) -> int:
        return bisect_right(self.boundaries, frequency)

    def histogram(self, frequencies: Iterable[int]) -> dict[int, int]:
        hist: dict[int, int] = {}
        for f in frequencies:
            b = self.bucket_of(f)
            hist[b] = hist.get(b, 0) + 1
        return hist

    def ratios(self, frequencies: Iterable[int]) -> dict[int, float]:
        hist = self.histogram(frequencies)
        total = sum(hist.values())
        if total == 0:
            return {}
        return {b: c / total for b, c in hist.items()}


# -- population construction -------------------------------------------


def select_starring_pairs(
    store: CorpusStore,
    window_id: str,
    min_articles: int = DEFAULT_MIN_ARTICLES,
    min_predicates: int = DEFAULT_MIN_PREDICATES,
) -> list[tuple[str, str]]:
    """Unordered argument pairs thoroughly discussed inside the window:
    mentioned in enough distinct articles with enough distinct predicates."""
    if min_articles < 1 or min_predicates < 1:
        raise SynthesisError("starring thresholds must be >= 1")
    window = store.window(window_id)
    articles: dict[tuple[str, str], set[str]] = {}
    predicates: dict[tuple[str, str], set[tuple[str, ...]]] = {}
    for triples in window.argpair_index.values():
        for t in triples:
            upair = unordered_pair_key(t.subject, t.object)
            articles.setdefault(upair, set()).add(t.article_id)
            predicates.setdefault(upair, set()).add(t.predicate)
    return sorted(
        pair
        for pair in articles
        if len(articles[pair]) >= min_articles
        and len(predicates[pair]) >= min_predicates
    )


def select_positives(
    store: CorpusStore,
    window_id: str,
    starring_pairs: Sequence[tuple[str, str]],
    min_argpairs: int = DEFAULT_MIN_ARGPAIRS,
) -> list[Proposition]:
    """One positive per oriented (pair, predicate) with a felicitous
    predicate; source sentences collect every window mention."""
    window = store.window(window_id)
    starring = {unordered_pair_key(*p) for p in starring_pairs}
    grouped: dict[tuple[str, str, tuple[str, ...]], set[tuple[str, str]]] = {}
    for (subj, obj), triples in window.argpair_index.items():
        if unordered_pair_key(subj, obj) not in starring:
            continue
        for t in triples:
            grouped.setdefault((subj, obj, t.predicate), set()).add(
                (t.article_id, t.sentence_id)
            )
    positives = []
    for (subj, obj, predicate), sources in sorted(grouped.items()):
        frequency = store.predicate_argpair_count(predicate)
        if frequency < min_argpairs:
            continue
        positives.append(
            Proposition(
                prop_id=_prop_id(POSITIVE, window_id, subj, obj, predicate),
                subject=subj,
                object=obj,
                predicate=predicate,
                window_id=window_id,
                label=POSITIVE,
                bundle_id=None,
                source_sentences=frozenset(sources),
                parent_positive_id=None,
                predicate_frequency=frequency,
            )
        )
    return positives


def _replace_span(
    predicate: Sequence[str], span: tuple[int, int], replacement: str
) -> tuple[str, ...]:
    start, end = span
    return norm_tokens(
        tuple(predicate[:start]) + tuple(replacement.split(" ")) + tuple(predicate[end:])
    )


def generate_negative_candidates(
    positive: Proposition,
    lexicon: Lexicon,
    synset_strategy: str = "first",
    context_sentence: Optional[str] = None,
    hyponym_transitive: bool = False,
) -> list[Proposition]:
    """Candidate negatives: every span of the positive predicate that
    matches a lexicon entry is replaced by each hyponym of the selected
    synset. Candidates are deduplicated by resulting predicate, and a
    candidate equal to the positive's own predicate is dropped."""
    if not positive.predicate:
        raise SynthesisError("positive has an empty predicate")
    seen: set[tuple[str, ...]] = {positive.predicate}
    candidates = []
    for match in lexicon.match_spans(positive.predicate):
        synset = lexicon.select_synset(match, context_sentence, synset_strategy)
        for lemma in lexicon.hyponyms(synset, transitive=hyponym_transitive):
            predicate = _replace_span(positive.predicate, match.span, lemma)
            if not predicate or predicate in seen:
                continue
            seen.add(predicate)
            candidates.append(
                Proposition(
                    prop_id=_prop_id(
                        NEGATIVE, positive.window_id, positive.subject,
                        positive.object, predicate,
                    ),
                    subject=positive.subject,
                    object=positive.object,
                    predicate=predicate,
                    window_id=positive.window_id,
                    label=NEGATIVE,
                    bundle_id=None,
                    source_sentences=positive.source_sentences,
                    parent_positive_id=positive.prop_id,
                    predicate_frequency=0,
                    replaced_span=match.span,
                    replacement_lemma=lemma,
                )
            )
    return candidates


def synonym_closed_predicates(
    candidate: Proposition, lexicon: Lexicon
) -> set[tuple[str, ...]]:
    """The candidate predicate plus every variant obtained by swapping
    the replaced span for a synonym of the replacement lemma."""
    out = {candidate.predicate}
    if candidate.replacement_lemma is not None and candidate.replaced_span is not None:
        # The span in the parent predicate was replaced by the lemma; a
        # synonym swap acts on the candidate's own span of lemma length.
        start = candidate.replaced_span[0]
        lemma_len = len(candidate.replacement_lemma.split(" "))
        span = (start, start + lemma_len)
        for syn in lexicon.synonyms(candidate.replacement_lemma):
            out.add(_replace_span(candidate.predicate, span, syn))
    return out


def filter_negatives(
    store: CorpusStore,
    lexicon: Lexicon,
    candidates: Sequence[Proposition],
    min_argpairs: int = DEFAULT_MIN_ARGPAIRS,
    known_positive_keys: Optional[set[tuple[str, str, tuple[str, ...]]]] = None,
) -> list[Proposition]:
    """Keep candidates that are felicitous (same threshold as positives)
    and absent, together with all their synonyms, from the window with
    the candidate's argument pair.

    ``known_positive_keys`` holds (subject, object, predicate) keys of
    the window's positives: a candidate colliding with a positive of its
    own pair is rejected explicitly (the absence filter subsumes this,
    since that positive is in-window by construction).
    """
    survivors = []
    for cand in candidates:
        frequency = store.predicate_argpair_count(cand.predicate)
        if frequency < min_argpairs:
            continue
        if known_positive_keys and (
            cand.subject, cand.object, cand.predicate
        ) in known_positive_keys:
            continue
        probe = synonym_closed_predicates(cand, lexicon)
        if store.window_presence(
            probe, (cand.subject, cand.object), cand.window_id
        ):
            continue
        survivors.append(replace(cand, predicate_frequency=frequency))
    return survivors


def make_bundles(
    positives: Sequence[Proposition],
    negatives: Sequence[Proposition],
    seed: int,
    max_negatives: int = MAX_NEGATIVES_PER_POSITIVE,
) -> list[Bundle]:
    """Pair each positive with up to ``max_negatives`` seeded-random
    surviving negatives; positives with no survivors produce no bundle."""
    by_parent: dict[str, list[Proposition]] = {}
    for neg in negatives:
        by_parent.setdefault(neg.parent_positive_id, []).append(neg)
    bundles = []
    for pos in sorted(positives, key=lambda p: p.prop_id):
        pool = sorted(by_parent.get(pos.prop_id, []), key=lambda p: p.prop_id)
        if not pool:
            continue
        # Per-positive stream keeps the draw independent of sibling order.
        rng = random.Random(f"{seed}:{pos.prop_id}")
        chosen = (
            pool if len(pool) <= max_negatives else rng.sample(pool, max_negatives)
        )
        chosen = sorted(chosen, key=lambda p: p.prop_id)
        bundle_id = f"b-{pos.prop_id}"
        bundles.append(
            Bundle(
                bundle_id=bundle_id,
                positive=replace(pos, bundle_id=bundle_id),
                negatives=tuple(replace(n, bundle_id=bundle_id) for n in chosen),
            )
        )
    return bundles


def build_population(
    store: CorpusStore,
    lexicon: Lexicon,
    min_articles: int = DEFAULT_MIN_ARTICLES,
    min_predicates: int = DEFAULT_MIN_PREDICATES,
    min_argpairs: int = DEFAULT_MIN_ARGPAIRS,
    synset_strategy: str = "first",
    hyponym_transitive: bool = False,
    seed: int = 0,
) -> list[Bundle]:
    """Run the full construction over every window of the store."""
    bundles: list[Bundle] = []
    for window_id in sorted(store.windows):
        pairs = select_starring_pairs(store, window_id, min_articles, min_predicates)
        if not pairs:
            continue
        positives = select_positives(store, window_id, pairs, min_argpairs)
        positive_keys = {(p.subject, p.object, p.predicate) for p in positives}
        survivors: list[Proposition] = []
        for pos in positives:
            candidates = generate_negative_candidates(
                pos, lexicon, synset_strategy,
                hyponym_transitive=hyponym_transitive,
            )
            survivors.extend(
                filter_negatives(
                    store, lexicon, candidates, min_argpairs,
                    known_positive_keys=positive_keys,
                )
            )
        bundles.extend(make_bundles(positives, survivors, seed))
    return bundles


# -- sampling ------------------------------------------------------------


@dataclass
class Dataset:
    bundles: list[Bundle]
    diagnostics: list[str] = field(default_factory=list)

    def positives(self) -> list[Proposition]:
        return [b.positive for b in self.bundles]

    def negatives(self) -> list[Proposition]:
        return [n for b in self.bundles for n in b.negatives]

    def propositions(self) -> list[Proposition]:
        return [p for b in self.bundles for p in b.members()]

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf8") as fh:
            for bundle in sorted(self.bundles, key=lambda b: b.bundle_id):
                for prop in bundle.members():
                    fh.write(
                        json.dumps(
                            prop.to_record(), sort_keys=True, ensure_ascii=False
                        )
                        + "\n"
                    )

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "Dataset":
        by_bundle: dict[str, dict[str, list[Proposition]]] = {}
        with open(path, encoding="utf8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                prop = proposition_from_record(json.loads(line))
                slot = by_bundle.setdefault(
                    prop.bundle_id, {POSITIVE: [], NEGATIVE: []}
                )
                slot[prop.label].append(prop)
        bundles = []
        for bundle_id in sorted(by_bundle):
            slot = by_bundle[bundle_id]
            if len(slot[POSITIVE]) != 1:
                raise SynthesisError(
                    f"bundle {bundle_id!r} must hold exactly one positive"
                )
            positive = slot[POSITIVE][0]
            # Ids are content-derived, not part of the wire format; the
            # parent linkage inside a bundle is structural.
            negatives = tuple(
                replace(n, parent_positive_id=positive.prop_id)
                for n in sorted(slot[NEGATIVE], key=lambda p: p.prop_id)
            )
            bundles.append(
                Bundle(bundle_id=bundle_id, positive=positive,
                       negatives=negatives)
            )
        return cls(bundles=bundles)


def largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer quotas proportional to weights, summing exactly to total."""
    if total < 0:
        raise SynthesisError("quota total must be >= 0")
    weight_sum = float(sum(weights))
    if weight_sum <= 0 or total == 0:
        return [0] * len(weights)
    raw = [w / weight_sum * total for w in weights]
    quotas = [int(x) for x in raw]
    shortfall = total - sum(quotas)
    order = sorted(
        range(len(raw)), key=lambda i: (raw[i] - quotas[i], -i), reverse=True
    )
    for i in order[:shortfall]:
        quotas[i] += 1
    return quotas


def sample_dataset(
    bundles: Sequence[Bundle],
    target_positive_count: int,
    bucket_boundaries: Sequence[int] = DEFAULT_BUCKET_BOUNDARIES,
    seed: int = 0,
    window_weights: Optional[dict[str, float]] = None,
    bucket_slack: int = 2,
) -> Dataset:
    """Bundle-atomic sampling with window-proportional positive quotas
    and bucket quotas that match the negative predicate-frequency
    histogram to the positive population's.

    ``window_weights`` defaults to each window's bundle count; pass the
    window article counts to weight by discussion volume. Infeasible
    quotas yield a partial dataset with warning diagnostics.
    """
    buckets = FrequencyBuckets(bucket_boundaries)
    diagnostics: list[str] = []
    if target_positive_count == 0 or not bundles:
        return Dataset(bundles=[], diagnostics=diagnostics)

    by_window: dict[str, list[Bundle]] = {}
    for b in sorted(bundles, key=lambda b: b.bundle_id):
        by_window.setdefault(b.positive.window_id, []).append(b)
    window_ids = sorted(by_window)
    if window_weights is None:
        weights = [float(len(by_window[w])) for w in window_ids]
    else:
        weights = [float(window_weights.get(w, 0.0)) for w in window_ids]
        if sum(weights) <= 0:
            weights = [float(len(by_window[w])) for w in window_ids]
    quotas = dict(zip(window_ids, largest_remainder(weights, target_positive_count)))

    pos_ratios = buckets.ratios(
        b.positive.predicate_frequency for b in bundles
    )
    mean_negs = sum(len(b.negatives) for b in bundles) / len(bundles)
    neg_target = max(1, round(target_positive_count * mean_negs))
    ordered_buckets = sorted(pos_ratios)
    neg_quota = dict(
        zip(
            ordered_buckets,
            largest_remainder(
                [pos_ratios[b] for b in ordered_buckets], neg_target
            ),
        )
    )

    shuffled: dict[str, list[Bundle]] = {}
    for wid in window_ids:
        pool = list(by_window[wid])
        random.Random(f"{seed}:{wid}").shuffle(pool)
        shuffled[wid] = pool

    chosen: list[Bundle] = []
    neg_counts: dict[int, int] = {}
    remaining = {wid: quotas[wid] for wid in window_ids}
    progress = True
    while progress and any(remaining[w] > 0 for w in window_ids):
        progress = False
        for wid in window_ids:
            if remaining[wid] <= 0:
                continue
            pool = shuffled[wid]
            admitted = None
            for i, bundle in enumerate(pool):
                adds: dict[int, int] = {}
                for neg in bundle.negatives:
                    b = buckets.bucket_of(neg.predicate_frequency)
                    adds[b] = adds.get(b, 0) + 1
                if all(
                    neg_counts.get(b, 0) + n <= neg_quota.get(b, 0) + bucket_slack
                    for b, n in adds.items()
                ):
                    admitted = i
                    break
            if admitted is None:
                if pool:
                    diagnostics.append(
                        f"window {wid}: bucket quotas block remaining bundles "
                        f"({remaining[wid]} positives short)"
                    )
                    remaining[wid] = 0
                continue
            bundle = pool.pop(admitted)
            chosen.append(bundle)
            for neg in bundle.negatives:
                b = buckets.bucket_of(neg.predicate_frequency)
                neg_counts[b] = neg_counts.get(b, 0) + 1
            remaining[wid] -= 1
            if remaining[wid] > 0 and not pool:
                diagnostics.append(
                    f"window {wid}: population exhausted "
                    f"({remaining[wid]} positives short)"
                )
                remaining[wid] = 0
            progress = True

    for wid in window_ids:
        if remaining[wid] > 0:
            diagnostics.append(
                f"window {wid}: quota unmet by {remaining[wid]}"
            )
    return Dataset(
        bundles=sorted(chosen, key=lambda b: b.bundle_id),
        diagnostics=diagnostics,
    )


def split_by_time(
    dataset: Dataset, boundary_date: dt.date
) -> tuple[Dataset, Dataset]:
    """Windows strictly before the boundary go to dev, the rest to test.

    Bundles never straddle the split because every bundle lives in one
    window.
    """
    dev, test = [], []
    for bundle in dataset.bundles:
        start = window_start_date(bundle.positive.window_id)
        (dev if start < boundary_date else test).append(bundle)
    return (
        Dataset(bundles=dev, diagnostics=list(dataset.diagnostics)),
        Dataset(bundles=test, diagnostics=list(dataset.diagnostics)),
    )


def audit_sample(
    dataset: Dataset,
    n: int,
    type_assigner: Callable[[str], Optional[str]],
    seed: int = 0,
) -> list[dict]:
    """Masked propositions for human felicitousness review.

    Draws n/2 positives and n/2 negatives (subject to availability) and
    masks arguments with their entity types so judgements are not
    polluted by prior knowledge of the actual participants.
    """
    rng = random.Random(f"{seed}:audit")
    rows = []
    for label, pool_all, quota in (
        (POSITIVE, dataset.positives(), n - n // 2),
        (NEGATIVE, dataset.negatives(), n // 2),
    ):
        pool = sorted(pool_all, key=lambda p: p.prop_id)
        take = pool if len(pool) <= quota else rng.sample(pool, quota)
        for prop in sorted(take, key=lambda p: p.prop_id):
            subject_type = type_assigner(prop.subject) or "entity"
            object_type = type_assigner(prop.object) or "entity"
            rows.append(
                {
                    "prop_id": prop.prop_id,
                    "label": label,
                    "masked": f"{subject_type} {join_tokens(prop.predicate)} "
                    f"{object_type}",
                    "predicate": list(prop.predicate),
                }
            )
    return rows
