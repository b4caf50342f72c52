"""Evaluation protocol: retrieve evidence per hypothesis, score
premise -> hypothesis with a pluggable scorer, aggregate by maximum,
and produce normalized-AUC reports.

Three retrieval variants are supported: ``relation`` (triples
involving the hypothesis's arguments, rendered as short sentences),
``sentence`` (the host sentences of those triples), and
``tfidf_articles`` (the window's top-k articles by TF-IDF cosine
similarity to the hypothesis). Evidence originating from a
hypothesis's own source sentences is always excluded when exclusion
is enabled, and the evidence list is capped.

Scorers may abstain on an item (a miss, not a zero). A hypothesis
whose every evidence lookup abstains, or that has no evidence, gets a
missing confidence and is ranked strictly last by the metrics layer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import CorpusStore
from .metrics import AucReport, auc_report, zero_evidence_rank
from .synthesis import Dataset, Proposition
from .text import tokenize

RETRIEVAL_MODES = ("relation", "sentence", "tfidf_articles")


class HarnessError(ValueError):
    pass


class ScorerFatalError(RuntimeError):
    """A scorer failure that must abort the run instead of being
    downgraded to a skipped evidence item (e.g. a dead bridge)."""


@dataclass(frozen=True)
class ScoreItem:
    """One premise/hypothesis scoring request.

    Text fields are always set; predicate token fields are present when
    the premise came from a relation triple, so that graph scorers can
    skip text parsing.
    """

    premise_text: str
    hypothesis_text: str
    premise_predicate: Optional[tuple[str, ...]] = None
    hypothesis_predicate: Optional[tuple[str, ...]] = None


class Scorer:
    """Base scorer: deterministic, finite scores, optional abstention."""

    name = "scorer"
    batch_size = 64
    symmetric = False

    def score_batch(self, items: Sequence[ScoreItem]) -> list[Optional[float]]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class ConstantScorer(Scorer):
    def __init__(self, value: float = 0.5):
        self.value = float(value)
        self.name = f"constant:{value}"

    def score_batch(self, items: Sequence[ScoreItem]) -> list[Optional[float]]:
        return [self.value] * len(items)


@dataclass
class EvalConfig:
    evidence_cap: int = 3200
    retrieval_mode: str = "relation"
    tfidf_k: int = 5
    exclude_sources: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.evidence_cap < 1:
            raise HarnessError("evidence cap must be >= 1")
        if self.tfidf_k < 1:
            raise HarnessError("tfidf k must be >= 1")
        if self.retrieval_mode not in RETRIEVAL_MODES:
            raise HarnessError(
                f"retrieval mode must be one of {RETRIEVAL_MODES}, "
                f"got {self.retrieval_mode!r}"
            )


@dataclass
class EvalResult:
    confidences: dict[str, Optional[float]]
    report: Optional[AucReport]
    coverage: float
    scorer_name: str
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scorer": self.scorer_name,
            "coverage": self.coverage,
            "report": self.report.to_dict() if self.report else None,
            "confidences": {
                k: self.confidences[k] for k in sorted(self.confidences)
            },
            "diagnostics": list(self.diagnostics),
        }


# -- TF-IDF over a window's articles ------------------------------------


def _tf(counts: dict[str, int]) -> dict[str, float]:
    return {t: 1.0 + math.log(c) for t, c in counts.items() if c > 0}


def tfidf_rank(
    query: str, documents: dict[str, str], k: int
) -> list[tuple[str, float]]:
    """Top-k document ids by cosine similarity of log-tf, smoothed-idf
    vectors. Ties break on document id."""
    doc_counts: dict[str, dict[str, int]] = {}
    df: dict[str, int] = {}
    for doc_id, text in documents.items():
        counts: dict[str, int] = {}
        for tok in tokenize(text):
            counts[tok] = counts.get(tok, 0) + 1
        doc_counts[doc_id] = counts
        for tok in counts:
            df[tok] = df.get(tok, 0) + 1
    n_docs = len(documents)
    idf = {
        t: math.log((1.0 + n_docs) / (1.0 + d)) + 1.0 for t, d in df.items()
    }

    def vector(counts: dict[str, int]) -> dict[str, float]:
        return {t: w * idf.get(t, 0.0) for t, w in _tf(counts).items()}

    q_counts: dict[str, int] = {}
    for tok in tokenize(query):
        q_counts[tok] = q_counts.get(tok, 0) + 1
    qv = {
        t: w * (idf.get(t) or math.log(1.0 + n_docs) + 1.0)
        for t, w in _tf(q_counts).items()
    }
    q_norm = math.sqrt(sum(w * w for w in qv.values()))
    scored = []
    for doc_id in sorted(documents):
        dv = vector(doc_counts[doc_id])
        d_norm = math.sqrt(sum(w * w for w in dv.values()))
        if q_norm == 0.0 or d_norm == 0.0:
            scored.append((doc_id, 0.0))
            continue
        dot = sum(w * dv.get(t, 0.0) for t, w in qv.items())
        scored.append((doc_id, dot / (q_norm * d_norm)))
    scored.sort(key=lambda x: (-x[1], x[0]))
    return scored[:k]


# -- retrieval ------------------------------------------------------------


def retrieve(
    store: CorpusStore, hypothesis: Proposition, config: EvalConfig
) -> list[ScoreItem]:
    """Evidence items for one hypothesis under the configured variant."""
    excluded = (
        frozenset(hypothesis.source_sentences)
        if config.exclude_sources
        else frozenset()
    )
    pair = (hypothesis.subject, hypothesis.object)
    hyp_text = hypothesis.text
    hyp_pred = hypothesis.predicate

    if config.retrieval_mode == "relation":
        triples = store.evidence_for(
            pair, hypothesis.window_id, excluded, cap=config.evidence_cap
        )
        return [
            ScoreItem(
                premise_text=t.text,
                hypothesis_text=hyp_text,
                premise_predicate=t.predicate,
                hypothesis_predicate=hyp_pred,
            )
            for t in triples
        ]

    if config.retrieval_mode == "sentence":
        triples = store.evidence_for(
            pair, hypothesis.window_id, excluded, cap=len(store.triples())
        )
        seen: set[tuple[str, str]] = set()
        items = []
        for t in triples:
            key = (t.article_id, t.sentence_id)
            if key in seen:
                continue
            seen.add(key)
            text = store.articles[t.article_id].sentence_text(t.sentence_id)
            items.append(
                ScoreItem(
                    premise_text=text or "",
                    hypothesis_text=hyp_text,
                    hypothesis_predicate=hyp_pred,
                )
            )
            if len(items) >= config.evidence_cap:
                break
        return items

    window = store.window(hypothesis.window_id)
    documents = {
        aid: store.article_text(aid, excluded)
        for aid in sorted(window.article_ids)
    }
    ranked_docs = tfidf_rank(hyp_text, documents, config.tfidf_k)
    return [
        ScoreItem(
            premise_text=documents[doc_id],
            hypothesis_text=hyp_text,
            hypothesis_predicate=hyp_pred,
        )
        for doc_id, _ in ranked_docs[: config.evidence_cap]
    ]


# -- scoring ---------------------------------------------------------------


def score_hypothesis(
    hypothesis: Proposition,
    evidence: Sequence[ScoreItem],
    scorer: Scorer,
    diagnostics: Optional[list[str]] = None,
) -> Optional[float]:
    """Max over evidence of scorer(evidence, hypothesis); missing when
    there is no evidence or every lookup abstains or fails."""
    best: Optional[float] = None
    for start in range(0, len(evidence), max(1, scorer.batch_size)):
        batch = evidence[start : start + max(1, scorer.batch_size)]
        try:
            scores = scorer.score_batch(batch)
        except ScorerFatalError:
            raise
        except Exception as exc:  # isolate item failures
            scores = []
            for item in batch:
                try:
                    scores.extend(scorer.score_batch([item]))
                except ScorerFatalError:
                    raise
                except Exception as inner:
                    scores.append(None)
                    if diagnostics is not None:
                        diagnostics.append(
                            f"{hypothesis.prop_id}: evidence item skipped ({inner})"
                        )
            if len(scores) != len(batch):
                if diagnostics is not None:
                    diagnostics.append(
                        f"{hypothesis.prop_id}: batch failed ({exc})"
                    )
                continue
        if len(scores) != len(batch):
            raise HarnessError(
                f"scorer {scorer.name!r} returned {len(scores)} scores "
                f"for {len(batch)} items"
            )
        for score in scores:
            if score is None:
                continue
            score = float(score)
            if not math.isfinite(score):
                raise HarnessError(
                    f"scorer {scorer.name!r} returned a non-finite score"
                )
            if best is None or score > best:
                best = score
    return best


def run_eval(
    store: CorpusStore,
    dataset: Dataset,
    scorer: Scorer,
    config: Optional[EvalConfig] = None,
) -> EvalResult:
    """Score every hypothesis in the dataset and build the AUC report.

    Fails fast if any hypothesis references a window the store does not
    hold. Missing confidences are ranked strictly last. Deterministic
    for a deterministic scorer, at any parallelism degree.
    """
    config = config or EvalConfig()
    props = dataset.propositions()
    for prop in props:
        if prop.window_id not in store.windows:
            raise HarnessError(
                f"dataset/corpus mismatch: window {prop.window_id!r} "
                f"of {prop.prop_id!r} is not in the store"
            )
    diagnostics: list[str] = []

    def evaluate(prop: Proposition) -> Optional[float]:
        evidence = retrieve(store, prop, config)
        return score_hypothesis(prop, evidence, scorer, diagnostics)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            scores = list(pool.map(evaluate, props))
    else:
        scores = [evaluate(p) for p in props]

    confidences = {p.prop_id: s for p, s in zip(props, scores)}
    scored = sum(1 for s in scores if s is not None)
    coverage = scored / len(props) if props else 0.0
    labels = [1 if p.label == "positive" else 0 for p in props]
    report = None
    if props and 0 < sum(labels) < len(labels):
        predictions = zero_evidence_rank(zip(scores, labels))
        report = auc_report(predictions)
    return EvalResult(
        confidences=confidences,
        report=report,
        coverage=coverage,
        scorer_name=scorer.name,
        diagnostics=diagnostics,
    )


def recall_ceiling(dataset: Dataset, result: EvalResult) -> float:
    """Fraction of positive hypotheses that received a confidence; the
    recall beyond which a scorer's curve is driven by the missing-score
    tie group."""
    positives = dataset.positives()
    if not positives:
        return 0.0
    scored = sum(
        1 for p in positives if result.confidences.get(p.prop_id) is not None
    )
    return scored / len(positives)
