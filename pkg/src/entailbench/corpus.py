"""Article and relation-triple store with fixed-span context windows.

Ingestion normalizes arguments and predicate tokens, tiles the corpus
date range into disjoint windows anchored at the earliest article date,
and builds per-window argument-pair indexes plus corpus-wide predicate
statistics. The store is immutable after ingestion and safe to share
across threads.

Argument-pair orientation: index keys preserve the subject/object roles
(evidence must keep roles intact), while frequency statistics (distinct
argument pairs per predicate, starring-pair selection) count the
unordered pair.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .text import join_tokens, norm_arg, norm_tokens, pair_key, unordered_pair_key

INDEX_FORMAT = "entailbench-corpus/1"


class CorpusError(ValueError):
    """Hard ingestion or lookup failure."""


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    text: str


@dataclass(frozen=True)
class Article:
    article_id: str
    date: dt.date
    sentences: tuple[Sentence, ...]

    def sentence_text(self, sentence_id: str) -> Optional[str]:
        for sent in self.sentences:
            if sent.sentence_id == sentence_id:
                return sent.text
        return None


@dataclass(frozen=True, order=True)
class RelationTriple:
    article_id: str
    sentence_id: str
    subject: str
    predicate: tuple[str, ...]
    object: str
    window_id: str

    @property
    def text(self) -> str:
        """Short-sentence rendering used as premise text."""
        return f"{self.subject} {join_tokens(self.predicate)} {self.object}"


@dataclass(frozen=True)
class ContextWindow:
    window_id: str
    start_date: dt.date
    end_date: dt.date
    article_ids: frozenset[str]
    argpair_index: dict[tuple[str, str], tuple[RelationTriple, ...]]


@dataclass
class Rejected:
    kind: str
    reason: str
    record: dict


@dataclass
class PredicateStats:
    """Predicate frequency statistics over the ingested corpus."""

    argpair_counts: dict[tuple[str, ...], int] = field(default_factory=dict)
    window_article_counts: dict[str, dict[tuple[str, ...], int]] = field(
        default_factory=dict
    )
    window_mention_counts: dict[str, dict[tuple[str, ...], int]] = field(
        default_factory=dict
    )
    corpus_mention_counts: dict[tuple[str, ...], int] = field(default_factory=dict)


def window_start_date(window_id: str) -> dt.date:
    """Window ids are the ISO start date of their span."""
    try:
        return dt.date.fromisoformat(window_id)
    except ValueError as exc:
        raise CorpusError(f"malformed window id: {window_id!r}") from exc


class CorpusStore:
    """Immutable corpus handle produced by :func:`ingest` or :func:`load`."""

    def __init__(
        self,
        articles: dict[str, Article],
        span_days: int,
        rejected: list[Rejected],
        triples: Sequence[RelationTriple],
    ):
        self.articles = articles
        self.span_days = span_days
        self.rejected = rejected
        self._triples = tuple(sorted(triples))
        self.windows: dict[str, ContextWindow] = {}
        self.stats = PredicateStats()
        self._build()

    # -- construction -------------------------------------------------

    def _build(self) -> None:
        if self.articles:
            dates = [a.date for a in self.articles.values()]
            anchor, last = min(dates), max(dates)
        else:
            anchor = last = None

        window_articles: dict[str, set[str]] = {}
        window_span: dict[str, tuple[dt.date, dt.date]] = {}
        if anchor is not None:
            n_windows = ((last - anchor).days // self.span_days) + 1
            for i in range(n_windows):
                start = anchor + dt.timedelta(days=i * self.span_days)
                end = start + dt.timedelta(days=self.span_days - 1)
                wid = start.isoformat()
                window_articles[wid] = set()
                window_span[wid] = (start, end)
            for article in self.articles.values():
                idx = (article.date - anchor).days // self.span_days
                wid = (anchor + dt.timedelta(days=idx * self.span_days)).isoformat()
                window_articles[wid].add(article.article_id)

        index: dict[str, dict[tuple[str, str], list[RelationTriple]]] = {
            wid: {} for wid in window_articles
        }
        pair_sets: dict[tuple[str, ...], set[tuple[str, str]]] = {}
        win_art: dict[str, dict[tuple[str, ...], set[str]]] = {}
        win_men: dict[str, dict[tuple[str, ...], int]] = {}
        corpus_men: dict[tuple[str, ...], int] = {}

        for triple in self._triples:
            key = pair_key(triple.subject, triple.object)
            index[triple.window_id].setdefault(key, []).append(triple)
            upair = unordered_pair_key(triple.subject, triple.object)
            pair_sets.setdefault(triple.predicate, set()).add(upair)
            win_art.setdefault(triple.window_id, {}).setdefault(
                triple.predicate, set()
            ).add(triple.article_id)
            men = win_men.setdefault(triple.window_id, {})
            men[triple.predicate] = men.get(triple.predicate, 0) + 1
            corpus_men[triple.predicate] = corpus_men.get(triple.predicate, 0) + 1

        for wid, (start, end) in window_span.items():
            self.windows[wid] = ContextWindow(
                window_id=wid,
                start_date=start,
                end_date=end,
                article_ids=frozenset(window_articles[wid]),
                argpair_index={
                    k: tuple(v) for k, v in sorted(index[wid].items())
                },
            )
        self.stats = PredicateStats(
            argpair_counts={p: len(s) for p, s in pair_sets.items()},
            window_article_counts={
                w: {p: len(s) for p, s in d.items()} for w, d in win_art.items()
            },
            window_mention_counts=win_men,
            corpus_mention_counts=corpus_men,
        )

    # -- queries -------------------------------------------------------

    def window(self, window_id: str) -> ContextWindow:
        try:
            return self.windows[window_id]
        except KeyError:
            raise CorpusError(f"unknown window: {window_id!r}") from None

    def triples(self) -> tuple[RelationTriple, ...]:
        return self._triples

    def evidence_for(
        self,
        arg_pair: tuple[str, str],
        window_id: str,
        excluded_sentences: Iterable[tuple[str, str]] = (),
        cap: int = 3200,
    ) -> list[RelationTriple]:
        """Triples mentioning the oriented pair in the window.

        Triples whose (article_id, sentence_id) appears in
        ``excluded_sentences`` are dropped before the cap applies.
        Order is canonical (article, sentence, content).
        """
        if cap < 0:
            raise CorpusError(f"cap must be >= 0, got {cap}")
        window = self.window(window_id)
        excluded = {(str(a), str(s)) for a, s in excluded_sentences}
        key = pair_key(*arg_pair)
        hits = [
            t
            for t in window.argpair_index.get(key, ())
            if (t.article_id, t.sentence_id) not in excluded
        ]
        return hits[:cap]

    def predicate_argpair_count(self, predicate: Sequence[str]) -> int:
        """Distinct unordered argument pairs the predicate occurs with."""
        return self.stats.argpair_counts.get(norm_tokens(predicate), 0)

    def window_presence(
        self,
        predicate_set: Iterable[Sequence[str]],
        arg_pair: tuple[str, str],
        window_id: str,
    ) -> bool:
        """True iff any given predicate occurs with the oriented pair in-window."""
        window = self.window(window_id)
        key = pair_key(*arg_pair)
        triples = window.argpair_index.get(key, ())
        if not triples:
            return False
        wanted = {norm_tokens(p) for p in predicate_set}
        return any(t.predicate in wanted for t in triples)

    def article_text(
        self, article_id: str, excluded_sentences: Iterable[tuple[str, str]] = ()
    ) -> str:
        article = self.articles[article_id]
        excluded = {(str(a), str(s)) for a, s in excluded_sentences}
        return " ".join(
            s.text
            for s in article.sentences
            if (article_id, s.sentence_id) not in excluded
        )

    # -- persistence ---------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """Write a self-describing index directory with a versioned manifest."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "articles.jsonl", "w", encoding="utf8") as fh:
            for aid in sorted(self.articles):
                a = self.articles[aid]
                fh.write(
                    json.dumps(
                        {
                            "article_id": a.article_id,
                            "date": a.date.isoformat(),
                            "sentences": [
                                {"sentence_id": s.sentence_id, "text": s.text}
                                for s in a.sentences
                            ],
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        with open(directory / "triples.jsonl", "w", encoding="utf8") as fh:
            for t in self._triples:
                fh.write(
                    json.dumps(
                        {
                            "article_id": t.article_id,
                            "sentence_id": t.sentence_id,
                            "subject": t.subject,
                            "predicate": list(t.predicate),
                            "object": t.object,
                        },
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        manifest = {
            "format": INDEX_FORMAT,
            "span_days": self.span_days,
            "articles": len(self.articles),
            "triples": len(self._triples),
            "windows": len(self.windows),
            "rejected": len(self.rejected),
        }
        (directory / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf8"
        )


def _parse_article(record: dict) -> Article:
    sentences = tuple(
        Sentence(sentence_id=str(s["sentence_id"]), text=str(s["text"]))
        for s in record.get("sentences", [])
    )
    seen = set()
    for s in sentences:
        if s.sentence_id in seen:
            raise ValueError(f"duplicate sentence_id {s.sentence_id!r}")
        seen.add(s.sentence_id)
    return Article(
        article_id=str(record["article_id"]),
        date=dt.date.fromisoformat(str(record["date"])),
        sentences=sentences,
    )


def ingest(
    articles_stream: Iterable[dict],
    triples_stream: Iterable[dict],
    window_span_days: int = 3,
    excluded_article_ids: Iterable[str] = (),
) -> CorpusStore:
    """Build a :class:`CorpusStore` from article and triple records.

    Duplicate article ids are a hard error. Records with unparseable
    dates or dangling article/sentence references are rejected with a
    diagnostic and skipped. ``excluded_article_ids`` supports removing
    articles known to other resources (e.g. graph-induction corpora).
    """
    if window_span_days < 1:
        raise CorpusError(f"window span must be >= 1 day, got {window_span_days}")
    excluded_ids = set(excluded_article_ids)
    rejected: list[Rejected] = []
    articles: dict[str, Article] = {}
    for record in articles_stream:
        aid = str(record.get("article_id", ""))
        if aid in excluded_ids:
            continue
        if aid in articles:
            raise CorpusError(f"duplicate article_id: {aid!r}")
        try:
            articles[aid] = _parse_article(record)
        except (KeyError, ValueError, TypeError) as exc:
            rejected.append(Rejected("article", str(exc), record))

    anchor = min((a.date for a in articles.values()), default=None)

    def window_id_for(date: dt.date) -> str:
        idx = (date - anchor).days // window_span_days
        return (anchor + dt.timedelta(days=idx * window_span_days)).isoformat()

    triples: list[RelationTriple] = []
    seen_triples: set[tuple] = set()
    for record in triples_stream:
        aid = str(record.get("article_id", ""))
        article = articles.get(aid)
        if article is None:
            rejected.append(Rejected("triple", f"unknown article {aid!r}", record))
            continue
        sid = str(record.get("sentence_id", ""))
        if article.sentence_text(sid) is None:
            rejected.append(
                Rejected("triple", f"unknown sentence {aid!r}/{sid!r}", record)
            )
            continue
        predicate = norm_tokens(record.get("predicate", ()))
        if not predicate:
            rejected.append(Rejected("triple", "empty predicate", record))
            continue
        triple = RelationTriple(
            article_id=aid,
            sentence_id=sid,
            subject=norm_arg(str(record.get("subject", ""))),
            predicate=predicate,
            object=norm_arg(str(record.get("object", ""))),
            window_id=window_id_for(article.date),
        )
        dedup_key = (
            triple.subject,
            triple.predicate,
            triple.object,
            triple.article_id,
            triple.sentence_id,
        )
        if dedup_key in seen_triples:
            continue
        seen_triples.add(dedup_key)
        triples.append(triple)

    return CorpusStore(articles, window_span_days, rejected, triples)


def read_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_no}: bad JSON ({exc})") from exc


def ingest_files(
    articles_path: str | Path,
    triples_path: str | Path,
    window_span_days: int = 3,
    excluded_article_ids: Iterable[str] = (),
) -> CorpusStore:
    return ingest(
        read_jsonl(articles_path),
        read_jsonl(triples_path),
        window_span_days,
        excluded_article_ids,
    )


def load(directory: str | Path) -> CorpusStore:
    """Reload a store saved with :meth:`CorpusStore.save`."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise CorpusError(f"not an index directory (no manifest): {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf8"))
    if manifest.get("format") != INDEX_FORMAT:
        raise CorpusError(f"unsupported index format: {manifest.get('format')!r}")
    return ingest_files(
        directory / "articles.jsonl",
        directory / "triples.jsonl",
        window_span_days=int(manifest["span_days"]),
    )
