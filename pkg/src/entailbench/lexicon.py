"""Lexical knowledge base: span-to-synset matching, hyponym and synonym
enumeration, and pluggable synset selection.

Two load paths are supported: standard WordNet 3.x plain-text data/index
files, and a minimal JSON format used for fixtures and non-English
databases. The database is immutable after load; an external
disambiguator hook may be registered for context-sensitive synset
selection and is serialized unless it declares itself concurrency-safe.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .text import base_forms

HYPONYM_POINTERS = ("~", "~i")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Synset:
    synset_id: str
    lemmas: tuple[str, ...]
    hyponym_ids: tuple[str, ...]


@dataclass(frozen=True)
class SpanMatch:
    """A contiguous token span resolved to candidate synsets.

    ``span`` is half-open over the predicate token sequence; ``lemma``
    is the normalized lexicon entry the span matched; ``synsets`` are
    ordered by sense rank (first = most common).
    """

    span: tuple[int, int]
    lemma: str
    synsets: tuple[Synset, ...]


Disambiguator = Callable[[str, Optional[str], Sequence[Synset]], object]


class Lexicon:
    def __init__(
        self,
        synsets: dict[str, Synset],
        lemma_index: dict[str, tuple[str, ...]],
        max_span_len: int = 4,
    ):
        self.synsets = synsets
        self.lemma_index = lemma_index
        self.max_span_len = max_span_len
        self._first_token_vocab = {
            lemma.split(" ", 1)[0] for lemma in lemma_index
        }
        self._disambiguator: Optional[Disambiguator] = None
        self._disambiguator_safe = False
        self._lock = threading.Lock()
        self._check_acyclic()

    # -- validation ----------------------------------------------------

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}

        def visit(sid: str, trail: list[str]) -> None:
            mark = state.get(sid)
            if mark == 2:
                return
            if mark == 1:
                cycle = " -> ".join(trail + [sid])
                raise LexiconError(f"hyponym cycle: {cycle}")
            state[sid] = 1
            for child in self.synsets[sid].hyponym_ids:
                if child in self.synsets:
                    visit(child, trail + [sid])
            state[sid] = 2

        for sid in self.synsets:
            visit(sid, [])

    # -- lookups -------------------------------------------------------

    def _lookup_lemma(self, joined: str) -> Optional[str]:
        """Resolve a candidate span string to a lexicon lemma.

        Tries the case-folded join first, then base-form variants of
        the first and last tokens (verb inflection sits on the first
        token of a phrase, noun inflection on the last).
        """
        if joined in self.lemma_index:
            return joined
        tokens = joined.split(" ")
        for position in (0, len(tokens) - 1):
            for cand in base_forms(tokens[position])[1:]:
                variant = " ".join(
                    cand if i == position else tok
                    for i, tok in enumerate(tokens)
                )
                if variant in self.lemma_index:
                    return variant
        return None

    def match_spans(self, predicate_tokens: Sequence[str]) -> list[SpanMatch]:
        """All contiguous spans whose normalized join is a lexicon lemma.

        Reported left-to-right, longest-first within a start position.
        """
        if not predicate_tokens:
            raise LexiconError("predicate token list must be non-empty")
        tokens = [t.casefold() for t in predicate_tokens]
        matches = []
        for start in range(len(tokens)):
            max_end = min(len(tokens), start + self.max_span_len)
            for end in range(max_end, start, -1):
                lemma = self._lookup_lemma(" ".join(tokens[start:end]))
                if lemma is None:
                    continue
                synsets = tuple(
                    self.synsets[sid] for sid in self.lemma_index[lemma]
                )
                matches.append(
                    SpanMatch(span=(start, end), lemma=lemma, synsets=synsets)
                )
        return matches

    def hyponyms(
        self, synset: Synset | str, transitive: bool = False
    ) -> list[str]:
        """Hyponym lemmas of a synset, direct or transitive closure.

        Deterministic order (database order, breadth-first), no
        duplicates; the synset's own lemmas are not included.
        """
        sid = synset.synset_id if isinstance(synset, Synset) else synset
        if sid not in self.synsets:
            raise LexiconError(f"unknown synset: {sid!r}")
        out: list[str] = []
        seen_lemmas: set[str] = set()
        seen_ids = {sid}
        frontier = list(self.synsets[sid].hyponym_ids)
        while frontier:
            child_id = frontier.pop(0)
            if child_id in seen_ids or child_id not in self.synsets:
                continue
            seen_ids.add(child_id)
            child = self.synsets[child_id]
            for lemma in child.lemmas:
                if lemma not in seen_lemmas:
                    seen_lemmas.add(lemma)
                    out.append(lemma)
            if transitive:
                frontier.extend(child.hyponym_ids)
        return out

    def synonyms(self, lemma: str) -> set[str]:
        """Union of lemmas over all synsets containing ``lemma``.

        Always includes the lemma itself, so out-of-vocabulary inputs
        return a singleton rather than an empty set.
        """
        lemma = lemma.casefold()
        out = {lemma}
        for sid in self.lemma_index.get(lemma, ()):
            out.update(self.synsets[sid].lemmas)
        return out

    # -- synset selection ------------------------------------------------

    def register_disambiguator(
        self, fn: Disambiguator, concurrency_safe: bool = False
    ) -> None:
        self._disambiguator = fn
        self._disambiguator_safe = concurrency_safe

    def select_synset(
        self,
        span_match: SpanMatch,
        context_sentence: Optional[str] = None,
        strategy: str = "first",
    ) -> Synset:
        """Pick one synset for a span match.

        ``"first"`` returns the sense-rank-1 candidate; ``"external"``
        delegates to the registered disambiguator, whose answer must be
        one of the match's candidates (a Synset, a synset id, or an
        index into the candidate list).
        """
        if not span_match.synsets:
            raise LexiconError("span match has no candidate synsets")
        if strategy == "first":
            return span_match.synsets[0]
        if strategy != "external":
            raise LexiconError(f"unknown synset strategy: {strategy!r}")
        if self._disambiguator is None:
            raise LexiconError("external strategy requires a registered disambiguator")
        if self._disambiguator_safe:
            choice = self._disambiguator(
                span_match.lemma, context_sentence, span_match.synsets
            )
        else:
            with self._lock:
                choice = self._disambiguator(
                    span_match.lemma, context_sentence, span_match.synsets
                )
        if isinstance(choice, Synset):
            selected = choice
        elif isinstance(choice, int):
            if not 0 <= choice < len(span_match.synsets):
                raise LexiconError(f"disambiguator index out of range: {choice}")
            selected = span_match.synsets[choice]
        else:
            by_id = {s.synset_id: s for s in span_match.synsets}
            if str(choice) not in by_id:
                raise LexiconError(
                    f"disambiguator returned a non-candidate synset: {choice!r}"
                )
            selected = by_id[str(choice)]
        if selected not in span_match.synsets:
            raise LexiconError("disambiguator returned a non-candidate synset")
        return selected


# -- loaders -----------------------------------------------------------


def _normalize_lemma(raw: str) -> str:
    return raw.replace("_", " ").casefold()


def from_json(source: str | Path | dict, max_span_len: int = 4) -> Lexicon:
    """Load the fixture lexicon format.

    ``{"synsets": [{"id": ..., "lemmas": [...], "hyponyms": [...]}]}``;
    per-lemma sense order follows synset order of appearance.
    """
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text(encoding="utf8"))
    else:
        data = source
    synsets: dict[str, Synset] = {}
    lemma_index: dict[str, list[str]] = {}
    for record in data.get("synsets", []):
        sid = str(record["id"])
        if sid in synsets:
            raise LexiconError(f"duplicate synset id: {sid!r}")
        lemmas = tuple(_normalize_lemma(l) for l in record.get("lemmas", []))
        if not lemmas:
            raise LexiconError(f"synset {sid!r} has no lemmas")
        synsets[sid] = Synset(
            synset_id=sid,
            lemmas=lemmas,
            hyponym_ids=tuple(str(h) for h in record.get("hyponyms", [])),
        )
        for lemma in lemmas:
            order = lemma_index.setdefault(lemma, [])
            if sid not in order:
                order.append(sid)
    for synset in synsets.values():
        for hid in synset.hyponym_ids:
            if hid not in synsets:
                raise LexiconError(
                    f"synset {synset.synset_id!r} points at unknown hyponym {hid!r}"
                )
    return Lexicon(
        synsets, {k: tuple(v) for k, v in lemma_index.items()}, max_span_len
    )


def _data_lines(path: Path) -> Iterable[str]:
    with open(path, encoding="utf8", errors="replace") as fh:
        for line in fh:
            if line.startswith("  ") or not line.strip():
                continue
            yield line.rstrip("\n")


def from_wordnet(
    directory: str | Path,
    pos: Sequence[str] = ("verb", "noun"),
    max_span_len: int = 4,
) -> Lexicon:
    """Parse WordNet 3.x plain-text ``data.*`` / ``index.*`` files.

    Sense ranks come from the index files (offsets are listed most
    common first); hyponym pointers are the ``~`` and ``~i`` symbols.
    """
    directory = Path(directory)
    pos_letter = {"verb": "v", "noun": "n", "adj": "a", "adv": "r"}
    synsets: dict[str, Synset] = {}
    lemma_index: dict[str, list[str]] = {}

    for name in pos:
        data_path = directory / f"data.{name}"
        if not data_path.exists():
            raise LexiconError(f"missing WordNet data file: {data_path}")
        for line in _data_lines(data_path):
            parts = line.split(" ")
            offset = int(parts[0])
            ss_type = parts[2]
            w_cnt = int(parts[3], 16)
            words = []
            cursor = 4
            for _ in range(w_cnt):
                words.append(_normalize_lemma(parts[cursor]))
                cursor += 2  # skip lex_id
            p_cnt = int(parts[cursor])
            cursor += 1
            hyponym_ids = []
            for _ in range(p_cnt):
                symbol = parts[cursor]
                target_offset = int(parts[cursor + 1])
                target_pos = parts[cursor + 2]
                cursor += 4  # symbol, offset, pos, source/target
                if symbol in HYPONYM_POINTERS:
                    hyponym_ids.append(f"{target_pos}{target_offset:08d}")
            sid = f"{ss_type}{offset:08d}"
            synsets[sid] = Synset(
                synset_id=sid,
                lemmas=tuple(dict.fromkeys(words)),
                hyponym_ids=tuple(hyponym_ids),
            )

    for name in pos:
        letter = pos_letter.get(name, name)
        index_path = directory / f"index.{name}"
        if not index_path.exists():
            raise LexiconError(f"missing WordNet index file: {index_path}")
        for line in _data_lines(index_path):
            parts = line.split(" ")
            parts = [p for p in parts if p]
            lemma = _normalize_lemma(parts[0])
            synset_cnt = int(parts[2])
            p_cnt = int(parts[3])
            offsets = parts[4 + p_cnt + 2 : 4 + p_cnt + 2 + synset_cnt]
            order = lemma_index.setdefault(lemma, [])
            for off in offsets:
                sid = f"{letter}{int(off):08d}"
                if sid in synsets and sid not in order:
                    order.append(sid)

    # Drop dangling hyponym pointers (cross-POS targets not loaded).
    pruned = {
        sid: Synset(
            synset_id=s.synset_id,
            lemmas=s.lemmas,
            hyponym_ids=tuple(h for h in s.hyponym_ids if h in synsets),
        )
        for sid, s in synsets.items()
    }
    return Lexicon(
        pruned, {k: tuple(v) for k, v in lemma_index.items()}, max_span_len
    )
