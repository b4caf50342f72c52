"""Discrete entailment graphs: typed-predicate nodes with directed,
weighted edges, served with exact and fuzzy (role-insensitive) lookup.

Nodes use the ``(lemma.role,lemma.role)`` syntax, e.g.
``(shop.1,shop.in.2)``; graphs are partitioned into subgraphs by
argument-type pair. Exact lookup requires full typed-node equality.
Fuzzy lookup grounds a natural-language predicate to every node whose
slot lemma matches regardless of role assignment and returns the
maximum edge score over all candidate pairs; a miss is an abstention,
never a zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .harness import ScoreItem, Scorer
from .text import base_forms


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class TypedPredicate:
    """A graph node identity: two (lemma, role) slots plus the node string."""

    raw: str
    slots: tuple[tuple[str, str], ...]

    @classmethod
    def parse(cls, raw: str) -> "TypedPredicate":
        body = raw.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise GraphError(f"not a typed predicate: {raw!r}")
        parts = body[1:-1].split(",")
        if len(parts) != 2:
            raise GraphError(f"typed predicate needs two role slots: {raw!r}")
        slots = []
        for part in parts:
            part = part.strip()
            if "." not in part:
                raise GraphError(f"slot without role suffix: {part!r} in {raw!r}")
            lemma, role = part.rsplit(".", 1)
            if not lemma:
                raise GraphError(f"empty slot lemma in {raw!r}")
            slots.append((lemma.replace(".", " ").casefold(), role))
        return cls(raw=body, slots=tuple(slots))

    def lemma_forms(self) -> set[str]:
        """Slot surface forms with dots expanded to spaces."""
        return {lemma for lemma, _ in self.slots}


def default_node_string(tokens: Sequence[str]) -> str:
    """The role assignment a plain predicate grounds to in exact mode."""
    dotted = ".".join(t.casefold() for t in tokens)
    return f"({dotted}.1,{dotted}.2)"


class Subgraph:
    """One type-pair partition, loadable lazily from its edge file."""

    def __init__(self, type_pair: str, path: Optional[Path] = None):
        self.type_pair = type_pair
        self.path = path
        self._loaded = path is None
        self.edges: dict[str, dict[str, float]] = {}
        self.nodes: set[str] = set()
        self.fuzzy_index: dict[str, set[str]] = {}
        self.token_vocab: set[str] = set()
        self.malformed = 0
        self.duplicates = 0

    def ensure_loaded(self) -> None:
        if self._loaded:
            return
        self._loaded = True
        with open(self.path, encoding="utf8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    self.malformed += 1
                    continue
                try:
                    src = TypedPredicate.parse(parts[0])
                    dst = TypedPredicate.parse(parts[1])
                    score = float(parts[2])
                except (GraphError, ValueError):
                    self.malformed += 1
                    continue
                if score != score or score in (float("inf"), float("-inf")):
                    self.malformed += 1
                    continue
                self.add_edge(src, dst, score)

    def add_edge(self, src: TypedPredicate, dst: TypedPredicate, score: float) -> None:
        row = self.edges.setdefault(src.raw, {})
        if dst.raw in row:
            self.duplicates += 1  # last wins
        row[dst.raw] = score
        for node in (src, dst):
            if node.raw not in self.nodes:
                self.nodes.add(node.raw)
                for form in node.lemma_forms():
                    self.fuzzy_index.setdefault(form, set()).add(node.raw)
                    self.token_vocab.update(form.split(" "))

    @property
    def n_nodes(self) -> int:
        self.ensure_loaded()
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        self.ensure_loaded()
        return sum(len(row) for row in self.edges.values())


class EntailmentGraph:
    def __init__(self, provenance: str = "custom", lazy: bool = False):
        self.provenance = provenance
        self.lazy = lazy
        self.subgraphs: dict[str, Subgraph] = {}

    # -- loading -------------------------------------------------------

    @classmethod
    def load(
        cls, directory: str | Path, provenance: Optional[str] = None,
        lazy: bool = False,
    ) -> "EntailmentGraph":
        """Load a graph directory: ``manifest.json`` naming subgraph edge
        files, or bare ``*.tsv`` files whose stem is the type pair."""
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        entries: list[tuple[str, Path]] = []
        name = provenance
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf8"))
            name = name or manifest.get("provenance", "custom")
            for sub in manifest.get("subgraphs", []):
                entries.append((sub["types"], directory / sub["file"]))
        else:
            name = name or "custom"
            for path in sorted(directory.glob("*.tsv")):
                entries.append((path.stem, path))
        if not entries:
            raise GraphError(f"no subgraph files under {directory}")
        graph = cls(provenance=name, lazy=lazy)
        for type_pair, path in entries:
            if not path.exists():
                raise GraphError(f"missing subgraph file: {path}")
            sub = Subgraph(type_pair, path)
            if not lazy:
                sub.ensure_loaded()
            graph.subgraphs[type_pair] = sub
        return graph

    def stats(self) -> dict:
        """Node/edge counts and a rough memory estimate per subgraph."""
        per = {}
        total_nodes = total_edges = 0
        for type_pair, sub in sorted(self.subgraphs.items()):
            per[type_pair] = {
                "nodes": sub.n_nodes,
                "edges": sub.n_edges,
                "malformed_lines": sub.malformed,
                "duplicate_edges": sub.duplicates,
                "approx_bytes": sub.n_nodes * 120 + sub.n_edges * 90,
            }
            total_nodes += sub.n_nodes
            total_edges += sub.n_edges
        return {
            "provenance": self.provenance,
            "nodes": total_nodes,
            "edges": total_edges,
            "subgraphs": per,
            "empty": total_edges == 0,
        }

    # -- lookup --------------------------------------------------------

    def _candidates(
        self, predicate: str | Sequence[str], sub: Subgraph, fuzzy: bool
    ) -> set[str]:
        sub.ensure_loaded()
        if isinstance(predicate, str) and predicate.strip().startswith("("):
            node = TypedPredicate.parse(predicate)
            if not fuzzy:
                return {node.raw} if node.raw in sub.nodes else set()
            out: set[str] = set()
            for form in node.lemma_forms():
                out |= sub.fuzzy_index.get(form, set())
            return out
        tokens = (
            predicate.split() if isinstance(predicate, str) else list(predicate)
        )
        if len(tokens) == 1 and tokens[0].startswith("(") and tokens[0].endswith(")"):
            # Graph-space corpora carry typed nodes as single predicate tokens.
            return self._candidates(tokens[0], sub, fuzzy)
        if not fuzzy:
            node_str = default_node_string(tokens)
            return {node_str} if node_str in sub.nodes else set()
        form = " ".join(
            next(
                (b for b in base_forms(t) if b in sub.token_vocab), t.casefold()
            )
            for t in tokens
        )
        hits = set(sub.fuzzy_index.get(form, set()))
        # Raw case-folded form, in case token-wise normalization overshot.
        raw_form = " ".join(t.casefold() for t in tokens)
        hits |= sub.fuzzy_index.get(raw_form, set())
        return hits

    def lookup(
        self,
        premise_pred: str | Sequence[str],
        hypothesis_pred: str | Sequence[str],
        fuzzy: bool = False,
        type_pair: Optional[str] = None,
    ) -> Optional[float]:
        """Directional edge score premise -> hypothesis, or None (abstain).

        Fuzzy mode takes the maximum over all role-insensitive node
        matches. ``type_pair`` restricts the search to one partition;
        by default every loaded partition is searched.
        """
        if type_pair is not None:
            if type_pair not in self.subgraphs:
                return None
            subs = [self.subgraphs[type_pair]]
        else:
            subs = [self.subgraphs[k] for k in sorted(self.subgraphs)]
        best: Optional[float] = None
        for sub in subs:
            prem = self._candidates(premise_pred, sub, fuzzy)
            hypo = self._candidates(hypothesis_pred, sub, fuzzy)
            for p in prem:
                row = sub.edges.get(p)
                if not row:
                    continue
                for h in hypo:
                    score = row.get(h)
                    if score is not None and (best is None or score > best):
                        best = score
        return best


class GraphScorer(Scorer):
    """Adapts an :class:`EntailmentGraph` to the harness scorer interface."""

    def __init__(self, graph: EntailmentGraph, fuzzy: bool = False):
        self.graph = graph
        self.fuzzy = fuzzy
        self.name = f"eg:{graph.provenance}" + (":fuzzy" if fuzzy else "")
        self.batch_size = 1024
        self.symmetric = False

    def score_batch(self, items: Sequence[ScoreItem]) -> list[Optional[float]]:
        out = []
        for item in items:
            premise = item.premise_predicate or item.premise_text
            hypothesis = item.hypothesis_predicate or item.hypothesis_text
            if not premise or not hypothesis:
                out.append(None)
                continue
            out.append(self.graph.lookup(premise, hypothesis, fuzzy=self.fuzzy))
        return out


def as_scorer(graph: EntailmentGraph, fuzzy: bool = False) -> GraphScorer:
    return GraphScorer(graph, fuzzy)
