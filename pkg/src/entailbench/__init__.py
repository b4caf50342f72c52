"""Benchmark synthesis and evaluation for directional predicate entailment.

The package builds Boolean open-QA style benchmarks from news corpora
(context windows, starring argument pairs, hyponym-substituted
adversarial negatives, bundle-atomic bucket-matched sampling), and
evaluates pluggable entailment scorers (entailment graphs, external
language-model services behind a line-JSON bridge) with normalized-AUC
metrics and hypothesis-only artefact probes.
"""

__version__ = "0.1.0"
