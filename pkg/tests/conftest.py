"""Shared fixtures: a hand-sized corpus, a fixture lexicon, and a
fixture entailment graph used across the suite."""

from __future__ import annotations

import datetime as dt
import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from entailbench import corpus as corpus_mod
from entailbench import lexicon as lexicon_mod


def article(aid: str, date: str, sentences: list[tuple[str, str]]) -> dict:
    return {
        "article_id": aid,
        "date": date,
        "sentences": [{"sentence_id": sid, "text": text} for sid, text in sentences],
    }


def triple(aid: str, sid: str, subject: str, predicate: list[str], obj: str) -> dict:
    return {
        "article_id": aid,
        "sentence_id": sid,
        "subject": subject,
        "predicate": predicate,
        "object": obj,
    }


def build_store(articles, triples, span=3, **kwargs) -> corpus_mod.CorpusStore:
    return corpus_mod.ingest(articles, triples, span, **kwargs)


# Small lexicon around the play/game and go/drive families. Sense order
# is synset order of appearance; "game" resolves to the match sense
# before the animal sense.
FIXTURE_LEXICON = {
    "synsets": [
        {"id": "v.play", "lemmas": ["play"], "hyponyms": ["v.foul"]},
        {"id": "v.foul", "lemmas": ["foul"], "hyponyms": []},
        {
            "id": "n.game",
            "lemmas": ["game", "match"],
            "hyponyms": ["n.practice_game"],
        },
        {"id": "n.game.animal", "lemmas": ["game"], "hyponyms": []},
        {
            "id": "n.practice_game",
            "lemmas": ["practice game", "scrimmage"],
            "hyponyms": [],
        },
        {"id": "v.play_game", "lemmas": ["play game"], "hyponyms": []},
        {
            "id": "v.go",
            "lemmas": ["go to"],
            "hyponyms": ["v.drive", "v.walk"],
        },
        {"id": "v.drive", "lemmas": ["drive to"], "hyponyms": ["v.speed"]},
        {"id": "v.walk", "lemmas": ["walk to"], "hyponyms": []},
        {"id": "v.speed", "lemmas": ["speed to"], "hyponyms": []},
        {
            "id": "v.visit",
            "lemmas": ["visit", "drop by"],
            "hyponyms": [],
        },
    ]
}


@pytest.fixture
def fixture_lexicon() -> lexicon_mod.Lexicon:
    return lexicon_mod.from_json(FIXTURE_LEXICON)


@pytest.fixture
def lexicon_path(tmp_path) -> Path:
    path = tmp_path / "lexicon.json"
    path.write_text(json.dumps(FIXTURE_LEXICON), encoding="utf8")
    return path


def day(offset: int, base: str = "2016-01-01") -> str:
    return (dt.date.fromisoformat(base) + dt.timedelta(days=offset)).isoformat()


@pytest.fixture
def nine_day_store() -> corpus_mod.CorpusStore:
    """Nine articles over nine consecutive days, span 3 -> three windows."""
    articles = [
        article(f"a{i}", day(i), [("s1", f"sentence one of a{i}"),
                                  ("s2", f"sentence two of a{i}")])
        for i in range(9)
    ]
    triples = [
        triple("a0", "s1", "john", ["go", "to"], "ikea"),
        triple("a0", "s2", "john", ["shop", "in"], "ikea"),
        triple("a1", "s1", "john", ["go", "to"], "ikea"),
        triple("a2", "s1", "mary", ["visit"], "paris"),
        triple("a3", "s1", "john", ["go", "to"], "ikea"),
        triple("a4", "s1", "acme", ["buy"], "globex"),
        triple("a8", "s1", "acme", ["buy"], "globex"),
    ]
    return build_store(articles, triples)
