"""Dynamic materialization: topics are stable n-gram sets, their query,
pin, and user lists are recomputed per time window from the bigraph."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bigraph import Bigraph, TimeWindow
from .communities import MicroTopic
from .config import PipelineConfig
from .ingest import Interaction, Pin, extract_ngrams, tokenize

logger = logging.getLogger(__name__)


class UnknownQuery(KeyError):
    """Query not in this window's vocabulary."""


class UnknownTopic(KeyError):
    """Topic id absent from the topic list."""


@dataclass(frozen=True)
class QueryScore:
    query: str
    score: int
    popularity: int


@dataclass(frozen=True)
class PinScore:
    pin: str
    score: int


@dataclass(frozen=True)
class Suggestion:
    query: str
    popularity: int
    novel_topic_ids: tuple[str, ...]


@dataclass(frozen=True)
class TopicMaterialization:
    topic_id: str
    window: TimeWindow
    queries: tuple[QueryScore, ...]
    pins: tuple[PinScore, ...]
    users: tuple[str, ...]

    def to_json_obj(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "window": {"start": self.window.start, "end": self.window.end},
            "queries": [
                {"query": q.query, "score": q.score, "popularity": q.popularity}
                for q in self.queries
            ],
            "pins": [{"pin": p.pin, "score": p.score} for p in self.pins],
            "users": list(self.users),
        }


class PinIndex:
    """Pins with tokenized descriptions and a token posting list."""

    def __init__(self, pins: Iterable[Pin]):
        self.pins: list[Pin] = sorted(pins, key=lambda p: p.pin)
        self.tokens: list[tuple[str, ...]] = [
            tuple(tokenize(p.description)) for p in self.pins
        ]
        self.by_id: dict[str, int] = {p.pin: i for i, p in enumerate(self.pins)}
        self.postings: dict[str, list[int]] = {}
        for i, toks in enumerate(self.tokens):
            for t in set(toks):
                self.postings.setdefault(t, []).append(i)

    def __len__(self) -> int:
        return len(self.pins)

    def candidates(self, first_tokens: Iterable[str]) -> list[int]:
        hit: set[int] = set()
        for t in first_tokens:
            hit.update(self.postings.get(t, ()))
        return sorted(hit)


class TopicMatcher:
    """Matches token runs of one or more topics against a token sequence.

    A pin or description matches an n-gram when the n-gram's tokens occur
    as a contiguous run. Scores count distinct matched n-grams per topic.
    """

    def __init__(self, topics: Iterable[MicroTopic]):
        self.by_first: dict[str, list[tuple[tuple[str, ...], str]]] = {}
        self.first_tokens: set[str] = set()
        for t in topics:
            for ngram in t.ngrams:
                tup = tuple(ngram.split(" "))
                self.by_first.setdefault(tup[0], []).append((tup, t.topic_id))
                self.first_tokens.add(tup[0])

    def match(self, tokens: Sequence[str]) -> dict[str, set[tuple[str, ...]]]:
        """topic_id -> set of matched n-gram token tuples."""
        out: dict[str, set[tuple[str, ...]]] = {}
        n = len(tokens)
        for i in range(n):
            for tup, tid in self.by_first.get(tokens[i], ()):
                if len(tup) <= n - i and tuple(tokens[i : i + len(tup)]) == tup:
                    out.setdefault(tid, set()).add(tup)
        return out


def topic_queries(
    topic: MicroTopic, b: Bigraph, k: int = 50
) -> list[QueryScore]:
    """Queries scored by summed co-occurrence with the topic's n-grams.

    Topic n-grams missing from this window contribute nothing. Ranking is
    score, then popularity, then query column id.
    """
    rows = [r for r in (b.row_index(n) for n in topic.ngrams) if r is not None]
    if not rows:
        return []
    scores = np.asarray(b.weights[rows].sum(axis=0)).ravel()
    cols = np.nonzero(scores)[0]
    order = sorted(
        (int(c) for c in cols),
        key=lambda c: (-int(scores[c]), -int(b.query_popularity[c]), c),
    )
    return [
        QueryScore(
            query=b.query_texts[c],
            score=int(scores[c]),
            popularity=int(b.query_popularity[c]),
        )
        for c in order[:k]
    ]


def topic_pins(topic: MicroTopic, pins: PinIndex, k: int = 50) -> list[PinScore]:
    """Pins whose description contains at least one topic n-gram.

    Score is the count of distinct matched n-grams; ties prefer the pin
    whose longest matched n-gram is longer, then pin id.
    """
    matcher = TopicMatcher([topic])
    ranked: list[tuple[int, int, str]] = []
    for i in pins.candidates(matcher.first_tokens):
        matched = matcher.match(pins.tokens[i]).get(topic.topic_id)
        if matched:
            longest = max(len(t) for t in matched)
            ranked.append((len(matched), longest, pins.pins[i].pin))
    ranked.sort(key=lambda r: (-r[0], -r[1], r[2]))
    return [PinScore(pin=pid, score=score) for score, _, pid in ranked[:k]]


def topic_users(
    topic: MicroTopic,
    interactions: Iterable[Interaction],
    pins: PinIndex,
    window: TimeWindow,
    k: int = 50,
    min_interactions: int = 1,
) -> list[str]:
    """Users with enough in-window interactions on the topic's listed pins."""
    listed = {p.pin for p in topic_pins(topic, pins, k)}
    counts: dict[str, int] = {}
    for inter in interactions:
        if inter.pin in listed and window.contains(inter.ts):
            counts[inter.user] = counts.get(inter.user, 0) + 1
    qualified = [u for u, c in counts.items() if c >= min_interactions]
    return sorted(qualified, key=lambda u: (-counts[u], u))


def materialize_topic(
    topic: MicroTopic,
    b: Bigraph,
    pins: PinIndex,
    interactions: Iterable[Interaction],
    config: PipelineConfig,
) -> TopicMaterialization:
    return TopicMaterialization(
        topic_id=topic.topic_id,
        window=b.window,
        queries=tuple(topic_queries(topic, b, config.k_queries)),
        pins=tuple(topic_pins(topic, pins, config.k_pins)),
        users=tuple(
            topic_users(
                topic, interactions, pins, b.window, config.k_pins,
                config.min_interactions,
            )
        ),
    )


def topics_for_query(
    query: str,
    topics: Sequence[MicroTopic],
    b: Bigraph,
) -> list[tuple[MicroTopic, int]]:
    """Topics associated with the query, strongest first.

    A topic counts as associated when at least one of its n-grams
    co-occurred with the query in this window; strength is the summed
    co-occurrence. Ties break on topic id.
    """
    col = b.col_index(query)
    if col is None:
        raise UnknownQuery(query)
    column = b.weights.getcol(col).tocoo()
    by_row = {int(r): int(v) for r, v in zip(column.row, column.data)}
    scored: list[tuple[MicroTopic, int]] = []
    for t in topics:
        score = 0
        for ngram in t.ngrams:
            row = b.row_index(ngram)
            if row is not None:
                score += by_row.get(row, 0)
        if score > 0:
            scored.append((t, score))
    scored.sort(key=lambda ts: (-ts[1], ts[0].topic_id))
    return scored


def suggest_specialized_queries(
    seed_query: str,
    topics: Sequence[MicroTopic],
    b: Bigraph,
    k: int = 50,
) -> list[Suggestion]:
    """Longer variants of the seed query that reach somewhere new.

    Candidates must strictly contain the seed's token set; only those
    associated with at least one topic the seed is not are kept, ranked
    by query popularity.
    """
    col = b.col_index(seed_query)
    if col is None:
        raise UnknownQuery(seed_query)
    seed_tokens = set(b.query_texts[col].split(" "))
    seed_topics = {t.topic_id for t, _ in topics_for_query(b.query_texts[col], topics, b)}

    out: list[tuple[int, int, Suggestion]] = []
    for c, text in enumerate(b.query_texts):
        if c == col:
            continue
        tokens = set(text.split(" "))
        if not (tokens > seed_tokens):
            continue
        assoc = topics_for_query(text, topics, b)
        novel = tuple(sorted(t.topic_id for t, _ in assoc if t.topic_id not in seed_topics))
        if not novel:
            continue
        pop = int(b.query_popularity[c])
        out.append((-pop, c, Suggestion(query=text, popularity=pop, novel_topic_ids=novel)))
    out.sort(key=lambda r: (r[0], r[1]))
    return [s for _, _, s in out[:k]]


def write_materializations(
    mats: Iterable[TopicMaterialization], outdir: str | Path
) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for mat in mats:
        with open(out / f"{mat.topic_id}.json", "w", encoding="utf-8") as fh:
            json.dump(mat.to_json_obj(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
    return out
