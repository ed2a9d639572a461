"""Corpus ingest: raw event logs to normalized, interned query sessions.

Readers accept JSON-lines files and report malformed lines by line number
instead of dying mid-file; callers that want to die pass strict=True.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .config import PipelineConfig

logger = logging.getLogger(__name__)

ACTIONS = ("save", "click", "close-up")


class IngestError(ValueError):
    """Malformed input encountered in strict mode."""


@dataclass(frozen=True, slots=True)
class LineError:
    path: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line}: {self.message}"


@dataclass(frozen=True, slots=True)
class QueryEvent:
    user: str
    ts: float
    query: str


@dataclass(frozen=True, slots=True)
class Pin:
    pin: str
    description: str
    image_url: str = ""


@dataclass(frozen=True, slots=True)
class Interaction:
    user: str
    pin: str
    action: str
    ts: float


@dataclass(frozen=True, slots=True)
class Session:
    """One user's query run: consecutive events no more than `gap` apart.

    queries holds normalized text, first occurrence only, in issue order.
    """

    user: str
    start: float
    end: float
    queries: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class IdSession:
    """Session after interning; only queries that met the frequency floor."""

    user: str
    start: float
    end: float
    query_ids: tuple[int, ...]


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def normalize_query(raw: str) -> str:
    """Canonical query text: NFC, lowercased, single-spaced, edge punctuation
    dropped per token. Idempotent; whitespace-only input comes back empty."""
    text = unicodedata.normalize("NFC", raw).lower()
    parts = [t for t in (_strip_edge_punct(tok) for tok in text.split()) if t]
    return " ".join(parts)


def tokenize(text: str) -> list[str]:
    return normalize_query(text).split()


def extract_ngrams(
    text: str, n_max: int = 3, stopwords: Iterable[str] = ()
) -> list[str]:
    """Contiguous word n-grams for n in 1..n_max, first occurrence order.

    N-grams made up entirely of stopwords are dropped; mixed ones survive.
    """
    stop = frozenset(stopwords)
    tokens = tokenize(text)
    seen: dict[str, None] = {}
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            window = tokens[i : i + n]
            if all(t in stop for t in window):
                continue
            seen.setdefault(" ".join(window), None)
    return list(seen)


def sessionize(events: Iterable[QueryEvent], gap: float) -> list[Session]:
    """Split each user's event stream into sessions.

    Events are sorted by timestamp per user (ties keep input order). An
    inter-arrival of at most `gap` keeps chaining the current session, so a
    session can span longer than `gap` end to end. Queries are normalized
    and deduplicated within the session; empty normalizations are skipped
    for the query list but still extend the session's time span.
    """
    by_user: dict[str, list[QueryEvent]] = {}
    for ev in events:
        by_user.setdefault(ev.user, []).append(ev)

    sessions: list[Session] = []
    for user in by_user:
        evs = sorted(by_user[user], key=lambda e: e.ts)
        cur: list[QueryEvent] = []
        for ev in evs:
            if cur and ev.ts - cur[-1].ts > gap:
                sessions.append(_finish_session(user, cur))
                cur = []
            cur.append(ev)
        if cur:
            sessions.append(_finish_session(user, cur))
    return [s for s in sessions if s.queries]


def _finish_session(user: str, events: list[QueryEvent]) -> Session:
    queries: dict[str, None] = {}
    for ev in events:
        q = normalize_query(ev.query)
        if q:
            queries.setdefault(q, None)
    return Session(
        user=user, start=events[0].ts, end=events[-1].ts, queries=tuple(queries)
    )


class Interner:
    """Dense string <-> int mapping, ids in first-intern order."""

    def __init__(self) -> None:
        self._by_text: dict[str, int] = {}
        self._by_id: list[str] = []

    def intern(self, text: str) -> int:
        existing = self._by_text.get(text)
        if existing is not None:
            return existing
        idx = len(self._by_id)
        self._by_text[text] = idx
        self._by_id.append(text)
        return idx

    def get(self, text: str) -> int | None:
        return self._by_text.get(text)

    def text(self, idx: int) -> str:
        return self._by_id[idx]

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, text: str) -> bool:
        return text in self._by_text

    def texts(self) -> list[str]:
        return list(self._by_id)


@dataclass
class Corpus:
    """Everything downstream stages need, with queries and n-grams interned."""

    queries: Interner
    ngrams: Interner
    sessions: list[IdSession]
    ngrams_by_query: list[tuple[int, ...]]
    pins: list[Pin] = field(default_factory=list)
    interactions: list[Interaction] = field(default_factory=list)


def build_corpus(
    events: Iterable[QueryEvent],
    config: PipelineConfig,
    pins: list[Pin] | None = None,
    interactions: list[Interaction] | None = None,
) -> Corpus:
    """Sessionize, apply the query frequency floor, intern, extract n-grams.

    Query ids follow first-occurrence order in the event stream; a query is
    interned only if its normalized form occurs at least min_query_freq
    times corpus-wide. Sessions left with no interned queries are dropped.
    """
    raw_sessions = sessionize(events, config.session_gap)

    freq: Counter[str] = Counter()
    for s in raw_sessions:
        for q in s.queries:
            freq[q] += 1

    queries = Interner()
    for q, count in freq.items():
        if count >= config.min_query_freq:
            queries.intern(q)

    sessions: list[IdSession] = []
    for s in raw_sessions:
        ids = tuple(
            qid for qid in (queries.get(q) for q in s.queries) if qid is not None
        )
        if ids:
            sessions.append(IdSession(s.user, s.start, s.end, ids))

    ngrams = Interner()
    stop = frozenset(config.stopwords)
    ngrams_by_query: list[tuple[int, ...]] = []
    for qid in range(len(queries)):
        grams = extract_ngrams(queries.text(qid), config.n_max, stop)
        ngrams_by_query.append(tuple(ngrams.intern(g) for g in grams))

    logger.info(
        "corpus: %d sessions, %d queries, %d ngrams",
        len(sessions),
        len(queries),
        len(ngrams),
    )
    return Corpus(
        queries=queries,
        ngrams=ngrams,
        sessions=sessions,
        ngrams_by_query=ngrams_by_query,
        pins=list(pins or []),
        interactions=list(interactions or []),
    )


def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, object | None, str | None]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line), None
            except json.JSONDecodeError as exc:
                yield lineno, None, f"invalid JSON: {exc.msg}"


def _read_records(
    path: str | Path,
    parse,
    strict: bool,
) -> tuple[list, list[LineError]]:
    items: list = []
    errors: list[LineError] = []
    for lineno, obj, err in _iter_jsonl(path):
        if err is None:
            try:
                items.append(parse(obj))
                continue
            except (KeyError, TypeError, ValueError) as exc:
                err = str(exc) or exc.__class__.__name__
        record = LineError(str(path), lineno, err)
        if strict:
            raise IngestError(str(record))
        errors.append(record)
    if errors:
        logger.warning("%s: skipped %d malformed lines", path, len(errors))
    return items, errors


def _require_str(obj: dict, key: str) -> str:
    value = obj[key]
    if not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string")
    return value


def _require_num(obj: dict, key: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"field {key!r} must be a number")
    return float(value)


def _parse_event(obj: object) -> QueryEvent:
    if not isinstance(obj, dict):
        raise ValueError("line must be a JSON object")
    return QueryEvent(
        user=_require_str(obj, "user"),
        ts=_require_num(obj, "ts"),
        query=_require_str(obj, "query"),
    )


def _parse_pin(obj: object) -> Pin:
    if not isinstance(obj, dict):
        raise ValueError("line must be a JSON object")
    return Pin(
        pin=_require_str(obj, "pin"),
        description=_require_str(obj, "description"),
        image_url=str(obj.get("image_url", "")),
    )


def _parse_interaction(obj: object) -> Interaction:
    if not isinstance(obj, dict):
        raise ValueError("line must be a JSON object")
    action = _require_str(obj, "action")
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action!r}")
    return Interaction(
        user=_require_str(obj, "user"),
        pin=_require_str(obj, "pin"),
        action=action,
        ts=_require_num(obj, "ts"),
    )


def read_query_events(
    path: str | Path, strict: bool = False
) -> tuple[list[QueryEvent], list[LineError]]:
    return _read_records(path, _parse_event, strict)


def read_pins(path: str | Path, strict: bool = False) -> tuple[list[Pin], list[LineError]]:
    return _read_records(path, _parse_pin, strict)


def read_interactions(
    path: str | Path, strict: bool = False
) -> tuple[list[Interaction], list[LineError]]:
    return _read_records(path, _parse_interaction, strict)
