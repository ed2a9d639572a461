"""Windowed bipartite n-gram/query graph built from query sessions.

Weights are raw session co-occurrence counts; rows are not normalized and
the snapshot manifest records that choice. Node universes (rows and
columns) cover everything seen in the window, while entries below the
co-occurrence floor are dropped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .config import PipelineConfig
from .ingest import Corpus

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "bigraph/v1"


class EmptyWindow(ValueError):
    """No sessions start inside the requested window."""


class UnknownNgram(KeyError):
    """N-gram not present in this window's vocabulary."""


class SnapshotError(ValueError):
    """Snapshot directory is missing pieces or has an incompatible format."""


@dataclass(frozen=True)
class TimeWindow:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError("window start must be before end")

    def contains(self, ts: float) -> bool:
        return self.start <= ts < self.end


@dataclass
class Bigraph:
    """CSR weights over (ngram row, query column), plus per-node counts.

    Row and column order is the sorted order of the window's vocabulary,
    so identical inputs produce identical snapshots.
    """

    window: TimeWindow
    ngram_texts: list[str]
    query_texts: list[str]
    weights: sp.csr_matrix
    query_popularity: np.ndarray
    ngram_session_count: np.ndarray
    session_count: int
    config_hash: str = ""
    _row_of: dict[str, int] = field(default_factory=dict, repr=False)
    _col_of: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self._row_of:
            self._row_of.update({t: i for i, t in enumerate(self.ngram_texts)})
        if not self._col_of:
            self._col_of.update({t: i for i, t in enumerate(self.query_texts)})

    @property
    def n_ngrams(self) -> int:
        return len(self.ngram_texts)

    @property
    def n_queries(self) -> int:
        return len(self.query_texts)

    def row_index(self, ngram: str) -> int | None:
        return self._row_of.get(ngram)

    def col_index(self, query: str) -> int | None:
        return self._col_of.get(query)

    def popularity(self, query: str) -> int:
        col = self._col_of.get(query)
        return 0 if col is None else int(self.query_popularity[col])


def build_bigraph(
    corpus: Corpus, window: TimeWindow, config: PipelineConfig
) -> Bigraph:
    """Count session co-occurrences between n-grams and queries.

    Each session contributes at most one count per (ngram, query) pair:
    every n-gram of every query in the session pairs with every query in
    the session, own query included. Entries below min_cooccurrence are
    dropped afterwards.
    """
    sessions = [s for s in corpus.sessions if window.contains(s.start)]
    if not sessions:
        raise EmptyWindow(f"no sessions start in [{window.start}, {window.end})")

    n_global_queries = len(corpus.queries)
    key_chunks: list[np.ndarray] = []
    query_session_counter: dict[int, int] = {}
    ngram_session_counter: dict[int, int] = {}
    for s in sessions:
        qids = np.fromiter(s.query_ids, dtype=np.int64, count=len(s.query_ids))
        gram_set: set[int] = set()
        for qid in s.query_ids:
            gram_set.update(corpus.ngrams_by_query[qid])
        if gram_set:
            grams = np.fromiter(gram_set, dtype=np.int64, count=len(gram_set))
            key_chunks.append((grams[:, None] * n_global_queries + qids[None, :]).ravel())
        for qid in s.query_ids:
            query_session_counter[qid] = query_session_counter.get(qid, 0) + 1
        for gid in gram_set:
            ngram_session_counter[gid] = ngram_session_counter.get(gid, 0) + 1

    if key_chunks:
        keys, counts = np.unique(np.concatenate(key_chunks), return_counts=True)
    else:
        keys = np.empty(0, dtype=np.int64)
        counts = np.empty(0, dtype=np.int64)
    keep = counts >= config.min_cooccurrence
    keys, counts = keys[keep], counts[keep]

    # Window universe: everything observed, thresholded or not.
    row_gids = np.fromiter(sorted(ngram_session_counter), dtype=np.int64,
                           count=len(ngram_session_counter))
    col_qids = np.fromiter(sorted(query_session_counter), dtype=np.int64,
                           count=len(query_session_counter))
    row_pos = {int(g): i for i, g in enumerate(row_gids)}
    col_pos = {int(q): i for i, q in enumerate(col_qids)}

    rows = np.fromiter((row_pos[int(k // n_global_queries)] for k in keys),
                       dtype=np.int64, count=len(keys))
    cols = np.fromiter((col_pos[int(k % n_global_queries)] for k in keys),
                       dtype=np.int64, count=len(keys))
    weights = sp.csr_matrix(
        (counts.astype(np.int64), (rows, cols)),
        shape=(len(row_gids), len(col_qids)),
    )
    weights.sort_indices()

    popularity = np.fromiter((query_session_counter[int(q)] for q in col_qids),
                             dtype=np.int64, count=len(col_qids))
    gram_sessions = np.fromiter((ngram_session_counter[int(g)] for g in row_gids),
                                dtype=np.int64, count=len(row_gids))

    b = Bigraph(
        window=window,
        ngram_texts=[corpus.ngrams.text(int(g)) for g in row_gids],
        query_texts=[corpus.queries.text(int(q)) for q in col_qids],
        weights=weights,
        query_popularity=popularity,
        ngram_session_count=gram_sessions,
        session_count=len(sessions),
        config_hash=config.content_hash(),
    )
    logger.info(
        "bigraph [%s, %s): %d sessions, %d ngrams x %d queries, %d entries",
        window.start, window.end, len(sessions), b.n_ngrams, b.n_queries,
        weights.nnz,
    )
    return b


def query_distribution(b: Bigraph, ngram: str | int) -> dict[int, int]:
    """Raw co-occurrence row for one n-gram, keyed by query column index."""
    if isinstance(ngram, str):
        row = b.row_index(ngram)
        if row is None:
            raise UnknownNgram(ngram)
    else:
        row = int(ngram)
        if not 0 <= row < b.n_ngrams:
            raise UnknownNgram(ngram)
    start, end = b.weights.indptr[row], b.weights.indptr[row + 1]
    cols = b.weights.indices[start:end]
    vals = b.weights.data[start:end]
    return {int(c): int(v) for c, v in zip(cols, vals)}


def save_bigraph(b: Bigraph, outdir: str | Path) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        out / "bigraph.npz",
        indptr=b.weights.indptr,
        indices=b.weights.indices,
        data=b.weights.data,
        ngram_texts=np.asarray(b.ngram_texts, dtype=np.str_),
        query_texts=np.asarray(b.query_texts, dtype=np.str_),
        query_popularity=b.query_popularity,
        ngram_session_count=b.ngram_session_count,
    )
    manifest = {
        "format": SNAPSHOT_FORMAT,
        "window": {"start": b.window.start, "end": b.window.end},
        "counts": {
            "sessions": b.session_count,
            "ngrams": b.n_ngrams,
            "queries": b.n_queries,
            "entries": int(b.weights.nnz),
        },
        "config_hash": b.config_hash,
        "rows_normalized": False,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_bigraph(snapdir: str | Path) -> Bigraph:
    snap = Path(snapdir)
    manifest_path = snap / "manifest.json"
    npz_path = snap / "bigraph.npz"
    if not manifest_path.exists() or not npz_path.exists():
        raise SnapshotError(f"{snap} is not a bigraph snapshot")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"unsupported snapshot format: {manifest.get('format')}")
    arrays = np.load(npz_path)
    ngram_texts = [str(t) for t in arrays["ngram_texts"]]
    query_texts = [str(t) for t in arrays["query_texts"]]
    weights = sp.csr_matrix(
        (arrays["data"], arrays["indices"], arrays["indptr"]),
        shape=(len(ngram_texts), len(query_texts)),
    )
    return Bigraph(
        window=TimeWindow(**manifest["window"]),
        ngram_texts=ngram_texts,
        query_texts=query_texts,
        weights=weights,
        query_popularity=arrays["query_popularity"],
        ngram_session_count=arrays["ngram_session_count"],
        session_count=int(manifest["counts"]["sessions"]),
        config_hash=str(manifest.get("config_hash", "")),
    )
