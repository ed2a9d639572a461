"""N-gram similarity graph under continuous Jaccard.

Continuous Jaccard of two nonnegative vectors is sum(min) / sum(max) over
coordinates. Graph construction is exact: inverted-index blocking plus an
l1-mass ratio bound only skip pairs that provably land below the
threshold, so the result equals the naive all-pairs graph.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .bigraph import Bigraph, SnapshotError, TimeWindow

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "simgraph/v1"


class BothZero(ValueError):
    """Similarity is undefined when both vectors carry zero mass."""


class UnknownNode(KeyError):
    """Node index outside the graph."""


def continuous_jaccard(a: Mapping, b: Mapping) -> float:
    """sum of coordinate-wise minima over sum of maxima, in [0, 1].

    Generalizes set Jaccard: on 0/1 vectors the minima count the
    intersection and the maxima the union. Scale of the raw values
    matters, but scaling both vectors by the same positive factor does
    not. Raises BothZero when neither vector has any mass.
    """
    num = 0.0
    den = 0.0
    for key, av in a.items():
        if av < 0:
            raise ValueError("vectors must be nonnegative")
        bv = b.get(key, 0.0)
        if bv < 0:
            raise ValueError("vectors must be nonnegative")
        num += min(av, bv)
        den += max(av, bv)
    for key, bv in b.items():
        if key in a:
            continue
        if bv < 0:
            raise ValueError("vectors must be nonnegative")
        den += bv
    if den == 0.0:
        raise BothZero("both vectors are empty")
    return num / den


@dataclass
class SimGraph:
    """Symmetric weighted graph over the bigraph's n-gram rows.

    node_ids maps local node index back to the parent graph for induced
    subgraphs; it is None for a full graph.
    """

    texts: list[str]
    adj: sp.csr_matrix
    threshold: float
    window: TimeWindow | None = None
    config_hash: str = ""
    node_ids: np.ndarray | None = None
    _node_of: dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.texts)

    @property
    def n_edges(self) -> int:
        return int(self.adj.nnz) // 2

    def node_index(self, text: str) -> int | None:
        if not self._node_of and self.texts:
            self._node_of.update({t: i for i, t in enumerate(self.texts)})
        return self._node_of.get(text)

    def neighbors(self, v: int) -> np.ndarray:
        if not 0 <= v < self.n_nodes:
            raise UnknownNode(v)
        return self.adj.indices[self.adj.indptr[v] : self.adj.indptr[v + 1]]

    def edge_weights(self) -> np.ndarray:
        """Each undirected edge's weight once (upper triangle)."""
        coo = sp.triu(self.adj, k=1).tocoo()
        return coo.data


def build_simgraph(b: Bigraph, threshold: float = 0.3) -> SimGraph:
    """Exact thresholded similarity graph over the bigraph's rows.

    Candidates must share at least one query column; survivors of the
    mass-ratio bound min(|a|,|b|) / max(|a|,|b|) >= threshold get an exact
    similarity. Counts are integers, so the arithmetic here reproduces
    continuous_jaccard bit for bit.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    W = b.weights.astype(np.float64)
    W.sort_indices()
    n = W.shape[0]
    l1 = np.asarray(W.sum(axis=1)).ravel()

    support = W.copy()
    support.data = np.ones_like(support.data)
    # Co-support counts; only the sparsity pattern is used.
    block = (support @ support.T).tocsr()

    dense_row = np.zeros(W.shape[1], dtype=np.float64)
    src: list[np.ndarray] = []
    dst: list[np.ndarray] = []
    sims: list[np.ndarray] = []
    for i in range(n):
        cands = block.indices[block.indptr[i] : block.indptr[i + 1]]
        cands = cands[cands > i]
        if cands.size == 0:
            continue
        li = l1[i]
        lc = l1[cands]
        bound = np.minimum(li, lc) / np.maximum(li, lc)
        cands = cands[bound >= threshold]
        if cands.size == 0:
            continue
        row_start, row_end = W.indptr[i], W.indptr[i + 1]
        cols_i = W.indices[row_start:row_end]
        dense_row[cols_i] = W.data[row_start:row_end]
        sub = W[cands]
        mins = np.minimum(sub.data, dense_row[sub.indices])
        seg = np.repeat(np.arange(cands.size), np.diff(sub.indptr))
        m = np.bincount(seg, weights=mins, minlength=cands.size)
        dense_row[cols_i] = 0.0
        sim = m / (li + l1[cands] - m)
        keep = sim >= threshold
        if np.any(keep):
            src.append(np.full(int(keep.sum()), i, dtype=np.int64))
            dst.append(cands[keep].astype(np.int64))
            sims.append(sim[keep])

    if src:
        ii = np.concatenate(src)
        jj = np.concatenate(dst)
        ww = np.concatenate(sims)
    else:
        ii = np.empty(0, dtype=np.int64)
        jj = np.empty(0, dtype=np.int64)
        ww = np.empty(0, dtype=np.float64)

    adj = sp.coo_matrix(
        (np.concatenate([ww, ww]), (np.concatenate([ii, jj]), np.concatenate([jj, ii]))),
        shape=(n, n),
    ).tocsr()
    adj.sort_indices()
    g = SimGraph(
        texts=list(b.ngram_texts),
        adj=adj,
        threshold=threshold,
        window=b.window,
        config_hash=b.config_hash,
    )
    logger.info("simgraph: %d nodes, %d edges (threshold %.3g)", n, g.n_edges, threshold)
    return g


def _induced(adj: sp.csr_matrix, members: np.ndarray) -> sp.csr_matrix:
    """Induced adjacency on `members` (local indices follow members order)."""
    colmap = np.full(adj.shape[0], -1, dtype=np.int64)
    colmap[members] = np.arange(members.size)
    rows = adj[members]
    local_cols = colmap[rows.indices]
    keep = local_cols >= 0
    seg = np.repeat(np.arange(members.size), np.diff(rows.indptr))
    counts = np.bincount(seg[keep], minlength=members.size)
    indptr = np.zeros(members.size + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return sp.csr_matrix(
        (rows.data[keep], local_cols[keep], indptr),
        shape=(members.size, members.size),
    )


def ego_neighborhood(g: SimGraph, v: int) -> SimGraph:
    """Induced subgraph on v's neighbors, with v itself excluded."""
    if not 0 <= v < g.n_nodes:
        raise UnknownNode(v)
    members = g.neighbors(v).astype(np.int64)
    return SimGraph(
        texts=[g.texts[int(m)] for m in members],
        adj=_induced(g.adj, members),
        threshold=g.threshold,
        window=g.window,
        config_hash=g.config_hash,
        node_ids=members,
    )


def save_simgraph(g: SimGraph, outdir: str | Path) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        out / "simgraph.npz",
        indptr=g.adj.indptr,
        indices=g.adj.indices,
        data=g.adj.data,
        texts=np.asarray(g.texts, dtype=np.str_),
    )
    manifest = {
        "format": SNAPSHOT_FORMAT,
        "threshold": g.threshold,
        "counts": {"nodes": g.n_nodes, "edges": g.n_edges},
        "config_hash": g.config_hash,
        "window": None
        if g.window is None
        else {"start": g.window.start, "end": g.window.end},
    }
    # named apart from the bigraph manifest so both fit in one snapshot dir
    with open(out / "simgraph.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def load_simgraph(snapdir: str | Path) -> SimGraph:
    snap = Path(snapdir)
    manifest_path = snap / "simgraph.manifest.json"
    npz_path = snap / "simgraph.npz"
    if not manifest_path.exists() or not npz_path.exists():
        raise SnapshotError(f"{snap} is not a simgraph snapshot")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"unsupported snapshot format: {manifest.get('format')}")
    arrays = np.load(npz_path)
    texts = [str(t) for t in arrays["texts"]]
    adj = sp.csr_matrix(
        (arrays["data"], arrays["indices"], arrays["indptr"]),
        shape=(len(texts), len(texts)),
    )
    window = manifest.get("window")
    return SimGraph(
        texts=texts,
        adj=adj,
        threshold=float(manifest["threshold"]),
        window=None if window is None else TimeWindow(**window),
        config_hash=str(manifest.get("config_hash", "")),
    )
