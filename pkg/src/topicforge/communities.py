"""Micro-topic discovery: Chinese Whispers over ego-neighborhoods.

Each node's neighborhood (the node itself excluded) is clustered with an
annealed Chinese Whispers: early iterations only see the strongest edges,
later ones progressively weaker edges, which keeps dense cores from being
absorbed into loose agglomerates before they stabilize. Label classes are
re-joined with the ego node, pooled across all egos, and greedily
deduplicated. A node may end up in several topics; that is the point.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .config import PipelineConfig
from .simgraph import SimGraph, ego_neighborhood

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealSchedule:
    """Edge-weight percentile floors keyed by first applicable iteration.

    Floors must strictly decrease and end at percentile 0 (all edges
    active), so a run that converges has seen the whole graph.
    """

    stages: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValueError("schedule must have at least one stage")
        last_it, last_pct = -1, 101.0
        for it, pct in self.stages:
            if it <= last_it:
                raise ValueError("stage iterations must strictly increase")
            if not 0.0 <= pct <= 100.0:
                raise ValueError("percentile must be in [0, 100]")
            if pct >= last_pct:
                raise ValueError("percentile floors must strictly decrease")
            last_it, last_pct = it, pct
        if self.stages[0][0] != 0:
            raise ValueError("schedule must start at iteration 0")
        if self.stages[-1][1] != 0.0:
            raise ValueError("schedule must end at percentile 0")

    def percentile_at(self, iteration: int) -> float:
        current = self.stages[0][1]
        for it, pct in self.stages:
            if it <= iteration:
                current = pct
            else:
                break
        return current

    def floor_values(
        self, edge_weights: np.ndarray, max_iters: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Per-iteration weight floors and whether every edge is active."""
        floors = np.zeros(max_iters, dtype=np.float64)
        all_active = np.ones(max_iters, dtype=np.bool_)
        if edge_weights.size == 0:
            return floors, all_active
        lo = float(edge_weights.min())
        pcts = sorted({self.percentile_at(it) for it in range(max_iters)})
        values = {p: float(np.percentile(edge_weights, p)) for p in pcts}
        for it in range(max_iters):
            f = values[self.percentile_at(it)]
            floors[it] = f
            all_active[it] = f <= lo
        return floors, all_active


@njit(cache=True)
def _cw_kernel(indptr, indices, weights, floors, all_active, seed):  # pragma: no cover
    n = indptr.shape[0] - 1
    labels = np.arange(n, dtype=np.int64)
    order = np.arange(n, dtype=np.int64)
    score = np.zeros(n, dtype=np.float64)
    touched = np.empty(n, dtype=np.int64)
    state = np.uint64(seed)
    converged = False
    for it in range(floors.shape[0]):
        floor = floors[it]
        changed = False
        for i in range(n - 1, 0, -1):
            state = state + np.uint64(0x9E3779B97F4A7C15)
            z = state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
            j = np.int64(z % np.uint64(i + 1))
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        for k in range(n):
            v = order[k]
            ntouch = 0
            for e in range(indptr[v], indptr[v + 1]):
                w = weights[e]
                if w < floor:
                    continue
                lab = labels[indices[e]]
                if score[lab] == 0.0:
                    touched[ntouch] = lab
                    ntouch += 1
                score[lab] += w
            if ntouch == 0:
                continue
            best_label = np.int64(-1)
            best_score = 0.0
            for t in range(ntouch):
                lab = touched[t]
                s = score[lab]
                if s > best_score or (s == best_score and lab < best_label):
                    best_score = s
                    best_label = lab
                score[lab] = 0.0
            if best_label != labels[v]:
                labels[v] = best_label
                changed = True
        if all_active[it] and not changed:
            converged = True
            break
    return labels, converged


def _mix_seed(seed: int, salt: int) -> int:
    return (seed * 6364136223846793005 + salt * 1442695040888963407 + 1) % (1 << 64)


def chinese_whispers(
    g: SimGraph,
    schedule: AnnealSchedule,
    max_iters: int = 20,
    seed: int = 0,
) -> tuple[np.ndarray, bool]:
    """Label propagation with annealed edge activation.

    Every node starts as its own label. Per iteration, nodes are visited
    in a seeded random order and each adopts the label with the largest
    summed weight over currently active edges, smallest label id on ties;
    updates land immediately. Convergence is only declared on a no-change
    iteration where every edge is active.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    floors, all_active = schedule.floor_values(g.edge_weights(), max_iters)
    labels, converged = _cw_kernel(
        g.adj.indptr.astype(np.int64),
        g.adj.indices.astype(np.int64),
        g.adj.data.astype(np.float64),
        floors,
        all_active,
        np.uint64(_mix_seed(seed, 0x5DEECE66D)),
    )
    return labels, bool(converged)


@dataclass(frozen=True)
class TopicCandidate:
    """One label class from one ego run, ego node included."""

    ngrams: frozenset[str]
    ego: str
    density: float


@dataclass(frozen=True)
class MicroTopic:
    """A stable set of n-grams; identity is a hash of the sorted set."""

    topic_id: str
    ngrams: tuple[str, ...]
    density: float
    egos: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.ngrams)


def topic_id_for(ngrams: Iterable[str]) -> str:
    blob = "\x1f".join(sorted(ngrams)).encode("utf-8")
    return hashlib.sha1(blob).hexdigest()[:16]


def make_topic(ngrams: Iterable[str], density: float, egos: Iterable[str]) -> MicroTopic:
    ordered = tuple(sorted(set(ngrams)))
    return MicroTopic(
        topic_id=topic_id_for(ordered),
        ngrams=ordered,
        density=float(density),
        egos=tuple(sorted(set(egos))),
    )


def _set_jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / (len(a) + len(b) - inter)


def dedup_topics(
    candidates: Sequence[TopicCandidate], dedup_threshold: float = 0.7
) -> list[MicroTopic]:
    """Greedy dedup, larger sets first, lexicographic n-gram order on ties.

    A later candidate is absorbed by the accepted topic it overlaps most
    (set Jaccard >= dedup_threshold), merging provenance and keeping the
    accepted topic's n-grams. Running the output back through changes
    nothing: survivors are pairwise below the threshold.
    """
    ordered = sorted(
        candidates, key=lambda c: (-len(c.ngrams), tuple(sorted(c.ngrams)))
    )
    accepted: list[dict] = []
    for cand in ordered:
        best_i = -1
        best_j = 0.0
        for i, acc in enumerate(accepted):
            j = _set_jaccard(cand.ngrams, acc["ngrams"])
            if j > best_j:
                best_j = j
                best_i = i
        if best_i >= 0 and best_j >= dedup_threshold:
            accepted[best_i]["egos"].add(cand.ego)
        else:
            accepted.append(
                {"ngrams": cand.ngrams, "density": cand.density, "egos": {cand.ego}}
            )
    return [
        make_topic(acc["ngrams"], acc["density"], acc["egos"]) for acc in accepted
    ]


def discover_communities(g: SimGraph, config: PipelineConfig) -> list[MicroTopic]:
    """Cluster every ego-neighborhood, pool the label classes, dedup.

    A label class is re-joined with its ego node before the size and
    density gates, so a k-clique collapses to a single topic over all k
    nodes and a bridge node lands in the topics on both of its sides.
    """
    schedule = AnnealSchedule(config.anneal_stages)
    adj = g.adj
    member_mask = np.zeros(g.n_nodes, dtype=bool)
    candidates: list[TopicCandidate] = []

    for v in range(g.n_nodes):
        ego = ego_neighborhood(g, v)
        if ego.n_nodes == 0:
            continue
        labels, _ = chinese_whispers(
            ego, schedule, config.max_iters, seed=_mix_seed(config.seed, v)
        )
        for lab in np.unique(labels):
            locals_ = np.nonzero(labels == lab)[0]
            members = ego.node_ids[locals_]
            full = np.append(members, v)
            if full.size < config.min_topic_size:
                continue
            density = _density(adj, full, member_mask)
            if density < config.density_floor:
                continue
            candidates.append(
                TopicCandidate(
                    ngrams=frozenset(g.texts[int(m)] for m in full),
                    ego=g.texts[v],
                    density=density,
                )
            )

    topics = dedup_topics(candidates, config.dedup_threshold)
    logger.info(
        "communities: %d candidates from %d nodes -> %d topics",
        len(candidates), g.n_nodes, len(topics),
    )
    return topics


def _density(adj, nodes: np.ndarray, mask: np.ndarray) -> float:
    """Mean pairwise weight over all unordered pairs, absent edges as 0."""
    k = nodes.size
    if k < 2:
        return 0.0
    mask[nodes] = True
    total = 0.0
    for v in nodes:
        start, end = adj.indptr[v], adj.indptr[v + 1]
        cols = adj.indices[start:end]
        total += adj.data[start:end][mask[cols]].sum()
    mask[nodes] = False
    return float(total) / (k * (k - 1))


def write_topics(topics: Sequence[MicroTopic], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for t in topics:
            obj = {
                "topic_id": t.topic_id,
                "ngrams": list(t.ngrams),
                "density": t.density,
                "egos": list(t.egos),
            }
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    return path


def read_topics(path: str | Path) -> list[MicroTopic]:
    topics: list[MicroTopic] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                topics.append(
                    MicroTopic(
                        topic_id=str(obj["topic_id"]),
                        ngrams=tuple(obj["ngrams"]),
                        density=float(obj["density"]),
                        egos=tuple(obj.get("egos", [])),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad topic record: {exc}") from exc
    return topics
