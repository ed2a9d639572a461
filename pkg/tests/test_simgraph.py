import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topicforge.bigraph import TimeWindow, build_bigraph
from topicforge.config import PipelineConfig
from topicforge.ingest import build_corpus
from topicforge.simgraph import (
    BothZero,
    UnknownNode,
    build_simgraph,
    continuous_jaccard,
    ego_neighborhood,
    load_simgraph,
    save_simgraph,
)

from helpers import naive_simgraph, random_events, simgraph_edges

CFG = PipelineConfig(
    min_query_freq=1, n_max=2, stopwords=frozenset(), min_cooccurrence=1
)
WIN = TimeWindow(0.0, 1e9)


# -- the similarity itself -----------------------------------------------------


def test_hand_example():
    a = {"q1": 2.0, "q2": 1.0}
    b = {"q1": 1.0, "q2": 3.0}
    # min mass 1+1=2, max mass 2+3=5
    assert continuous_jaccard(a, b) == 0.4


def test_identical_and_disjoint():
    a = {"x": 3.0, "y": 1.0}
    assert continuous_jaccard(a, dict(a)) == 1.0
    assert continuous_jaccard(a, {"z": 5.0}) == 0.0


def test_zero_valued_entries_are_ignorable():
    assert continuous_jaccard({"x": 1.0, "y": 0.0}, {"x": 1.0}) == 1.0


def test_both_zero_raises():
    with pytest.raises(BothZero):
        continuous_jaccard({}, {})
    with pytest.raises(BothZero):
        continuous_jaccard({"x": 0.0}, {})


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        continuous_jaccard({"x": -1.0}, {"x": 2.0})


finite_weights = st.dictionaries(
    st.integers(min_value=0, max_value=8),
    st.integers(min_value=0, max_value=50),
    max_size=6,
)


@given(finite_weights, finite_weights)
def test_symmetry(a, b):
    if sum(a.values()) + sum(b.values()) == 0:
        return
    assert continuous_jaccard(a, b) == continuous_jaccard(b, a)


@given(finite_weights, finite_weights)
def test_bounded_between_zero_and_one(a, b):
    if sum(a.values()) + sum(b.values()) == 0:
        return
    s = continuous_jaccard(a, b)
    assert 0.0 <= s <= 1.0


@given(st.sets(st.integers(0, 10), min_size=1, max_size=6),
       st.sets(st.integers(0, 10), min_size=1, max_size=6))
def test_binary_vectors_reduce_to_set_jaccard(xs, ys):
    a = {k: 1 for k in xs}
    b = {k: 1 for k in ys}
    expected = len(xs & ys) / len(xs | ys)
    assert continuous_jaccard(a, b) == expected


@given(finite_weights.filter(lambda d: sum(d.values()) > 0))
def test_doubling_one_side_gives_exactly_half(a):
    doubled = {k: 2 * v for k, v in a.items()}
    assert continuous_jaccard(a, doubled) == 0.5


@given(finite_weights, finite_weights)
def test_matches_naive_oracle_exactly(a, b):
    if sum(a.values()) + sum(b.values()) == 0:
        return
    keys = set(a) | set(b)
    m = sum(min(a.get(k, 0), b.get(k, 0)) for k in keys)
    den = sum(max(a.get(k, 0), b.get(k, 0)) for k in keys)
    assert continuous_jaccard(a, b) == m / den


# -- graph construction ----------------------------------------------------------


def _graph(seed, n_sessions=50, threshold=0.3):
    rng = random.Random(seed)
    corpus = build_corpus(random_events(rng, n_sessions=n_sessions), CFG)
    b = build_bigraph(corpus, WIN, CFG)
    return b, build_simgraph(b, threshold)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("threshold", [0.2, 0.35, 0.6])
def test_blocked_build_equals_naive_all_pairs(seed, threshold):
    b, g = _graph(seed, threshold=threshold)
    expected = naive_simgraph(b, threshold)
    got = simgraph_edges(g)
    assert got.keys() == expected.keys()
    for key in expected:
        assert got[key] == expected[key], key  # bit-for-bit, not approx


def test_adjacency_is_symmetric_with_empty_diagonal():
    _, g = _graph(1)
    assert (g.adj != g.adj.T).nnz == 0
    assert g.adj.diagonal().sum() == 0


def test_threshold_is_inclusive():
    # two n-grams always together, one sometimes alone -> known ratios
    b, _ = _graph(2)
    g_all = build_simgraph(b, threshold=1e-12)
    weights = g_all.edge_weights()
    t = float(np.median(weights))
    g_cut = build_simgraph(b, threshold=t)
    kept = g_cut.edge_weights()
    assert (kept >= t).all()
    assert len(kept) == int((weights >= t).sum())


def test_node_universe_is_preserved():
    b, g = _graph(3)
    assert g.n_nodes == b.n_ngrams
    assert g.texts == b.ngram_texts


def test_neighbors_and_edge_weights():
    b, g = _graph(4)
    edges = simgraph_edges(g)
    assert g.n_edges == len(edges)
    assert len(g.edge_weights()) == len(edges)
    for (i, j) in list(edges)[:10]:
        assert j in g.neighbors(i)
        assert i in g.neighbors(j)


def test_ego_neighborhood_hand_checked():
    b, g = _graph(5, threshold=0.2)
    full = simgraph_edges(g)
    v = max(
        range(g.n_nodes),
        key=lambda n: len(g.neighbors(n)),
    )
    nbrs = set(g.neighbors(v).tolist())
    assert v not in nbrs
    ego = ego_neighborhood(g, v)
    assert set(ego.node_ids.tolist()) == nbrs
    # edges in the ego graph are exactly the full-graph edges between neighbors
    ego_edges = {
        tuple(sorted((int(ego.node_ids[i]), int(ego.node_ids[j])))): w
        for (i, j), w in simgraph_edges(ego).items()
    }
    expected = {
        (i, j): w for (i, j), w in full.items() if i in nbrs and j in nbrs
    }
    assert ego_edges == expected


def test_ego_neighborhood_unknown_node():
    _, g = _graph(6)
    with pytest.raises(UnknownNode):
        ego_neighborhood(g, g.n_nodes + 5)


def test_save_load_round_trip(tmp_path):
    _, g = _graph(7)
    save_simgraph(g, tmp_path)
    loaded = load_simgraph(tmp_path)
    assert loaded.texts == g.texts
    assert loaded.threshold == g.threshold
    assert (loaded.adj != g.adj).nnz == 0
