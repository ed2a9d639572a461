"""Shared test fixtures: tiny corpora and brute-force reference oracles.

The oracles here recompute results the slow, obvious way (dict loops over
sessions and row pairs) so the vectorized implementations have something
independent to be checked against.
"""

import random
from collections import Counter

from topicforge.bigraph import Bigraph, TimeWindow, query_distribution
from topicforge.ingest import Corpus, QueryEvent

WORDS = [
    "oak", "teak", "pine", "sofa", "lamp", "rug", "vase", "desk",
    "shelf", "stool", "bench", "mirror",
]


def random_events(
    rng: random.Random,
    n_sessions: int = 40,
    vocab=WORDS,
    users: int = 6,
    queries_per_session=(1, 4),
    max_words: int = 2,
) -> list[QueryEvent]:
    """Sessions spaced far apart so each burst is its own session."""
    events = []
    for i in range(n_sessions):
        user = f"u{rng.randrange(users)}"
        start = i * 10_000.0
        for j in range(rng.randint(*queries_per_session)):
            words = [rng.choice(vocab) for _ in range(rng.randint(1, max_words))]
            events.append(
                QueryEvent(user=user, ts=start + j * 30.0, query=" ".join(words))
            )
    return events


def brute_weights(
    corpus: Corpus, window: TimeWindow, min_cooccurrence: int
) -> dict[tuple[int, int], int]:
    """(ngram_id, query_id) -> number of in-window sessions with both."""
    counts: Counter = Counter()
    for s in corpus.sessions:
        if not window.contains(s.start):
            continue
        qids = set(s.query_ids)
        grams = set()
        for q in qids:
            grams.update(corpus.ngrams_by_query[q])
        for g in grams:
            for q in qids:
                counts[(g, q)] += 1
    return {k: v for k, v in counts.items() if v >= min_cooccurrence}


def csr_entries(b: Bigraph) -> dict[tuple[int, int], int]:
    out = {}
    coo = b.weights.tocoo()
    for r, c, v in zip(coo.row, coo.col, coo.data):
        out[(int(r), int(c))] = int(v)
    return out


def naive_cj(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    m = sum(min(a.get(k, 0), b.get(k, 0)) for k in keys)
    big = sum(max(a.get(k, 0), b.get(k, 0)) for k in keys)
    if big == 0:
        raise ZeroDivisionError
    return m / big


def naive_simgraph(b: Bigraph, threshold: float) -> dict[tuple[int, int], float]:
    """All-pairs similarity with plain dict arithmetic, no blocking."""
    rows = [query_distribution(b, i) for i in range(b.n_ngrams)]
    edges: dict[tuple[int, int], float] = {}
    for i in range(b.n_ngrams):
        if not rows[i]:
            continue
        for j in range(i + 1, b.n_ngrams):
            if not rows[j]:
                continue
            sim = naive_cj(rows[i], rows[j])
            if sim >= threshold:
                edges[(i, j)] = sim
    return edges


def simgraph_edges(g) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    coo = g.adj.tocoo()
    for r, c, v in zip(coo.row, coo.col, coo.data):
        if r < c:
            out[(int(r), int(c))] = float(v)
    return out
