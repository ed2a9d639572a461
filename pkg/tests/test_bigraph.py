import random

import numpy as np
import pytest

from topicforge.bigraph import (
    EmptyWindow,
    SnapshotError,
    TimeWindow,
    UnknownNgram,
    build_bigraph,
    load_bigraph,
    query_distribution,
    save_bigraph,
)
from topicforge.config import PipelineConfig
from topicforge.ingest import QueryEvent, build_corpus

from helpers import brute_weights, csr_entries, random_events

CFG = PipelineConfig(min_query_freq=1, n_max=2, stopwords=frozenset())
WIN = TimeWindow(0.0, 1e9)


def _ev(user, ts, q):
    return QueryEvent(user=user, ts=float(ts), query=q)


def _hand_corpus():
    # u1: one session with "oak table" + "oak chair"
    # u2: "oak table" alone; u3: "garden bench" alone
    events = [
        _ev("u1", 0, "oak table"),
        _ev("u1", 30, "oak chair"),
        _ev("u2", 0, "oak table"),
        _ev("u3", 0, "garden bench"),
    ]
    return build_corpus(events, CFG)


def test_time_window_validates_and_is_half_open():
    with pytest.raises(ValueError):
        TimeWindow(5.0, 5.0)
    w = TimeWindow(0.0, 10.0)
    assert w.contains(0.0) and w.contains(9.999)
    assert not w.contains(10.0) and not w.contains(-0.1)


def test_hand_counted_weights():
    corpus = _hand_corpus()
    b = build_bigraph(corpus, WIN, CFG.replace(min_cooccurrence=1))

    def w(ngram, query):
        row = b._row_of[ngram]
        col = b._col_of[query]
        return csr_entries(b).get((row, col), 0)

    # "oak" appears in u1's and u2's sessions; both contain "oak table"
    assert w("oak", "oak table") == 2
    # only u1's session has both "oak" and "oak chair"
    assert w("oak", "oak chair") == 1
    assert w("oak table", "oak table") == 2
    assert w("chair", "oak table") == 1  # same u1 session
    assert w("garden bench", "garden bench") == 1
    assert w("garden", "oak table") == 0


def test_min_cooccurrence_prunes_entries_not_universe():
    corpus = _hand_corpus()
    b1 = build_bigraph(corpus, WIN, CFG.replace(min_cooccurrence=1))
    b2 = build_bigraph(corpus, WIN, CFG.replace(min_cooccurrence=2))
    assert b2.n_ngrams == b1.n_ngrams and b2.n_queries == b1.n_queries
    entries = csr_entries(b2)
    # only pairs seen in two sessions survive
    assert set(entries.values()) == {2}
    got = {(b2.ngram_texts[r], b2.query_texts[c]) for r, c in entries}
    assert got == {
        ("oak", "oak table"),
        ("table", "oak table"),
        ("oak table", "oak table"),
    }


def test_popularity_and_session_counts():
    corpus = _hand_corpus()
    b = build_bigraph(corpus, WIN, CFG)
    assert b.session_count == 3
    assert b.popularity("oak table") == 2
    assert b.popularity("oak chair") == 1
    oak = b._row_of["oak"]
    assert b.ngram_session_count[oak] == 2


def test_sessions_belong_to_the_window_of_their_start():
    events = [
        _ev("u1", 50, "oak table"),
        _ev("u1", 150, "oak chair"),  # same session, started inside
        _ev("u2", 120, "oak table"),  # starts past the window end
    ]
    corpus = build_corpus(events, CFG.replace(session_gap=1000.0))
    b = build_bigraph(corpus, TimeWindow(0.0, 100.0), CFG)
    assert b.session_count == 1
    assert b.popularity("oak chair") == 1  # carried in by the straddler


def test_empty_window_raises():
    corpus = _hand_corpus()
    with pytest.raises(EmptyWindow):
        build_bigraph(corpus, TimeWindow(1e6, 2e6), CFG)


def test_row_mass_at_least_session_count_unpruned():
    # with min_cooccurrence=1, a session holding the n-gram contributes at
    # least one (ngram, query) pair, so row mass >= ngram_session_count
    rng = random.Random(3)
    corpus = build_corpus(random_events(rng, n_sessions=60), CFG)
    b = build_bigraph(corpus, WIN, CFG.replace(min_cooccurrence=1))
    row_mass = np.asarray(b.weights.sum(axis=1)).ravel()
    assert (row_mass >= b.ngram_session_count).all()


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("min_co", [1, 2])
def test_weights_match_brute_force(seed, min_co):
    rng = random.Random(seed)
    corpus = build_corpus(random_events(rng, n_sessions=50), CFG)
    cfg = CFG.replace(min_cooccurrence=min_co)
    b = build_bigraph(corpus, WIN, cfg)
    assert csr_entries(b) == brute_weights(corpus, WIN, min_co)


def test_build_is_deterministic():
    rng = random.Random(11)
    events = random_events(rng, n_sessions=40)
    b1 = build_bigraph(build_corpus(events, CFG), WIN, CFG)
    b2 = build_bigraph(build_corpus(events, CFG), WIN, CFG)
    assert b1.ngram_texts == b2.ngram_texts
    assert b1.query_texts == b2.query_texts
    assert (b1.weights != b2.weights).nnz == 0


def test_query_distribution_and_unknown_ngram():
    corpus = _hand_corpus()
    b = build_bigraph(corpus, WIN, CFG.replace(min_cooccurrence=1))
    dist = query_distribution(b, "oak")
    assert dist == {
        b._col_of["oak table"]: 2,
        b._col_of["oak chair"]: 1,
    }
    assert query_distribution(b, b._row_of["oak"]) == dist
    with pytest.raises(UnknownNgram):
        query_distribution(b, "no such gram")


def test_save_load_round_trip(tmp_path):
    corpus = _hand_corpus()
    b = build_bigraph(corpus, WIN, CFG)
    save_bigraph(b, tmp_path)
    loaded = load_bigraph(tmp_path)
    assert loaded.ngram_texts == b.ngram_texts
    assert loaded.query_texts == b.query_texts
    assert (loaded.weights != b.weights).nnz == 0
    assert loaded.window == b.window
    assert loaded.session_count == b.session_count
    assert (loaded.query_popularity == b.query_popularity).all()
    assert loaded.config_hash == b.config_hash


def test_load_rejects_foreign_manifest(tmp_path):
    corpus = _hand_corpus()
    save_bigraph(build_bigraph(corpus, WIN, CFG), tmp_path)
    manifest = tmp_path / "manifest.json"
    manifest.write_text(manifest.read_text().replace("bigraph/v1", "other/v9"))
    with pytest.raises(SnapshotError):
        load_bigraph(tmp_path)
