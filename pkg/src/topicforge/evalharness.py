"""Synthetic corpora with planted ground truth, and recovery scoring.

The generator plants topics as phrase vocabularies: each session picks one
topic by popularity weight, draws a handful of phrases (optionally wrapped
with modifier words), and occasionally lets a phrase from another topic
leak in as noise. Pins are written from topic vocabularies and users get
interaction histories concentrated on one or two styles. Everything is
labeled, so discovery quality is measurable instead of eyeballable.
"""

from __future__ import annotations

import dataclasses
import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def _write_jsonl(path: "Path", rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False))
            fh.write("\n")

from .bigraph import Bigraph, TimeWindow, build_bigraph
from .communities import MicroTopic, discover_communities
from .config import PipelineConfig
from .ingest import Corpus, Interaction, Pin, QueryEvent, build_corpus, extract_ngrams
from .simgraph import SimGraph, build_simgraph
from .taxonomy import Taxonomy

SECONDS_PER_DAY = 86400.0


class InvalidSpec(ValueError):
    """Planted spec violates its own invariants."""


@dataclass(frozen=True)
class PlantedTopic:
    name: str
    phrases: tuple[str, ...]
    weight: float
    style: str
    substyle: str | None = None


@dataclass(frozen=True)
class DriftRule:
    """In the second window, `retire` disappears and `introduce` replaces it."""

    topic: str
    retire: str
    introduce: str


@dataclass(frozen=True)
class PlantedSpec:
    topics: tuple[PlantedTopic, ...]
    session_count: int = 10_000
    noise_rate: float = 0.1
    ambiguous_terms: tuple[str, ...] = ()
    drift: tuple[DriftRule, ...] = ()
    queries_lo: int = 2
    queries_hi: int = 8
    modifier_prob: float = 0.25
    modifiers: tuple[str, ...] = (
        "ideas", "easy", "best", "simple", "small", "budget",
        "cozy", "modern", "vintage", "quick", "classic", "mini",
    )
    users: int = 400
    pins_per_topic: int = 20
    interactions_per_user: int = 12
    window_days: float = 30.0

    def __post_init__(self) -> None:
        if not self.topics:
            raise InvalidSpec("at least one topic required")
        names = [t.name for t in self.topics]
        if len(set(names)) != len(names):
            raise InvalidSpec("topic names must be unique")
        for t in self.topics:
            if len(t.phrases) < 5:
                raise InvalidSpec(f"topic {t.name!r} needs at least 5 phrases")
            if len(set(t.phrases)) != len(t.phrases):
                raise InvalidSpec(f"topic {t.name!r} has duplicate phrases")
            if t.weight <= 0:
                raise InvalidSpec(f"topic {t.name!r} weight must be positive")
            if not t.style:
                raise InvalidSpec(f"topic {t.name!r} needs a style")
        if not 0.0 <= self.noise_rate < 1.0:
            raise InvalidSpec("noise_rate must be in [0, 1)")
        if self.session_count < 1:
            raise InvalidSpec("session_count must be >= 1")
        if not 1 <= self.queries_lo <= self.queries_hi:
            raise InvalidSpec("queries_lo..queries_hi must be a valid range")
        if self.modifier_prob > 0 and not self.modifiers:
            raise InvalidSpec("modifier_prob > 0 needs a modifier pool")
        if self.users < 1:
            raise InvalidSpec("users must be >= 1")
        vocab_count: dict[str, int] = {}
        for t in self.topics:
            for p in set(t.phrases):
                vocab_count[p] = vocab_count.get(p, 0) + 1
        for term in self.ambiguous_terms:
            if vocab_count.get(term, 0) < 2:
                raise InvalidSpec(
                    f"ambiguous term {term!r} must appear in >= 2 topic vocabularies"
                )
        by_name = {t.name: t for t in self.topics}
        for rule in self.drift:
            topic = by_name.get(rule.topic)
            if topic is None:
                raise InvalidSpec(f"drift rule names unknown topic {rule.topic!r}")
            if rule.retire not in topic.phrases:
                raise InvalidSpec(
                    f"drift retires {rule.retire!r} which is not in {rule.topic!r}"
                )
            if rule.introduce in topic.phrases:
                raise InvalidSpec(
                    f"drift introduces {rule.introduce!r} which already exists"
                )

    def shared_phrases(self) -> tuple[str, ...]:
        count: dict[str, int] = {}
        for t in self.topics:
            for p in set(t.phrases):
                count[p] = count.get(p, 0) + 1
        return tuple(sorted(p for p, c in count.items() if c >= 2))

    def to_dict(self) -> dict:
        return {
            "topics": [
                {
                    "name": t.name,
                    "phrases": list(t.phrases),
                    "weight": t.weight,
                    "style": t.style,
                    "substyle": t.substyle,
                }
                for t in self.topics
            ],
            "session_count": self.session_count,
            "noise_rate": self.noise_rate,
            "ambiguous_terms": list(self.ambiguous_terms),
            "drift": [
                {"topic": d.topic, "retire": d.retire, "introduce": d.introduce}
                for d in self.drift
            ],
            "queries_lo": self.queries_lo,
            "queries_hi": self.queries_hi,
            "modifier_prob": self.modifier_prob,
            "modifiers": list(self.modifiers),
            "users": self.users,
            "pins_per_topic": self.pins_per_topic,
            "interactions_per_user": self.interactions_per_user,
            "window_days": self.window_days,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PlantedSpec":
        try:
            topics = tuple(
                PlantedTopic(
                    name=str(t["name"]),
                    phrases=tuple(t["phrases"]),
                    weight=float(t.get("weight", 1.0)),
                    style=str(t["style"]),
                    substyle=t.get("substyle"),
                )
                for t in raw["topics"]
            )
            drift = tuple(
                DriftRule(str(d["topic"]), str(d["retire"]), str(d["introduce"]))
                for d in raw.get("drift", [])
            )
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"malformed spec: {exc}") from exc
        kwargs = {
            k: raw[k]
            for k in (
                "session_count", "noise_rate", "queries_lo", "queries_hi",
                "modifier_prob", "users", "pins_per_topic",
                "interactions_per_user", "window_days",
            )
            if k in raw
        }
        if "ambiguous_terms" in raw:
            kwargs["ambiguous_terms"] = tuple(raw["ambiguous_terms"])
        if "modifiers" in raw:
            kwargs["modifiers"] = tuple(raw["modifiers"])
        return cls(topics=topics, drift=drift, **kwargs)


@dataclass
class GroundTruth:
    topic_ngrams: dict[str, frozenset[str]]
    topic_ngrams_w2: dict[str, frozenset[str]]
    session_topics: list[tuple[str, float, int, str]]
    pin_labels: dict[str, tuple[str, str, str | None]]
    user_styles: dict[str, tuple[str, str | None]]
    query_topics: dict[str, set[str]]

    def sessions_per_topic(self, window: int | None = None) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, _, w, name in self.session_topics:
            if window is None or w == window:
                counts[name] = counts.get(name, 0) + 1
        return counts


@dataclass
class SyntheticCorpus:
    spec: PlantedSpec
    events: list[QueryEvent]
    pins: list[Pin]
    interactions: list[Interaction]
    truth: GroundTruth
    window1: TimeWindow
    window2: TimeWindow | None

    def write(self, outdir: str | Path) -> Path:
        """events/pins/interactions as JSONL plus a truth summary."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        _write_jsonl(
            out / "events.jsonl",
            ({"user": e.user, "ts": e.ts, "query": e.query} for e in self.events),
        )
        _write_jsonl(
            out / "pins.jsonl",
            (
                {"pin": p.pin, "description": p.description, "image_url": p.image_url}
                for p in self.pins
            ),
        )
        _write_jsonl(
            out / "interactions.jsonl",
            (
                {"user": i.user, "pin": i.pin, "action": i.action, "ts": i.ts}
                for i in self.interactions
            ),
        )
        truth = {
            "topics": {
                name: sorted(grams)
                for name, grams in self.truth.topic_ngrams.items()
            },
            "user_styles": {
                u: {"main": main, "secondary": secondary}
                for u, (main, secondary) in sorted(self.truth.user_styles.items())
            },
            "sessions_per_topic": self.truth.sessions_per_topic(),
        }
        with open(out / "truth.json", "w", encoding="utf-8") as fh:
            json.dump(truth, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        return out


def _truth_ngrams(
    phrases: Iterable[str], config: PipelineConfig
) -> frozenset[str]:
    grams: set[str] = set()
    for phrase in phrases:
        grams.update(extract_ngrams(phrase, config.n_max, config.stopwords))
    return frozenset(grams)


def generate_corpus(
    spec: PlantedSpec, seed: int, config: PipelineConfig | None = None
) -> SyntheticCorpus:
    """Deterministic synthetic corpus: same spec and seed, same bytes."""
    config = config or PipelineConfig()
    rng = random.Random(seed)
    topics = list(spec.topics)
    weights = [t.weight for t in topics]
    day = SECONDS_PER_DAY
    w_len = spec.window_days * day
    window1 = TimeWindow(0.0, w_len)
    window2 = TimeWindow(w_len, 2 * w_len) if spec.drift else None

    drift_by_topic: dict[str, list[DriftRule]] = {}
    for rule in spec.drift:
        drift_by_topic.setdefault(rule.topic, []).append(rule)
    vocab_w2: dict[str, list[str]] = {}
    for t in topics:
        phrases = list(t.phrases)
        for rule in drift_by_topic.get(t.name, []):
            phrases.remove(rule.retire)
            phrases.append(rule.introduce)
        vocab_w2[t.name] = phrases

    styles: list[str] = []
    for t in topics:
        if t.style not in styles:
            styles.append(t.style)
    style_weight = {
        s: sum(t.weight for t in topics if t.style == s) for s in styles
    }
    topics_by_style = {
        s: [t for t in topics if t.style == s] for s in styles
    }

    users = [f"u{i:05d}" for i in range(spec.users)]
    user_styles: dict[str, tuple[str, str | None]] = {}
    main_hosts: dict[str, list[str]] = {s: [] for s in styles}
    secondary_hosts: dict[str, list[str]] = {s: [] for s in styles}
    for u in users:
        main = rng.choices(styles, [style_weight[s] for s in styles])[0]
        secondary: str | None = None
        others = [s for s in styles if s != main]
        if others and rng.random() < 0.6:
            secondary = rng.choice(others)
        user_styles[u] = (main, secondary)
        main_hosts[main].append(u)
        if secondary:
            secondary_hosts[secondary].append(u)

    pins: list[Pin] = []
    pin_labels: dict[str, tuple[str, str, str | None]] = {}
    pins_by_topic: dict[str, list[str]] = {}
    counter = 0
    for t in topics:
        ids: list[str] = []
        for _ in range(spec.pins_per_topic):
            n_parts = 2 if rng.random() < 0.6 else 3
            parts = rng.sample(list(t.phrases), min(n_parts, len(t.phrases)))
            pid = f"p{counter:06d}"
            counter += 1
            pins.append(Pin(pin=pid, description=" ".join(parts),
                            image_url=f"https://img.example/{pid}.jpg"))
            pin_labels[pid] = (t.name, t.style, t.substyle)
            ids.append(pid)
        pins_by_topic[t.name] = ids

    events: list[QueryEvent] = []
    session_topics: list[tuple[str, float, int, str]] = []
    query_topics: dict[str, set[str]] = {}
    user_busy: dict[str, list[float]] = {u: [] for u in users}
    session_span = spec.queries_hi * 45.0 + 60.0
    min_gap = config.session_gap + session_span + 60.0

    def pick_start(user: str, win: TimeWindow) -> float:
        taken = user_busy[user]
        for _ in range(64):
            start = win.start + rng.random() * (w_len - session_span - 1.0)
            if all(abs(start - other) >= min_gap for other in taken):
                taken.append(start)
                return start
        start = (max(taken) + min_gap) if taken else win.start
        taken.append(start)
        return min(start, win.end - session_span - 1.0)

    def make_query(topic: PlantedTopic, window_idx: int) -> tuple[str, str]:
        vocab = vocab_w2[topic.name] if window_idx == 1 else list(topic.phrases)
        phrase = rng.choice(vocab)
        text = phrase
        if spec.modifiers and rng.random() < spec.modifier_prob:
            mod = rng.choice(spec.modifiers)
            text = f"{mod} {phrase}" if rng.random() < 0.5 else f"{phrase} {mod}"
        return text, topic.name

    n_windows = 2 if window2 is not None else 1
    for i in range(spec.session_count):
        window_idx = i % n_windows
        win = window2 if window_idx == 1 else window1
        topic = rng.choices(topics, weights)[0]
        hosts = main_hosts[topic.style]
        alt = secondary_hosts[topic.style]
        if alt and rng.random() < 0.2:
            user = rng.choice(alt)
        elif hosts:
            user = rng.choice(hosts)
        else:
            user = rng.choice(users)
        start = pick_start(user, win)
        n_q = rng.randint(spec.queries_lo, spec.queries_hi)
        for j in range(n_q):
            src = topic
            if spec.noise_rate and rng.random() < spec.noise_rate and len(topics) > 1:
                while True:
                    src = topics[rng.randrange(len(topics))]
                    if src.name != topic.name:
                        break
            text, src_name = make_query(src, window_idx)
            events.append(QueryEvent(user=user, ts=start + 45.0 * j, query=text))
            query_topics.setdefault(text, set()).add(src_name)
        session_topics.append((user, start, window_idx, topic.name))

    interactions: list[Interaction] = []
    span_end = (window2 or window1).end
    actions = ("save", "click", "close-up")
    action_w = (0.5, 0.35, 0.15)
    for u in users:
        main, secondary = user_styles[u]
        for _ in range(spec.interactions_per_user):
            style = main
            if secondary is not None and rng.random() < 0.2:
                style = secondary
            pool = topics_by_style[style]
            t = rng.choices(pool, [p.weight for p in pool])[0]
            pid = rng.choice(pins_by_topic[t.name])
            interactions.append(
                Interaction(
                    user=u,
                    pin=pid,
                    action=rng.choices(actions, action_w)[0],
                    ts=rng.random() * (span_end - 1.0),
                )
            )

    truth = GroundTruth(
        topic_ngrams={
            t.name: _truth_ngrams(t.phrases, config) for t in topics
        },
        topic_ngrams_w2={
            name: _truth_ngrams(phrases, config)
            for name, phrases in vocab_w2.items()
        },
        session_topics=session_topics,
        pin_labels=pin_labels,
        user_styles=user_styles,
        query_topics=query_topics,
    )
    return SyntheticCorpus(
        spec=spec,
        events=events,
        pins=pins,
        interactions=interactions,
        truth=truth,
        window1=window1,
        window2=window2,
    )


# -- discovery driver -------------------------------------------------------


@dataclass
class DiscoveryRun:
    corpus: Corpus
    bigraph: Bigraph
    simgraph: SimGraph
    topics: list[MicroTopic]


def run_discovery(
    events: Sequence[QueryEvent],
    config: PipelineConfig,
    window: TimeWindow | None = None,
    pins: list[Pin] | None = None,
    interactions: list[Interaction] | None = None,
) -> DiscoveryRun:
    corpus = build_corpus(events, config, pins, interactions)
    if window is None:
        starts = [s.start for s in corpus.sessions]
        window = TimeWindow(min(starts), max(starts) + 1.0)
    b = build_bigraph(corpus, window, config)
    g = build_simgraph(b, config.sim_threshold)
    topics = discover_communities(g, config)
    return DiscoveryRun(corpus=corpus, bigraph=b, simgraph=g, topics=topics)


# -- recovery scoring --------------------------------------------------------


@dataclass(frozen=True)
class TopicMatch:
    planted: str
    topic_id: str | None
    f1: float
    precision: float
    recall: float


@dataclass
class RecoveryReport:
    matches: dict[str, TopicMatch]

    @property
    def mean_f1(self) -> float:
        if not self.matches:
            return 0.0
        return sum(m.f1 for m in self.matches.values()) / len(self.matches)

    def recovered_fraction(self, f1_threshold: float = 0.8) -> float:
        if not self.matches:
            return 0.0
        hit = sum(1 for m in self.matches.values() if m.f1 >= f1_threshold)
        return hit / len(self.matches)

    def to_dict(self) -> dict:
        return {
            "mean_f1": self.mean_f1,
            "matches": {
                name: {
                    "topic_id": m.topic_id,
                    "f1": m.f1,
                    "precision": m.precision,
                    "recall": m.recall,
                }
                for name, m in sorted(self.matches.items())
            },
        }


def score_recovery(
    discovered: Sequence[MicroTopic],
    truth: Mapping[str, frozenset[str]],
) -> RecoveryReport:
    """Best-match F1 per planted topic, matched one-to-one greedily.

    All (planted, discovered) pairs are ranked by F1 and assigned in
    descending order, so a discovered topic can only answer for one
    planted topic. Unmatched planted topics score zero.
    """
    pairs: list[tuple[float, float, float, str, str]] = []
    for name, truth_set in truth.items():
        for t in discovered:
            dset = set(t.ngrams)
            inter = len(dset & truth_set)
            if inter == 0:
                continue
            precision = inter / len(dset)
            recall = inter / len(truth_set)
            f1 = 2 * precision * recall / (precision + recall)
            pairs.append((f1, precision, recall, name, t.topic_id))
    pairs.sort(key=lambda p: (-p[0], p[3], p[4]))

    matches: dict[str, TopicMatch] = {}
    used: set[str] = set()
    for f1, precision, recall, name, tid in pairs:
        if name in matches or tid in used:
            continue
        matches[name] = TopicMatch(
            planted=name, topic_id=tid, f1=f1, precision=precision, recall=recall
        )
        used.add(tid)
    for name in truth:
        if name not in matches:
            matches[name] = TopicMatch(
                planted=name, topic_id=None, f1=0.0, precision=0.0, recall=0.0
            )
    return RecoveryReport(matches=matches)


# -- taxonomy evaluation ------------------------------------------------------


def build_truth_taxonomy(
    spec: PlantedSpec,
    recovery: RecoveryReport,
    topics_by_id: Mapping[str, MicroTopic],
    min_f1: float = 0.3,
) -> Taxonomy:
    """Style/sub-style tree with recovered topics attached by ground truth."""
    tax = Taxonomy()
    style_nodes: dict[str, str] = {}
    substyle_nodes: dict[tuple[str, str], str] = {}
    for t in spec.topics:
        if t.style not in style_nodes:
            style_nodes[t.style] = tax.create_node(t.style).id
        if t.substyle and (t.style, t.substyle) not in substyle_nodes:
            substyle_nodes[(t.style, t.substyle)] = tax.create_node(
                t.substyle, parent=style_nodes[t.style]
            ).id
    for t in spec.topics:
        match = recovery.matches.get(t.name)
        if match is None or match.topic_id is None or match.f1 < min_f1:
            continue
        if match.topic_id not in topics_by_id:
            continue
        node_id = (
            substyle_nodes[(t.style, t.substyle)]
            if t.substyle
            else style_nodes[t.style]
        )
        tax.attach(node_id, match.topic_id)
    return tax


def classification_report(
    corpus: SyntheticCorpus,
    tax: Taxonomy,
    topics_by_id: Mapping[str, MicroTopic],
) -> dict:
    """Top-1 style and sub-style precision over labeled pins.

    Also reports containment: among pins whose top sub-style is wrong,
    how often the chosen sub-style's parent is still the right style.
    """
    from .taxonomy import classify_pin

    name_of = {n.id: n.name for n in tax.nodes.values()}
    parent_of = {n.id: n.parent for n in tax.nodes.values()}

    style_total = style_hit = 0
    sub_total = sub_hit = 0
    sub_errors = contained = 0
    for pin in corpus.pins:
        truth = corpus.truth.pin_labels.get(pin.pin)
        if truth is None:
            continue
        _, true_style, true_sub = truth
        ranked = classify_pin(pin.description, tax, topics_by_id)
        if not ranked:
            continue
        top_style = next(
            (nid for nid, _ in ranked if parent_of[nid] is None), None
        )
        if top_style is not None:
            style_total += 1
            if name_of[top_style] == true_style:
                style_hit += 1
        if true_sub is None:
            continue
        top_sub = next(
            (nid for nid, _ in ranked if parent_of[nid] is not None), None
        )
        if top_sub is None:
            continue
        sub_total += 1
        if name_of[top_sub] == true_sub:
            sub_hit += 1
        else:
            sub_errors += 1
            parent = parent_of[top_sub]
            if parent is not None and name_of[parent] == true_style:
                contained += 1
    return {
        "style_precision": style_hit / style_total if style_total else None,
        "substyle_precision": sub_hit / sub_total if sub_total else None,
        "substyle_errors": sub_errors,
        "error_containment": contained / sub_errors if sub_errors else None,
        "pins_scored": style_total,
    }


def run_eval(
    spec: PlantedSpec,
    seed: int,
    config: PipelineConfig | None = None,
    f1_threshold: float = 0.8,
) -> dict:
    """Generate, discover, score. The report is JSON-serializable."""
    config = (config or PipelineConfig()).replace(seed=seed)
    t0 = time.monotonic()
    corpus = generate_corpus(spec, seed, config)
    run = run_discovery(
        corpus.events, config, corpus.window1, corpus.pins, corpus.interactions
    )
    recovery = score_recovery(run.topics, corpus.truth.topic_ngrams)
    topics_by_id = {t.topic_id: t for t in run.topics}

    overlap: dict[str, int] = {}
    for term in spec.ambiguous_terms:
        overlap[term] = sum(1 for t in run.topics if term in t.ngrams)

    tax = build_truth_taxonomy(spec, recovery, topics_by_id)
    classification = classification_report(corpus, tax, topics_by_id)

    drift_checks: list[dict] = []
    if spec.drift and corpus.window2 is not None:
        from .materialize import topic_queries

        corpus2 = build_corpus(corpus.events, config, corpus.pins, corpus.interactions)
        b2 = build_bigraph(corpus2, corpus.window2, config)
        for rule in spec.drift:
            match = recovery.matches.get(rule.topic)
            if match is None or match.topic_id is None:
                drift_checks.append({"topic": rule.topic, "matched": False})
                continue
            topic = topics_by_id[match.topic_id]
            q1 = {qs.query for qs in topic_queries(topic, run.bigraph, k=10**9)}
            q2 = {qs.query for qs in topic_queries(topic, b2, k=10**9)}
            drift_checks.append(
                {
                    "topic": rule.topic,
                    "matched": True,
                    "topic_id": topic.topic_id,
                    "introduced_present": rule.introduce in q2,
                    "retired_absent": rule.retire not in q2,
                    "retired_was_present": rule.retire in q1,
                    "query_list_changed": q1 != q2,
                }
            )

    return {
        "seed": seed,
        "runtime_seconds": time.monotonic() - t0,
        "counts": {
            "sessions": len(corpus.truth.session_topics),
            "events": len(corpus.events),
            "ngrams": run.bigraph.n_ngrams,
            "queries": run.bigraph.n_queries,
            "sim_edges": run.simgraph.n_edges,
            "topics": len(run.topics),
        },
        "recovery": {
            "f1_threshold": f1_threshold,
            "recovered_fraction": recovery.recovered_fraction(f1_threshold),
            **recovery.to_dict(),
        },
        "overlap": overlap,
        "classification": classification,
        "drift": drift_checks,
    }


# -- spec builders ------------------------------------------------------------

_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


def _new_word(rng: random.Random, used: set[str]) -> str:
    while True:
        n_syll = 2 if rng.random() < 0.7 else 3
        word = "".join(
            rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(n_syll)
        )
        if word not in used:
            used.add(word)
            return word


def _synth_phrases(
    rng: random.Random, count: int, used_words: set[str]
) -> list[str]:
    """Distinct phrases over a private word pool; words reused at most twice
    so no single word's traffic dwarfs the phrases it appears in."""
    phrases: list[str] = []
    seen: set[str] = set()
    pool: list[str] = []
    capacity: dict[str, int] = {}
    while len(phrases) < count:
        length = rng.choices([1, 2, 3], [0.2, 0.6, 0.2])[0]
        words: list[str] = []
        for _ in range(length):
            reusable = [w for w in pool if capacity[w] > 0 and w not in words]
            if reusable and rng.random() < 0.35:
                word = rng.choice(reusable)
            else:
                word = _new_word(rng, used_words)
                pool.append(word)
                capacity[word] = 2
            capacity[word] -= 1
            words.append(word)
        phrase = " ".join(words)
        if phrase not in seen:
            seen.add(phrase)
            phrases.append(phrase)
    return phrases


def make_uniform_spec(
    n_topics: int = 20,
    seed: int = 0,
    session_count: int = 100_000,
    noise_rate: float = 0.1,
    phrases_lo: int = 30,
    phrases_hi: int = 80,
    n_styles: int = 5,
    **overrides,
) -> PlantedSpec:
    """Equal-weight disjoint-vocabulary topics spread over a few styles."""
    rng = random.Random(seed)
    used: set[str] = set()
    topics = []
    for i in range(n_topics):
        style = f"style{i % n_styles:02d}"
        substyle = f"sub{i:02d}"
        phrases = _synth_phrases(rng, rng.randint(phrases_lo, phrases_hi), used)
        topics.append(
            PlantedTopic(
                name=f"topic{i:02d}",
                phrases=tuple(phrases),
                weight=1.0,
                style=style,
                substyle=substyle,
            )
        )
    return PlantedSpec(
        topics=tuple(topics),
        session_count=session_count,
        noise_rate=noise_rate,
        **overrides,
    )


def make_zipf_spec(
    n_topics: int = 20,
    s: float = 1.1,
    seed: int = 0,
    session_count: int = 20_000,
    **overrides,
) -> PlantedSpec:
    base = make_uniform_spec(
        n_topics=n_topics, seed=seed, session_count=session_count,
        phrases_lo=10, phrases_hi=16, **overrides,
    )
    topics = tuple(
        PlantedTopic(
            name=t.name,
            phrases=t.phrases,
            weight=1.0 / (rank + 1) ** s,
            style=t.style,
            substyle=t.substyle,
        )
        for rank, t in enumerate(base.topics)
    )
    return dataclasses.replace(base, topics=topics)


def make_overlap_spec(
    seed: int = 0,
    n_shared: int = 2,
    session_count: int = 12_000,
    **overrides,
) -> PlantedSpec:
    """Two host topics sharing a few full phrases, plus quiet fillers."""
    rng = random.Random(seed)
    used: set[str] = set()
    shared = [" ".join([_new_word(rng, used)]) for _ in range(n_shared)]
    host_a = _synth_phrases(rng, 10, used) + shared
    host_b = _synth_phrases(rng, 10, used) + shared
    fillers = [_synth_phrases(rng, 8, used) for _ in range(2)]
    topics = (
        PlantedTopic("hosta", tuple(host_a), 1.0, "stylea", "suba"),
        PlantedTopic("hostb", tuple(host_b), 1.0, "styleb", "subb"),
        PlantedTopic("filler0", tuple(fillers[0]), 0.5, "stylea", "subf0"),
        PlantedTopic("filler1", tuple(fillers[1]), 0.5, "styleb", "subf1"),
    )
    return PlantedSpec(
        topics=topics,
        session_count=session_count,
        noise_rate=overrides.pop("noise_rate", 0.05),
        ambiguous_terms=tuple(shared),
        **overrides,
    )


def make_granularity_spec(
    seed: int = 0,
    session_count: int = 14_000,
    **overrides,
) -> PlantedSpec:
    """A broad topic plus a dedicated narrow slice around one anchor phrase."""
    rng = random.Random(seed)
    used: set[str] = set()
    anchor_words = (_new_word(rng, used), _new_word(rng, used))
    anchor = " ".join(anchor_words)
    broad = _synth_phrases(rng, 24, used) + [anchor]
    narrow = [anchor] + [f"{anchor} {_new_word(rng, used)}" for _ in range(6)]
    filler = _synth_phrases(rng, 10, used)
    topics = (
        PlantedTopic("broad", tuple(broad), 1.0, "stylea", "subbroad"),
        PlantedTopic("narrow", tuple(narrow), 0.9, "stylea", "subnarrow"),
        PlantedTopic("filler", tuple(filler), 0.6, "styleb", "subf"),
    )
    return PlantedSpec(
        topics=topics,
        session_count=session_count,
        noise_rate=overrides.pop("noise_rate", 0.05),
        ambiguous_terms=(anchor,),
        **overrides,
    )


def make_drift_spec(
    seed: int = 0,
    n_topics: int = 6,
    session_count: int = 16_000,
    **overrides,
) -> PlantedSpec:
    rng = random.Random(seed)
    base = make_uniform_spec(
        n_topics=n_topics, seed=seed, session_count=session_count,
        phrases_lo=10, phrases_hi=14, noise_rate=0.05, **overrides,
    )
    used = {w for t in base.topics for p in t.phrases for w in p.split()}
    target = base.topics[0]
    retire = target.phrases[0]
    introduce = f"{_new_word(rng, used)} {_new_word(rng, used)}"
    rule = DriftRule(topic=target.name, retire=retire, introduce=introduce)
    return dataclasses.replace(base, drift=(rule,))


def demo_spec() -> PlantedSpec:
    """Readable home-decor corpus for the service demo and the workbench."""
    topics = (
        PlantedTopic(
            "nautical-core",
            (
                "nautical decor", "anchor wall art", "ship wheel decor",
                "rope mirror", "porthole mirror", "sailboat shelf",
                "nautical bathroom", "lighthouse lamp",
            ),
            1.0, "coastal", "nautical",
        ),
        PlantedTopic(
            "beach-cottage",
            (
                "coastal decor", "beach house decor", "driftwood art",
                "seashell crafts", "nautical decor", "beach cottage living",
                "coastal color palette", "sand dollar wreath",
            ),
            1.0, "coastal", "beach cottage",
        ),
        PlantedTopic(
            "coastal-diy",
            (
                "diy coastal projects", "rope crafts", "sea glass art",
                "nautical decor", "driftwood shelf", "shell candle holder",
                "coastal gallery wall",
            ),
            0.8, "coastal", "coastal diy",
        ),
        PlantedTopic(
            "australian-coastal",
            (
                "australian coastal decor", "australian beach style",
                "hamptons coastal look", "australian coastal colors",
                "byron bay interior", "australian coastal bedroom",
            ),
            0.7, "coastal", "australian coastal",
        ),
        PlantedTopic(
            "farmhouse-kitchen",
            (
                "farmhouse kitchen decor", "kitchen ideas", "farmhouse sink",
                "open shelving kitchen", "farmhouse kitchen island",
                "shiplap backsplash", "farmhouse pantry",
            ),
            1.0, "farmhouse", "farmhouse kitchen",
        ),
        PlantedTopic(
            "country-living",
            (
                "country living room", "barn door decor", "mason jar lights",
                "rustic wood signs", "country porch decor", "plaid throw pillows",
            ),
            0.9, "farmhouse", "country living",
        ),
        PlantedTopic(
            "modern-kitchen",
            (
                "modern kitchen design", "kitchen ideas", "matte black fixtures",
                "waterfall countertop", "handleless cabinets", "minimalist kitchen",
            ),
            0.9, "modern", "modern kitchen",
        ),
        PlantedTopic(
            "industrial-loft",
            (
                "industrial loft decor", "exposed brick wall", "pipe shelving",
                "concrete countertop", "edison bulb lighting", "metal bar stools",
            ),
            0.7, "modern", "industrial loft",
        ),
    )
    return PlantedSpec(
        topics=topics,
        session_count=5_000,
        noise_rate=0.0,
        ambiguous_terms=("nautical decor", "kitchen ideas"),
        modifier_prob=0.3,
        modifiers=("ideas", "diy", "small", "budget", "easy", "cozy"),
        users=80,
        pins_per_topic=14,
        interactions_per_user=24,
        window_days=30.0,
    )
