"""Curator-managed style taxonomy over discovered topics.

Two levels only: styles at the root, sub-styles beneath them. Nodes hold
sets of topic ids; scoring is additive and sub-style scores roll up into
their parent, so a style always scores at least as much as any child.
All mutations bump a version counter and append an audit entry; writers
are expected to serialize externally (the service holds a lock).
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

from .bigraph import Bigraph
from .communities import MicroTopic
from .config import PipelineConfig
from .ingest import extract_ngrams, tokenize
from .materialize import PinIndex, TopicMatcher, UnknownTopic, topics_for_query

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0


class UnknownNode(KeyError):
    """Node id absent from the taxonomy."""


class TaxonomyError(ValueError):
    """Structural violation: depth, duplicate sibling name, bad parent."""


@dataclass
class TaxonomyNode:
    id: str
    name: str
    parent: str | None = None
    topics: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class MutationResult:
    changed: bool
    version: int
    warning: str | None = None


class Taxonomy:
    def __init__(self) -> None:
        self.version = 0
        self.nodes: dict[str, TaxonomyNode] = {}
        self.audit: list[dict] = []
        self._counter = 0

    # -- structure ---------------------------------------------------------

    def styles(self) -> list[TaxonomyNode]:
        return [n for n in self.nodes.values() if n.parent is None]

    def children(self, node_id: str) -> list[TaxonomyNode]:
        return [n for n in self.nodes.values() if n.parent == node_id]

    def node(self, node_id: str) -> TaxonomyNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def _audit(self, actor: str, action: str, **detail) -> None:
        self.audit.append(
            {"ts": time.time(), "actor": actor, "action": action, **detail}
        )

    def create_node(
        self, name: str, parent: str | None = None, actor: str = "system"
    ) -> TaxonomyNode:
        if parent is not None:
            parent_node = self.node(parent)
            if parent_node.parent is not None:
                raise TaxonomyError("taxonomy is limited to two levels")
        siblings = self.children(parent) if parent else self.styles()
        if any(s.name == name for s in siblings):
            raise TaxonomyError(f"duplicate sibling name {name!r}")
        self._counter += 1
        node = TaxonomyNode(id=f"n{self._counter:04d}", name=name, parent=parent)
        self.nodes[node.id] = node
        self.version += 1
        self._audit(actor, "create_node", node=node.id, name=name, parent=parent)
        return node

    def attach(
        self,
        node_id: str,
        topic_id: str,
        actor: str = "system",
        known_topics: Collection[str] | None = None,
    ) -> MutationResult:
        node = self.node(node_id)
        if known_topics is not None and topic_id not in known_topics:
            raise UnknownTopic(topic_id)
        if topic_id in node.topics:
            return MutationResult(changed=False, version=self.version)
        node.topics.append(topic_id)
        self.version += 1
        self._audit(actor, "attach", node=node_id, topic=topic_id)
        return MutationResult(changed=True, version=self.version)

    def detach(
        self, node_id: str, topic_id: str, actor: str = "system"
    ) -> MutationResult:
        node = self.node(node_id)
        if topic_id not in node.topics:
            logger.warning("detach of absent topic %s from %s", topic_id, node_id)
            return MutationResult(
                changed=False, version=self.version, warning="topic was not attached"
            )
        node.topics.remove(topic_id)
        self.version += 1
        self._audit(actor, "detach", node=node_id, topic=topic_id)
        return MutationResult(changed=True, version=self.version)

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "nodes": [
                {"id": n.id, "name": n.name, "parent": n.parent, "topics": list(n.topics)}
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "audit": list(self.audit),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Taxonomy":
        tax = cls()
        tax.version = int(raw.get("version", 0))
        tax.audit = list(raw.get("audit", []))
        max_counter = 0
        for obj in raw.get("nodes", []):
            node = TaxonomyNode(
                id=str(obj["id"]),
                name=str(obj["name"]),
                parent=obj.get("parent"),
                topics=[str(t) for t in obj.get("topics", [])],
            )
            tax.nodes[node.id] = node
            if node.id.startswith("n"):
                try:
                    max_counter = max(max_counter, int(node.id[1:]))
                except ValueError:
                    pass
        tax._counter = max_counter
        return tax

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _roll_up(tax: Taxonomy, own: Mapping[str, float]) -> dict[str, float]:
    """Add each sub-style's score into its parent style."""
    total: dict[str, float] = dict(own)
    for node in tax.nodes.values():
        if node.parent is not None and total.get(node.id):
            total[node.parent] = total.get(node.parent, 0.0) + total[node.id]
    return total


def _ranked(scores: Mapping[str, float]) -> list[tuple[str, float]]:
    positive = [(nid, s) for nid, s in scores.items() if s > 0]
    positive.sort(key=lambda ns: (-ns[1], ns[0]))
    return positive


def classify_pin(
    description: str,
    tax: Taxonomy,
    topics_by_id: Mapping[str, MicroTopic],
) -> list[tuple[str, float]]:
    """Nodes ranked by how much of their attached topics the pin matches.

    Per topic the score is the count of distinct topic n-grams occurring
    in the description as contiguous token runs; node scores sum over
    attached topics and sub-styles roll up into their parent.
    """
    attached: list[MicroTopic] = []
    topic_nodes: dict[str, list[str]] = {}
    for node in tax.nodes.values():
        for tid in node.topics:
            topic = topics_by_id.get(tid)
            if topic is None:
                continue
            if tid not in topic_nodes:
                attached.append(topic)
            topic_nodes.setdefault(tid, []).append(node.id)
    if not attached:
        return []
    matcher = TopicMatcher(attached)
    matched = matcher.match(tokenize(description))
    own: dict[str, float] = {}
    for tid, grams in matched.items():
        for nid in topic_nodes[tid]:
            own[nid] = own.get(nid, 0.0) + len(grams)
    return _ranked(_roll_up(tax, own))


def classify_query(
    query: str,
    tax: Taxonomy,
    topics_by_id: Mapping[str, MicroTopic],
    b: Bigraph,
) -> list[tuple[str, float]]:
    """Nodes ranked by association strength of the query's topics."""
    strengths = {
        t.topic_id: s
        for t, s in topics_for_query(query, list(topics_by_id.values()), b)
    }
    own: dict[str, float] = {}
    for node in tax.nodes.values():
        score = sum(strengths.get(tid, 0) for tid in node.topics)
        if score:
            own[node.id] = float(score)
    return _ranked(_roll_up(tax, own))


@dataclass(frozen=True)
class UserHistory:
    """Timestamped queries issued and pins interacted with."""

    queries: tuple[tuple[str, float], ...] = ()
    pins: tuple[tuple[str, float], ...] = ()


def user_affinity(
    history: UserHistory,
    tax: Taxonomy,
    topics_by_id: Mapping[str, MicroTopic],
    b: Bigraph,
    pins: PinIndex,
    config: PipelineConfig,
    now: float,
) -> dict[str, float]:
    """Recency-decayed node affinities from a user's history.

    Every event contributes its classification scores scaled by
    exp(-age / tau); events the snapshot cannot interpret (rare queries,
    unknown pins) are skipped. Empty history means empty affinity.
    """
    tau = config.recency_tau_days
    total: dict[str, float] = {}

    def add(ranked: Iterable[tuple[str, float]], ts: float) -> None:
        decay = math.exp(-max(0.0, (now - ts) / SECONDS_PER_DAY) / tau)
        for nid, score in ranked:
            total[nid] = total.get(nid, 0.0) + decay * score

    for query, ts in history.queries:
        if b.col_index(query) is None:
            continue
        add(classify_query(query, tax, topics_by_id, b), ts)
    for pin_id, ts in history.pins:
        pos = pins.by_id.get(pin_id)
        if pos is None:
            continue
        add(classify_pin(pins.pins[pos].description, tax, topics_by_id), ts)
    return {nid: s for nid, s in total.items() if s > 0}


@dataclass(frozen=True)
class StyleCard:
    node_id: str
    name: str
    affinity: float
    pins: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class TriggerDecision:
    """NoTrigger is a value: triggered=False with the reason why."""

    triggered: bool
    reason: str
    styles: tuple[StyleCard, ...] = ()


def trigger(
    history: UserHistory,
    query: str,
    tax: Taxonomy,
    topics_by_id: Mapping[str, MicroTopic],
    b: Bigraph,
    pins: PinIndex,
    config: PipelineConfig,
    now: float,
) -> TriggerDecision:
    """Decide whether to show style-grouped results for this query.

    Fires only for broad queries (no style holds more than
    dominance_share of the classification mass) issued by users with at
    least min_styles styles of positive affinity; each shown style needs
    min_pins pins that match both the query and the style.
    """
    ranked = classify_query(query, tax, topics_by_id, b)
    style_scores = {nid: s for nid, s in ranked if tax.nodes[nid].parent is None}
    mass = sum(style_scores.values())
    if mass > 0:
        dominant = max(style_scores.values())
        if dominant > config.dominance_share * mass:
            return TriggerDecision(triggered=False, reason="narrow-query")

    affinity = user_affinity(history, tax, topics_by_id, b, pins, config, now)
    style_affinity = _ranked(
        {nid: s for nid, s in affinity.items() if tax.nodes[nid].parent is None}
    )
    if len(style_affinity) < config.min_styles:
        return TriggerDecision(triggered=False, reason="thin-history")

    query_grams = extract_ngrams(query, n_max=3, stopwords=config.stopwords)
    query_matcher = TopicMatcher(
        [MicroTopic(topic_id="__query__", ngrams=tuple(sorted(query_grams)),
                    density=0.0, egos=())]
    )

    cards: list[StyleCard] = []
    for nid, score in style_affinity:
        subtree = [nid] + [c.id for c in tax.children(nid)]
        style_topics = [
            topics_by_id[tid]
            for sub in subtree
            for tid in tax.nodes[sub].topics
            if tid in topics_by_id
        ]
        if not style_topics:
            continue
        style_matcher = TopicMatcher(style_topics)
        matched_pins: list[tuple[int, str]] = []
        for i in pins.candidates(query_matcher.first_tokens):
            toks = pins.tokens[i]
            if not query_matcher.match(toks):
                continue
            style_hits = style_matcher.match(toks)
            if not style_hits:
                continue
            strength = sum(len(g) for g in style_hits.values())
            matched_pins.append((strength, pins.pins[i].pin))
        if len(matched_pins) < config.min_pins:
            continue
        matched_pins.sort(key=lambda sp: (-sp[0], sp[1]))
        cards.append(
            StyleCard(
                node_id=nid,
                name=tax.nodes[nid].name,
                affinity=score,
                pins=tuple((pid, s) for s, pid in matched_pins[: config.k_pins]),
            )
        )
    if not cards:
        return TriggerDecision(triggered=False, reason="no-style-pins")
    return TriggerDecision(triggered=True, reason="ok", styles=tuple(cards))
