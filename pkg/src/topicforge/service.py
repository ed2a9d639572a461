"""HTTP surface for browsing discovered topics and curating the style tree.

The service is read-mostly: it loads one snapshot directory at startup
(bigraph, topics, pins, interactions, query events) and serves topic
search, per-topic detail, query suggestions, and trigger previews from
it. The only mutable state is the taxonomy, guarded by a lock and
persisted back into the snapshot directory on every change. Optimistic
concurrency uses the taxonomy version: clients send it in If-Match and
get a 409 when someone else moved first.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.staticfiles import StaticFiles

from .bigraph import Bigraph, load_bigraph
from .communities import MicroTopic, read_topics
from .config import PipelineConfig
from .ingest import (
    Interaction,
    normalize_query,
    read_interactions,
    read_pins,
    read_query_events,
)
from .materialize import (
    PinIndex,
    UnknownQuery,
    materialize_topic,
    suggest_specialized_queries,
    topic_pins,
    topic_queries,
    topics_for_query,
)
from .taxonomy import (
    Taxonomy,
    TaxonomyError,
    UnknownNode,
    UnknownTopic,
    UserHistory,
    trigger,
)

log = logging.getLogger("topicforge.service")

SNAPSHOT_DIR_ENV = "FORGE_SNAPSHOT_DIR"
UI_DIR_ENV = "FORGE_UI_DIR"


@dataclass
class ServiceState:
    snapshot_dir: Path
    snapshot_id: str
    config: PipelineConfig
    bigraph: Bigraph
    topics: list[MicroTopic]
    topics_by_id: dict[str, MicroTopic]
    pin_index: PinIndex
    interactions: list[Interaction]
    histories: dict[str, UserHistory]
    taxonomy: Taxonomy
    taxonomy_path: Path
    now: float
    lock: threading.Lock


def _build_histories(
    events, interactions
) -> dict[str, UserHistory]:
    queries: dict[str, list[tuple[str, float]]] = {}
    pins: dict[str, list[tuple[str, float]]] = {}
    for ev in events:
        q = normalize_query(ev.query)
        if q:
            queries.setdefault(ev.user, []).append((q, ev.ts))
    for inter in interactions:
        pins.setdefault(inter.user, []).append((inter.pin, inter.ts))
    out: dict[str, UserHistory] = {}
    for user in sorted(set(queries) | set(pins)):
        out[user] = UserHistory(
            queries=tuple(queries.get(user, ())),
            pins=tuple(pins.get(user, ())),
        )
    return out


def load_state(snapshot_dir: str | Path) -> ServiceState:
    """Load a snapshot bundle. Pins, interactions and events are optional;
    taxonomy.json is created on first mutation if absent."""
    snap = Path(snapshot_dir)
    bigraph = load_bigraph(snap)
    topics = read_topics(snap / "topics.jsonl")

    pins_path = snap / "pins.jsonl"
    inter_path = snap / "interactions.jsonl"
    events_path = snap / "events.jsonl"
    config_path = snap / "config.json"

    pins = read_pins(pins_path, strict=True)[0] if pins_path.exists() else []
    interactions = (
        read_interactions(inter_path, strict=True)[0] if inter_path.exists() else []
    )
    events = (
        read_query_events(events_path, strict=True)[0] if events_path.exists() else []
    )
    if config_path.exists():
        with open(config_path, "r", encoding="utf-8") as fh:
            config = PipelineConfig.from_dict(json.load(fh))
    else:
        config = PipelineConfig()

    taxonomy_path = snap / "taxonomy.json"
    taxonomy = Taxonomy.load(taxonomy_path) if taxonomy_path.exists() else Taxonomy()

    manifest_bytes = (snap / "manifest.json").read_bytes()
    snapshot_id = hashlib.sha256(manifest_bytes).hexdigest()[:12]

    now = bigraph.window.end
    for ev in events:
        now = max(now, ev.ts)
    for inter in interactions:
        now = max(now, inter.ts)

    return ServiceState(
        snapshot_dir=snap,
        snapshot_id=snapshot_id,
        config=config,
        bigraph=bigraph,
        topics=topics,
        topics_by_id={t.topic_id: t for t in topics},
        pin_index=PinIndex(pins),
        interactions=interactions,
        histories=_build_histories(events, interactions),
        taxonomy=taxonomy,
        taxonomy_path=taxonomy_path,
        now=now,
        lock=threading.Lock(),
    )


def _persist_taxonomy(state: ServiceState) -> None:
    tmp = state.taxonomy_path.with_suffix(".json.tmp")
    state.taxonomy.save(tmp)
    os.replace(tmp, state.taxonomy_path)


def create_app(
    snapshot_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="topicforge", docs_url=None, redoc_url=None)

    resolved = snapshot_dir or os.environ.get(SNAPSHOT_DIR_ENV)
    state: ServiceState | None = None
    if resolved is not None:
        state = load_state(resolved)
        log.info(
            "snapshot %s: %d topics, %d n-grams, %d queries, %d pins",
            state.snapshot_id, len(state.topics), state.bigraph.n_ngrams,
            state.bigraph.n_queries, len(state.pin_index),
        )
    app.state.forge = state

    @app.middleware("http")
    async def _access_log(request: Request, call_next):
        t0 = time.monotonic()
        response = await call_next(request)
        log.info(
            "%s %s -> %d (%.1f ms)",
            request.method,
            request.url.path,
            response.status_code,
            (time.monotonic() - t0) * 1000,
        )
        return response

    def _state() -> ServiceState:
        if app.state.forge is None:
            raise HTTPException(status_code=503, detail="no snapshot loaded")
        return app.state.forge

    def _normalized(query: str) -> str:
        q = normalize_query(query)
        if not q:
            raise HTTPException(status_code=400, detail="empty query")
        return q

    def _attached_nodes(st: ServiceState, topic_id: str) -> list[dict]:
        return [
            {"node_id": n.id, "name": n.name}
            for n in sorted(st.taxonomy.nodes.values(), key=lambda n: n.id)
            if topic_id in n.topics
        ]

    def _topic_card(st: ServiceState, topic: MicroTopic, score: int | None) -> dict:
        queries = topic_queries(topic, st.bigraph, k=5)
        pins = topic_pins(topic, st.pin_index, k=6)
        label = queries[0].query if queries else topic.ngrams[0]
        return {
            "topic_id": topic.topic_id,
            "label": label,
            "score": score,
            "size": topic.size,
            "density": topic.density,
            "ngrams": list(topic.ngrams[:10]),
            "ngram_count": topic.size,
            "top_queries": [
                {"query": q.query, "popularity": q.popularity} for q in queries
            ],
            "top_pins": [
                {
                    "pin": p.pin,
                    "score": p.score,
                    "description": st.pin_index.pins[st.pin_index.by_id[p.pin]].description,
                    "image_url": st.pin_index.pins[st.pin_index.by_id[p.pin]].image_url,
                }
                for p in pins
            ],
            "attached_to": _attached_nodes(st, topic.topic_id),
        }

    def _check_version(st: ServiceState, request: Request) -> None:
        expected = request.headers.get("if-match")
        if expected is None:
            return
        if expected.strip('"') != str(st.taxonomy.version):
            raise HTTPException(
                status_code=409,
                detail={
                    "message": "taxonomy version conflict",
                    "current_version": st.taxonomy.version,
                },
            )

    @app.get("/health")
    def health() -> dict:
        st = app.state.forge
        return {
            "status": "ok",
            "snapshot_id": st.snapshot_id if st else None,
            "taxonomy_version": st.taxonomy.version if st else None,
        }

    @app.get("/topics")
    def search_topics(query: str, k: int = 20) -> dict:
        st = _state()
        q = _normalized(query)
        try:
            ranked = topics_for_query(q, st.topics, st.bigraph)
        except UnknownQuery:
            raise HTTPException(status_code=404, detail=f"unknown query: {q}")
        return {
            "snapshot_id": st.snapshot_id,
            "query": q,
            "total": len(ranked),
            "topics": [_topic_card(st, t, score) for t, score in ranked[:k]],
        }

    @app.get("/topics/{topic_id}")
    def topic_detail(topic_id: str) -> dict:
        st = _state()
        topic = st.topics_by_id.get(topic_id)
        if topic is None:
            raise HTTPException(status_code=404, detail=f"unknown topic: {topic_id}")
        mat = materialize_topic(
            topic, st.bigraph, st.pin_index, st.interactions, st.config
        )
        card = _topic_card(st, topic, None)
        card["ngrams"] = list(topic.ngrams)
        card["egos"] = list(topic.egos)
        card["materialization"] = mat.to_json_obj()
        card["snapshot_id"] = st.snapshot_id
        return card

    @app.get("/suggestions")
    def suggestions(query: str, k: int = 20) -> dict:
        st = _state()
        q = _normalized(query)
        try:
            items = suggest_specialized_queries(q, st.topics, st.bigraph, k=k)
        except UnknownQuery:
            raise HTTPException(status_code=404, detail=f"unknown query: {q}")
        return {
            "snapshot_id": st.snapshot_id,
            "query": q,
            "suggestions": [
                {
                    "query": s.query,
                    "popularity": s.popularity,
                    "novel_topic_ids": list(s.novel_topic_ids),
                }
                for s in items
            ],
        }

    def _taxonomy_payload(st: ServiceState) -> dict:
        return {
            "snapshot_id": st.snapshot_id,
            "version": st.taxonomy.version,
            "nodes": [
                {
                    "id": n.id,
                    "name": n.name,
                    "parent": n.parent,
                    "topics": list(n.topics),
                }
                for n in sorted(st.taxonomy.nodes.values(), key=lambda n: n.id)
            ],
        }

    @app.get("/taxonomy")
    def get_taxonomy() -> dict:
        return _taxonomy_payload(_state())

    @app.post("/taxonomy/nodes", status_code=201)
    async def create_node(request: Request) -> dict:
        st = _state()
        payload = await request.json()
        name = payload.get("name")
        parent = payload.get("parent")
        if not isinstance(name, str) or not name.strip():
            raise HTTPException(status_code=400, detail="name is required")
        if parent is not None and not isinstance(parent, str):
            raise HTTPException(status_code=400, detail="parent must be a node id")
        with st.lock:
            _check_version(st, request)
            try:
                node = st.taxonomy.create_node(
                    name.strip(), parent=parent, actor=_actor(request)
                )
            except UnknownNode:
                raise HTTPException(status_code=404, detail=f"unknown node: {parent}")
            except TaxonomyError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            _persist_taxonomy(st)
            return {
                "snapshot_id": st.snapshot_id,
                "version": st.taxonomy.version,
                "node": {
                    "id": node.id,
                    "name": node.name,
                    "parent": node.parent,
                    "topics": list(node.topics),
                },
            }

    @app.post("/taxonomy/nodes/{node_id}/topics")
    async def attach_topic(node_id: str, request: Request) -> dict:
        st = _state()
        payload = await request.json()
        topic_id = payload.get("topic_id")
        if not isinstance(topic_id, str) or not topic_id:
            raise HTTPException(status_code=400, detail="topic_id is required")
        with st.lock:
            _check_version(st, request)
            try:
                result = st.taxonomy.attach(
                    node_id, topic_id,
                    known_topics=st.topics_by_id, actor=_actor(request),
                )
            except UnknownNode:
                raise HTTPException(status_code=404, detail=f"unknown node: {node_id}")
            except UnknownTopic:
                raise HTTPException(
                    status_code=404, detail=f"unknown topic: {topic_id}"
                )
            if result.changed:
                _persist_taxonomy(st)
            return {
                "snapshot_id": st.snapshot_id,
                "version": result.version,
                "changed": result.changed,
                "warning": result.warning,
            }

    @app.delete("/taxonomy/nodes/{node_id}/topics/{topic_id}")
    def detach_topic(node_id: str, topic_id: str, request: Request) -> dict:
        st = _state()
        with st.lock:
            _check_version(st, request)
            try:
                result = st.taxonomy.detach(
                    node_id, topic_id, actor=_actor(request)
                )
            except UnknownNode:
                raise HTTPException(status_code=404, detail=f"unknown node: {node_id}")
            if result.changed:
                _persist_taxonomy(st)
            return {
                "snapshot_id": st.snapshot_id,
                "version": result.version,
                "changed": result.changed,
                "warning": result.warning,
            }

    @app.get("/trigger")
    def trigger_preview(user: str, query: str) -> dict:
        st = _state()
        q = _normalized(query)
        if st.bigraph.col_index(q) is None:
            raise HTTPException(status_code=404, detail=f"unknown query: {q}")
        history = st.histories.get(user, UserHistory())
        decision = trigger(
            history, q, st.taxonomy, st.topics_by_id,
            st.bigraph, st.pin_index, st.config, now=st.now,
        )
        return {
            "snapshot_id": st.snapshot_id,
            "user": user,
            "query": q,
            "triggered": decision.triggered,
            "reason": decision.reason,
            "styles": [
                {
                    "node_id": card.node_id,
                    "name": card.name,
                    "affinity": card.affinity,
                    "pins": [
                        {
                            "pin": pid,
                            "strength": strength,
                            "description": st.pin_index.pins[
                                st.pin_index.by_id[pid]
                            ].description,
                            "image_url": st.pin_index.pins[
                                st.pin_index.by_id[pid]
                            ].image_url,
                        }
                        for pid, strength in card.pins
                    ],
                }
                for card in decision.styles
            ],
        }

    resolved_ui = ui_dir or os.environ.get(UI_DIR_ENV)
    if resolved_ui and Path(resolved_ui).is_dir():
        app.mount("/ui", StaticFiles(directory=resolved_ui, html=True), name="ui")

    return app


def _actor(request: Request) -> str:
    return request.headers.get("x-actor", "anonymous")
