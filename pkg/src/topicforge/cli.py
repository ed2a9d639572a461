"""Command line entry points.

`forge run` turns raw event logs into a snapshot directory the service
can load: bigraph, similarity graph, discovered topics, plus copies of
the inputs. Stages are cached on content hashes, so a rerun over
unchanged inputs is a no-op. `forge eval` measures recovery on planted
corpora, `forge demo` builds a small browsable snapshot, and the rest
are thin wrappers over the library.

Exit codes: 0 success, 2 invalid input or corrupted state, 3 missing file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from pathlib import Path

from .bigraph import (
    EmptyWindow,
    SnapshotError,
    TimeWindow,
    build_bigraph,
    load_bigraph,
    save_bigraph,
)
from .communities import discover_communities, read_topics, write_topics
from .config import ConfigError, PipelineConfig
from .evalharness import InvalidSpec
from .ingest import IngestError, build_corpus, read_interactions, read_pins, read_query_events
from .simgraph import build_simgraph, load_simgraph, save_simgraph

log = logging.getLogger("topicforge.cli")

STAGES_FILE = "stages.json"


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_stages(out: Path) -> dict:
    path = out / STAGES_FILE
    if not path.exists():
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            stages = json.load(fh)
        if not isinstance(stages, dict):
            raise ValueError("stage manifest must be a JSON object")
        return stages
    except (json.JSONDecodeError, ValueError) as exc:
        raise CliError(
            f"stage manifest {path} is corrupted ({exc}); "
            f"delete it to force a rebuild",
            code=2,
        )


def _save_stages(out: Path, stages: dict) -> None:
    with open(out / STAGES_FILE, "w", encoding="utf-8") as fh:
        json.dump(stages, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stage_fresh(out: Path, stages: dict, name: str, key: dict, outputs: list[str]) -> bool:
    record = stages.get(name)
    if record is None or record.get("key") != key:
        return False
    return all((out / rel).exists() for rel in outputs)


def _copy_input(src: Path, out: Path, name: str) -> Path:
    if not src.exists():
        raise CliError(f"input file not found: {src}", code=3)
    dst = out / name
    if src.resolve() != dst.resolve():
        shutil.copyfile(src, dst)
    return dst


def run_pipeline(
    events_path: Path,
    out: Path,
    config: PipelineConfig,
    pins_path: Path | None = None,
    interactions_path: Path | None = None,
    window: tuple[float, float] | None = None,
    strict: bool = False,
    force: bool = False,
) -> dict:
    """Build (or reuse) every stage under `out`. Returns a run summary."""
    out.mkdir(parents=True, exist_ok=True)
    stages = _load_stages(out)
    if force:
        stages = {}

    events_file = _copy_input(events_path, out, "events.jsonl")
    input_hashes = {"events": _sha256_file(events_file)}
    if pins_path is not None:
        input_hashes["pins"] = _sha256_file(_copy_input(pins_path, out, "pins.jsonl"))
    if interactions_path is not None:
        input_hashes["interactions"] = _sha256_file(
            _copy_input(interactions_path, out, "interactions.jsonl")
        )

    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    cached: list[str] = []
    built: list[str] = []

    bigraph_key = {
        "config": config.content_hash(),
        "inputs": input_hashes,
        "window": list(window) if window else None,
    }
    bigraph_outputs = ["bigraph.npz", "manifest.json"]
    if _stage_fresh(out, stages, "bigraph", bigraph_key, bigraph_outputs):
        b = load_bigraph(out)
        cached.append("bigraph")
    else:
        events, errors = read_query_events(events_file, strict=strict)
        if errors:
            print(
                f"warning: skipped {len(errors)} malformed event lines",
                file=sys.stderr,
            )
        pins = []
        interactions = []
        if pins_path is not None:
            pins, _ = read_pins(out / "pins.jsonl", strict=strict)
        if interactions_path is not None:
            interactions, _ = read_interactions(out / "interactions.jsonl", strict=strict)
        corpus = build_corpus(events, config, pins, interactions)
        if not corpus.sessions:
            raise CliError("no sessions survived ingest", code=2)
        if window is not None:
            win = TimeWindow(*window)
        else:
            starts = [s.start for s in corpus.sessions]
            win = TimeWindow(min(starts), max(starts) + 1.0)
        b = build_bigraph(corpus, win, config)
        save_bigraph(b, out)
        stages["bigraph"] = {"key": bigraph_key, "outputs": bigraph_outputs}
        _save_stages(out, stages)
        built.append("bigraph")

    simgraph_key = {
        "config": config.content_hash(),
        "inputs": {"bigraph": _sha256_file(out / "bigraph.npz")},
    }
    simgraph_outputs = ["simgraph.npz", "simgraph.manifest.json"]
    if _stage_fresh(out, stages, "simgraph", simgraph_key, simgraph_outputs):
        g = load_simgraph(out)
        cached.append("simgraph")
    else:
        g = build_simgraph(b, config.sim_threshold)
        save_simgraph(g, out)
        stages["simgraph"] = {"key": simgraph_key, "outputs": simgraph_outputs}
        _save_stages(out, stages)
        built.append("simgraph")

    topics_key = {
        "config": config.content_hash(),
        "inputs": {"simgraph": _sha256_file(out / "simgraph.npz")},
    }
    topics_outputs = ["topics.jsonl"]
    if _stage_fresh(out, stages, "topics", topics_key, topics_outputs):
        topics = read_topics(out / "topics.jsonl")
        cached.append("topics")
    else:
        topics = discover_communities(g, config)
        write_topics(topics, out / "topics.jsonl")
        stages["topics"] = {"key": topics_key, "outputs": topics_outputs}
        _save_stages(out, stages)
        built.append("topics")

    return {
        "out": str(out),
        "built": built,
        "cached": cached,
        "counts": {
            "sessions": b.session_count,
            "ngrams": b.n_ngrams,
            "queries": b.n_queries,
            "sim_edges": g.n_edges,
            "topics": len(topics),
        },
    }


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}", code=3)
    with open(p, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {p} is not valid JSON: {exc.msg}", code=2)
    return PipelineConfig.from_dict(raw)


# -- subcommands --------------------------------------------------------------


def _cmd_run(args) -> int:
    config = _load_config(args.config)
    window = None
    if (args.window_start is None) != (args.window_end is None):
        raise CliError("--window-start and --window-end must be given together")
    if args.window_start is not None:
        window = (args.window_start, args.window_end)
    summary = run_pipeline(
        events_path=Path(args.events),
        out=Path(args.out),
        config=config,
        pins_path=Path(args.pins) if args.pins else None,
        interactions_path=Path(args.interactions) if args.interactions else None,
        window=window,
        strict=args.strict,
        force=args.force,
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    from . import evalharness as ev

    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            raise CliError(f"spec file not found: {spec_path}", code=3)
        with open(spec_path, "r", encoding="utf-8") as fh:
            spec = ev.PlantedSpec.from_dict(json.load(fh))
    else:
        builders = {
            "uniform": lambda: ev.make_uniform_spec(
                n_topics=args.topics, seed=args.seed,
                session_count=args.sessions, noise_rate=args.noise,
            ),
            "zipf": lambda: ev.make_zipf_spec(
                n_topics=args.topics, seed=args.seed, session_count=args.sessions
            ),
            "overlap": lambda: ev.make_overlap_spec(seed=args.seed),
            "granularity": lambda: ev.make_granularity_spec(seed=args.seed),
            "drift": lambda: ev.make_drift_spec(seed=args.seed),
            "demo": ev.demo_spec,
        }
        spec = builders[args.preset]()

    config = _load_config(args.config)
    report = ev.run_eval(spec, seed=args.seed, config=config, f1_threshold=args.f1)
    blob = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(blob + "\n", encoding="utf-8")
        rec = report["recovery"]
        print(
            f"recovered {rec['recovered_fraction']:.0%} of planted topics "
            f"at F1 >= {rec['f1_threshold']} (mean F1 {rec['mean_f1']:.3f}) "
            f"in {report['runtime_seconds']:.1f}s; report: {args.out}"
        )
    else:
        print(blob)
    return 0


def _cmd_demo(args) -> int:
    from . import evalharness as ev

    spec = ev.demo_spec()
    config = _load_config(args.config).replace(seed=args.seed)
    corpus = ev.generate_corpus(spec, seed=args.seed, config=config)
    out = Path(args.out)
    corpus.write(out)
    summary = run_pipeline(
        events_path=out / "events.jsonl",
        out=out,
        config=config,
        pins_path=out / "pins.jsonl",
        interactions_path=out / "interactions.jsonl",
        window=(corpus.window1.start, corpus.window1.end),
    )
    two_style_user = next(
        (
            u
            for u, (_, secondary) in sorted(corpus.truth.user_styles.items())
            if secondary is not None
        ),
        None,
    )
    summary["try"] = {
        "search": "nautical decor",
        "suggest": "coastal decor",
        "trigger_query": "kitchen ideas",
        "trigger_user": two_style_user,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_materialize(args) -> int:
    from .materialize import materialize_topic, write_materializations, PinIndex

    snap = Path(args.snapshot)
    config = _load_config(args.config)
    b = load_bigraph(snap)
    topics = read_topics(snap / "topics.jsonl")
    pins_path = snap / "pins.jsonl"
    inter_path = snap / "interactions.jsonl"
    pins = read_pins(pins_path, strict=True)[0] if pins_path.exists() else []
    interactions = (
        read_interactions(inter_path, strict=True)[0] if inter_path.exists() else []
    )
    index = PinIndex(pins)
    outdir = Path(args.out) if args.out else snap / "materializations"
    write_materializations(
        (materialize_topic(t, b, index, interactions, config) for t in topics),
        outdir,
    )
    print(json.dumps({"out": str(outdir), "topics": len(topics)}))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(snapshot_dir=args.snapshot, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_classify_pin(args) -> int:
    from .service import load_state
    from .taxonomy import classify_pin

    state = load_state(Path(args.snapshot))
    ranked = classify_pin(args.description, state.taxonomy, state.topics_by_id)
    name_of = {n.id: n.name for n in state.taxonomy.nodes.values()}
    print(
        json.dumps(
            [
                {"node_id": nid, "name": name_of[nid], "score": score}
                for nid, score in ranked
            ],
            indent=2,
        )
    )
    return 0


def _cmd_trigger(args) -> int:
    from .ingest import normalize_query
    from .service import load_state
    from .taxonomy import UserHistory, trigger

    state = load_state(Path(args.snapshot))
    query = normalize_query(args.query)
    if state.bigraph.col_index(query) is None:
        raise CliError(f"query not in snapshot: {query}", code=2)
    history = state.histories.get(args.user, UserHistory())
    decision = trigger(
        history, query, state.taxonomy, state.topics_by_id,
        state.bigraph, state.pin_index, state.config, now=state.now,
    )
    print(
        json.dumps(
            {
                "triggered": decision.triggered,
                "reason": decision.reason,
                "styles": [
                    {
                        "node_id": c.node_id,
                        "name": c.name,
                        "affinity": c.affinity,
                        "pins": [
                            {"pin": pid, "strength": s} for pid, s in c.pins
                        ],
                    }
                    for c in decision.styles
                ],
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Discover micro-topics from search logs and curate them.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="build a snapshot from event logs")
    p_run.add_argument("--events", required=True)
    p_run.add_argument("--pins")
    p_run.add_argument("--interactions")
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--config")
    p_run.add_argument("--window-start", type=float)
    p_run.add_argument("--window-end", type=float)
    p_run.add_argument("--strict", action="store_true",
                       help="fail on the first malformed input line")
    p_run.add_argument("--force", action="store_true",
                       help="rebuild every stage, ignoring the cache")
    p_run.set_defaults(func=_cmd_run)

    p_eval = sub.add_parser("eval", help="score recovery on a planted corpus")
    p_eval.add_argument(
        "--preset",
        choices=["uniform", "zipf", "overlap", "granularity", "drift", "demo"],
        default="uniform",
    )
    p_eval.add_argument("--spec", help="planted spec JSON (overrides --preset)")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--sessions", type=int, default=20_000)
    p_eval.add_argument("--topics", type=int, default=10)
    p_eval.add_argument("--noise", type=float, default=0.1)
    p_eval.add_argument("--f1", type=float, default=0.8)
    p_eval.add_argument("--config")
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=_cmd_eval)

    p_demo = sub.add_parser("demo", help="generate and build a browsable demo snapshot")
    p_demo.add_argument("--out", required=True)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--config")
    p_demo.set_defaults(func=_cmd_demo)

    p_mat = sub.add_parser("materialize", help="write per-topic surfaces as JSON")
    p_mat.add_argument("--snapshot", required=True)
    p_mat.add_argument("--out")
    p_mat.add_argument("--config")
    p_mat.set_defaults(func=_cmd_materialize)

    p_serve = sub.add_parser("serve", help="serve a snapshot over HTTP")
    p_serve.add_argument("--snapshot", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--ui", help="directory of built UI assets to mount at /ui")
    p_serve.set_defaults(func=_cmd_serve)

    p_cls = sub.add_parser("classify-pin", help="rank taxonomy nodes for a description")
    p_cls.add_argument("--snapshot", required=True)
    p_cls.add_argument("--description", required=True)
    p_cls.set_defaults(func=_cmd_classify_pin)

    p_trig = sub.add_parser("trigger", help="preview the styled-results decision")
    p_trig.add_argument("--snapshot", required=True)
    p_trig.add_argument("--user", required=True)
    p_trig.add_argument("--query", required=True)
    p_trig.set_defaults(func=_cmd_trigger)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 3
    except (ConfigError, IngestError, SnapshotError, EmptyWindow, InvalidSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
