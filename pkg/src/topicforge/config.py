"""Pipeline configuration: every tunable in one validated, hashable place."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

# Words that never carry topical signal on their own. An n-gram made up
# entirely of these is dropped at extraction time; mixed n-grams are kept.
DEFAULT_STOPWORDS: tuple[str, ...] = (
    "a", "an", "and", "are", "as", "at", "be", "by", "do", "for", "from",
    "how", "i", "in", "is", "it", "my", "of", "on", "or", "that", "the",
    "this", "to", "was", "what", "when", "where", "which", "who", "why",
    "will", "with", "you", "your",
)

# Anneal stages as (first iteration, edge-weight percentile floor) pairs.
# Strongest edges first, everything active by the final stage.
DEFAULT_ANNEAL_STAGES: tuple[tuple[int, float], ...] = (
    (0, 90.0),
    (2, 70.0),
    (4, 50.0),
    (6, 25.0),
    (8, 0.0),
)


class ConfigError(ValueError):
    """Raised for unknown keys or out-of-range values."""


@dataclass(frozen=True)
class PipelineConfig:
    # ingest
    session_gap: float = 1800.0
    n_max: int = 3
    min_query_freq: int = 3
    stopwords: tuple[str, ...] = DEFAULT_STOPWORDS
    # bigraph
    min_cooccurrence: int = 2
    # simgraph
    sim_threshold: float = 0.3
    # communities
    anneal_stages: tuple[tuple[int, float], ...] = DEFAULT_ANNEAL_STAGES
    max_iters: int = 20
    min_topic_size: int = 3
    density_floor: float = 0.35
    dedup_threshold: float = 0.7
    # materialize
    k_queries: int = 50
    k_pins: int = 50
    min_interactions: int = 1
    # taxonomy
    recency_tau_days: float = 30.0
    dominance_share: float = 0.5
    min_styles: int = 2
    min_pins: int = 4
    # shared
    seed: int = 0

    def __post_init__(self) -> None:
        if self.session_gap <= 0:
            raise ConfigError("session_gap must be positive")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.min_query_freq < 1:
            raise ConfigError("min_query_freq must be >= 1")
        if self.min_cooccurrence < 1:
            raise ConfigError("min_cooccurrence must be >= 1")
        if not 0.0 < self.sim_threshold <= 1.0:
            raise ConfigError("sim_threshold must be in (0, 1]")
        self._check_anneal()
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.min_topic_size < 2:
            raise ConfigError("min_topic_size must be >= 2")
        if self.density_floor < 0:
            raise ConfigError("density_floor must be >= 0")
        if not 0.0 < self.dedup_threshold <= 1.0:
            raise ConfigError("dedup_threshold must be in (0, 1]")
        if self.k_queries < 1 or self.k_pins < 1:
            raise ConfigError("k_queries and k_pins must be >= 1")
        if self.min_interactions < 1:
            raise ConfigError("min_interactions must be >= 1")
        if self.recency_tau_days <= 0:
            raise ConfigError("recency_tau_days must be positive")
        if not 0.0 < self.dominance_share < 1.0:
            raise ConfigError("dominance_share must be in (0, 1)")
        if self.min_styles < 1:
            raise ConfigError("min_styles must be >= 1")
        if self.min_pins < 1:
            raise ConfigError("min_pins must be >= 1")

    def _check_anneal(self) -> None:
        stages = self.anneal_stages
        if not stages:
            raise ConfigError("anneal_stages must not be empty")
        last_iter = -1
        last_pct = 101.0
        for it, pct in stages:
            if it <= last_iter:
                raise ConfigError("anneal stage iterations must strictly increase")
            if not 0.0 <= pct <= 100.0:
                raise ConfigError("anneal percentile must be in [0, 100]")
            if pct >= last_pct:
                raise ConfigError("anneal percentile floors must strictly decrease")
            last_iter, last_pct = it, pct
        if stages[0][0] != 0:
            raise ConfigError("anneal schedule must start at iteration 0")
        if stages[-1][1] != 0.0:
            raise ConfigError("anneal schedule must end at percentile 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(raw)
        if "stopwords" in kwargs:
            kwargs["stopwords"] = tuple(kwargs["stopwords"])
        if "anneal_stages" in kwargs:
            kwargs["anneal_stages"] = tuple(
                (int(it), float(pct)) for it, pct in kwargs["anneal_stages"]
            )
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        # frozenset order is process-dependent; the dump must not be
        out["stopwords"] = sorted(self.stopwords)
        out["anneal_stages"] = [list(s) for s in self.anneal_stages]
        return out

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)
