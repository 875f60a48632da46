"""Pipeline configuration: one JSON tree, hashed into every output manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class PathsConfig:
    input_dataset: Optional[str] = None     # dataset dir for feature/label stages
    embeddings: Optional[str] = None        # backbone embeddings JSONL
    seed_bank: Optional[str] = None         # seed bank JSONL for the RAG lane
    responses: Optional[str] = None         # model responses JSONL for evaluate


@dataclass(frozen=True)
class FilterConfig:
    k: Optional[int] = None                 # None = round(sqrt(n/2))
    epsilon: Optional[float] = None         # fixed threshold, or None to tune
    target_count: Optional[int] = None      # tuning target when epsilon is None
    tolerance_frac: float = 0.05
    keep_most_typical: bool = False


@dataclass(frozen=True)
class GenerationConfig:
    charts_per_type: int = 10
    augmentations_per_chart: int = 2
    llm_enabled: bool = False
    llm_shots: int = 3


@dataclass(frozen=True)
class QaConfig:
    per_cell_min: int = 0
    per_cell_max: int = 40
    qa_attempts: int = 3


@dataclass(frozen=True)
class BenchmarkConfig:
    charts: int = 368
    qa_per_chart: int = 2


@dataclass(frozen=True)
class EvalConfig:
    judge_enabled: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    global_seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    qa: QaConfig = field(default_factory=QaConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_json_dict(self) -> dict:
        return {
            "global_seed": self.global_seed,
            "paths": vars(self.paths),
            "filter": vars(self.filter),
            "generation": vars(self.generation),
            "qa": vars(self.qa),
            "benchmark": vars(self.benchmark),
            "eval": vars(self.eval),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _expect(d: dict, field_name: str, kind, default):
    if field_name not in d:
        return default
    v = d[field_name]
    if v is None and default is None:
        return None
    if kind is float and isinstance(v, int):
        v = float(v)
    if not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
        raise ConfigError(field_name, f"expected {kind.__name__}, got {type(v).__name__}")
    return v


def _positive(name: str, v, allow_zero=False):
    if v is None:
        return v
    if v < 0 or (v == 0 and not allow_zero):
        raise ConfigError(name, f"must be {'>= 0' if allow_zero else '> 0'}, got {v}")
    return v


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config", f"no such file: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON: {e}") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    paths = raw.get("paths", {})
    filt = raw.get("filter", {})
    gen = raw.get("generation", {})
    qa = raw.get("qa", {})
    bench = raw.get("benchmark", {})
    ev = raw.get("eval", {})

    cfg = PipelineConfig(
        global_seed=_positive("global_seed", _expect(raw, "global_seed", int, 0), allow_zero=True),
        paths=PathsConfig(
            input_dataset=_expect(paths, "input_dataset", str, None),
            embeddings=_expect(paths, "embeddings", str, None),
            seed_bank=_expect(paths, "seed_bank", str, None),
            responses=_expect(paths, "responses", str, None),
        ),
        filter=FilterConfig(
            k=_positive("filter.k", _expect(filt, "k", int, None)),
            epsilon=_expect(filt, "epsilon", float, None),
            target_count=_positive("filter.target_count", _expect(filt, "target_count", int, None)),
            tolerance_frac=_expect(filt, "tolerance_frac", float, 0.05),
            keep_most_typical=_expect(filt, "keep_most_typical", bool, False),
        ),
        generation=GenerationConfig(
            charts_per_type=_positive(
                "generation.charts_per_type", _expect(gen, "charts_per_type", int, 10)
            ),
            augmentations_per_chart=_positive(
                "generation.augmentations_per_chart",
                _expect(gen, "augmentations_per_chart", int, 2),
                allow_zero=True,
            ),
            llm_enabled=_expect(gen, "llm_enabled", bool, False),
            llm_shots=_positive("generation.llm_shots", _expect(gen, "llm_shots", int, 3)),
        ),
        qa=QaConfig(
            per_cell_min=_positive("qa.per_cell_min", _expect(qa, "per_cell_min", int, 0), allow_zero=True),
            per_cell_max=_positive("qa.per_cell_max", _expect(qa, "per_cell_max", int, 40)),
            qa_attempts=_positive("qa.qa_attempts", _expect(qa, "qa_attempts", int, 3)),
        ),
        benchmark=BenchmarkConfig(
            charts=_positive("benchmark.charts", _expect(bench, "charts", int, 368)),
            qa_per_chart=_positive("benchmark.qa_per_chart", _expect(bench, "qa_per_chart", int, 2)),
        ),
        eval=EvalConfig(judge_enabled=_expect(ev, "judge_enabled", bool, False)),
    )
    if cfg.filter.epsilon is not None and not (0.0 < cfg.filter.epsilon < 1.0):
        raise ConfigError("filter.epsilon", f"must be in (0,1), got {cfg.filter.epsilon}")
    if not (0.0 < cfg.filter.tolerance_frac < 0.5):
        raise ConfigError("filter.tolerance_frac", "must be in (0, 0.5)")
    if cfg.qa.per_cell_min > cfg.qa.per_cell_max:
        raise ConfigError("qa.per_cell_min", "minimum exceeds maximum")
    return cfg
