"""Experiment configuration: JSON documents and bundled presets."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .grid_paths import TimeGrid, build_grid
from .payoffs import PayoffSpec, bounded_integrand, payoff_from_dict
from .representations import alpha_from_p

REPRESENTATIONS = ("canonical", "lebesgue", "volterra", "fractional")
CHECKS = ("singular_functional", "l21", "lp1", "orthogonality", "minimality", "veraar",
          "gprime", "girsanov", "agreement", "rl_variance", "resolvent")
SWEEP_PARAMETERS = ("gamma", "alpha", "p", "N")
FORMATS = ("csv", "json")


@dataclass
class GridConfig:
    T: float = 1.0
    N: int = 2 ** 14
    q: float = 2.0

    def build(self) -> TimeGrid:
        return build_grid(self.T, self.N, self.q)


@dataclass
class MCConfig:
    n_paths: int = 10_000
    seed: int = 271828
    block_size: int = 1000
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class RepresentationConfig:
    kind: str = "canonical"
    alpha: float | None = None
    p: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.kind!r}")
        if self.kind == "fractional":
            if (self.alpha is None) == (self.p is None):
                raise ValueError("fractional representation needs exactly one of alpha or p")
            self.resolved_alpha()

    def resolved_alpha(self) -> float | None:
        if self.kind != "fractional":
            return None
        if self.p is not None:
            return alpha_from_p(self.p)
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        return float(self.alpha)


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv", "json"])
    rate_paths: int = 8

    def __post_init__(self) -> None:
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown output formats {sorted(bad)}")


@dataclass
class SweepConfig:
    parameter: str
    values: list

    def __post_init__(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unsupported sweep parameter {self.parameter!r}; choose from {SWEEP_PARAMETERS}")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    payoff: dict = field(default_factory=lambda: {"variant": "terminal_function", "g": "identity"})
    grid: GridConfig = field(default_factory=GridConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    representation: RepresentationConfig = field(default_factory=RepresentationConfig)
    diagnostics: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig | None = None

    def __post_init__(self) -> None:
        unknown = [c for c in self.diagnostics if c not in CHECKS]
        if unknown:
            raise ValueError(f"unknown diagnostics {unknown}; choose from {CHECKS}")
        spec = self.payoff_spec()
        if self.representation.kind == "fractional" and not bounded_integrand(spec):
            raise ValueError("fractional representation needs a payoff with a bounded martingale integrand")

    def payoff_spec(self) -> PayoffSpec:
        return payoff_from_dict(self.payoff)

    @property
    def alpha(self) -> float | None:
        return self.representation.resolved_alpha()

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.sweep is None:
            d.pop("sweep")
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_changes(self, **changes: Any) -> "ExperimentConfig":
        """Copy with nested overrides, e.g. ``with_changes(grid={"N": 1024})``."""
        d = self.to_dict()
        for key, val in changes.items():
            if isinstance(val, dict) and isinstance(d.get(key), dict):
                d[key] = {**d[key], **val}
            else:
                d[key] = val
        return config_from_dict(d)


def _sub(cls, data: dict | None):
    data = dict(data or {})
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = copy.deepcopy(data)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    sweep = data.get("sweep")
    return ExperimentConfig(
        name=data.get("name", "experiment"),
        payoff=data.get("payoff", {"variant": "terminal_function", "g": "identity"}),
        grid=_sub(GridConfig, data.get("grid")),
        mc=_sub(MCConfig, data.get("mc")),
        representation=_sub(RepresentationConfig, data.get("representation")),
        diagnostics=list(data.get("diagnostics", [])),
        options=dict(data.get("options", {})),
        output=_sub(OutputConfig, data.get("output")),
        sweep=None if sweep is None else _sub(SweepConfig, sweep),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def preset_names() -> list[str]:
    root = resources.files("lebrep") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> ExperimentConfig:
    res = resources.files("lebrep") / "presets" / f"{name}.json"
    if not res.is_file():
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return config_from_dict(json.loads(res.read_text(encoding="utf-8")))


def apply_overrides(cfg: ExperimentConfig, seed: int | None = None, paths: int | None = None,
                    grid: str | None = None, out: str | None = None, workers: int | None = None) -> ExperimentConfig:
    """CLI overrides; ``grid`` is ``"N,q"`` or ``"N"``."""
    mc = cfg.mc
    if seed is not None:
        mc = replace(mc, seed=seed)
    if paths is not None:
        mc = replace(mc, n_paths=paths)
    if workers is not None:
        mc = replace(mc, workers=workers)
    g = cfg.grid
    if grid is not None:
        parts = grid.split(",")
        if len(parts) not in (1, 2):
            raise ValueError(f"--grid expects N or N,q, got {grid!r}")
        g = replace(g, N=int(parts[0]), q=float(parts[1]) if len(parts) == 2 else g.q)
    o = cfg.output if out is None else replace(cfg.output, directory=out)
    return replace(cfg, mc=mc, grid=g, output=o)
