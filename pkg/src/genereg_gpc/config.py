"""Run configuration: nested YAML sections mapped onto frozen dataclasses.

Every key is optional; unknown keys raise :class:`ConfigError` naming the
offending path. See ``configs/default.yaml`` for the annotated schema.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .integrate import IntegratorConfig
from .kinetics import ModelParams, SourceTerm
from .measure_basis import Measure, build_measure, default_quadrature_nodes


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSection:
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0


@dataclass(frozen=True)
class SourceSection:
    kind: str = "affine"
    k: float = 2.0 / 3.0
    d: float = 1.0
    coeffs: tuple = ()


@dataclass(frozen=True)
class MeasureSection:
    kind: str = "uniform"
    lower: float = -0.5
    upper: float = 0.5


@dataclass(frozen=True)
class GalerkinSection:
    K: int = 8
    quad_nodes: int | None = None


@dataclass(frozen=True)
class TimeSection:
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 10.0
    record_every: int = 10


@dataclass(frozen=True)
class InitialSection:
    # monomial coefficients in z, lowest degree first
    rho0: tuple = (1e-3, 1e-3)
    m0: tuple = (1e-3, -1e-3)


@dataclass(frozen=True)
class DecaySection:
    collocation_nodes: int = 64
    n: int = 1
    slack: float = 1.05


@dataclass(frozen=True)
class ConvergeSection:
    K_list: tuple = (2, 4, 6, 8, 10)
    collocation_nodes: int = 64


@dataclass(frozen=True)
class CVSweepSection:
    k_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    d_grid: tuple = (1.0 / 3.0, 0.5, 1.0, 2.0, 5.0)
    trend_d: float = 1.0
    trend_k: float = 2.0 / 3.0
    rate_grid: tuple = (0.5, 1.0, 2.0, 4.0)
    rate_source_k: float = 2.0 / 3.0
    rate_source_d: float = 1.0
    quad_nodes: int = 64


@dataclass(frozen=True)
class CheckSection:
    max_order: int = 6
    grid_size: int = 10001
    growth_grid: int = 2000


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    source: SourceSection = field(default_factory=SourceSection)
    measure: MeasureSection = field(default_factory=MeasureSection)
    galerkin: GalerkinSection = field(default_factory=GalerkinSection)
    time: TimeSection = field(default_factory=TimeSection)
    initial: InitialSection = field(default_factory=InitialSection)
    decay: DecaySection = field(default_factory=DecaySection)
    converge: ConvergeSection = field(default_factory=ConvergeSection)
    cv_sweep: CVSweepSection = field(default_factory=CVSweepSection)
    check: CheckSection = field(default_factory=CheckSection)

    # -- derived objects ---------------------------------------------------
    def params(self) -> ModelParams:
        return ModelParams(self.model.a, self.model.b, self.model.c)

    def build_measure(self) -> Measure:
        return build_measure(self.measure.kind, self.measure.lower, self.measure.upper)

    def build_source(self) -> SourceTerm:
        interval = (self.measure.lower, self.measure.upper)
        if self.source.kind == "affine":
            return SourceTerm.affine(self.source.k, self.source.d, interval)
        return SourceTerm(tuple(self.source.coeffs), interval)

    def integrator(self) -> IntegratorConfig:
        t = self.time
        return IntegratorConfig(t.scheme, t.dt, t.t_end, t.record_every)

    def quad_nodes(self) -> int:
        return self.galerkin.quad_nodes or default_quadrature_nodes(self.galerkin.K)


_SECTION_TYPES = {f.name: f.default_factory for f in dataclasses.fields(RunConfig)}


def _number(value, path):
    # YAML 1.1 reads "1e-4" (no dot) as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return value


def _coerce(value, default, path):
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        value = [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
        if default and all(isinstance(v, int) for v in default):
            return tuple(int(v) if float(v).is_integer() else float(v) for v in value)
        return tuple(float(v) for v in value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        return float(_number(value, path))
    return value


def from_dict(data: dict | None) -> RunConfig:
    data = dict(data or {})
    sections = {}
    for name, payload in data.items():
        if name not in _SECTION_TYPES:
            raise ConfigError(f"unknown section {name!r}")
        if payload is None:
            continue
        if not isinstance(payload, dict):
            raise ConfigError(f"{name}: expected a mapping")
        default = _SECTION_TYPES[name]()
        known = {f.name: getattr(default, f.name) for f in dataclasses.fields(default)}
        kwargs = {}
        for key, value in payload.items():
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}")
            default_value = 0 if (name, key) == ("galerkin", "quad_nodes") else known[key]
            kwargs[key] = value if value is None else _coerce(value, default_value, f"{name}.{key}")
        sections[name] = dataclasses.replace(default, **kwargs)
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data: dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        data.setdefault(section, {})
        if data[section] is None:
            data[section] = {}
        data[section][key] = value
    return from_dict(data)


def validate(cfg: RunConfig) -> None:
    """Run every module precondition up front; errors name the key."""
    if cfg.source.kind not in ("affine", "polynomial"):
        raise ConfigError(f"source.kind: unknown kind {cfg.source.kind!r}")
    checks = [
        ("model", cfg.params),
        ("measure", cfg.build_measure),
        ("source", cfg.build_source),
        ("time", cfg.integrator),
    ]
    for name, fn in checks:
        try:
            fn()
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
    if cfg.source.kind == "polynomial" and not cfg.source.coeffs:
        raise ConfigError("source.coeffs: polynomial source needs coefficients")
    if cfg.galerkin.K < 0:
        raise ConfigError("galerkin.K: must be >= 0")
    if cfg.galerkin.quad_nodes is not None and cfg.galerkin.quad_nodes < (3 * cfg.galerkin.K + 2) // 2:
        raise ConfigError("galerkin.quad_nodes: too few nodes for exact triple products")
    if not cfg.initial.rho0 or not cfg.initial.m0:
        raise ConfigError("initial: rho0 and m0 need at least one coefficient")
    if cfg.decay.n < 0:
        raise ConfigError("decay.n: must be >= 0")
    if cfg.decay.collocation_nodes < 1:
        raise ConfigError("decay.collocation_nodes: must be >= 1")
    ks = list(cfg.converge.K_list)
    if not ks or any(int(k) != k or k < 0 for k in ks) or ks != sorted(ks):
        raise ConfigError("converge.K_list: must be ascending nonnegative integers")
    if cfg.converge.collocation_nodes < 1:
        raise ConfigError("converge.collocation_nodes: must be >= 1")
    if cfg.cv_sweep.quad_nodes < 2:
        raise ConfigError("cv_sweep.quad_nodes: must be >= 2")
    if any(v <= 0 for v in cfg.cv_sweep.rate_grid):
        raise ConfigError("cv_sweep.rate_grid: rates must be positive")
    if cfg.check.grid_size < 2 or cfg.check.growth_grid < 1000:
        raise ConfigError("check: grid_size >= 2 and growth_grid >= 1000 required")
