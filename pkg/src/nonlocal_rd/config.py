"""TOML run configuration.

Example::

    [problem]
    L = 3.141592653589793
    reaction = { kind = "cubic", lam = 2.0 }
    diffusion = { kind = "constant", m = 1.0 }
    forcing = { kind = "zero" }

    [discretization]
    n_modes = 16

    [flow]
    t_end = 30.0
    rel_tol = 1e-4

    [initial]
    coefficients = [0.1]

    [analysis]
    probes = 20
    seed = 0
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .basis import SpectralBasis, build_basis
from .flow import FlowConfig
from .problems import DiffusionModulator, Forcing, ProblemSpec, ReactionTerm


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class InitialCondition:
    coefficients: tuple = (0.1,)
    random_l2: Optional[float] = None

    def state(self, n_modes: int, seed: int) -> np.ndarray:
        g = np.zeros(n_modes)
        if self.random_l2 is not None:
            rng = np.random.default_rng(seed)
            k = np.arange(1, n_modes + 1)
            v = rng.normal(size=n_modes) / k
            return self.random_l2 * v / np.linalg.norm(v)
        c = np.asarray(self.coefficients, dtype=float)[:n_modes]
        g[:c.size] = c
        return g


@dataclass(frozen=True)
class AnalysisConfig:
    newton_tol: float = 1e-10
    max_iter: int = 100
    dedup_tol: float = 1e-6
    seed_modes: int = 2
    amplitudes: tuple = (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0)
    deflation_rounds: int = 1
    omega_tol: float = 1e-6
    t_max: float = 200.0
    probes: int = 20
    seed: int = 0
    t_probe: float = 30.0
    tail_start: float = 20.0
    refine_h2: bool = True
    equilibria_file: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    n_modes: int
    quad_size: Optional[int]
    rule: str
    flow: FlowConfig
    initial: InitialCondition
    analysis: AnalysisConfig
    out_dir: Optional[Path]
    source: Optional[Path] = None
    raw: dict = field(default_factory=dict, repr=False)

    def basis(self, n_modes: Optional[int] = None) -> SpectralBasis:
        n = self.n_modes if n_modes is None else n_modes
        q = self.quad_size if n_modes is None else None
        return build_basis(n, self.spec.L, q, self.rule)

    def with_overrides(self, modes: Optional[int] = None, seed: Optional[int] = None,
                       out_dir: Optional[Path] = None) -> "RunConfig":
        from dataclasses import replace

        cfg = self
        if modes is not None:
            if modes < 1:
                raise ConfigError("--modes must be positive")
            q = cfg.quad_size if cfg.quad_size is None or cfg.quad_size >= 4 * modes else None
            cfg = replace(cfg, n_modes=modes, quad_size=q)
        if seed is not None:
            cfg = replace(cfg, analysis=replace(cfg.analysis, seed=seed))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        return cfg


_TOP = {"problem", "discretization", "flow", "initial", "analysis", "output"}


def _take(section: dict, where: str, allowed) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"[{where}] unknown key(s): {', '.join(unknown)}")
    return dict(section)


def _build(where: str, factory, **kw):
    try:
        return factory(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from exc


def _reaction(sec: dict) -> ReactionTerm:
    sec = _take(sec, "problem.reaction", {"kind", "lam", "split"})
    kind = sec.get("kind", "cubic")
    if kind == "cubic":
        return _build("problem.reaction", ReactionTerm.cubic, lam=float(sec.get("lam", 2.0)),
                      split=float(sec.get("split", 0.5)))
    if kind == "linear":
        if "split" in sec:
            raise ConfigError("[problem.reaction] split applies to cubic reactions only")
        return _build("problem.reaction", ReactionTerm.linear, lam=float(sec.get("lam", 0.0)))
    raise ConfigError(f"[problem.reaction] unknown kind {kind!r}; use 'cubic' or 'linear'")


def _diffusion(sec: dict) -> DiffusionModulator:
    keys = {"kind", "m", "c", "claim_monotone_as", "claim_aprime_nonneg", "claim_linear_growth"}
    sec = _take(sec, "problem.diffusion", keys)
    sec.setdefault("kind", "constant")
    sec.setdefault("m", 1.0)
    return _build("problem.diffusion", DiffusionModulator, **sec)


def _forcing(sec: dict, base: Path) -> Forcing:
    sec = _take(sec, "problem.forcing", {"kind", "value", "file"})
    kind = sec.get("kind", "zero")
    if kind == "zero":
        return Forcing.zero()
    if kind == "constant":
        if "value" not in sec:
            raise ConfigError("[problem.forcing] constant forcing needs 'value'")
        return _build("problem.forcing", Forcing.constant, value=float(sec["value"]))
    if kind == "grid":
        if "file" not in sec:
            raise ConfigError("[problem.forcing] grid forcing needs 'file'")
        path = (base / sec["file"]).resolve()
        if not path.is_file():
            raise ConfigError(f"[problem.forcing] file not found: {path}")
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        except ValueError as exc:
            raise ConfigError(f"[problem.forcing] cannot parse {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise ConfigError(f"[problem.forcing] {path} must have two columns x,h")
        return _build("problem.forcing", Forcing.from_samples, x=data[:, 0], values=data[:, 1])
    raise ConfigError(f"[problem.forcing] unknown kind {kind!r}; use 'zero', 'constant' or 'grid'")


def parse_config(raw: dict, base: Path = Path("."), source: Optional[Path] = None) -> RunConfig:
    unknown = sorted(set(raw) - _TOP)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    prob = _take(raw.get("problem", {}), "problem", {"L", "reaction", "diffusion", "forcing"})
    L = float(prob.get("L", math.pi))
    spec = _build("problem", ProblemSpec,
                  reaction=_reaction(prob.get("reaction", {})),
                  diffusion=_diffusion(prob.get("diffusion", {})),
                  forcing=_forcing(prob.get("forcing", {}), base),
                  L=L)

    disc = _take(raw.get("discretization", {}), "discretization", {"n_modes", "quad_size", "rule"})
    n_modes = int(disc.get("n_modes", 16))
    if n_modes < 1:
        raise ConfigError("[discretization] n_modes must be positive")
    quad = disc.get("quad_size")
    rule = disc.get("rule", "trapezoid")

    flow_keys = {f.name for f in fields(FlowConfig)}
    flow = _build("flow", FlowConfig, **_take(raw.get("flow", {}), "flow", flow_keys))

    init = _take(raw.get("initial", {}), "initial", {"coefficients", "random_l2"})
    if "coefficients" in init:
        init["coefficients"] = tuple(float(x) for x in init["coefficients"])
    initial = _build("initial", InitialCondition, **init)

    ana_keys = {f.name for f in fields(AnalysisConfig)}
    ana = _take(raw.get("analysis", {}), "analysis", ana_keys)
    if "amplitudes" in ana:
        ana["amplitudes"] = tuple(float(x) for x in ana["amplitudes"])
    if ana.get("equilibria_file") is not None:
        ana["equilibria_file"] = str((base / ana["equilibria_file"]).resolve())
    analysis = _build("analysis", AnalysisConfig, **ana)
    if analysis.probes < 20:
        raise ConfigError("[analysis] probes must be at least 20")
    if not analysis.tail_start < analysis.t_probe:
        raise ConfigError("[analysis] tail_start must be below t_probe")

    out = _take(raw.get("output", {}), "output", {"dir"})
    out_dir = (base / out["dir"]).resolve() if "dir" in out else None

    cfg = RunConfig(spec, n_modes, None if quad is None else int(quad), rule, flow, initial,
                    analysis, out_dir, source, raw)
    try:
        cfg.basis()
    except ValueError as exc:
        raise ConfigError(f"[discretization] {exc}") from exc
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, path.parent, path)
