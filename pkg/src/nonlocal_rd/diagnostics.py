"""Energy functional, a priori estimate monitors and attractor diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .basis import SpectralBasis, coefficients_of
from .flow import Trajectory
from .model import model_for
from .problems import ProblemSpec


@dataclass(frozen=True)
class EnergyReport:
    E: float
    diffusion: float
    reaction: float
    forcing: float
    l2: float
    h1: float

    @property
    def parts(self) -> dict:
        return {"diffusion": self.diffusion, "reaction": self.reaction, "forcing": self.forcing}


def energy(state, spec: ProblemSpec, basis: SpectralBasis) -> EnergyReport:
    """E = A(|u|_1^2)/2 - int F(u) - int h u, split into its three parts."""
    model = model_for(spec, basis)
    g = coefficients_of(state)
    d, r, f = (float(x) for x in model.energy_parts(g))
    return EnergyReport(d + r + f, d, r, f, float(np.linalg.norm(g)), math.sqrt(float(model.h1_sq(g))))


# --------------------------------------------------------------------------
# monitors
# --------------------------------------------------------------------------


def slack_for(scale: float, rel_tol: float) -> float:
    return max(1e-8, 10.0 * rel_tol * abs(scale))


@dataclass
class EstimateMonitor:
    """Margins (bound - observed) of one estimate; passes iff min >= -slack."""

    name: str
    bound: str
    margins: np.ndarray
    slack: float = 0.0
    applicable: bool = True
    note: str = ""

    @property
    def min_margin(self) -> float:
        if self.margins.size == 0:
            return math.inf
        return float(np.min(self.margins))

    @property
    def passed(self) -> bool:
        if not self.applicable:
            return True
        return bool(np.all(np.isfinite(self.margins))) and self.min_margin >= -self.slack

    def as_dict(self) -> dict:
        m = self.min_margin
        return {
            "name": self.name,
            "bound": self.bound,
            "applicable": self.applicable,
            "min_margin": m if math.isfinite(m) else None,
            "slack": self.slack,
            "samples": int(self.margins.size),
            "passed": self.passed,
            "note": self.note,
        }


def absorbing_time(spec: ProblemSpec, r_sq: float) -> float:
    """Entry time into the absorbing ball for data with |u0|^2 <= r_sq."""
    lm = spec.lambda1 * spec.diffusion.m
    k1 = spec.kappa1
    if r_sq <= 0.0:
        return 0.0
    if k1 <= 0.0:
        return math.inf
    return max(0.0, math.log(lm * r_sq / k1) / lm)


def l2_decay_monitor(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-4) -> EstimateMonitor:
    lm = spec.lambda1 * spec.diffusion.m
    k1 = spec.kappa1
    bound = traj.l2[0] ** 2 * np.exp(-lm * (traj.t - traj.t[0])) + k1 / lm
    return EstimateMonitor(
        "l2_decay_bound",
        "|u(t)|^2 <= |u(0)|^2 exp(-lambda1 m t) + kappa1/(lambda1 m)",
        bound - traj.l2 ** 2,
        slack_for(float(np.max(bound)), rel_tol),
    )


def absorbing_ball_monitor(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-4) -> EstimateMonitor:
    lm = spec.lambda1 * spec.diffusion.m
    k1 = spec.kappa1
    t0 = traj.t[0] + absorbing_time(spec, float(traj.l2[0] ** 2))
    radius = 2.0 * k1 / lm
    mask = traj.t >= t0
    return EstimateMonitor(
        "absorbing_ball",
        "|u(t)|^2 <= 2 kappa1/(lambda1 m) for t >= t0(|u0|^2)",
        radius - traj.l2[mask] ** 2,
        slack_for(radius, rel_tol),
        note=f"t0={float(t0 - traj.t[0])!r}",
    )


def mean_h1_monitor(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-4) -> EstimateMonitor:
    m = spec.diffusion.m
    lm = spec.lambda1 * m
    k1 = spec.kappa1
    bound = k1 / m + 2.0 * k1 / lm
    t0 = traj.t[0] + absorbing_time(spec, float(traj.l2[0] ** 2))
    t = traj.t
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (traj.h1[1:] ** 2 + traj.h1[:-1] ** 2) * np.diff(t))])
    starts = t[(t >= t0) & (t + 1.0 <= t[-1])]
    window = np.interp(starts + 1.0, t, cum) - np.interp(starts, t, cum)
    return EstimateMonitor(
        "mean_h1_window",
        "int_t^{t+1} |u|_1^2 <= kappa1/m + 2 kappa1/(lambda1 m) for t >= t0",
        bound - window,
        slack_for(bound, rel_tol),
        note=f"{starts.size} windows",
    )


def energy_decay_monitor(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-4) -> EstimateMonitor:
    tol_e = 10.0 * rel_tol * (1.0 + np.abs(traj.energy[:-1]))
    return EstimateMonitor(
        "energy_nonincreasing",
        "E(t_{k+1}) <= E(t_k) + 10 rel_tol (1 + |E(t_k)|)",
        tol_e - np.diff(traj.energy),
        0.0,
        applicable=spec.forcing.autonomous,
    )


def energy_equality_monitor(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-4) -> EstimateMonitor:
    """int |u_t|^2 + E(end) - E(start) = 0 with |u_t| the L^2 norm of the time derivative."""
    res = traj.energy_residual()
    scale = 1.0 + abs(traj.energy[0]) + float(np.sum(traj.dissipation))
    slack = slack_for(scale, rel_tol)
    return EstimateMonitor(
        "energy_equality_ut_l2",
        "|sum of |u_t|_2^2 dt + E(end) - E(start)| small",
        np.array([slack - abs(res)]),
        0.0,
        applicable=spec.forcing.autonomous,
        note=f"residual={res!r}",
    )


def energy_lower_bound_monitor(traj: Trajectory, spec: ProblemSpec, basis: SpectralBasis) -> EstimateMonitor:
    r = spec.reaction
    model = model_for(spec, basis)
    h_norm = max(math.sqrt(spec.forcing_l2_sq()), float(np.linalg.norm(model.h_coef)))
    floor = (0.5 * spec.diffusion.m * traj.h1 ** 2 + r.alpha1_t * traj.lp ** r.p
             - r.kappa_t * spec.L - h_norm * traj.l2)
    margins = traj.energy - floor
    return EstimateMonitor(
        "energy_lower_bound",
        "E >= m|u|_1^2/2 + alpha1~ |u|_p^p - kappa~|Omega| - |h||u|",
        margins,
        slack_for(float(np.max(np.abs(floor))) if floor.size else 0.0, 1e-12),
    )


def sf_inequality_monitor(spec: ProblemSpec, s_span: float = 10.0, n: int = 4001) -> EstimateMonitor:
    r = spec.reaction
    applicable = r.eta is not None
    s = np.linspace(-s_span, s_span, n)
    eta = r.eta if applicable else 0.0
    margins = r.F(s) + 0.5 * eta * s * s - s * r.f(s)
    return EstimateMonitor(
        "sf_vs_F_inequality",
        "s f(s) <= F(s) + eta s^2/2",
        margins,
        1e-12 * (1.0 + float(np.max(np.abs(margins)))),
        applicable=applicable,
    )


def norm_monotonicity_monitor(spec: ProblemSpec, basis: SpectralBasis, pairs: int = 200,
                              seed: int = 0) -> EstimateMonitor:
    """(a(|u|^2)|u|^2 - a(|v|^2)|v|^2)(|u|^2 - |v|^2) >= 0 for random H^1_0 pairs."""
    rng = np.random.default_rng(seed)
    lam = basis.eigenvalues
    g = rng.normal(size=(2, pairs, basis.n_modes)) * rng.uniform(0.0, 3.0, size=(2, pairs, 1))
    s = (g * g) @ lam
    a = spec.diffusion.a(s)
    margins = (a[0] * s[0] - a[1] * s[1]) * (s[0] - s[1])
    return EstimateMonitor(
        "norm_monotonicity",
        "(a(|u|_1^2)|u|_1^2 - a(|v|_1^2)|v|_1^2)(|u|_1^2 - |v|_1^2) >= 0",
        margins,
        1e-12 * (1.0 + float(np.max(np.abs(margins)))),
        applicable=spec.diffusion.monotone_as,
    )


# --------------------------------------------------------------------------
# L^infinity and H^2 diagnostics
# --------------------------------------------------------------------------


def _sup_scalar(phi, s_hint: float = 1.0) -> tuple:
    """Global max of a coercive-from-above scalar function on the real line."""
    span = max(1.0, s_hint)
    while max(phi(span), phi(-span)) >= 0.0:
        span *= 2.0
        if span > 1e8:
            raise ValueError("scalar function is not eventually negative")
    s = np.linspace(-span, span, 20001)
    vals = phi(s)
    i = int(np.argmax(vals))
    step = s[1] - s[0]
    res = minimize_scalar(lambda x: -phi(x), bounds=(s[i] - step, s[i] + step),
                          method="bounded", options={"xatol": 1e-14})
    best = max(float(vals[i]), -float(res.fun))
    return best, (float(res.x) if -res.fun >= vals[i] else float(s[i]))


def linf_bound_constant(spec: ProblemSpec, alpha: float = 0.5,
                        basis: Optional[SpectralBasis] = None) -> float:
    """M = (kappa~/alpha~)^(1/p) from (f(u) + h)u <= kappa~ - alpha~ |u|^p.

    kappa~ is the maximum over s of f(s)s + sup|h| |s| + alpha |s|^p; ``alpha``
    must stay below the reaction's own p-th power coefficient.
    """
    if not spec.forcing.autonomous:
        raise ValueError("L-infinity bound needs time-independent forcing")
    r = spec.reaction
    if basis is not None:
        h_sup = float(np.max(np.abs(model_for(spec, basis).h_nodes)))
    else:
        h_sup = spec.forcing_sup()
    if not math.isfinite(h_sup):
        raise ValueError("forcing is not bounded")
    p = r.p

    def phi(s):
        s = np.asarray(s, dtype=float)
        return r.f(s) * s + h_sup * np.abs(s) + alpha * np.abs(s) ** p

    try:
        kappa, _ = _sup_scalar(phi, 1.0 + abs(r.lam))
    except ValueError as exc:
        raise ValueError(f"alpha={alpha} too large for the reaction's dissipative bound") from exc
    kappa = max(kappa, 0.0)
    return (kappa / alpha) ** (1.0 / p)


def grid_max(traj: Trajectory, basis: SpectralBasis) -> np.ndarray:
    return np.max(np.abs(basis.synthesize(traj.gamma)), axis=-1)


def attractor_pointwise_check(tail: Trajectory, M: float, basis: SpectralBasis) -> float:
    """max over tail records of (grid max |u| - M); <= slack expected."""
    if len(tail) == 0:
        raise ValueError("empty trajectory tail")
    return float(np.max(grid_max(tail, basis)) - M)


def linf_monitor(traj: Trajectory, spec: ProblemSpec, basis: SpectralBasis,
                 tail_start: float, slack: float = 1e-3) -> EstimateMonitor:
    tail = traj.tail(tail_start)
    note = ""
    try:
        M = linf_bound_constant(spec, basis=basis)
    except ValueError as exc:
        M, note = math.nan, str(exc)
    applicable = math.isfinite(M) and len(tail) > 0
    margins = M - grid_max(tail, basis) if applicable else np.array([])
    return EstimateMonitor("linf_attractor", f"max|u| <= M = {M!r} on the tail t >= {tail_start!r}",
                           margins, slack, applicable=applicable, note=note)


def h2_diagnostic(tail: Trajectory, spec: ProblemSpec, basis: SpectralBasis) -> float:
    """sup over the tail of |u_xx|_2 = sqrt(sum lambda_k^2 gamma_k^2)."""
    if not spec.diffusion.aprime_nonneg:
        raise ValueError("H^2 attractor bound is only asserted when a' >= 0")
    if len(tail) == 0:
        return 0.0
    lam2 = basis.eigenvalues ** 2
    return float(np.sqrt(np.max((tail.gamma ** 2) @ lam2)))


def h2_monitor(traj: Trajectory, spec: ProblemSpec, basis: SpectralBasis,
               tail_start: float) -> EstimateMonitor:
    applicable = spec.diffusion.aprime_nonneg
    if not applicable:
        return EstimateMonitor("h2_attractor", "sup |u_xx|_2 finite on the tail", np.array([]),
                               applicable=False, note="a' >= 0 not claimed")
    sup = h2_diagnostic(traj.tail(tail_start), spec, basis)
    return EstimateMonitor("h2_attractor", "sup |u_xx|_2 finite on the tail",
                           np.array([0.0 if math.isfinite(sup) else -math.inf]),
                           note=f"sup={sup!r}")


def trajectory_monitors(traj: Trajectory, spec: ProblemSpec, basis: SpectralBasis,
                        rel_tol: float, tail_start: float) -> list:
    """Every estimate monitor that applies to a single autonomous trajectory."""
    return [
        l2_decay_monitor(traj, spec, rel_tol),
        absorbing_ball_monitor(traj, spec, rel_tol),
        mean_h1_monitor(traj, spec, rel_tol),
        energy_decay_monitor(traj, spec, rel_tol),
        energy_equality_monitor(traj, spec, rel_tol),
        energy_lower_bound_monitor(traj, spec, basis),
        linf_monitor(traj, spec, basis, tail_start),
        h2_monitor(traj, spec, basis, tail_start),
        sf_inequality_monitor(spec),
        norm_monotonicity_monitor(spec, basis),
    ]
