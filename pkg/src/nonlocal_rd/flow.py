"""Adaptive IMEX integration of the Galerkin system and trajectory transforms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import SpectralBasis, SpectralState, coefficients_of
from .model import BlowUpError, GalerkinModel, model_for
from .problems import ProblemSpec

COEFFICIENT_MODES = ("frozen", "fixed_point")
STEP_CONTROLS = ("per_unit_step", "per_step")


class FixedPointError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    """Step control and recording options.

    ``coefficient="frozen"`` evaluates a(|u|_1^2) explicitly (at the step
    start for the predictor, at the predicted midpoint for the corrector);
    ``"fixed_point"`` iterates the corrector until a at the step average
    settles to 1e-10. ``control="per_unit_step"`` compares the embedded
    error with ``dt * tol`` so that the step size scales linearly with the
    tolerance; ``"per_step"`` compares it with ``tol``.
    """

    t_end: float = 10.0
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 0.5
    rel_tol: float = 1e-4
    abs_tol: float = 1e-8
    coefficient: str = "frozen"
    record_every: int = 1
    adaptive: bool = True
    control: str = "per_unit_step"
    blowup_norm: float = 1e8
    fixed_point_tol: float = 1e-10
    fixed_point_iters: int = 50

    def __post_init__(self):
        if not 0.0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.coefficient not in COEFFICIENT_MODES:
            raise ValueError(f"coefficient must be one of {COEFFICIENT_MODES}")
        if self.control not in STEP_CONTROLS:
            raise ValueError(f"control must be one of {STEP_CONTROLS}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not self.t_end >= 0.0:
            raise ValueError("t_end must be nonnegative")


@dataclass
class Trajectory:
    """Recorded states and per-record diagnostics.

    ``dissipation[k]`` approximates the integral of |u_t|^2 over
    (t[k-1], t[k]) and is zero for the first record.
    """

    t: np.ndarray
    gamma: np.ndarray
    l2: np.ndarray
    h1: np.ndarray
    lp: np.ndarray
    a_value: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    accepted: np.ndarray
    status: str = "completed"
    message: str = ""
    steps: int = 0
    rejected: int = 0

    def __len__(self) -> int:
        return self.t.size

    @property
    def ok(self) -> bool:
        return self.status in ("completed", "stopped")

    @property
    def final(self) -> SpectralState:
        return SpectralState(self.gamma[-1].copy(), float(self.t[-1]))

    def state(self, k: int) -> SpectralState:
        return SpectralState(self.gamma[k].copy(), float(self.t[k]))

    def tail(self, t_start: float, t_stop: float = math.inf) -> "Trajectory":
        mask = (self.t >= t_start) & (self.t <= t_stop)
        return self.select(mask)

    def select(self, mask) -> "Trajectory":
        return Trajectory(
            self.t[mask], self.gamma[mask], self.l2[mask], self.h1[mask], self.lp[mask],
            self.a_value[mask], self.energy[mask], self.dissipation[mask], self.accepted[mask],
            self.status, self.message, self.steps, self.rejected,
        )

    def energy_residual(self) -> float:
        """sum of dissipation + E(end) - E(start); zero for the exact flow."""
        return float(np.sum(self.dissipation[1:]) + self.energy[-1] - self.energy[0])


class _Recorder:
    def __init__(self, model: GalerkinModel):
        self.model = model
        self.rows = {k: [] for k in ("t", "gamma", "l2", "h1", "lp", "a_value", "energy", "dissipation")}

    def add(self, t: float, g: np.ndarray, dissipation: float, u=None):
        m = self.model
        s = float(m.basis.eigenvalues @ (g * g))
        if u is None:
            u = m.basis.synthesize(g)
        p = m.spec.reaction.p
        r = self.rows
        r["t"].append(t)
        r["gamma"].append(g)
        r["l2"].append(math.sqrt(float(g @ g)))
        r["h1"].append(math.sqrt(s))
        up = u * u if p == 2.0 else (u * u) ** 2 if p == 4.0 else np.abs(u) ** p
        r["lp"].append(float(up @ m.basis.weights) ** (1.0 / p))
        r["a_value"].append(float(m.spec.diffusion.a(s)))
        r["energy"].append(float(m.energy(g, u)))
        r["dissipation"].append(dissipation)

    def build(self, **kw) -> Trajectory:
        r = self.rows
        n = len(r["t"])
        return Trajectory(
            t=np.asarray(r["t"]),
            gamma=np.asarray(r["gamma"]).reshape(n, self.model.basis.n_modes),
            l2=np.asarray(r["l2"]),
            h1=np.asarray(r["h1"]),
            lp=np.asarray(r["lp"]),
            a_value=np.asarray(r["a_value"]),
            energy=np.asarray(r["energy"]),
            dissipation=np.asarray(r["dissipation"]),
            accepted=np.ones(n, dtype=bool),
            **kw,
        )


def imex_step(model: GalerkinModel, gamma: np.ndarray, t: float, dt: float,
              config: FlowConfig = FlowConfig(), n0: Optional[np.ndarray] = None):
    """One IMEX step; returns (second-order state, embedded first-order state).

    Diffusion is Crank-Nicolson with a(|u|_1^2) taken at the midpoint,
    reaction is explicit midpoint through an IMEX-Euler half step. The
    first-order companion is IMEX Euler over the full step. ``n0`` is the
    reaction projection at ``gamma`` when the caller already has it.
    """
    lam = model.basis.eigenvalues
    a_of = model.spec.diffusion.a
    a0 = a_of(float(lam @ (gamma * gamma)))
    if n0 is None:
        n0 = model.reaction_coef(gamma, t)
    low = (gamma + dt * n0) / (1.0 + dt * a0 * lam)
    half = (gamma + 0.5 * dt * n0) / (1.0 + 0.5 * dt * a0 * lam)
    n_half = model.reaction_coef(half, t + 0.5 * dt)
    a_mid = a_of(float(lam @ (half * half)))

    def corrector(a):
        c = 0.5 * dt * a * lam
        return ((1.0 - c) * gamma + dt * n_half) / (1.0 + c)

    new = corrector(a_mid)
    if config.coefficient == "fixed_point":
        for _ in range(config.fixed_point_iters):
            avg = 0.5 * (gamma + new)
            a_next = a_of(float(lam @ (avg * avg)))
            if abs(a_next - a_mid) <= config.fixed_point_tol * (1.0 + abs(a_mid)):
                break
            a_mid = a_next
            new = corrector(a_mid)
        else:
            raise FixedPointError(f"nonlocal coefficient did not settle at t={t!r}, dt={dt!r}")
    return new, low


def integrate(state0, spec: ProblemSpec, basis: SpectralBasis,
              config: FlowConfig = FlowConfig(),
              stop: Optional[Callable[[float, np.ndarray], bool]] = None) -> Trajectory:
    """Integrate from ``state0`` to ``config.t_end``.

    ``stop(t, gamma)`` is evaluated at every record (including the first);
    returning True ends the run with status ``stopped``.

    Failures (step-size underflow, blow-up, nonlocal fixed-point failure)
    return the partial trajectory with ``status`` set instead of raising.
    """
    model = model_for(spec, basis)
    g = coefficients_of(state0).copy()
    t = float(getattr(state0, "t", 0.0))
    t_end = t + config.t_end
    rec = _Recorder(model)
    u = basis.synthesize(g)
    rec.add(t, g, 0.0, u)
    if stop is not None and stop(t, g):
        return rec.build(status="stopped", message=f"stop condition at t={t!r}")
    n_cur = None

    dt = config.dt_init
    steps = rejected = 0
    dissipation = 0.0
    status, message = "completed", ""
    eps = 1e-12 * max(1.0, abs(t_end))
    since_record = 0
    while t_end - t > eps:
        dt_try = min(dt, t_end - t)
        try:
            if n_cur is None:
                n_cur = model.reaction_coef(g, t, u)
            new, low = imex_step(model, g, t, dt_try, config, n_cur)
            finite = math.isfinite(float(new @ new))
        except BlowUpError as exc:
            if not config.adaptive or dt_try <= config.dt_min:
                status, message = "blowup", str(exc)
                break
            finite = False
        except FixedPointError as exc:
            status, message = "fixed_point_failure", str(exc)
            break

        factor = config.dt_max / dt_try
        if config.adaptive:
            if finite:
                d = new - low
                err = math.sqrt(float(d @ d))
                size = math.sqrt(max(float(g @ g), float(new @ new)))
                scale = config.rel_tol * size + config.abs_tol
                if config.control == "per_unit_step":
                    ratio, order = err / (dt_try * scale), 1.0
                else:
                    ratio, order = err / scale, 0.5
                accept = ratio <= 1.0
                factor = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -order))
            else:
                accept, factor = False, 0.2
            if not accept:
                rejected += 1
                if dt_try <= config.dt_min * (1.0 + 1e-12):
                    status = "dt_underflow"
                    message = f"step rejected at dt_min={config.dt_min!r}, t={t!r}"
                    break
                dt = max(dt_try * factor, config.dt_min)
                continue
        elif not finite:
            status, message = "blowup", f"non-finite state at t={t + dt_try!r}"
            break

        d = new - g
        dissipation += float(d @ d) / dt_try
        g = new
        t += dt_try
        steps += 1
        since_record += 1
        u = basis.synthesize(g)
        n_cur = None
        done = t_end - t <= eps
        if since_record >= config.record_every or done:
            rec.add(t, g, dissipation, u)
            dissipation = 0.0
            since_record = 0
            if stop is not None and stop(t, g):
                status, message = "stopped", f"stop condition at t={t!r}"
                break
        if float(g @ g) > config.blowup_norm ** 2:
            status, message = "blowup", f"|u|_2 exceeded {config.blowup_norm:g} at t={t!r}"
            break
        if config.adaptive:
            dt = min(config.dt_max, max(config.dt_min, dt_try * factor))
        else:
            dt = config.dt_init
    if since_record and status != "completed":
        rec.add(t, g, dissipation, u)
    return rec.build(status=status, message=message, steps=steps, rejected=rejected)


# --------------------------------------------------------------------------
# time rescaling
# --------------------------------------------------------------------------


@dataclass
class RescaledTrajectory:
    """States indexed by tau = int_0^t a(|u(s)|_1^2) ds.

    In tau the solution solves w_tau - w_xx = (f(w) + h) / a(|w|_1^2).
    """

    tau: np.ndarray
    gamma: np.ndarray
    a_value: np.ndarray
    alpha_error: float

    def residual(self, spec: ProblemSpec, basis: SpectralBasis) -> np.ndarray:
        """L^2 residual of the rescaled equation at every sample.

        Time derivatives are second-order finite differences in tau, so the
        residual shrinks as the records are refined.
        """
        model = model_for(spec, basis)
        dg = np.gradient(self.gamma, self.tau, axis=0, edge_order=2)
        nonlinear = model.reaction_coef(self.gamma)
        a = spec.diffusion.a(model.h1_sq(self.gamma))
        res = dg + basis.eigenvalues * self.gamma - nonlinear / a[:, None]
        return np.linalg.norm(res, axis=1)


def _alpha(t: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(t))])


def rescale_time(traj: Trajectory, spec: ProblemSpec, rel_tol: float = 1e-3) -> RescaledTrajectory:
    """Reparametrize by alpha(t) with trapezoid accumulation of a.

    Raises ValueError when fewer than three records exist or when alpha from
    every other record disagrees with the full-resolution value by more than
    ``rel_tol`` relative.
    """
    if len(traj) < 3:
        raise ValueError("rescale_time needs at least 3 records")
    if not spec.forcing.autonomous:
        raise ValueError("rescale_time requires autonomous forcing")
    t = traj.t - traj.t[0]
    alpha = _alpha(t, traj.a_value)
    idx = np.arange(0, len(t), 2)
    if idx[-1] != len(t) - 1:
        idx = np.append(idx, len(t) - 1)
    coarse = _alpha(t[idx], traj.a_value[idx])
    err = float(np.max(np.abs(coarse - alpha[idx])) / max(alpha[-1], 1e-300))
    if err > rel_tol:
        raise ValueError(f"records too sparse for time rescaling: relative alpha error {err:.2e}")
    return RescaledTrajectory(alpha, traj.gamma.copy(), traj.a_value.copy(), err)


# --------------------------------------------------------------------------
# continuous dependence on initial data
# --------------------------------------------------------------------------


@dataclass
class DependenceResult:
    t: np.ndarray
    actual: np.ndarray
    bound: np.ndarray

    @property
    def margin(self) -> float:
        return float(np.min(self.bound - self.actual))


def continuous_dependence(traj_u: Trajectory, traj_v: Trajectory, eta: float,
                          spec: Optional[ProblemSpec] = None) -> DependenceResult:
    """Compare |u - v|^2(t) with |u0 - v0|^2 exp(2 eta t).

    When ``spec`` is given it must carry the one-sided bound f' <= eta and a
    monotone a(s^2)s, otherwise the estimate is not asserted and this raises.
    """
    if spec is not None:
        if spec.reaction.eta is None or not spec.diffusion.monotone_as:
            raise ValueError("continuous dependence needs f' <= eta and a monotone a(s^2)s")
        if eta < spec.reaction.eta:
            raise ValueError(f"eta={eta} is below the reaction's one-sided bound {spec.reaction.eta}")
    if traj_u.gamma.shape[1] != traj_v.gamma.shape[1]:
        raise ValueError("trajectories use different bases")
    t_stop = min(traj_u.t[-1], traj_v.t[-1])
    mask = traj_u.t <= t_stop
    t = traj_u.t[mask]
    gu = traj_u.gamma[mask]
    if traj_v.t.shape == traj_u.t.shape and np.array_equal(traj_v.t, traj_u.t):
        gv = traj_v.gamma[mask]
    else:
        gv = np.column_stack([np.interp(t, traj_v.t, traj_v.gamma[:, j])
                              for j in range(traj_v.gamma.shape[1])])
    actual = np.sum((gu - gv) ** 2, axis=1)
    bound = actual[0] * np.exp(2.0 * eta * (t - t[0]))
    return DependenceResult(t, actual, bound)
