"""Stationary states: damped Newton, deflation and linear stability."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .basis import SpectralBasis, SpectralState, coefficients_of
from .model import model_for
from .problems import ProblemSpec

STABILITY_MARGIN = 1e-7


def stationary_residual(state, spec: ProblemSpec, basis: SpectralBasis) -> np.ndarray:
    """G_j = a(|u|_1^2) lambda_j gamma_j - (f(u), w_j) - (h, w_j)."""
    return model_for(spec, basis).residual(coefficients_of(state))


def stationary_jacobian(state, spec: ProblemSpec, basis: SpectralBasis) -> np.ndarray:
    return model_for(spec, basis).jacobian(coefficients_of(state))


@dataclass
class Equilibrium:
    state: SpectralState
    residual_l2: float
    spectrum: np.ndarray
    unstable_count: int
    marginal_count: int
    energy: float
    iterations: int = 0
    index: int = -1

    @property
    def coefficients(self) -> np.ndarray:
        return self.state.coefficients

    def as_dict(self, head: int = 5) -> dict:
        return {
            "index": self.index,
            "coefficients": [float(x) for x in self.coefficients],
            "residual": self.residual_l2,
            "energy": self.energy,
            "unstable_count": self.unstable_count,
            "marginal_count": self.marginal_count,
            "spectrum_head": [float(x) for x in self.spectrum[:head]],
        }


@dataclass
class NewtonFailure:
    last: np.ndarray
    residual_l2: float
    iterations: int
    reason: str


def linearization(gamma, spec: ProblemSpec, basis: SpectralBasis):
    """Eigenpairs of the linearized flow -J, eigenvalues sorted descending.

    When the odd/even mode couplings of J vanish exactly (states symmetric or
    antisymmetric about L/2), each block is diagonalized separately so the
    eigenvectors keep exact zeros outside their symmetry class.
    """
    J = stationary_jacobian(gamma, spec, basis)
    J = 0.5 * (J + J.T)
    n = J.shape[0]
    odd, even = np.arange(0, n, 2), np.arange(1, n, 2)
    if even.size and not np.any(J[np.ix_(odd, even)]):
        vals = np.empty(n)
        vecs = np.zeros((n, n))
        w1, v1 = np.linalg.eigh(J[np.ix_(odd, odd)])
        w2, v2 = np.linalg.eigh(J[np.ix_(even, even)])
        vals[:odd.size], vals[odd.size:] = w1, w2
        vecs[np.ix_(odd, np.arange(odd.size))] = v1
        vecs[np.ix_(even, np.arange(odd.size, n))] = v2
    else:
        vals, vecs = np.linalg.eigh(J)
    order = np.argsort(vals, kind="stable")
    vals, vecs = -vals[order], vecs[:, order]
    # deterministic sign: largest-magnitude entry positive
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(n)])
    return vals, vecs


def classify(gamma, spec: ProblemSpec, basis: SpectralBasis, margin: float = STABILITY_MARGIN):
    """Spectrum of the linearized flow, sorted descending, and its counts."""
    spectrum, _ = linearization(gamma, spec, basis)
    unstable = int(np.sum(spectrum > margin))
    marginal = int(np.sum(np.abs(spectrum) <= margin))
    return spectrum, unstable, marginal


def make_equilibrium(gamma, spec: ProblemSpec, basis: SpectralBasis, iterations: int = 0) -> Equilibrium:
    g = coefficients_of(gamma).copy()
    model = model_for(spec, basis)
    spectrum, unstable, marginal = classify(g, spec, basis)
    return Equilibrium(SpectralState(g), float(np.linalg.norm(model.residual(g))), spectrum,
                       unstable, marginal, float(model.energy(g)), iterations)


def _deflation(g: np.ndarray, roots: Sequence[np.ndarray]):
    """Factor prod (1 + 1/|g - z|^2) and its gradient."""
    d = 1.0
    grad_log = np.zeros_like(g)
    for z in roots:
        diff = g - z
        r2 = float(diff @ diff)
        if r2 == 0.0:
            return math.inf, grad_log
        term = 1.0 + 1.0 / r2
        d *= term
        grad_log += (-2.0 * diff / (r2 * r2)) / term
    return d, d * grad_log


def newton_solve(seed, spec: ProblemSpec, basis: SpectralBasis, newton_tol: float = 1e-10,
                 max_iter: int = 100, deflate: Sequence[np.ndarray] = (),
                 max_halvings: int = 30, stagnation_limit: int = 3) -> Union[Equilibrium, NewtonFailure]:
    """Damped Newton on the (optionally deflated) stationary residual.

    Backtracking halves the step until the merit norm decreases; three
    iterations in a row without decrease are reported as stagnation.
    Convergence is judged on the undeflated residual.
    """
    model = model_for(spec, basis)
    g = coefficients_of(seed).astype(float).copy()
    if g.shape != (basis.n_modes,) or not np.all(np.isfinite(g)):
        raise ValueError("seed must be a finite vector with one entry per mode")
    roots = [coefficients_of(z) for z in deflate]

    def merit(x):
        G = model.residual(x)
        d, _ = _deflation(x, roots) if roots else (1.0, None)
        return G, float(np.linalg.norm(d * G)) if math.isfinite(d) else math.inf

    G, phi = merit(g)
    stalls = 0
    for it in range(max_iter + 1):
        if float(np.linalg.norm(G)) <= newton_tol:
            if any(np.linalg.norm(g - z) <= 1e-8 * (1.0 + np.linalg.norm(z)) for z in roots):
                return NewtonFailure(g, float(np.linalg.norm(G)), it, "converged to a deflated root")
            return make_equilibrium(g, spec, basis, it)
        if it == max_iter:
            break
        J = model.jacobian(g)
        if roots:
            d, grad_d = _deflation(g, roots)
            if not math.isfinite(d):
                return NewtonFailure(g, float(np.linalg.norm(G)), it, "seed coincides with a deflated root")
            Jd = d * J + np.outer(G, grad_d)
            rhs = -d * G
        else:
            Jd, rhs = J, -G
        try:
            step = np.linalg.solve(Jd, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Jd, rhs, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return NewtonFailure(g, float(np.linalg.norm(G)), it, "non-finite Newton step")
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = g + t * step
            try:
                G_t, phi_t = merit(trial)
            except FloatingPointError:
                phi_t = math.inf
            if phi_t < phi:
                break
            t *= 0.5
        if phi_t < phi:
            g, G, phi = trial, G_t, phi_t
            stalls = 0
        else:
            stalls += 1
            if stalls >= stagnation_limit:
                return NewtonFailure(g, float(np.linalg.norm(G)), it + 1, "stagnation")
    return NewtonFailure(g, float(np.linalg.norm(G)), max_iter, "max_iter reached")


@dataclass(frozen=True)
class SearchPlan:
    seed_modes: int = 2
    amplitudes: tuple = (0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0)
    deflation_rounds: int = 1
    newton_tol: float = 1e-10
    max_iter: int = 100
    dedup_tol: float = 1e-6

    def seeds(self, n_modes: int) -> list:
        k = min(self.seed_modes, n_modes)
        out = []
        for amps in itertools.product(self.amplitudes, repeat=k):
            g = np.zeros(n_modes)
            g[:k] = amps
            out.append(g)
        return out


@dataclass
class EquilibriumSet:
    equilibria: list
    seeds_used: int
    deflation_rounds: int
    found_by_deflation: int
    failures: int = 0
    symmetric_closure: bool = False

    def __len__(self) -> int:
        return len(self.equilibria)

    def __iter__(self):
        return iter(self.equilibria)

    def __getitem__(self, i) -> Equilibrium:
        return self.equilibria[i]

    def coefficients(self) -> np.ndarray:
        return np.array([e.coefficients for e in self.equilibria])

    def nearest(self, gamma) -> tuple:
        """(index, L^2 distance) of the closest member."""
        d = np.linalg.norm(self.coefficients() - coefficients_of(gamma), axis=1)
        i = int(np.argmin(d))
        return i, float(d[i])

    def as_dict(self) -> dict:
        return {
            "count": len(self.equilibria),
            "seeds_used": self.seeds_used,
            "deflation_rounds": self.deflation_rounds,
            "found_by_deflation": self.found_by_deflation,
            "newton_failures": self.failures,
            "equilibria": [e.as_dict() for e in self.equilibria],
        }


def _is_new(g: np.ndarray, found: list, tol: float) -> bool:
    return all(float(np.linalg.norm(g - e.coefficients)) > tol for e in found)


def _order(found: list) -> list:
    """Sort by energy; near-equal energies (symmetric pairs) by first coefficient."""
    by_e = sorted(found, key=lambda e: (e.energy, e.coefficients[0]))
    out, group = [], []
    for e in by_e:
        if group and abs(e.energy - group[0].energy) > 1e-9 * (1.0 + abs(group[0].energy)):
            out.extend(sorted(group, key=lambda q: q.coefficients[0]))
            group = []
        group.append(e)
    out.extend(sorted(group, key=lambda q: q.coefficients[0]))
    for i, e in enumerate(out):
        e.index = i
    return out


def find_all(spec: ProblemSpec, basis: SpectralBasis, plan: SearchPlan = SearchPlan()) -> EquilibriumSet:
    """Seed-grid Newton, then deflated Newton from the same seeds.

    For odd reactions without forcing the set is closed under u -> -u.
    """
    found: list = []
    failures = 0
    seeds = plan.seeds(basis.n_modes)
    for s in seeds:
        r = newton_solve(s, spec, basis, plan.newton_tol, plan.max_iter)
        if isinstance(r, Equilibrium):
            if _is_new(r.coefficients, found, plan.dedup_tol):
                found.append(r)
        else:
            failures += 1
    from_grid = len(found)
    for _ in range(plan.deflation_rounds):
        added = 0
        for s in seeds:
            roots = [e.coefficients for e in found]
            r = newton_solve(s, spec, basis, plan.newton_tol, plan.max_iter, deflate=roots)
            if not isinstance(r, Equilibrium):
                continue
            polished = newton_solve(r.coefficients, spec, basis, plan.newton_tol, plan.max_iter)
            if isinstance(polished, Equilibrium) and _is_new(polished.coefficients, found, plan.dedup_tol):
                found.append(polished)
                added += 1
        if added == 0:
            break
    closure = spec.reaction.odd and spec.forcing.is_zero
    if closure:
        for e in list(found):
            mirror = -e.coefficients
            if _is_new(mirror, found, plan.dedup_tol):
                r = newton_solve(mirror, spec, basis, plan.newton_tol, plan.max_iter)
                if isinstance(r, Equilibrium) and _is_new(r.coefficients, found, plan.dedup_tol):
                    found.append(r)
    return EquilibriumSet(_order(found), len(seeds), plan.deflation_rounds,
                          len(found) - from_grid, failures, closure)
