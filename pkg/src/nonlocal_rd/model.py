"""Galerkin evaluators shared by the flow, energy and equilibrium modules.

For coefficients gamma the projected system is

    d gamma_j / dt = -a(|u|_1^2) lambda_j gamma_j + (f(u), w_j) + (h, w_j)

and the right-hand side is exactly minus the coefficient gradient of the
energy E(gamma) = A(|u|_1^2)/2 - int F(u) - int h u when both the nonlinear
inner products and int F(u) use the same quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import SpectralBasis, coefficients_of
from .problems import ProblemSpec


class BlowUpError(FloatingPointError):
    """Non-finite reaction values on the quadrature grid."""

    def __init__(self, message: str, t: float = float("nan"), node: float = float("nan")):
        super().__init__(message)
        self.t = t
        self.node = node


@dataclass(frozen=True, eq=False)
class GalerkinModel:
    spec: ProblemSpec
    basis: SpectralBasis
    h_nodes: np.ndarray
    h_coef: np.ndarray

    @property
    def autonomous(self) -> bool:
        return self.spec.forcing.autonomous

    def _check(self, gamma) -> np.ndarray:
        g = coefficients_of(gamma)
        if g.shape[-1] != self.basis.n_modes:
            raise ValueError(f"state has {g.shape[-1]} modes, basis has {self.basis.n_modes}")
        return g

    def h1_sq(self, gamma):
        g = self._check(gamma)
        return (g * g) @ self.basis.eigenvalues

    def a_value(self, gamma) -> float:
        return float(self.spec.diffusion.a(self.h1_sq(gamma)))

    def forcing_coef(self, t: float = 0.0) -> np.ndarray:
        if self.autonomous:
            return self.h_coef
        return self.basis.analyze(self.spec.forcing(self.basis.nodes, t))

    def reaction_coef(self, gamma, t: float = 0.0, u=None) -> np.ndarray:
        """Projection (f(u) + h, w_j) of the explicit part."""
        if u is None:
            u = self.basis.synthesize(gamma)
        fu = self.spec.reaction.f(u)
        # a sum is finite only if every summand is
        if not np.isfinite(fu.sum()):
            bad = np.argmax(~np.isfinite(fu), axis=-1)
            node = float(np.ravel(self.basis.nodes[bad])[0])
            raise BlowUpError(f"non-finite reaction at t={t!r}, x={node!r}", t, node)
        return self.basis.analyze(fu) + self.forcing_coef(t)

    def rhs(self, gamma, t: float = 0.0) -> np.ndarray:
        g = self._check(gamma)
        a = self.spec.diffusion.a(self.h1_sq(g))
        return -np.asarray(a)[..., None] * self.basis.eigenvalues * g + self.reaction_coef(g, t)

    def residual(self, gamma) -> np.ndarray:
        """Stationary residual; equals the coefficient gradient of the energy."""
        return -self.rhs(gamma, 0.0)

    def jacobian(self, gamma) -> np.ndarray:
        """Dense Jacobian of ``residual``: diagonal + rank one - reaction part."""
        g = self._check(gamma)
        lam = self.basis.eigenvalues
        s = self.h1_sq(g)
        d = self.spec.diffusion
        lg = lam * g
        J = np.diag(float(d.a(s)) * lam)
        J += 2.0 * float(d.da(s)) * np.outer(lg, lg)
        b = self.basis
        dfu = self.spec.reaction.df(b.synthesize(g))
        # folded projection keeps odd/even couplings exactly zero for symmetric u
        J -= b.analyze(dfu * b.synthesize(np.eye(b.n_modes)))
        return J

    def energy_parts(self, gamma, u=None):
        g = self._check(gamma)
        if u is None:
            u = self.basis.synthesize(g)
        diffusion = 0.5 * self.spec.diffusion.A(self.h1_sq(g))
        reaction = -self.basis.integrate(self.spec.reaction.F(u))
        forcing = -(g @ self.h_coef)
        return diffusion, reaction, forcing

    def energy(self, gamma, u=None):
        d, r, f = self.energy_parts(gamma, u)
        return d + r + f


@lru_cache(maxsize=64)
def model_for(spec: ProblemSpec, basis: SpectralBasis) -> GalerkinModel:
    """Cached model; specs and bases hash by identity."""
    if abs(spec.L - basis.L) > 1e-12 * spec.L:
        raise ValueError(f"problem length {spec.L} does not match basis length {basis.L}")
    h_nodes = spec.forcing(basis.nodes, 0.0)
    if spec.forcing.is_zero or not spec.forcing.autonomous:
        h_coef = basis.analyze(h_nodes)
    else:
        h_coef = project_forcing(spec, basis.n_modes)
    return GalerkinModel(spec, basis, h_nodes, h_coef)


def project_forcing(spec: ProblemSpec, n_modes: int, panels: int = 64, order: int = 16) -> np.ndarray:
    """(h, w_k) by composite Gauss-Legendre with panel breaks at the forcing's samples.

    The node grid is too coarse for forcing that does not vanish at the walls.
    """
    L = spec.L
    breaks = np.linspace(0.0, L, panels + 1)
    if spec.forcing.x is not None:
        inner = spec.forcing.x[(spec.forcing.x > 0.0) & (spec.forcing.x < L)]
        breaks = np.union1d(breaks, inner)
    xg, wg = np.polynomial.legendre.leggauss(order)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    x = (0.5 * (hi - lo) * (xg + 1.0) + lo).ravel()
    w = (0.5 * (hi - lo) * wg).ravel()
    k = np.arange(1, n_modes + 1)
    modes = np.sqrt(2.0 / L) * np.sin(np.outer(x, k) * np.pi / L)
    return (w * spec.forcing(x, 0.0)) @ modes
