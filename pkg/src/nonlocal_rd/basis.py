"""Dirichlet sine basis on (0, L), quadrature, and grid transforms.

Transforms fold the grid about x = L/2: odd-numbered modes are symmetric and
even-numbered modes antisymmetric under x -> L - x, so they are synthesized
and analyzed from the symmetric/antisymmetric parts of a field separately.
This makes the invariant subspaces of odd reactions exact in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

QUADRATURE_RULES = ("trapezoid", "gauss")


@dataclass(frozen=True)
class SpectralState:
    coefficients: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))


def coefficients_of(state) -> np.ndarray:
    """Coefficient vector of a SpectralState or anything array-like."""
    return np.asarray(getattr(state, "coefficients", state), dtype=float)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """First ``n_modes`` L^2-orthonormal Dirichlet eigenfunctions of -d^2/dx^2.

    Attributes
    ----------
    eigenvalues : (n,) array
        ``(k pi / L)^2`` for k = 1..n.
    nodes, weights : (Q,) arrays
        Quadrature grid, ordered so that ``nodes[i] + nodes[Q-1-i] == L``.
    """

    n_modes: int
    L: float
    rule: str
    eigenvalues: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    _half_odd: np.ndarray
    _half_even: np.ndarray
    _center_odd: Optional[np.ndarray]
    _half_weights: np.ndarray
    _center_weight: float
    _wodd: np.ndarray
    _weven: np.ndarray

    @property
    def quad_size(self) -> int:
        return self.nodes.size

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def matrix(self) -> np.ndarray:
        """Dense (Q, n) table ``w_k(x_i)``."""
        return self.synthesize(np.eye(self.n_modes)).T

    def eigenfunction(self, k: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / self.L) * np.sin(k * math.pi * x / self.L)

    def synthesize(self, gamma) -> np.ndarray:
        """Grid values of sum_k gamma_k w_k; acts on the last axis."""
        gamma = coefficients_of(gamma)
        if gamma.ndim == 1 and self._center_odd is None and gamma.size == self.n_modes:
            sym = self._half_odd @ gamma[0::2]
            anti = self._half_even @ gamma[1::2]
            return np.concatenate((sym + anti, (sym - anti)[::-1]))
        if gamma.shape[-1] != self.n_modes:
            raise ValueError(f"expected {self.n_modes} coefficients, got {gamma.shape[-1]}")
        q = self.quad_size
        h = q // 2
        sym = gamma[..., 0::2] @ self._half_odd.T
        anti = gamma[..., 1::2] @ self._half_even.T
        out = np.empty(gamma.shape[:-1] + (q,))
        out[..., :h] = sym + anti
        out[..., :q - h - 1:-1] = sym - anti
        if self._center_odd is not None:
            out[..., h] = gamma[..., 0::2] @ self._center_odd
        return out

    def analyze(self, values) -> np.ndarray:
        """Quadrature L^2 projection onto the basis; acts on the last axis."""
        values = np.asarray(values, dtype=float)
        q = self.quad_size
        if values.shape[-1] != q:
            raise ValueError(f"expected {q} grid values, got {values.shape[-1]}")
        h = q // 2
        if values.ndim == 1 and self._center_odd is None:
            left = values[:h]
            right = values[:h - 1:-1]
            out = np.empty(self.n_modes)
            out[0::2] = (left + right) @ self._wodd
            out[1::2] = (left - right) @ self._weven
            return out
        left = values[..., :h]
        right = values[..., :q - h - 1:-1]
        out = np.empty(values.shape[:-1] + (self.n_modes,))
        odd = (left + right) @ self._wodd
        if self._center_odd is not None:
            odd += (values[..., h] * self._center_weight)[..., None] * self._center_odd
        out[..., 0::2] = odd
        out[..., 1::2] = (left - right) @ self._weven
        return out

    def integrate(self, values) -> np.ndarray:
        """Quadrature of grid values over (0, L); acts on the last axis."""
        return np.asarray(values, dtype=float) @ self.weights


def _half_grid(q: int, L: float, rule: str):
    """Nodes/weights on the left half, plus center node weight (odd q)."""
    h = q // 2
    if rule == "trapezoid":
        dx = L / (q + 1)
        xh = dx * np.arange(1, h + 1)
        wh = np.full(h, dx)
        wc = dx
    elif rule == "gauss":
        xg, wg = np.polynomial.legendre.leggauss(q)
        xh = 0.5 * L * (1.0 + xg[:h])
        wh = 0.5 * L * wg[:h]
        wc = 0.5 * L * wg[h] if q % 2 else 0.0
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}; use one of {QUADRATURE_RULES}")
    return xh, wh, wc


def build_basis(n_modes: int, L: float = math.pi, quad_size: Optional[int] = None,
                rule: str = "trapezoid", orth_tol: float = 1e-10) -> SpectralBasis:
    """Build the basis and its quadrature grid.

    ``quad_size`` defaults to ``4 * n_modes``; smaller grids are refused
    because the quartic energy integrand would alias.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    if not L > 0.0:
        raise ValueError("L must be positive")
    q = 4 * n_modes if quad_size is None else int(quad_size)
    if q < 4 * n_modes:
        raise ValueError(f"quad_size {q} < 4 * n_modes = {4 * n_modes}: aliasing risk")

    xh, wh, wc = _half_grid(q, L, rule)
    k = np.arange(1, n_modes + 1)
    scale = math.sqrt(2.0 / L)
    table = scale * np.sin(np.outer(xh, k) * (math.pi / L))
    half_odd = table[:, 0::2]
    half_even = table[:, 1::2]
    if q % 2:
        # sin(k pi / 2) is exactly +-1 for odd k and 0 for even k
        center_odd = scale * np.where((k[0::2] // 2) % 2 == 0, 1.0, -1.0)
        nodes = np.concatenate([xh, [0.5 * L], (L - xh)[::-1]])
        weights = np.concatenate([wh, [wc], wh[::-1]])
    else:
        center_odd = None
        nodes = np.concatenate([xh, (L - xh)[::-1]])
        weights = np.concatenate([wh, wh[::-1]])

    basis = SpectralBasis(
        n_modes=n_modes,
        L=float(L),
        rule=rule,
        eigenvalues=(k * math.pi / L) ** 2,
        nodes=nodes,
        weights=weights,
        _half_odd=half_odd,
        _half_even=half_even,
        _center_odd=center_odd,
        _half_weights=wh,
        _center_weight=float(wc),
        _wodd=half_odd * wh[:, None],
        _weven=half_even * wh[:, None],
    )
    gram = basis.analyze(basis.matrix.T)
    err = float(np.max(np.abs(gram - np.eye(n_modes))))
    if err > orth_tol:
        raise ValueError(f"{rule} quadrature with {q} nodes: orthonormality error {err:.2e} > {orth_tol:.0e}")
    return basis


def synthesize(state, basis: SpectralBasis) -> np.ndarray:
    return basis.synthesize(state)


def analyze(values, basis: SpectralBasis, t: float = 0.0) -> SpectralState:
    return SpectralState(basis.analyze(values), t)


@dataclass(frozen=True)
class Norms:
    l2: float
    h1: float
    lp: float


def l2_norm(gamma) -> float:
    return float(np.linalg.norm(coefficients_of(gamma)))


def h1_sq(gamma, basis: SpectralBasis) -> float:
    g = coefficients_of(gamma)
    return float(np.dot(basis.eigenvalues * g, g))


def lp_norm(gamma, basis: SpectralBasis, p: float) -> float:
    u = basis.synthesize(gamma)
    return float(basis.integrate(np.abs(u) ** p) ** (1.0 / p))


def norms(state, basis: SpectralBasis, p: float = 2.0) -> Norms:
    """L^2 and H^1_0 norms from coefficients; L^p by quadrature."""
    g = coefficients_of(state)
    return Norms(l2_norm(g), math.sqrt(h1_sq(g, basis)), lp_norm(g, basis, p))
