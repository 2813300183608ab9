"""Independent reference computations used by the tests.

Nothing here goes through the package's transforms: sine products are
integrated with a separate Gauss-Legendre rule on (0, L).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage
from scipy.integrate import quad, solve_bvp
from scipy.optimize import root

GL_X, GL_W = np.polynomial.legendre.leggauss(64)


def gl_grid(L: float = math.pi):
    return 0.5 * L * (GL_X + 1.0), 0.5 * L * GL_W


def two_mode_residual(g1, g2, lam: float, L: float = math.pi, m: float = 1.0):
    """Residual of the 2-mode stationary system for f = lam u - u^3, a = m, h = 0.

    ``g1``, ``g2`` may be arrays of equal shape.
    """
    x, w = gl_grid(L)
    s = math.sqrt(2.0 / L)
    w1 = s * np.sin(math.pi * x / L)
    w2 = s * np.sin(2.0 * math.pi * x / L)
    g1 = np.asarray(g1, dtype=float)[..., None]
    g2 = np.asarray(g2, dtype=float)[..., None]
    u = g1 * w1 + g2 * w2
    fu = lam * u - u ** 3
    l1, l2 = (math.pi / L) ** 2, (2.0 * math.pi / L) ** 2
    r1 = m * l1 * g1[..., 0] - (fu * w1) @ w
    r2 = m * l2 * g2[..., 0] - (fu * w2) @ w
    return r1, r2


def brute_force_two_mode_roots(lam: float, span: float = 3.0, step: float = 0.01,
                               L: float = math.pi) -> np.ndarray:
    """Sign-scan of both residual components on [-span, span]^2, each candidate
    cluster confirmed by a Newton solve; returns the distinct roots."""
    n = int(round(2 * span / step)) + 1
    axis = np.linspace(-span, span, n)
    G1, G2 = np.meshgrid(axis, axis, indexing="ij")
    r1, r2 = two_mode_residual(G1, G2, lam, L)

    def straddles(r):
        c = np.stack([r[:-1, :-1], r[1:, :-1], r[:-1, 1:], r[1:, 1:]])
        return (c.min(axis=0) <= 0.0) & (c.max(axis=0) >= 0.0)

    cand = straddles(r1) & straddles(r2)
    labels, count = ndimage.label(cand, structure=np.ones((3, 3)))
    roots = []
    for k in range(1, count + 1):
        i, j = np.argwhere(labels == k).mean(axis=0)
        x0 = np.array([axis[0] + (i + 0.5) * step, axis[0] + (j + 0.5) * step])
        sol = root(lambda v: np.array(two_mode_residual(v[0], v[1], lam, L)), x0, tol=1e-13)
        if not sol.success or np.max(np.abs(sol.fun)) > 1e-9:
            continue
        if np.max(np.abs(sol.x)) > span:
            continue
        if all(np.linalg.norm(sol.x - r) > 1e-6 for r in roots):
            roots.append(sol.x)
    return np.array(roots)


def bvp_equilibrium(lam: float, amplitude: float = 1.2, mode: int = 1, L: float = math.pi):
    """Solve -u'' = lam u - u^3, u(0) = u(L) = 0 (a = 1) from a sine guess."""
    x = np.linspace(0.0, L, 401)
    k = mode * math.pi / L
    guess = np.vstack([amplitude * np.sin(k * x), amplitude * k * np.cos(k * x)])
    sol = solve_bvp(lambda x, y: np.vstack([y[1], -(lam * y[0] - y[0] ** 3)]),
                    lambda a, b: np.array([a[0], b[0]]), x, guess, tol=1e-10, max_nodes=200000)
    if sol.status != 0:
        raise RuntimeError(sol.message)
    return sol


def sine_coefficient(fun, k: int, L: float = math.pi) -> float:
    s = math.sqrt(2.0 / L)
    return quad(lambda x: fun(x) * s * math.sin(k * math.pi * x / L), 0.0, L,
                epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def central_jacobian(fun, x, h: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((fun(x + e) - fun(x - e)) / (2.0 * h))
    return np.column_stack(cols)


def central_gradient(fun, x, h: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (fun(x + e) - fun(x - e)) / (2.0 * h)
    return out
