"""Problem instances and standing-assumption checks.

A problem is the triple (a, f, h) on the interval (0, L) together with the
constants that the a priori estimates are written in terms of. Every catalog
member carries closed forms for f, f', F = int_0^s f, a, a' and
A = int_0^s a; assumptions are verified by dense sampling, never symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid


class AssumptionError(ValueError):
    """An evaluator returned a non-finite value on the sampling grid."""


# --------------------------------------------------------------------------
# reaction terms
# --------------------------------------------------------------------------


def _sup_quartic(c2: float, c4: float) -> float:
    """Return sup_s (c2 s^2 - c4 s^4) for c4 > 0."""
    if c2 <= 0.0:
        return 0.0
    return c2 * c2 / (4.0 * c4)


@dataclass(frozen=True)
class DissipativityConstants:
    kappa: float
    alpha1: float
    alpha2: float
    kappa_t: float
    alpha1_t: float
    alpha2_t: float
    eta: float


def dissipativity_constants(lam: float, split: float = 0.5) -> DissipativityConstants:
    """Constants of the sign and growth conditions for f(s) = lam*s - s^3.

    ``split`` is the fraction of the quartic term kept on the right-hand side
    of ``f(s)s <= kappa - alpha1 |s|^4``; the remainder absorbs the quadratic
    part. The antiderivative constants come from the same scalar
    maximization applied to ``F(s) = lam s^2/2 - s^4/4``.
    """
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must lie in (0, 1), got {split}")
    lam = float(lam)
    alpha1 = split
    alpha2 = 1.0 + split
    # f(s)s = lam s^2 - s^4
    kappa = max(_sup_quartic(lam, 1.0 - alpha1), _sup_quartic(-lam, split))
    # F(s) = lam s^2/2 - s^4/4
    alpha1_t = split / 4.0
    alpha2_t = (1.0 + split) / 4.0
    kappa_t = max(
        _sup_quartic(lam / 2.0, (1.0 - split) / 4.0),
        _sup_quartic(-lam / 2.0, split / 4.0),
    )
    return DissipativityConstants(kappa, alpha1, alpha2, kappa_t, alpha1_t, alpha2_t, lam)


@dataclass(frozen=True)
class ReactionTerm:
    """Reaction nonlinearity with closed-form f, f' and F.

    Catalog kinds are ``cubic`` (f(s) = lam*s - s^3) and ``linear``
    (f(s) = lam*s, p = 2, mainly for exact-solution checks); new kinds are
    added by extending the three evaluators below.
    """

    kind: str
    lam: float
    p: float
    kappa: float
    alpha1: float
    alpha2: float
    kappa_t: float
    alpha1_t: float
    alpha2_t: float
    eta: Optional[float]
    growth_c: float

    @classmethod
    def cubic(cls, lam: float, split: float = 0.5) -> "ReactionTerm":
        c = dissipativity_constants(lam, split)
        return cls(
            kind="cubic",
            lam=float(lam),
            p=4.0,
            kappa=c.kappa,
            alpha1=c.alpha1,
            alpha2=c.alpha2,
            kappa_t=c.kappa_t,
            alpha1_t=c.alpha1_t,
            alpha2_t=c.alpha2_t,
            eta=c.eta,
            growth_c=abs(lam) + 1.0,
        )

    @classmethod
    def linear(cls, lam: float = 0.0) -> "ReactionTerm":
        lam = float(lam)
        return cls(
            kind="linear",
            lam=lam,
            p=2.0,
            kappa=0.0,
            alpha1=max(0.0, -lam),
            alpha2=max(0.0, lam),
            kappa_t=0.0,
            alpha1_t=max(0.0, -lam) / 2.0,
            alpha2_t=max(0.0, lam) / 2.0,
            eta=lam,
            growth_c=abs(lam),
        )

    def f(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return self.lam * s
        return self.lam * s - s * s * s

    def df(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return np.full_like(s, self.lam)
        return self.lam - 3.0 * s * s

    def F(self, s):
        s = np.asarray(s, dtype=float)
        s2 = s * s
        if self.kind == "linear":
            return 0.5 * self.lam * s2
        return 0.5 * self.lam * s2 - 0.25 * s2 * s2

    @property
    def odd(self) -> bool:
        return self.kind in ("cubic", "linear")


# --------------------------------------------------------------------------
# nonlocal diffusion coefficient
# --------------------------------------------------------------------------

DIFFUSION_KINDS = ("constant", "affine", "saturating")


@dataclass(frozen=True)
class DiffusionModulator:
    """Diffusion coefficient a(s) evaluated at s = ||u||^2_{H^1_0}.

    kinds::

        constant    a(s) = m
        affine      a(s) = m + c s
        saturating  a(s) = m + c s / (1 + s)

    ``claim_monotone_as`` / ``claim_aprime_nonneg`` default to what holds
    analytically; set them explicitly to assert a property the sampler
    should then confirm or refute.
    """

    kind: str
    m: float
    c: float = 0.0
    claim_monotone_as: Optional[bool] = None
    claim_aprime_nonneg: Optional[bool] = None
    claim_linear_growth: bool = True

    def __post_init__(self):
        if self.kind not in DIFFUSION_KINDS:
            raise ValueError(f"unknown diffusion kind {self.kind!r}")
        if not self.m > 0.0:
            raise ValueError(f"diffusion lower bound m must be positive, got {self.m}")

    def a(self, s):
        if isinstance(s, float):
            if self.kind == "constant":
                return self.m
            if self.kind == "affine":
                return self.m + self.c * s
            return self.m + self.c * s / (1.0 + s)
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.m)
        if self.kind == "affine":
            return self.m + self.c * s
        return self.m + self.c * s / (1.0 + s)

    def da(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(s)
        if self.kind == "affine":
            return np.full_like(s, self.c)
        return self.c / (1.0 + s) ** 2

    def A(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return self.m * s
        if self.kind == "affine":
            return self.m * s + 0.5 * self.c * s * s
        return self.m * s + self.c * (s - np.log1p(s))

    @property
    def monotone_as(self) -> bool:
        if self.claim_monotone_as is not None:
            return self.claim_monotone_as
        return self.kind == "constant" or self.c >= 0.0

    @property
    def aprime_nonneg(self) -> bool:
        if self.claim_aprime_nonneg is not None:
            return self.claim_aprime_nonneg
        return self.kind == "constant" or self.c >= 0.0

    @property
    def M1(self) -> float:
        if self.kind == "saturating":
            return self.m + max(self.c, 0.0)
        return self.m

    @property
    def M2(self) -> float:
        return self.c if self.kind == "affine" else 0.0


# --------------------------------------------------------------------------
# forcing and the full problem
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Forcing:
    """Right-hand side h(x), optionally time dependent.

    ``kind`` is ``"zero"``, ``"constant"`` or ``"grid"`` (piecewise-linear
    interpolation of samples ``(x, values)``). ``time_dependent`` overrides
    everything for plain simulation; attractor analysis refuses it.
    """

    kind: str = "zero"
    value: float = 0.0
    x: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    time_dependent: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    @classmethod
    def zero(cls) -> "Forcing":
        return cls()

    @classmethod
    def constant(cls, value: float) -> "Forcing":
        return cls(kind="constant", value=float(value))

    @classmethod
    def from_samples(cls, x, values) -> "Forcing":
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 2:
            raise ValueError("grid forcing needs matching 1-D x and value arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid forcing x must be strictly increasing")
        return cls(kind="grid", x=x, values=values)

    @property
    def autonomous(self) -> bool:
        return self.time_dependent is None

    @property
    def is_zero(self) -> bool:
        return self.autonomous and (
            self.kind == "zero" or (self.kind == "constant" and self.value == 0.0)
        )

    def __call__(self, x, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.time_dependent is not None:
            return np.asarray(self.time_dependent(x, t), dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        return np.interp(x, self.x, self.values)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    reaction: ReactionTerm
    diffusion: DiffusionModulator
    forcing: Forcing = field(default_factory=Forcing)
    L: float = math.pi

    def __post_init__(self):
        if not self.L > 0.0:
            raise ValueError(f"domain length must be positive, got {self.L}")

    @property
    def lambda1(self) -> float:
        return (math.pi / self.L) ** 2

    def forcing_l2_sq(self, n_samples: int = 4096) -> float:
        x = np.linspace(0.0, self.L, n_samples)
        hx = self.forcing(x)
        if not np.all(np.isfinite(hx)):
            raise AssumptionError("forcing has non-finite samples")
        return float(trapezoid(hx * hx, x))

    def forcing_sup(self, n_samples: int = 4096) -> float:
        x = np.linspace(0.0, self.L, n_samples)
        return float(np.max(np.abs(self.forcing(x))))

    @property
    def kappa1(self) -> float:
        """2 kappa |Omega| + ||h||^2 / (lambda_1 m)."""
        m = self.diffusion.m
        return 2.0 * self.reaction.kappa * self.L + self.forcing_l2_sq() / (self.lambda1 * m)


def chafee_infante(lam: float, diffusion: Optional[DiffusionModulator] = None,
                   forcing: Optional[Forcing] = None, L: float = math.pi,
                   split: float = 0.5) -> ProblemSpec:
    """Cubic reaction lam*u - u^3 with constant unit diffusion by default."""
    return ProblemSpec(
        reaction=ReactionTerm.cubic(lam, split),
        diffusion=diffusion or DiffusionModulator("constant", 1.0),
        forcing=forcing or Forcing.zero(),
        L=L,
    )


# --------------------------------------------------------------------------
# assumption validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingPlan:
    s_scale: float = 1.0
    n_points: int = 2001

    def __post_init__(self):
        if self.n_points < 100:
            raise ValueError("sampling plan needs at least 100 points")
        if not self.s_scale > 0.0:
            raise ValueError("s_scale must be positive")

    def reals(self) -> np.ndarray:
        span = 10.0 * self.s_scale
        return np.linspace(-span, span, self.n_points)

    def nonneg(self) -> np.ndarray:
        return np.linspace(0.0, 10.0 * self.s_scale, self.n_points)


@dataclass
class AssumptionCheck:
    name: str
    claimed: bool
    passed: bool
    worst_violation: float
    location: float

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "claimed": self.claimed,
            "sampled_check_passed": self.passed,
            "worst_violation": self.worst_violation,
            "location": self.location,
        }


@dataclass
class AssumptionReport:
    checks: list
    theorems: list

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def ok(self, name: str) -> bool:
        c = self[name]
        return c.claimed and c.passed

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.claimed)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
            "theorems": list(self.theorems),
        }


def _finite(name: str, s: np.ndarray, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        where = float(s[np.argmax(bad)])
        raise AssumptionError(f"{name}: non-finite value at sample s = {where!r}")
    return values


def _inequality(name: str, claimed: bool, s: np.ndarray, lhs, rhs,
                rtol: float = 1e-12) -> AssumptionCheck:
    """Sampled check of lhs(s) <= rhs(s)."""
    lhs = _finite(name, s, lhs)
    rhs = _finite(name, s, rhs)
    excess = lhs - rhs
    i = int(np.argmax(excess))
    worst = max(0.0, float(excess[i]))
    tol = rtol * (1.0 + float(np.max(np.abs(rhs))))
    return AssumptionCheck(name, claimed, worst <= tol, worst, float(s[i]))


def _derivative_check(name: str, s: np.ndarray, prim: Callable, deriv: Callable) -> AssumptionCheck:
    """Central differences of ``prim`` converge to ``deriv`` under refinement."""
    target = _finite(name, s, deriv(s))
    errors = []
    for delta in (1e-2, 1e-3, 1e-4):
        fd = (prim(s + delta) - prim(s - delta)) / (2.0 * delta)
        errors.append(np.abs(_finite(name, s, fd) - target) / (1.0 + np.abs(target)))
    final = errors[-1]
    i = int(np.argmax(final))
    refining = bool(np.all(errors[-1] <= errors[0] + 1e-9))
    worst = float(final[i])
    return AssumptionCheck(name, True, refining and worst <= 1e-6, worst, float(s[i]))


def validate_assumptions(spec: ProblemSpec, plan: Optional[SamplingPlan] = None) -> AssumptionReport:
    """Check every claimed standing assumption of ``spec`` on a dense grid."""
    plan = plan or SamplingPlan()
    r, d = spec.reaction, spec.diffusion
    s = plan.reals()
    sp = plan.nonneg()
    s_arg = sp * sp  # a is evaluated at squared norms
    p = r.p
    abs_p = np.abs(s) ** p

    fs = _finite("f", s, r.f(s))
    Fs = _finite("F", s, r.F(s))
    a_vals = _finite("a", s_arg, d.a(s_arg))

    checks = [
        _inequality("p_at_least_two", True, np.array([p]), np.array([2.0]), np.array([p])),
        _inequality("a_lower_bound", True, s_arg, -a_vals, -d.m + 0.0 * s_arg),
        _inequality("a_linear_growth", d.claim_linear_growth, s_arg, a_vals, d.M1 + d.M2 * s_arg),
        _derivative_check("A_antiderivative", s_arg, d.A, d.a),
    ]

    g = sp * _finite("a(s^2)s", sp, d.a(s_arg))
    # sorted grid: monotone iff consecutive increments are nonnegative, which
    # covers every sampled pair (x, y)
    dg = np.diff(g)
    dx = np.diff(sp)
    checks.append(_inequality("monotone_as", d.monotone_as, sp[1:], -dg * dx, 0.0 * dx))
    checks.append(_inequality("aprime_nonneg", d.aprime_nonneg, s_arg,
                              -_finite("a'", s_arg, d.da(s_arg)), 0.0 * s_arg))

    checks += [
        _inequality("dissipative_upper", True, s, fs * s, r.kappa - r.alpha1 * abs_p),
        _inequality("dissipative_lower", True, s, -r.kappa - r.alpha2 * abs_p, fs * s),
        _inequality("growth_bound", True, s, np.abs(fs), r.growth_c * (1.0 + np.abs(s) ** (p - 1.0))),
        _inequality("F_upper", True, s, Fs, r.kappa_t - r.alpha1_t * abs_p),
        _inequality("F_lower", True, s, -r.alpha2_t * abs_p - r.kappa_t, Fs),
        _derivative_check("F_antiderivative", s, r.F, r.f),
    ]
    has_eta = r.eta is not None
    eta = r.eta if has_eta else 0.0
    checks.append(_inequality("one_sided_derivative", has_eta, s, _finite("f'", s, r.df(s)), eta + 0.0 * s))
    checks.append(_inequality("sf_le_F_plus_eta", has_eta, s, s * fs, Fs + 0.5 * eta * s * s))
    # one space dimension: any p >= 2 is admissible
    checks.append(AssumptionCheck("growth_exponent_admissible", True, p >= 2.0, 0.0, p))

    x = np.linspace(0.0, spec.L, plan.n_points)
    hx = spec.forcing(x)
    h_ok = bool(np.all(np.isfinite(hx)))
    checks.append(AssumptionCheck("forcing_finite", True, h_ok, 0.0 if h_ok else math.inf,
                                  float(x[np.argmax(~np.isfinite(hx))]) if not h_ok else 0.0))

    report = AssumptionReport(checks, [])
    report.theorems = enabled_theorems(report, spec)
    return report


def enabled_theorems(report: AssumptionReport, spec: ProblemSpec) -> list:
    ok = report.ok
    base = ok("a_lower_bound") and ok("dissipative_upper") and ok("dissipative_lower") \
        and ok("forcing_finite") and ok("p_at_least_two")
    regular = base and ok("a_linear_growth")
    eta = ok("one_sided_derivative")
    condp = ok("growth_exponent_admissible")
    theorems = []
    if regular:
        theorems.append("regular_existence")
    if base and (eta or condp):
        theorems.append("strong_existence")
    if regular and eta and ok("monotone_as"):
        theorems.append("uniqueness")
    if regular and ok("monotone_as"):
        theorems.append("absorbing_l2")
        theorems.append("linf_attractor")
    if regular and ok("aprime_nonneg"):
        theorems.append("h2_attractor")
    if regular and spec.forcing.autonomous and (eta or condp):
        theorems.append("structure_theorem")
    return theorems
