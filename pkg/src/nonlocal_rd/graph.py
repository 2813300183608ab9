"""Heteroclinic connection graph between equilibria and its structure checks.

Edges are found by shooting forward from each unstable equilibrium along
its unstable eigenvectors; the backward-time end of an edge holds by
construction. Probes from the absorbing ball witness forward convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from graphlib import CycleError, TopologicalSorter
from typing import Optional

import numpy as np

from .basis import SpectralBasis, SpectralState
from .diagnostics import grid_max
from .equilibria import Equilibrium, EquilibriumSet, linearization
from .flow import FlowConfig, Trajectory, integrate
from .model import model_for
from .problems import ProblemSpec

SHOT_FLOW = FlowConfig(t_end=200.0, dt_init=1e-3, dt_max=0.05, rel_tol=1e-5, abs_tol=1e-12, control="per_step")


class MarginalEquilibriumError(ValueError):
    """Unstable seeds refused at a (numerically) degenerate equilibrium."""


@dataclass(frozen=True)
class Seed:
    state: SpectralState
    direction: int
    sign: int
    delta: float


def unstable_seeds(eq: Equilibrium, spec: ProblemSpec, basis: SpectralBasis,
                   delta: Optional[float] = None) -> list:
    """eq +- delta v for each unit unstable eigenvector v, ordered by direction then sign."""
    if eq.marginal_count:
        raise MarginalEquilibriumError(
            f"equilibrium {eq.index} has {eq.marginal_count} marginal eigenvalue(s)")
    if eq.unstable_count == 0:
        return []
    if delta is None:
        delta = 1e-4 * (1.0 + float(np.linalg.norm(eq.coefficients)))
    _, vecs = linearization(eq.coefficients, spec, basis)
    out = []
    for k in range(eq.unstable_count):
        for sign in (1, -1):
            out.append(Seed(SpectralState(eq.coefficients + sign * delta * vecs[:, k]), k, sign, delta))
    return out


@dataclass(frozen=True)
class OmegaLimitResult:
    status: str  # "converged" | "unresolved"
    equilibrium: Optional[int]
    time: float
    distance: float
    velocity: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def shoot(seed, spec: ProblemSpec, basis: SpectralBasis, eq_set: EquilibriumSet,
          t_max: float = 200.0, omega_tol: float = 1e-6,
          flow: FlowConfig = SHOT_FLOW) -> tuple:
    """Integrate until within omega_tol of an equilibrium with |rhs| <= omega_tol.

    Returns (OmegaLimitResult, Trajectory). Shots still moving at ``t_max``
    are unresolved, never assigned.
    """
    if not spec.forcing.autonomous:
        raise ValueError("shooting needs time-independent forcing")
    model = model_for(spec, basis)
    centers = eq_set.coefficients()
    t0 = float(getattr(seed, "t", 0.0))
    hit = {}

    def settled(t, g):
        d = np.linalg.norm(centers - g, axis=1)
        i = int(np.argmin(d))
        if d[i] > omega_tol:
            return False
        v = float(np.linalg.norm(model.rhs(g)))
        if v > omega_tol:
            return False
        hit.update(eq=i, t=t - t0, dist=float(d[i]), vel=v)
        return True

    traj = integrate(seed, spec, basis, replace(flow, t_end=t_max), stop=settled)
    if traj.status == "stopped":
        return OmegaLimitResult("converged", hit["eq"], hit["t"], hit["dist"], hit["vel"]), traj
    if traj.status != "completed":
        raise FloatingPointError(f"shot failed: {traj.status}: {traj.message}")
    g = traj.gamma[-1]
    i, d = eq_set.nearest(g)
    return OmegaLimitResult("unresolved", None, float(traj.t[-1] - t0), d,
                            float(np.linalg.norm(model.rhs(g)))), traj


@dataclass
class HeteroclinicEdge:
    source: int
    target: int
    direction: int
    sign: int
    delta: float
    E_source: float
    E_target: float
    transit_time: float
    energy_monotone: bool
    energy_drop: float
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def dE(self) -> float:
        return self.E_target - self.E_source

    def as_dict(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "dE": self.dE,
            "seed": {"direction": self.direction, "sign": self.sign, "delta": self.delta},
            "transit_time": self.transit_time,
            "energy_monotone": self.energy_monotone,
        }


@dataclass
class ConnectionGraph:
    equilibria: EquilibriumSet
    edges: list
    unresolved: list

    def out_degree(self, i: int) -> int:
        return sum(1 for e in self.edges if e.source == i)

    def targets(self, i: int) -> set:
        return {e.target for e in self.edges if e.source == i}

    def edge_set(self) -> set:
        return {(e.source, e.target) for e in self.edges}

    def as_dict(self) -> dict:
        return {
            "nodes": [e.as_dict() for e in self.equilibria],
            "edges": [e.as_dict() for e in self.edges],
            "unresolved": list(self.unresolved),
        }


@dataclass(frozen=True)
class GraphPlan:
    t_max: float = 200.0
    omega_tol: float = 1e-6
    delta: Optional[float] = None
    flow: FlowConfig = SHOT_FLOW
    keep_trajectories: bool = False


def _energy_profile(traj: Trajectory, rel_tol: float) -> tuple:
    E = traj.energy
    tol = 10.0 * rel_tol * (1.0 + np.abs(E[:-1]))
    monotone = bool(np.all(np.diff(E) <= tol))
    return monotone, float(E[0] - E[-1])


def build_graph(spec: ProblemSpec, basis: SpectralBasis, eq_set: EquilibriumSet,
                plan: GraphPlan = GraphPlan()) -> ConnectionGraph:
    """Shoot from every unstable equilibrium; edges deduplicated by (source, target)."""
    edges, unresolved, seen = [], [], set()
    for eq in eq_set:
        try:
            seeds = unstable_seeds(eq, spec, basis, plan.delta)
        except MarginalEquilibriumError as exc:
            unresolved.append({"source": eq.index, "reason": str(exc)})
            continue
        for s in seeds:
            res, traj = shoot(s.state, spec, basis, eq_set, plan.t_max, plan.omega_tol, plan.flow)
            if not res.converged:
                unresolved.append({"source": eq.index, "direction": s.direction, "sign": s.sign,
                                   "t_max": plan.t_max, "final_distance": res.distance,
                                   "final_velocity": res.velocity})
                continue
            key = (eq.index, res.equilibrium)
            if key in seen:
                continue
            seen.add(key)
            target = eq_set[res.equilibrium]
            monotone, drop = _energy_profile(traj, plan.flow.rel_tol)
            edges.append(HeteroclinicEdge(
                eq.index, res.equilibrium, s.direction, s.sign, s.delta, eq.energy, target.energy,
                res.time, monotone, drop, traj if plan.keep_trajectories else None))
    return ConnectionGraph(eq_set, edges, unresolved)


# --------------------------------------------------------------------------
# structure verification
# --------------------------------------------------------------------------


def check_graph(graph: ConnectionGraph, descent_tol: float = 1e-10) -> dict:
    """Lyapunov DAG checks on a graph (also usable on hand-built graphs)."""
    nodes = list(graph.equilibria)
    descent = all(e.E_target < e.E_source - descent_tol for e in graph.edges)
    sorter = TopologicalSorter({i: set() for i in range(len(nodes))})
    for e in graph.edges:
        sorter.add(e.target, e.source)
    try:
        tuple(sorter.static_order())
        acyclic = True
    except CycleError:
        acyclic = False
    stable_sinks = all(graph.out_degree(eq.index) == 0 for eq in nodes if eq.unstable_count == 0)
    edge_energy = all(e.energy_monotone and e.energy_drop >= 1e-8 for e in graph.edges)
    self_loops = any(e.source == e.target for e in graph.edges)
    return {
        "strict_descent": descent,
        "acyclic": acyclic and not self_loops,
        "stable_out_degree_zero": stable_sinks,
        "edge_energy_nonincreasing": edge_energy,
    }


def probe_states(spec: ProblemSpec, basis: SpectralBasis, count: int, seed: int) -> tuple:
    """Uniform samples from the coefficient ball of radius sqrt(kappa1/(lambda1 m)) + 1."""
    radius = math.sqrt(spec.kappa1 / (spec.lambda1 * spec.diffusion.m)) + 1.0
    rng = np.random.default_rng(seed)
    n = basis.n_modes
    out = []
    for _ in range(count):
        v = rng.normal(size=n)
        r = radius * rng.uniform() ** (1.0 / n)
        out.append(r * v / np.linalg.norm(v))
    return radius, out


@dataclass(frozen=True)
class ProbePlan:
    count: int = 20
    seed: int = 0
    t_probe: float = 30.0
    tail_start: float = 20.0


@dataclass
class StructureReport:
    verdict: str  # "pass" | "fail" | "inconclusive"
    checks: dict
    probes: list
    coverage: dict
    probe_radius: float
    rng_seed: int
    tails: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "checks": self.checks,
            "probe_radius": self.probe_radius,
            "rng_seed": self.rng_seed,
            "coverage": self.coverage,
            "probes": self.probes,
        }


def verify_structure(graph: ConnectionGraph, spec: ProblemSpec, basis: SpectralBasis,
                     probes: ProbePlan = ProbePlan(), plan: GraphPlan = GraphPlan()) -> StructureReport:
    """Forward-convergence probes plus the Lyapunov DAG checks.

    Any unresolved probe or shot makes the verdict inconclusive unless a
    structural check fails outright.
    """
    if probes.count < 20:
        raise ValueError("structure verification needs at least 20 probes")
    eq_set = graph.equilibria
    radius, starts = probe_states(spec, basis, probes.count, probes.seed)
    records, tails = [], []
    reached = set()
    pre = replace(plan.flow, t_end=probes.t_probe)
    for k, g0 in enumerate(starts):
        traj = integrate(SpectralState(g0), spec, basis, pre)
        if not traj.ok:
            raise FloatingPointError(f"probe {k} failed: {traj.status}: {traj.message}")
        tail = traj.tail(probes.tail_start)
        tails.append(tail)
        res, _ = shoot(traj.final, spec, basis, eq_set, plan.t_max, plan.omega_tol, plan.flow)
        if res.converged:
            reached.add(res.equilibrium)
        records.append({
            "probe": k,
            "initial_l2": float(np.linalg.norm(g0)),
            "status": res.status,
            "equilibrium": res.equilibrium,
            "time": probes.t_probe + res.time,
            "tail_grid_max": float(np.max(grid_max(tail, basis))) if len(tail) else None,
        })
    checks = check_graph(graph)
    checks["forward_convergence"] = all(r["status"] == "converged" for r in records)
    checks["edges_connect_equilibria"] = not graph.unresolved
    reached |= {e.target for e in graph.edges}
    stable = [eq.index for eq in eq_set if eq.unstable_count == 0]
    coverage = {"stable": stable, "reached": sorted(reached),
                "all_stable_reached": all(i in reached for i in stable)}
    structural = ("strict_descent", "acyclic", "stable_out_degree_zero", "edge_energy_nonincreasing")
    if not all(checks[c] for c in structural):
        verdict = "fail"
    elif not (checks["forward_convergence"] and checks["edges_connect_equilibria"]):
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return StructureReport(verdict, checks, records, coverage, radius, probes.seed, tails)
