"""Deterministic CSV/JSON serialization."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .basis import SpectralBasis
from .equilibria import EquilibriumSet, make_equilibrium, _order
from .flow import Trajectory
from .problems import ProblemSpec


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv(traj: Trajectory) -> str:
    n = traj.gamma.shape[1]
    cols = ["t", "l2", "h1", "lp", "energy", "a_value", "dissipation"] + [f"gamma_{k}" for k in range(1, n + 1)]
    lines = [",".join(cols)]
    scalars = np.column_stack([traj.t, traj.l2, traj.h1, traj.lp, traj.energy, traj.a_value, traj.dissipation])
    for row, g in zip(scalars, traj.gamma):
        lines.append(",".join(_fmt(x) for x in np.concatenate([row, g])))
    return "\n".join(lines) + "\n"


def read_trajectory_csv(path) -> dict:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    header = Path(path).read_text().splitlines()[0].split(",")
    return {name: data[:, i] for i, name in enumerate(header)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def to_json(obj) -> str:
    """Sorted keys, fixed indentation, non-finite floats as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def equilibria_from_json(text: str, spec: ProblemSpec, basis: SpectralBasis) -> EquilibriumSet:
    """Rebuild an EquilibriumSet; spectra and energies are recomputed."""
    doc = json.loads(text)
    found = []
    for rec in doc["equilibria"]:
        g = np.asarray(rec["coefficients"], dtype=float)
        if g.size != basis.n_modes:
            raise ValueError(f"equilibrium has {g.size} coefficients, basis has {basis.n_modes} modes")
        found.append(make_equilibrium(g, spec, basis))
    if not found:
        raise ValueError("equilibria file lists no equilibria")
    return EquilibriumSet(_order(found), int(doc.get("seeds_used", 0)), int(doc.get("deflation_rounds", 0)),
                          int(doc.get("found_by_deflation", 0)), int(doc.get("newton_failures", 0)))
