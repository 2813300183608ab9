"""Command-line entry point: simulate | equilibria | connections | verify.

Exit codes: 0 all checks pass, 1 monitor or structure failure,
2 configuration error, 3 numerical failure (blow-up, step underflow,
Newton stagnation).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import SpectralState
from .config import ConfigError, RunConfig, load_config
from .diagnostics import h2_diagnostic, linf_bound_constant, trajectory_monitors
from .equilibria import SearchPlan, find_all
from .flow import FlowConfig, continuous_dependence, integrate
from .graph import GraphPlan, ProbePlan, build_graph, verify_structure
from .io import equilibria_from_json, to_json, trajectory_csv
from .problems import validate_assumptions

EXIT_OK, EXIT_MONITOR, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("nonlocal_rd")


class NumericalFailure(RuntimeError):
    pass


def _search_plan(cfg: RunConfig) -> SearchPlan:
    a = cfg.analysis
    return SearchPlan(a.seed_modes, a.amplitudes, a.deflation_rounds, a.newton_tol, a.max_iter, a.dedup_tol)


def _graph_plan(cfg: RunConfig) -> GraphPlan:
    return GraphPlan(t_max=cfg.analysis.t_max, omega_tol=cfg.analysis.omega_tol)


def _simulation(cfg: RunConfig, basis):
    g0 = cfg.initial.state(basis.n_modes, cfg.analysis.seed)
    traj = integrate(SpectralState(g0), cfg.spec, basis, cfg.flow)
    monitors = trajectory_monitors(traj, cfg.spec, basis, cfg.flow.rel_tol, cfg.analysis.tail_start)
    return traj, monitors


def _run_summary(traj) -> dict:
    return {"status": traj.status, "message": traj.message, "steps": traj.steps,
            "rejected": traj.rejected, "records": len(traj), "t_final": float(traj.t[-1]),
            "energy_residual": traj.energy_residual()}


def cmd_simulate(cfg: RunConfig) -> tuple:
    """Returns (exit code, {file name: content})."""
    basis = cfg.basis()
    traj, monitors = _simulation(cfg, basis)
    summary = {"run": _run_summary(traj), "monitors": [m.as_dict() for m in monitors]}
    files = {"trajectory.csv": trajectory_csv(traj), "summary.json": to_json(summary)}
    if not traj.ok:
        return EXIT_NUMERICAL, files
    return (EXIT_OK if all(m.passed for m in monitors) else EXIT_MONITOR), files


def cmd_equilibria(cfg: RunConfig) -> tuple:
    basis = cfg.basis()
    eqs = find_all(cfg.spec, basis, _search_plan(cfg))
    files = {"equilibria.json": to_json(eqs.as_dict())}
    return (EXIT_OK if len(eqs) else EXIT_MONITOR), files


def _graph_ok(graph) -> bool:
    from .graph import check_graph

    return not graph.unresolved and all(check_graph(graph).values())


def cmd_connections(cfg: RunConfig) -> tuple:
    path = cfg.analysis.equilibria_file
    if path is None:
        raise ConfigError("[analysis] equilibria_file is required for 'connections'")
    if not Path(path).is_file():
        raise ConfigError(f"[analysis] equilibria file not found: {path}")
    basis = cfg.basis()
    try:
        eqs = equilibria_from_json(Path(path).read_text(), cfg.spec, basis)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"[analysis] cannot use equilibria file {path}: {exc}") from exc
    graph = build_graph(cfg.spec, basis, eqs, _graph_plan(cfg))
    files = {"graph.json": to_json(graph.as_dict())}
    return (EXIT_OK if _graph_ok(graph) else EXIT_MONITOR), files


def _dependence(cfg: RunConfig, basis, report) -> dict:
    """Gronwall check for two runs 1e-3 apart on [0, 2] with a shared fixed step."""
    if "uniqueness" not in report.theorems:
        return {"name": "continuous_dependence", "applicable": False, "passed": True,
                "note": "uniqueness hypotheses not satisfied"}
    g0 = cfg.initial.state(basis.n_modes, cfg.analysis.seed)
    e1 = np.zeros(basis.n_modes)
    e1[0] = 1e-3
    fixed = FlowConfig(t_end=2.0, dt_init=1e-3, dt_min=1e-3, dt_max=1e-3, adaptive=False)
    tu = integrate(SpectralState(g0), cfg.spec, basis, fixed)
    tv = integrate(SpectralState(g0 + e1), cfg.spec, basis, fixed)
    if not (tu.ok and tv.ok):
        raise NumericalFailure("continuous dependence runs failed")
    res = continuous_dependence(tu, tv, cfg.spec.reaction.eta, cfg.spec)
    slack = 1e-9
    return {"name": "continuous_dependence", "applicable": True, "min_margin": res.margin,
            "slack": slack, "passed": res.margin >= -slack}


def _h2_refinement(cfg: RunConfig, traj, basis) -> dict:
    if not cfg.spec.diffusion.aprime_nonneg or not cfg.analysis.refine_h2:
        return {"name": "h2_refinement", "applicable": False, "passed": True}
    fine = cfg.basis(2 * basis.n_modes)
    g0 = np.zeros(fine.n_modes)
    g0[:basis.n_modes] = traj.gamma[0]
    traj2 = integrate(SpectralState(g0), cfg.spec, fine, cfg.flow)
    if not traj2.ok:
        raise NumericalFailure(f"refined run failed: {traj2.message}")
    s1 = h2_diagnostic(traj.tail(cfg.analysis.tail_start), cfg.spec, basis)
    s2 = h2_diagnostic(traj2.tail(cfg.analysis.tail_start), cfg.spec, fine)
    ratio = s2 / s1 if s1 > 0 else (1.0 if s2 == 0 else math.inf)
    return {"name": "h2_refinement", "applicable": True, "sup_n": s1, "sup_2n": s2,
            "ratio": ratio, "passed": 0.5 <= ratio <= 1.5}


def cmd_verify(cfg: RunConfig) -> tuple:
    """Assumptions, every estimate monitor, equilibria, connection graph and probes."""
    basis = cfg.basis()
    report = validate_assumptions(cfg.spec)
    traj, monitors = _simulation(cfg, basis)
    if not traj.ok:
        doc = {"assumptions": report.as_dict(), "run": _run_summary(traj), "verdict": "numerical_failure"}
        return EXIT_NUMERICAL, {"verify.json": to_json(doc)}
    extra = [_dependence(cfg, basis, report), _h2_refinement(cfg, traj, basis)]
    doc = {
        "assumptions": report.as_dict(),
        "run": _run_summary(traj),
        "monitors": [m.as_dict() for m in monitors],
        "checks": extra,
    }
    passed = report.passed and all(m.passed for m in monitors) and all(c["passed"] for c in extra)
    if cfg.spec.forcing.autonomous:
        eqs = find_all(cfg.spec, basis, _search_plan(cfg))
        graph = build_graph(cfg.spec, basis, eqs, _graph_plan(cfg))
        probes = ProbePlan(cfg.analysis.probes, cfg.analysis.seed, cfg.analysis.t_probe, cfg.analysis.tail_start)
        structure = verify_structure(graph, cfg.spec, basis, probes, _graph_plan(cfg))
        try:
            M = linf_bound_constant(cfg.spec, basis=basis)
            worst = max(p["tail_grid_max"] for p in structure.probes)
            linf = {"name": "probe_linf_tails", "M": M, "worst_grid_max": worst,
                    "slack": 1e-3, "passed": worst <= M + 1e-3}
        except ValueError as exc:
            linf = {"name": "probe_linf_tails", "applicable": False, "passed": True, "note": str(exc)}
        doc["equilibria"] = eqs.as_dict()
        doc["graph"] = graph.as_dict()
        doc["structure"] = structure.as_dict()
        doc["checks"].append(linf)
        passed = passed and len(eqs) > 0 and structure.verdict == "pass" and linf["passed"]
    doc["verdict"] = "pass" if passed else "fail"
    return (EXIT_OK if passed else EXIT_MONITOR), {"verify.json": to_json(doc)}


COMMANDS = {"simulate": cmd_simulate, "equilibria": cmd_equilibria,
            "connections": cmd_connections, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-rd", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] dir)")
    p.add_argument("--modes", type=int, default=None, help="number of Galerkin modes")
    p.add_argument("--seed", type=int, default=None, help="RNG seed for probes and random data")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(command: str, config: Path, out: Optional[Path] = None, modes: Optional[int] = None,
        seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config).with_overrides(modes, seed, out)
        if cfg.out_dir is None:
            raise ConfigError("no output directory: pass --out or set [output] dir")
        code, files = COMMANDS[command](cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (cfg.out_dir / name).write_text(content)
    log.info("%s finished with exit code %d; wrote %s", command, code, ", ".join(sorted(files)))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    return run(args.command, args.config, args.out, args.modes, args.seed)


if __name__ == "__main__":
    sys.exit(main())
