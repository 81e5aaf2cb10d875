"""Command line interface: solve, two-phase, regularity, verify.

Each command reads one JSON config (see docs/config.md) and writes its
results under the configured output directory.  All randomness is seeded
from the config, so identical configs give byte-identical outputs.

Exit codes: 0 success, 1 failed checks, 2 configuration or input error,
3 nonconvergence, 4 NaN abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .discretize import DiscreteProblem
from .grid import GridFunction, load_grid_function
from .hamiltonians import (
    gamma_exponent,
    verify_growth,
    verify_p_continuity,
    verify_x_continuity,
)
from .operators import check_a1, check_homogeneity, check_lemma_equivalence
from .regularity import (
    StructuralConstants,
    estimate_exponent,
    holder_seminorm,
    theoretical_K,
    theoretical_L,
)
from .solver import NanAbortError, solve_dirichlet
from .twophase import OuterNonConvergenceError, epsilon_continuation, extract_phases, residual_band_check

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_NAN = 4


def _apply_thread_cap() -> None:
    cap = os.environ.get("HJ_THREADS")
    if not cap:
        return
    try:
        import numba

        numba.set_num_threads(max(1, int(cap)))
    except (ImportError, ValueError):
        pass


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_solve(cfg: RunConfig) -> int:
    cfg.require("grid", "operator", "hamiltonian", "f", "g")
    problem = DiscreteProblem(grid=cfg.grid, op=cfg.operator, ham=cfg.hamiltonian,
                              f=cfg.f, g=cfg.g)
    out = _outdir(cfg)
    try:
        res = solve_dirichlet(problem, cfg.solver)
    except NanAbortError as exc:
        _write_json(out / "summary.json", {"converged": False, "nan_abort": True,
                                           "iteration": exc.iteration})
        print(f"solve: NaN abort at iteration {exc.iteration}", file=sys.stderr)
        return EXIT_NAN
    res.u.to_csv(out / "solution.csv")
    res.history_to_csv(out / "residual_history.csv")
    _write_json(out / "summary.json", {
        "converged": res.converged,
        "iters": res.iters,
        "final_residual": res.final_residual,
        "tol": cfg.solver.tol,
        "grid_n": list(cfg.grid.n_cells),
    })
    print(f"solve: converged={res.converged} iters={res.iters} "
          f"residual={res.final_residual:.3e}")
    return EXIT_OK if res.converged else EXIT_NONCONVERGENCE


def cmd_two_phase(cfg: RunConfig) -> int:
    problem = cfg.build_two_phase_problem()
    out = _outdir(cfg)
    try:
        u_star, trace = epsilon_continuation(problem)
    except OuterNonConvergenceError as exc:
        _write_json(out / "trace.json", {"stages": exc.trace, "failed_eps": exc.eps})
        print(f"two-phase: outer iteration failed to converge at eps={exc.eps}",
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except NanAbortError as exc:
        print(f"two-phase: NaN abort at iteration {exc.iteration}", file=sys.stderr)
        return EXIT_NAN

    u_star.to_csv(out / "solution.csv")
    phases = extract_phases(u_star, solver_tol=cfg.solver.tol)
    pts = problem.grid.nodes()
    labels = np.where(phases.positive_mask.ravel(), "+",
                      np.where(phases.negative_mask.ravel(), "-", "0"))
    header = "x,phase" if problem.grid.dim == 1 else "x,y,phase"
    with open(out / "phases.csv", "w") as fh:
        fh.write(header + "\n")
        for p, lab in zip(pts, labels):
            coords = ",".join("%.17g" % c for c in p)
            fh.write(f"{coords},{lab}\n")
    band = residual_band_check(problem, u_star)
    _write_json(out / "trace.json", {"stages": trace})
    _write_json(out / "band_check.json", band.to_dict())
    n_fb = len(phases.free_boundary_cells)
    print(f"two-phase: stages={len(trace)} band_check={'pass' if band.passed else 'FAIL'} "
          f"free_boundary_cells={n_fb}")
    return EXIT_OK if band.passed else EXIT_CHECK_FAILED


def cmd_regularity(cfg: RunConfig, solution_path: str) -> int:
    try:
        u = load_grid_function(solution_path)
    except (OSError, ValueError) as exc:
        print(f"regularity: cannot load solution: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.require("hamiltonian", "operator")
    reg = cfg.regularity
    margin = float(reg.get("margin", 0.1))
    c_dim = reg.get("c_dim")
    f_norm = cfg.f.sup_norm() if cfg.f is not None else 0.0
    sc = StructuralConstants.from_problem(cfg.hamiltonian, cfg.operator, u.grid.dim,
                                          f_norm=f_norm, c_dim=c_dim)
    report = estimate_exponent(u, margin)
    gamma = reg.get("gamma")
    if gamma is None and sc.m > 2:
        gamma = gamma_exponent(sc.m)
    seminorms = {}
    if gamma is not None:
        seminorms[f"gamma={gamma}"] = holder_seminorm(u, margin, float(gamma))
    seminorms["gamma=1"] = holder_seminorm(u, margin, 1.0)

    sc_h = sc.absorb_source()
    L, branches = theoretical_L(sc_h)
    bound = L * (1.0 + u.sup_norm() + sc.f_norm)
    payload = {
        "modulus": report.to_dict(),
        "seminorms": seminorms,
        "structural_constants": sc.to_dict(),
        "constants_after_absorption": sc_h.to_dict(),
        "theoretical_K": theoretical_K(sc) if sc.m > 2 else None,
        "theoretical_L": L,
        "L_branches": branches,
        "lipschitz_bound": bound,
        "lipschitz_measured": report.lipschitz_estimate,
        "slack_ratio": report.lipschitz_estimate / bound,
        "bound_satisfied": bool(report.lipschitz_estimate <= bound),
    }
    out = _outdir(cfg)
    _write_json(out / "modulus_report.json", payload)
    gh = payload["modulus"]["gamma_hat"]
    print(f"regularity: gamma_hat={gh} lipschitz={report.lipschitz_estimate:.4g} "
          f"slack_ratio={payload['slack_ratio']:.4g}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    cfg.require("operator", "hamiltonian")
    n, seed = cfg.verify["n_samples"], cfg.verify["seed"]
    domain = (cfg.grid.lower, cfg.grid.upper) if cfg.grid is not None else None
    reports = {
        "a1": check_a1(cfg.operator, n, seed),
        "homogeneity": check_homogeneity(cfg.operator, n, seed),
        "lemma_equivalence": check_lemma_equivalence(cfg.operator, n, seed),
        "growth": verify_growth(cfg.hamiltonian, n, seed, domain),
        "x_continuity": verify_x_continuity(cfg.hamiltonian, n, seed, domain),
        "p_continuity": verify_p_continuity(cfg.hamiltonian, n, seed, domain),
    }
    all_pass = all(r.passed for r in reports.values())
    payload = {k: r.to_dict() for k, r in reports.items()}
    payload["all_passed"] = all_pass
    out = _outdir(cfg)
    _write_json(out / "verify_report.json", payload)
    for k, r in reports.items():
        print(f"verify: {k}: {'pass' if r.passed else 'FAIL'}")
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjlab",
        description="Grid solver and regularity lab for degenerate fully "
                    "nonlinear Hamilton-Jacobi equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="path to the JSON run configuration")
        p.add_argument("--grid-n", type=int, default=None,
                       help="override the number of grid cells per axis")
        p.add_argument("--seed", type=int, default=None,
                       help="override the verifier seed")
        p.add_argument("--out", default=None, help="override the output directory")

    add_common(sub.add_parser("solve", help="solve the Dirichlet problem"))
    add_common(sub.add_parser("two-phase", help="run the two-phase continuation"))
    reg = sub.add_parser("regularity", help="measure moduli of a solution file")
    add_common(reg)
    reg.add_argument("--solution", required=True, help="solution CSV to analyze")
    add_common(sub.add_parser("verify", help="run the structural verifiers"))
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, grid_n=args.grid_n, seed=args.seed, out=args.out)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "two-phase":
            return cmd_two_phase(cfg)
        if args.command == "regularity":
            return cmd_regularity(cfg, args.solution)
        if args.command == "verify":
            return cmd_verify(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
