"""Acceptance suite: one top-level property per numbered test, each printing
a single PASS/FAIL line.  Budgets: structural verification < 10 s,
manufactured convergence < 60 s, two-phase reference run < 5 min.
"""

import filecmp
import json
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from hjlab.cli import main
from hjlab.discretize import DiscreteProblem
from hjlab.grid import Grid, GridFunction
from hjlab.hamiltonians import (
    PowerHamiltonian,
    verify_growth,
    verify_p_continuity,
    verify_x_continuity,
)
from hjlab.operators import (
    Bellman,
    CustomOperator,
    NegativeTrace,
    PucciMinus,
    PucciPlus,
    WeightedTrace,
    check_a1,
    check_homogeneity,
    check_lemma_equivalence,
)
from hjlab.regularity import (
    StructuralConstants,
    barrier_phi,
    barrier_supersolution_check,
    estimate_exponent,
    theoretical_K,
    theoretical_L,
)
from hjlab.solver import SolveParams, comparison_check, solve_dirichlet
from hjlab.twophase import (
    TwoPhaseProblem,
    epsilon_continuation,
    extract_phases,
    residual_band_check,
)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
N_SAMPLES = 10_000
SEED = 42


def report(num, name, ok):
    print(f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {num} ({name}) failed"


def manufactured_problem(n):
    g = Grid([-1.0], [1.0], [n])
    ham = PowerHamiltonian(1.0, 0.0, 3.0, dim=1)
    exact = GridFunction.from_callable(g, lambda pts: np.cos(np.pi * pts[..., 0]))
    f = GridFunction.from_callable(
        g, lambda pts: np.pi ** 2 * np.cos(np.pi * pts[..., 0])
        + (1.0 + (np.pi * np.sin(np.pi * pts[..., 0])) ** 2) ** 1.5)
    return DiscreteProblem(grid=g, op=NegativeTrace(1), ham=ham, f=f, g=exact), exact


def test_acceptance_1_structural_verification_suite():
    t0 = time.time()
    good_ops = [
        NegativeTrace(2),
        Bellman([np.diag([1.0, 0.0]), np.array([[0.3, 0.1], [0.1, 0.5]])], c_f=2.0),
        PucciMinus(1.0, 2.0, 2),
    ]
    ok = True
    for op in good_ops:
        ok &= check_a1(op, N_SAMPLES, SEED).passed
        ok &= check_homogeneity(op, N_SAMPLES, SEED).passed
        ok &= check_lemma_equivalence(op, N_SAMPLES, SEED).passed
    for m in (2.5, 3.0, 4.0):
        ham = PowerHamiltonian(1.0, 0.5, m, dim=2)
        ok &= verify_growth(ham, N_SAMPLES, SEED).passed
        ok &= verify_x_continuity(ham, N_SAMPLES, SEED).passed
        ok &= verify_p_continuity(ham, N_SAMPLES, SEED).passed
    elapsed = time.time() - t0

    # adversarial: Bellman family breaking the matrix bound |A| <= c_f / d
    with pytest.warns(UserWarning):
        bad_bellman = Bellman([np.eye(2)], c_f=1.0)
    rep = check_a1(bad_bellman, N_SAMPLES, SEED)
    ok &= (not rep.passed) and rep.witness is not None

    # adversarial: growth lower bound declared above the true coefficient
    over = PowerHamiltonian(1.0, 0.0, 3.0, dim=2, c2=5.0)
    rep = verify_growth(over, N_SAMPLES, SEED)
    ok &= (not rep.passed) and rep.witness is not None

    ok &= elapsed < 10.0
    report(1, "structural verification suite", ok)


def test_acceptance_2_lemma_equivalence():
    ops = [
        NegativeTrace(2),
        Bellman([np.diag([1.0, 0.0]), 0.4 * np.eye(2)], c_f=2.0),
        PucciMinus(1.0, 2.0, 2),
        PucciPlus(1.0, 2.0, 2),
        WeightedTrace(np.diag([1.0, 0.5]), 2),
    ]
    with pytest.warns(UserWarning):
        # breaks the Lipschitz half: true constant 2 > declared 1
        ops.append(Bellman([np.eye(2)], c_f=1.0))
    # breaks the monotone half: increasing in M, Lipschitz with c_f = 2
    ops.append(CustomOperator(lambda m: m.trace(), dim=2, c_f=2.0))

    disagreements = sum(
        0 if check_lemma_equivalence(op, N_SAMPLES, SEED).passed else 1
        for op in ops)
    report(2, "one-sided bound equivalent to Lipschitz + monotone",
           disagreements == 0)


def test_acceptance_3_manufactured_convergence():
    t0 = time.time()
    errors = []
    for n in (64, 128, 256, 512):
        p, exact = manufactured_problem(n)
        out = solve_dirichlet(p, SolveParams(tol=1e-8))
        assert out.converged
        errors.append((out.u - exact).sup_norm())
    orders = [np.log2(errors[i] / errors[i + 1]) for i in range(3)]
    elapsed = time.time() - t0
    print(f"  sup errors: {errors}; observed orders: {orders}; {elapsed:.1f}s")
    report(3, "manufactured-solution convergence order >= 0.9",
           all(o >= 0.9 for o in orders) and elapsed < 60.0)


def test_acceptance_4_exponent_recovery():
    g = Grid([-1.0], [1.0], [512])
    ok = True
    for beta in (0.3, 0.5, 0.8):
        u = GridFunction.from_callable(g, lambda pts: np.abs(pts[..., 0]) ** beta)
        gamma_hat = estimate_exponent(u, 0.1).gamma_hat
        ok &= abs(gamma_hat - beta) <= 0.05
    report(4, "exponent recovery on |x|^beta within 0.05", ok)


def test_acceptance_5_lipschitz_estimate_consistency():
    ok = True
    # manufactured solve, m = 3
    p, _ = manufactured_problem(256)
    u = solve_dirichlet(p, SolveParams(tol=1e-8)).u

    # homogeneous solve (f = 0), m = 3, gentle gradient coefficient
    g = Grid([-1.0], [1.0], [256])
    ham_h = PowerHamiltonian(0.5, 0.0, 3.0, dim=1)
    zero = GridFunction.constant(g, 0.0)
    p_h = DiscreteProblem(grid=g, op=NegativeTrace(1), ham=ham_h, f=zero, g=zero)
    out_h = solve_dirichlet(p_h, SolveParams(tol=1e-8, max_iters=500_000))
    assert out_h.converged

    for label, prob, sol in [("manufactured", p, u), ("homogeneous", p_h, out_h.u)]:
        f_norm = prob.f.sup_norm()
        sc = StructuralConstants.from_problem(prob.ham, prob.op, 1, f_norm=f_norm)
        L, _ = theoretical_L(sc.absorb_source())
        bound = L * (1.0 + sol.sup_norm() + f_norm)
        measured = estimate_exponent(sol, 0.1).lipschitz_estimate
        slack = measured / bound
        print(f"  {label}: measured Lipschitz {measured:.4g} <= bound {bound:.4g} "
              f"(slack ratio {slack:.3g})")
        ok &= measured <= bound
    report(5, "interior Lipschitz estimate below the theoretical bound", ok)


def test_acceptance_6_barrier_certification():
    sc = StructuralConstants(m=3.0, c1=1.0, c2=1.0, c3=1.0, c_f=1.0, c_dim=1.0)
    op = NegativeTrace(1)
    ham = PowerHamiltonian(1.0, 0.0, 3.0, dim=1)
    full = barrier_supersolution_check(op, ham, sc, 1000, SEED)
    half = barrier_supersolution_check(op, ham, sc, 1000, SEED,
                                       K=theoretical_K(sc) / 2.0)
    ok = full.passed and not half.passed

    rng = np.random.default_rng(SEED)
    eps = 1e-6
    for _ in range(20):
        r = rng.uniform(0.05, 0.4)
        d = rng.normal(size=2)
        y = r * d / np.linalg.norm(d)
        _, grad, _ = barrier_phi(np.zeros(2), 2.0, 0.5, y)
        for a in range(2):
            dy = np.zeros(2)
            dy[a] = eps
            vp = barrier_phi(np.zeros(2), 2.0, 0.5, y + dy)[0]
            vm = barrier_phi(np.zeros(2), 2.0, 0.5, y - dy)[0]
            fd = (vp - vm) / (2 * eps)
            ok &= abs(fd - grad[a]) <= 1e-6 * max(1.0, abs(grad[a]))
    report(6, "barrier certified at K, refuted at K/2, gradient verified", ok)


def test_acceptance_7_two_phase_reference_run():
    t0 = time.time()
    g = Grid([-1.0], [1.0], [256])
    problem = TwoPhaseProblem(
        grid=g, A=WeightedTrace(np.eye(1), 1),
        ham=PowerHamiltonian(0.5, 2.0, 3.0, dim=1),
        lambda_plus=2.0, lambda_minus=1.0,
        g=GridFunction.constant(g, 0.25), theta=1.0, max_outer=80,
    )
    with warnings.catch_warnings():
        # late stages have eps below the grid spacing by design
        warnings.simplefilter("ignore", UserWarning)
        u, trace = epsilon_continuation(problem)
    elapsed = time.time() - t0

    inner_ok = all(s["inner_converged"] and s["converged"] for s in trace)
    deltas = [s["delta_to_previous"] for s in trace[1:]]
    mono = all(b <= a for a, b in zip(deltas, deltas[1:]))
    band = residual_band_check(problem, u)
    fb = extract_phases(u).free_boundary_cells
    print(f"  stages={len(trace)} deltas={['%.2e' % d for d in deltas]} "
          f"band margin {band.worst_margin:.3g} <= {band.tolerance:.3g}, "
          f"{len(fb)} free-boundary cells, {elapsed:.0f}s")
    report(7, "two-phase reference pipeline",
           inner_ok and mono and band.passed and len(fb) > 0 and elapsed < 300.0)


def test_acceptance_8_degenerate_and_invariance_sweeps():
    # equal-lambda run finishes every stage in one outer iteration
    g = Grid([-1.0], [1.0], [64])
    problem = TwoPhaseProblem(
        grid=g, A=WeightedTrace(np.eye(1), 1),
        ham=PowerHamiltonian(0.5, 2.0, 3.0, dim=1),
        lambda_plus=1.5, lambda_minus=1.5,
        g=GridFunction.constant(g, 0.25), eps_schedule=(0.2, 0.1, 0.05),
    )
    _, trace = epsilon_continuation(problem)
    ok = all(s["outer_iters"] == 1 for s in trace)

    # constant-shift equivariance for zero_order = 0 and x-free H
    ham = PowerHamiltonian(1.0, 0.0, 3.0, dim=1)
    f = GridFunction.constant(g, 2.0)
    gb = GridFunction.from_callable(g, lambda pts: 0.3 * pts[..., 0])
    p1 = DiscreteProblem(grid=g, op=NegativeTrace(1), ham=ham, f=f, g=gb)
    p2 = DiscreteProblem(grid=g, op=NegativeTrace(1), ham=ham, f=f, g=gb + 7.0)
    u1 = solve_dirichlet(p1).u
    u2 = solve_dirichlet(p2).u
    shift_err = np.max(np.abs(u2.values - u1.values - 7.0))
    ok &= shift_err <= 1e-9

    # comparison check on a constructed sub/supersolution pair
    zero = GridFunction.constant(g, 0.0)
    pc = DiscreteProblem(grid=g, op=NegativeTrace(1), ham=ham, f=f, g=zero,
                         zero_order=1.0)
    rep = comparison_check(pc, GridFunction.constant(g, 0.0),
                           GridFunction.constant(g, 2.0))
    ok &= rep.passed
    report(8, "degenerate-case and invariance sweeps", ok)


def test_acceptance_9_determinism(tmp_path):
    runs = [
        (["verify", str(CONFIG_DIR / "verify_builtin.json")],
         ["verify_report.json"]),
        (["solve", str(CONFIG_DIR / "manufactured1d.json"), "--grid-n", "64"],
         ["solution.csv", "residual_history.csv", "summary.json"]),
    ]
    ok = True
    for args, files in runs:
        out_a = tmp_path / (args[0] + "_a")
        out_b = tmp_path / (args[0] + "_b")
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        for name in files:
            same = filecmp.cmp(out_a / name, out_b / name, shallow=False)
            ok &= same
    report(9, "byte-identical outputs across repeated runs", ok)
