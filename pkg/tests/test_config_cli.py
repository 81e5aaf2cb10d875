import json
from pathlib import Path

import numpy as np
import pytest

from hjlab.cli import main
from hjlab.config import ConfigError, parse_config
from hjlab.grid import load_grid_function

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def base_problem(n=64):
    return {
        "domain": {"lower": [-1.0], "upper": [1.0], "n": [n]},
        "operator": {"kind": "negative_trace"},
        "hamiltonian": {"kind": "power", "a": 1.0, "V": 0.0, "m": 3.0},
        "f": 1.0,
        "g": 0.0,
    }


# ---------------------------------------------------------------- parsing


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        parse_config({"problem": base_problem(), "extra": 1})
    with pytest.raises(ConfigError):
        parse_config({"problem": {**base_problem(), "typo": 1}})
    with pytest.raises(ConfigError):
        parse_config({"solver": {"tolerance": 1e-8}})


def test_expression_fields():
    doc = {"problem": {**base_problem(),
                       "f": {"kind": "expression", "expr": "sin(pi*x) + 1"}}}
    cfg = parse_config(doc)
    x = cfg.grid.axis_nodes(0)
    assert np.allclose(cfg.f.values, np.sin(np.pi * x) + 1)


def test_expression_errors():
    with pytest.raises(ConfigError):
        parse_config({"problem": {**base_problem(),
                                  "f": {"kind": "expression", "expr": "sin("}}})
    with pytest.raises(ConfigError):
        parse_config({"problem": {**base_problem(),
                                  "f": {"kind": "expression", "expr": "open('x')"}}})


def test_operator_kinds():
    for kind, extra in [("negative_trace", {}),
                        ("pucci_minus", {"lam": 1.0, "Lam": 2.0}),
                        ("pucci_plus", {"lam": 1.0, "Lam": 2.0}),
                        ("weighted_trace", {"matrix": [[1.0]]})]:
        doc = {"problem": {**base_problem(), "operator": {"kind": kind, **extra}}}
        assert parse_config(doc).operator is not None
    with pytest.raises(ConfigError):
        parse_config({"problem": {**base_problem(), "operator": {"kind": "nope"}}})


def test_verify_section_validation():
    with pytest.raises(ConfigError):
        parse_config({"verify": {"n_samples": 0}})


def test_config_file_errors(tmp_path):
    assert main(["verify", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", str(bad)]) == 2


# ---------------------------------------------------------------- solve


def test_solve_zero_problem(tmp_path):
    cfg = write_config(tmp_path, {"problem": base_problem(),
                                  "output": {"directory": str(tmp_path / "out")}})
    assert main(["solve", cfg]) == 0
    u = load_grid_function(tmp_path / "out" / "solution.csv")
    assert u.sup_norm() <= 1e-8  # f = H(0) so u = 0 exactly
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["converged"] is True
    assert (tmp_path / "out" / "residual_history.csv").exists()


def test_solve_shipped_zero_config(tmp_path):
    assert main(["solve", str(CONFIG_DIR / "zero1d.json"),
                 "--out", str(tmp_path / "z")]) == 0


def test_solve_nonconvergence_exit_code(tmp_path):
    doc = {"problem": base_problem(),
           "solver": {"tol": 1e-30, "max_iters": 10},
           "output": {"directory": str(tmp_path / "out")}}
    # make the initial residual nonzero so 10 iterations cannot finish
    doc["problem"]["f"] = 2.0
    assert main(["solve", write_config(tmp_path, doc)]) == 3


def test_solve_grid_override(tmp_path):
    cfg = write_config(tmp_path, {"problem": base_problem(64),
                                  "output": {"directory": str(tmp_path / "out")}})
    assert main(["solve", cfg, "--grid-n", "32"]) == 0
    u = load_grid_function(tmp_path / "out" / "solution.csv")
    assert u.grid.n_cells == (32,)


# ---------------------------------------------------------------- verify


def test_verify_builtin_passes(tmp_path):
    assert main(["verify", str(CONFIG_DIR / "verify_builtin.json"),
                 "--out", str(tmp_path / "v")]) == 0
    rep = json.loads((tmp_path / "v" / "verify_report.json").read_text())
    assert rep["all_passed"] is True
    assert set(rep) >= {"a1", "homogeneity", "lemma_equivalence", "growth",
                        "x_continuity", "p_continuity"}


def test_verify_adversarial_bellman_fails(tmp_path):
    doc = {"problem": {
        "domain": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0], "n": [8, 8]},
        "operator": {"kind": "bellman", "c_f": 1.0,
                     "matrices": [[[1.0, 0.0], [0.0, 1.0]]]},
        "hamiltonian": {"kind": "power", "a": 1.0, "V": 0.0, "m": 3.0},
    }, "verify": {"n_samples": 2000, "seed": 42},
        "output": {"directory": str(tmp_path / "v")}}
    with pytest.warns(UserWarning):
        code = main(["verify", write_config(tmp_path, doc)])
    assert code == 1
    rep = json.loads((tmp_path / "v" / "verify_report.json").read_text())
    assert rep["a1"]["passed"] is False
    assert rep["a1"]["witness"] is not None


# ---------------------------------------------------------------- regularity


def test_regularity_on_synthetic_root(tmp_path):
    g_doc = {"problem": {**base_problem(256)},
             "regularity": {"margin": 0.1},
             "output": {"directory": str(tmp_path / "r")}}
    cfg = write_config(tmp_path, g_doc)
    # synthetic |x|^(1/2) solution file
    from hjlab.grid import Grid, GridFunction
    g = Grid([-1.0], [1.0], [256])
    u = GridFunction.from_callable(g, lambda pts: np.sqrt(np.abs(pts[..., 0])))
    sol = tmp_path / "sol.csv"
    u.to_csv(sol)
    assert main(["regularity", cfg, "--solution", str(sol)]) == 0
    rep = json.loads((tmp_path / "r" / "modulus_report.json").read_text())
    assert abs(rep["modulus"]["gamma_hat"] - 0.5) < 0.05
    assert rep["theoretical_K"] > 0
    assert rep["theoretical_L"] > 0
    assert rep["slack_ratio"] >= 0


def test_regularity_zero_solution(tmp_path):
    doc = {"problem": base_problem(64), "output": {"directory": str(tmp_path / "r")}}
    cfg = write_config(tmp_path, doc)
    from hjlab.grid import Grid, GridFunction
    g = Grid([-1.0], [1.0], [64])
    sol = tmp_path / "zero.csv"
    GridFunction.constant(g, 0.0).to_csv(sol)
    assert main(["regularity", cfg, "--solution", str(sol)]) == 0
    rep = json.loads((tmp_path / "r" / "modulus_report.json").read_text())
    assert rep["modulus"]["gamma_hat"] is None
    assert all(v == 0.0 for v in rep["seminorms"].values())


def test_regularity_missing_solution(tmp_path):
    cfg = write_config(tmp_path, {"problem": base_problem(64)})
    assert main(["regularity", cfg, "--solution", str(tmp_path / "nope.csv")]) == 2


# ---------------------------------------------------------------- two-phase


def two_phase_doc(tmp_path, **tp):
    return {
        "problem": {
            "domain": {"lower": [-1.0], "upper": [1.0], "n": [32]},
            "hamiltonian": {"kind": "power", "a": 0.5, "V": 2.0, "m": 3.0},
            "g": 0.25,
        },
        "two_phase": {"lambda_plus": 2.0, "lambda_minus": 1.0, "theta": 1.0,
                      "eps_schedule": [0.2, 0.1], **tp},
        "output": {"directory": str(tmp_path / "tp")},
    }


def test_two_phase_equal_lambdas(tmp_path):
    doc = two_phase_doc(tmp_path, lambda_plus=1.5, lambda_minus=1.5)
    assert main(["two-phase", write_config(tmp_path, doc)]) == 0
    trace = json.loads((tmp_path / "tp" / "trace.json").read_text())
    assert all(s["outer_iters"] == 1 for s in trace["stages"])


def test_two_phase_outputs_and_warning(tmp_path):
    doc = two_phase_doc(tmp_path)
    doc["problem"]["g"] = 3.0  # violates 0 < min g < 2 lambda_-
    with pytest.warns(UserWarning, match="existence"):
        code = main(["two-phase", write_config(tmp_path, doc)])
    assert code in (0, 1, 3)  # the warning does not force a failure by itself
    assert (tmp_path / "tp" / "trace.json").exists()


def test_two_phase_nonconvergence_exit(tmp_path):
    doc = two_phase_doc(tmp_path, max_outer=1)
    assert main(["two-phase", write_config(tmp_path, doc)]) == 3
    trace = json.loads((tmp_path / "tp" / "trace.json").read_text())
    assert trace["failed_eps"] == 0.2
