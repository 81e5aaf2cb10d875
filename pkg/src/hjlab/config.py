"""JSON run configuration: parsing, validation, and object construction.

A run is described by a single JSON document.  Unknown keys are rejected
anywhere in the tree so that typos fail loudly instead of silently falling
back to defaults.  Scalar fields ``f``, ``g`` and the coefficients of the
power Hamiltonian accept either a constant or an expression in the node
coordinates (variables ``x`` and, in 2D, ``y``; numpy math functions and
``pi`` are available).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction
from .hamiltonians import Hamiltonian, PowerHamiltonian
from .operators import (
    Bellman,
    EllipticOperator,
    NegativeTrace,
    PucciMinus,
    PucciPlus,
    WeightedTrace,
)
from .solver import SolveParams
from .twophase import TwoPhaseProblem, default_eps_schedule

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_EXPR_NAMES = {
    "pi": np.pi,
    "e": np.e,
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt,
    "abs": np.abs, "sign": np.sign,
    "minimum": np.minimum, "maximum": np.maximum, "where": np.where,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
}


def _check_keys(section: dict, allowed: set, path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _compile_expression(expr: str, dim: int, path: str):
    try:
        code = compile(expr, f"<config:{path}>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{path}: bad expression: {exc}") from exc

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        names = dict(_EXPR_NAMES)
        names["x"] = pts[..., 0]
        if dim > 1:
            names["y"] = pts[..., 1]
        try:
            out = eval(code, {"__builtins__": {}}, names)  # noqa: S307 - sandboxed names
        except Exception as exc:
            raise ConfigError(f"{path}: expression evaluation failed: {exc}") from exc
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1])

    return fn


def _scalar_field(spec, dim: int, path: str):
    """A constant or {"kind": "constant"|"expression", ...} scalar field."""
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda pts: np.full(np.asarray(pts).shape[:-1], c)
    _check_keys(spec, {"kind", "value", "expr"}, path)
    kind = spec.get("kind")
    if kind == "constant":
        c = float(spec["value"])
        return lambda pts: np.full(np.asarray(pts).shape[:-1], c)
    if kind == "expression":
        if "expr" not in spec:
            raise ConfigError(f"{path}: expression spec needs 'expr'")
        return _compile_expression(spec["expr"], dim, path)
    raise ConfigError(f"{path}: unknown scalar field kind {kind!r}")


def _build_grid(section: dict) -> Grid:
    _check_keys(section, {"lower", "upper", "n"}, "problem.domain")
    try:
        return Grid(section["lower"], section["upper"], section["n"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"problem.domain: {exc}") from exc


def _build_operator(section: dict, dim: int) -> EllipticOperator:
    _check_keys(section, {"kind", "c_f", "matrices", "matrix", "lam", "Lam"},
                "problem.operator")
    kind = section.get("kind")
    try:
        if kind == "negative_trace":
            return NegativeTrace(dim, c_f=section.get("c_f"))
        if kind == "bellman":
            return Bellman(section["matrices"], c_f=float(section["c_f"]))
        if kind == "pucci_minus":
            return PucciMinus(float(section["lam"]), float(section["Lam"]), dim)
        if kind == "pucci_plus":
            return PucciPlus(float(section["lam"]), float(section["Lam"]), dim)
        if kind == "weighted_trace":
            return WeightedTrace(np.asarray(section["matrix"], dtype=float), dim,
                                 c_f=section.get("c_f"))
    except ConfigError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"problem.operator: {exc}") from exc
    raise ConfigError(f"problem.operator: unknown kind {kind!r}")


def _build_hamiltonian(section: dict, dim: int, grid: Grid | None) -> Hamiltonian:
    allowed = {"kind", "a", "V", "m", "c_star", "c_upper", "lip_a", "lip_v",
               "c1", "c2", "c3"}
    _check_keys(section, allowed, "problem.hamiltonian")
    if section.get("kind", "power") != "power":
        raise ConfigError(f"problem.hamiltonian: unknown kind {section.get('kind')!r}")
    if "m" not in section:
        raise ConfigError("problem.hamiltonian: missing growth exponent 'm'")

    def coeff(name, default):
        spec = section.get(name, default)
        if isinstance(spec, (int, float)):
            return float(spec)
        return _scalar_field(spec, dim, f"problem.hamiltonian.{name}")

    domain = (grid.lower, grid.upper) if grid is not None else None
    try:
        return PowerHamiltonian(
            coeff("a", 1.0), coeff("V", 0.0), float(section["m"]), dim=dim,
            c_star=section.get("c_star"), c_upper=section.get("c_upper"),
            lip_a=float(section.get("lip_a", 0.0)), lip_v=float(section.get("lip_v", 0.0)),
            c1=section.get("c1"), c2=section.get("c2"), c3=section.get("c3"),
            domain=domain,
        )
    except ValueError as exc:
        raise ConfigError(f"problem.hamiltonian: {exc}") from exc


def _build_solver(section: dict) -> SolveParams:
    allowed = {"tol", "max_iters", "pseudo_dt", "damping", "log_every"}
    _check_keys(section, allowed, "solver")
    try:
        return SolveParams(**{k: (int(v) if k in ("max_iters", "log_every") else float(v))
                              for k, v in section.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"solver: {exc}") from exc


@dataclass
class RunConfig:
    raw: dict
    grid: Grid | None = None
    operator: EllipticOperator | None = None
    hamiltonian: Hamiltonian | None = None
    f: GridFunction | None = None
    g: GridFunction | None = None
    solver: SolveParams = field(default_factory=SolveParams)
    two_phase: dict | None = None
    regularity: dict = field(default_factory=dict)
    verify: dict = field(default_factory=lambda: {"n_samples": 10_000, "seed": 42})
    output_dir: str = "out"

    def require(self, *names: str) -> None:
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"configuration is missing the data for '{n}'")

    def build_two_phase_problem(self) -> TwoPhaseProblem:
        self.require("grid", "hamiltonian", "g", "two_phase")
        tp = self.two_phase
        dim = self.grid.dim
        if "A" in tp:
            A = WeightedTrace(np.asarray(tp["A"], dtype=float), dim)
        else:
            A = WeightedTrace(np.eye(dim), dim)
        schedule = tuple(tp["eps_schedule"]) if "eps_schedule" in tp else default_eps_schedule()
        try:
            return TwoPhaseProblem(
                grid=self.grid, A=A, ham=self.hamiltonian,
                lambda_plus=float(tp["lambda_plus"]),
                lambda_minus=float(tp["lambda_minus"]),
                g=self.g, eps_schedule=schedule,
                theta=float(tp.get("theta", 0.5)),
                tol_fp=float(tp.get("tol_fp", 1e-6)),
                max_outer=int(tp.get("max_outer", 50)),
                solver=self.solver,
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"two_phase: {exc}") from exc


def parse_config(doc: dict) -> RunConfig:
    top = {"problem", "solver", "two_phase", "regularity", "verify", "output"}
    _check_keys(doc, top, "<root>")
    cfg = RunConfig(raw=doc)

    if "problem" in doc:
        prob = doc["problem"]
        _check_keys(prob, {"domain", "operator", "hamiltonian", "f", "g"}, "problem")
        if "domain" in prob:
            cfg.grid = _build_grid(prob["domain"])
        dim = cfg.grid.dim if cfg.grid is not None else 1
        if "operator" in prob:
            cfg.operator = _build_operator(prob["operator"], dim)
        if "hamiltonian" in prob:
            cfg.hamiltonian = _build_hamiltonian(prob["hamiltonian"], dim, cfg.grid)
        if "f" in prob:
            if cfg.grid is None:
                raise ConfigError("problem.f needs problem.domain")
            cfg.f = GridFunction.from_callable(cfg.grid, _scalar_field(prob["f"], dim, "problem.f"))
        if "g" in prob:
            if cfg.grid is None:
                raise ConfigError("problem.g needs problem.domain")
            cfg.g = GridFunction.from_callable(cfg.grid, _scalar_field(prob["g"], dim, "problem.g"))

    if "solver" in doc:
        cfg.solver = _build_solver(doc["solver"])

    if "two_phase" in doc:
        _check_keys(doc["two_phase"],
                    {"lambda_plus", "lambda_minus", "eps_schedule", "theta",
                     "tol_fp", "max_outer", "A"}, "two_phase")
        cfg.two_phase = doc["two_phase"]

    if "regularity" in doc:
        _check_keys(doc["regularity"], {"margin", "c_dim", "gamma"}, "regularity")
        cfg.regularity = doc["regularity"]

    if "verify" in doc:
        _check_keys(doc["verify"], {"n_samples", "seed"}, "verify")
        cfg.verify = {"n_samples": int(doc["verify"].get("n_samples", 10_000)),
                      "seed": int(doc["verify"].get("seed", 42))}
        if cfg.verify["n_samples"] < 1:
            raise ConfigError("verify.n_samples must be >= 1")

    if "output" in doc:
        _check_keys(doc["output"], {"directory"}, "output")
        cfg.output_dir = str(doc["output"].get("directory", "out"))

    return cfg


def load_config(path, grid_n: int | None = None, seed: int | None = None,
                out: str | None = None) -> RunConfig:
    """Load and validate a config file, applying CLI overrides."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if grid_n is not None:
        dom = doc.setdefault("problem", {}).setdefault("domain", {})
        dom["n"] = [int(grid_n)] * len(dom.get("n", [0]))
    if seed is not None:
        doc.setdefault("verify", {})["seed"] = int(seed)
    cfg = parse_config(doc)
    if out is not None:
        cfg.output_dir = out
    return cfg
