"""Pass/fail reports emitted by the sampling-based structural verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one sampled structural check.

    ``worst_margin`` is the largest violation observed (negative or tiny
    values mean the inequality held everywhere); ``witness`` is the sampled
    input achieving it.  ``passed`` is equivalent to
    ``worst_margin <= tolerance``.
    """

    name: str
    passed: bool
    worst_margin: float
    tolerance: float
    witness: Any
    n_samples: int
    seed: int
    note: str = ""

    def __post_init__(self) -> None:
        if self.passed != (self.worst_margin <= self.tolerance):
            raise ValueError("passed flag inconsistent with worst_margin/tolerance")

    def to_dict(self) -> dict:
        w = self.witness
        if hasattr(w, "tolist"):
            w = w.tolist()
        elif isinstance(w, tuple):
            w = [x.tolist() if hasattr(x, "tolist") else x for x in w]
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "witness": w,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "note": self.note,
        }


@dataclass(frozen=True)
class EquivalenceReport:
    """Joint verdict for the Lipschitz/monotonicity/one-sided-bound equivalence.

    Passes when the one-sided bound check agrees with the conjunction of the
    Lipschitz and monotonicity checks on the sampled sets.
    """

    passed: bool
    a1: CheckReport
    lipschitz: CheckReport
    monotone: CheckReport

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "a1": self.a1.to_dict(),
            "lipschitz": self.lipschitz.to_dict(),
            "monotone": self.monotone.to_dict(),
        }


def make_report(name, margins, witnesses, tolerance, n_samples, seed, note="") -> CheckReport:
    """Build a CheckReport from per-sample violation margins."""
    import numpy as np

    margins = np.asarray(margins, dtype=float)
    idx = int(np.argmax(margins))
    worst = float(margins[idx])
    return CheckReport(
        name=name,
        passed=worst <= tolerance,
        worst_margin=worst,
        tolerance=tolerance,
        witness=witnesses[idx] if witnesses is not None else None,
        n_samples=n_samples,
        seed=seed,
        note=note,
    )
