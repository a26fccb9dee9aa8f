"""Problem abstraction for the outer search: evaluate a candidate alpha
into (feasibility, objectives, design parameters) through the reduced
form, where the matrix variables are delegated to the eigenvalue-bound
solver. Plus Pareto utilities and a brute-force grid oracle."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .lmi import EPS_FEAS_DEFAULT, ConstraintSystem, EvpResult, Status, is_strictly_feasible


@dataclass(frozen=True)
class Momip:
    """min f(alpha) over alpha in [lo, hi] subject to the built system
    being strictly feasible in the matrix variables."""

    m: int
    n_obj: int
    lo: np.ndarray
    hi: np.ndarray
    build: Callable[[np.ndarray], ConstraintSystem]
    objective: Callable[[np.ndarray, EvpResult], np.ndarray]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != (self.m,) or hi.shape != (self.m,):
            raise ValueError("bounds must match the alpha dimension")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("need lo < hi componentwise")


@dataclass(frozen=True)
class CandidateEvaluation:
    alpha: np.ndarray
    feasible: bool
    lambda_star: float
    status: Optional[Status]
    f: Optional[np.ndarray] = None
    x_star: Optional[np.ndarray] = None
    reason: Optional[str] = None


def evaluate_candidate(p: Momip, alpha, eps_feas: float = EPS_FEAS_DEFAULT) -> CandidateEvaluation:
    """Build the system at alpha and test strict feasibility; objectives
    are computed only on feasible candidates. Out-of-bounds alpha is a
    programming error, a malformed alpha inside the box (builder raise)
    is an infeasible outcome with the reason attached."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (p.m,):
        raise ValueError(f"alpha has shape {alpha.shape}, expected ({p.m},)")
    if np.any(alpha < p.lo) or np.any(alpha > p.hi):
        raise ValueError(f"alpha {alpha.tolist()} outside bounds")
    try:
        system = p.build(alpha)
    except ValueError as e:
        return CandidateEvaluation(alpha=alpha, feasible=False, lambda_star=float("inf"),
                                   status=None, reason=f"builder: {e}")
    ok, res = is_strictly_feasible(system, eps_feas)
    if not ok:
        return CandidateEvaluation(alpha=alpha, feasible=False, lambda_star=res.lambda_star,
                                   status=res.status)
    f = np.asarray(p.objective(alpha, res), dtype=np.float64)
    return CandidateEvaluation(alpha=alpha, feasible=True, lambda_star=res.lambda_star,
                               status=res.status, f=f, x_star=res.x_star)


class Dominance(enum.Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated-by"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


def dominates(a, b) -> Dominance:
    """Standard Pareto relation: a dominates b when a <= b everywhere and
    a < b somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("objective vectors differ in length")
    if np.array_equal(a, b):
        return Dominance.EQUAL
    if np.all(a <= b):
        return Dominance.DOMINATES
    if np.all(b <= a):
        return Dominance.DOMINATED_BY
    return Dominance.INCOMPARABLE


def brute_force_pareto(p: Momip, grid_counts, eps_feas: float = EPS_FEAS_DEFAULT):
    """Evaluate every point of a rectangular grid over the bounds box and
    return the nondominated feasible subset, in grid order. Test oracle
    for the equivalence of the reduced and joint problem forms."""
    counts = [int(c) for c in grid_counts]
    if len(counts) != p.m or any(c < 2 for c in counts):
        raise ValueError("need a per-dimension grid count >= 2")
    axes = [np.linspace(p.lo[j], p.hi[j], counts[j]) for j in range(p.m)]
    feasible = []
    for point in itertools.product(*axes):
        ev = evaluate_candidate(p, np.array(point), eps_feas)
        if ev.feasible:
            feasible.append(ev)
    out = []
    for i, ev in enumerate(feasible):
        dominated = False
        for j, other in enumerate(feasible):
            if j != i and dominates(other.f, ev.f) is Dominance.DOMINATES:
                dominated = True
                break
        if not dominated:
            out.append(ev)
    return out
