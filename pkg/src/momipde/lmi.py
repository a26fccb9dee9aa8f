"""Affine symmetric matrix functions of a decision vector and the
eigenvalue-bound problem over them: minimize lam subject to
G_k(x) < lam I for every block k.

The solver follows a log-det barrier central path: lam is an explicit
Newton variable next to x, the barrier weight grows by a factor of 10
until the duality-gap surrogate m_total/t falls below the tolerance,
and each centering runs damped Newton steps with feasibility
backtracking. Deterministic by construction: no randomness, fixed
iteration schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .matrixcore import SymmetricMatrix

TOL_EVP_REL = 1e-6
EPS_FEAS_DEFAULT = 1e-7
BARRIER_T0 = 1.0
BARRIER_GROWTH = 10.0
MAX_OUTER = 200
MAX_INNER = 50


class Status(enum.Enum):
    CONVERGED = "converged"
    ITERATION_CAP = "iteration-cap"
    NUMERICAL_FAILURE = "numerical-failure"


_STATUS_FROM_CODE = {
    _kernels.STATUS_CONVERGED: Status.CONVERGED,
    _kernels.STATUS_ITERATION_CAP: Status.ITERATION_CAP,
    _kernels.STATUS_NUMERICAL_FAILURE: Status.NUMERICAL_FAILURE,
}


@dataclass(frozen=True)
class AffineBlock:
    """One constraint block: evaluate(x) = base + sum_j x_j coeffs[j] < 0."""

    n: int
    base: SymmetricMatrix
    coeffs: Mapping[int, SymmetricMatrix]

    def __post_init__(self):
        if self.base.n != self.n:
            raise ValueError("base dimension mismatch")
        for j, c in self.coeffs.items():
            if j < 0:
                raise ValueError(f"negative coefficient index {j}")
            if c.n != self.n:
                raise ValueError(f"coefficient {j} dimension mismatch")


def evaluate(block: AffineBlock, x) -> SymmetricMatrix:
    """base + sum_j x_j coeffs[j]; exactly symmetric since the inputs are."""
    x = np.asarray(x, dtype=np.float64)
    out = block.base.a.copy()
    for j, c in block.coeffs.items():
        out += x[j] * c.a
    return SymmetricMatrix(out)


@dataclass(frozen=True)
class VarSpec:
    name: str
    kind: str  # "symmetric" or "rectangular"
    rows: int
    cols: int
    offset: int
    size: int


class VariableLayout:
    """Maps named matrix variables onto a flat decision vector.

    Symmetric n x n variables occupy n(n+1)/2 coordinates, row-major
    upper triangle; an off-diagonal coordinate carries both mirrored
    entries, so x_j multiplies (E_ab + E_ba) in any affine expression.
    Rectangular p x q variables occupy p*q coordinates, row-major.
    """

    def __init__(self, specs):
        out = []
        offset = 0
        seen = set()
        for item in specs:
            name, kind, rows, cols = item
            if name in seen:
                raise ValueError(f"duplicate variable {name!r}")
            seen.add(name)
            if kind == "symmetric":
                if rows != cols:
                    raise ValueError("symmetric variables must be square")
                size = rows * (rows + 1) // 2
            elif kind == "rectangular":
                size = rows * cols
            else:
                raise ValueError(f"unknown variable kind {kind!r}")
            out.append(VarSpec(name, kind, rows, cols, offset, size))
            offset += size
        self.specs = tuple(out)
        self.d = offset
        self._by_name = {s.name: s for s in out}

    @classmethod
    def of(cls, **shapes) -> "VariableLayout":
        """Layout from name=shape pairs; an int n means symmetric(n),
        a (p, q) tuple means rectangular(p, q). Order follows kwargs."""
        specs = []
        for name, shape in shapes.items():
            if isinstance(shape, int):
                specs.append((name, "symmetric", shape, shape))
            else:
                p, q = shape
                specs.append((name, "rectangular", p, q))
        return cls(specs)

    def spec(self, name: str) -> VarSpec:
        return self._by_name[name]

    def names(self):
        return [s.name for s in self.specs]

    def materialize(self, x) -> dict[str, np.ndarray]:
        """All variable matrices reconstructed from a decision vector."""
        return {s.name: extract(self, x, s.name) for s in self.specs}


def sym_coord(n: int, a: int, b: int) -> int:
    """Packed index of entry (a, b), a <= b, in the row-major upper triangle."""
    if a > b:
        a, b = b, a
    return a * n - a * (a - 1) // 2 + (b - a)


def extract(layout: VariableLayout, x, name: str) -> np.ndarray:
    """The named matrix rebuilt from its packed coordinates."""
    s = layout.spec(name)
    x = np.asarray(x, dtype=np.float64)
    coords = x[s.offset:s.offset + s.size]
    if s.kind == "rectangular":
        return coords.reshape(s.rows, s.cols).copy()
    n = s.rows
    out = np.empty((n, n))
    k = 0
    for a in range(n):
        for b in range(a, n):
            out[a, b] = coords[k]
            out[b, a] = coords[k]
            k += 1
    return out


def pack(layout: VariableLayout, values: Mapping[str, np.ndarray]) -> np.ndarray:
    """Inverse of materialize: flatten named matrices into a decision vector."""
    x = np.zeros(layout.d)
    for s in layout.specs:
        v = np.asarray(values[s.name], dtype=np.float64)
        if s.kind == "rectangular":
            x[s.offset:s.offset + s.size] = v.ravel()
        else:
            k = s.offset
            for a in range(s.rows):
                for b in range(a, s.rows):
                    x[k] = v[a, b]
                    k += 1
    return x


@dataclass(frozen=True)
class ConstraintSystem:
    """All blocks required negative definite, over a shared decision vector."""

    blocks: tuple[AffineBlock, ...]
    layout: VariableLayout
    d: int

    def __post_init__(self):
        if self.d != self.layout.d:
            raise ValueError("decision dimension disagrees with layout")
        for blk in self.blocks:
            for j in blk.coeffs:
                if j >= self.d:
                    raise ValueError(f"coefficient index {j} outside dimension {self.d}")


@dataclass(frozen=True)
class EvpResult:
    lambda_star: float
    x_star: np.ndarray
    status: Status
    iterations: int


def _pack_system(system: ConstraintSystem):
    dims = np.array([b.n for b in system.blocks], dtype=np.int32)
    bases = np.concatenate([b.base.a.ravel() for b in system.blocks])
    ncoeffs = np.array([len(b.coeffs) for b in system.blocks], dtype=np.int32)
    cidx = []
    cmats = []
    for b in system.blocks:
        for j in sorted(b.coeffs):
            cidx.append(j)
            cmats.append(b.coeffs[j].a.ravel())
    cidx = np.array(cidx, dtype=np.int32)
    cmats = np.concatenate(cmats) if cmats else np.zeros(0)
    return dims, bases, ncoeffs, cidx, cmats


def solve_evp(system: ConstraintSystem) -> EvpResult:
    """Minimize lam subject to every block < lam I.

    lambda_star is the certificate value max_k max_eig(G_k(x_star)): an
    achieved bound, within TOL_EVP_REL * max(1, |lambda_star|) of the
    optimum on convergence. Failure modes arrive as result statuses.
    """
    if not system.blocks:
        raise ValueError("system has no blocks")
    dims, bases, ncoeffs, cidx, cmats = _pack_system(system)
    code, lam, x, iters = _kernels.evp_solve(
        dims, bases, ncoeffs, cidx, cmats, system.d,
        BARRIER_T0, BARRIER_GROWTH, TOL_EVP_REL, MAX_OUTER, MAX_INNER)
    return EvpResult(
        lambda_star=float(lam),
        x_star=np.asarray(x, dtype=np.float64),
        status=_STATUS_FROM_CODE[int(code)],
        iterations=int(iters),
    )


def is_strictly_feasible(system: ConstraintSystem,
                         eps_feas: float = EPS_FEAS_DEFAULT) -> tuple[bool, EvpResult]:
    """A system is strictly feasible when the eigenvalue bound clears the
    margin: converged and lambda_star <= -eps_feas. Solver failures count
    as infeasible, with the status attached on the returned result."""
    if eps_feas <= 0.0:
        raise ValueError("eps_feas must be positive")
    res = solve_evp(system)
    ok = res.status is Status.CONVERGED and res.lambda_star <= -eps_feas
    return ok, res
