"""Dense symmetric linear algebra: eigenvalues, Cholesky, determinants,
SPD solves, block assembly. Everything routes through the kernel backend
(compiled when available, pure Python otherwise)."""

from __future__ import annotations

import numpy as np

from . import _kernels


class NotPositiveDefinite(Exception):
    """A matrix required to be positive definite has a pivot <= 0."""


class NumericalFailure(Exception):
    """An iterative routine failed to converge or lost accuracy."""


class SymmetricMatrix:
    """Dense symmetric matrix with exact entrywise symmetry.

    The constructor mirrors the upper triangle into the lower one, so
    entries[i][j] == entries[j][i] holds exactly whatever the input was.
    """

    __slots__ = ("a",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        iu = np.triu_indices(arr.shape[0], k=1)
        arr[iu[1], iu[0]] = arr[iu]
        arr.flags.writeable = False
        self.a = arr

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymmetricMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymmetricMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def diagonal(cls, values) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    def __repr__(self) -> str:
        return f"SymmetricMatrix({self.a.tolist()!r})"


def _as_sym(s) -> SymmetricMatrix:
    return s if isinstance(s, SymmetricMatrix) else SymmetricMatrix(s)


def sym_eigenvalues(s) -> np.ndarray:
    """All eigenvalues, ascending, via cyclic Jacobi rotations."""
    s = _as_sym(s)
    ok, eigs = _kernels.jacobi_eigenvalues(s.a.ravel(), s.n)
    if not ok:
        raise NumericalFailure("Jacobi sweep cap reached without convergence")
    return np.asarray(eigs, dtype=np.float64)


def max_eigenvalue(s) -> float:
    return float(sym_eigenvalues(s)[-1])


def cholesky(s) -> np.ndarray:
    """Lower-triangular L with L L^T = S. Raises NotPositiveDefinite on
    a nonpositive pivot; that outcome is a legitimate predicate, not an
    error in the input."""
    s = _as_sym(s)
    ok, l = _kernels.cholesky_lower(s.a.ravel(), s.n)
    if not ok:
        raise NotPositiveDefinite("nonpositive pivot during factorization")
    return np.asarray(l, dtype=np.float64).reshape(s.n, s.n)


def is_positive_definite(s) -> bool:
    s = _as_sym(s)
    ok, _ = _kernels.cholesky_lower(s.a.ravel(), s.n)
    return bool(ok)


def determinant(s) -> float:
    """det(S); product of squared Cholesky pivots when S is SPD, product
    of eigenvalues otherwise."""
    s = _as_sym(s)
    ok, l = _kernels.cholesky_lower(s.a.ravel(), s.n)
    if ok:
        piv = np.asarray(l, dtype=np.float64).reshape(s.n, s.n).diagonal()
        out = 1.0
        for p in piv:
            out *= p * p
        return out
    out = 1.0
    for e in sym_eigenvalues(s):
        out *= e
    return float(out)


def solve_spd(s, b) -> np.ndarray:
    """Solve S X = B for SPD S (one iterative-refinement pass built in)."""
    s = _as_sym(s)
    barr = np.asarray(b, dtype=np.float64)
    vec = barr.ndim == 1
    bmat = barr.reshape(s.n, -1) if vec else barr
    if bmat.shape[0] != s.n:
        raise ValueError(f"rhs has {bmat.shape[0]} rows, expected {s.n}")
    ncols = bmat.shape[1]
    ok, x = _kernels.spd_solve(s.a.ravel(), s.n, np.ascontiguousarray(bmat).ravel(), ncols)
    if not ok:
        raise NotPositiveDefinite("nonpositive pivot during factorization")
    x = np.asarray(x, dtype=np.float64).reshape(s.n, ncols)
    resid = np.max(np.abs(s.a @ x - bmat))
    bound = 1e-9 * max(1e-300, np.max(np.abs(bmat)))
    if resid > bound:
        raise NumericalFailure(f"solve residual {resid:.3e} exceeds {bound:.3e}")
    return x.ravel() if vec else x


def block_diag(blocks) -> SymmetricMatrix:
    """Block-diagonal concatenation; the eigenvalue multiset of the result
    is the union of the blocks' multisets."""
    blocks = [_as_sym(b) for b in blocks]
    if not blocks:
        raise ValueError("need at least one block")
    total = sum(b.n for b in blocks)
    out = np.zeros((total, total))
    at = 0
    for b in blocks:
        out[at:at + b.n, at:at + b.n] = b.a
        at += b.n
    return SymmetricMatrix(out)
