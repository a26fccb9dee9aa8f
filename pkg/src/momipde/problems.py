"""The two built-in design problems, expressed as constraint-system
builders over named matrix variables, plus controller-gain recovery and
JSON plant loading.

example1: state feedback for an uncertain fuzzy-interpolated plant.
alpha = [gamma, rho, delta] where gamma is the disturbance-attenuation
level, 1/rho the norm bound tolerated on the uncertainty, and delta an
auxiliary scaling. Objectives [gamma, rho], optionally extended with
1/det(Z*) to pull the gain magnitudes down.

example2: single linear plant driven from a fixed initial state with
input-norm bound u_bar and output bound y_bar; alpha = [u_bar, y_bar]
and f(alpha) = alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lmi import AffineBlock, ConstraintSystem, SymmetricMatrix, VariableLayout, extract
from .matrixcore import determinant, solve_spd

BOX_EXAMPLE1 = (np.array([0.5, 0.5, 0.01]), np.array([5.0, 5.0, 5.0]))
BOX_EXAMPLE2 = (np.array([0.5, 0.5]), np.array([8.0, 8.0]))


@dataclass(frozen=True)
class RobustFuzzyPlant:
    """Rule-interpolated plant with per-rule structured uncertainty.

    Per rule i: state matrix a[i] (n x n), disturbance input b1[i]
    (n x n_w), control input b2[i] (n x n_u), output c[i] (n_y x n) and
    feedthrough d[i] (n_y x n_u), uncertainty structure h[i] (n x n).
    """

    a: tuple
    b1: tuple
    b2: tuple
    c: tuple
    d: tuple
    h: tuple

    def __post_init__(self):
        arrs = {k: tuple(np.asarray(m, dtype=np.float64) for m in getattr(self, k))
                for k in ("a", "b1", "b2", "c", "d", "h")}
        for k, v in arrs.items():
            object.__setattr__(self, k, v)
        nr = len(self.a)
        if nr < 1 or any(len(v) != nr for v in arrs.values()):
            raise ValueError("all matrix families need one entry per rule")
        n = self.a[0].shape[0]
        for i in range(nr):
            if self.a[i].shape != (n, n) or self.h[i].shape != (n, n):
                raise ValueError("state and uncertainty matrices must be n x n")
            if self.b1[i].shape[0] != n or self.b2[i].shape[0] != n:
                raise ValueError("input matrices must have n rows")
            if self.c[i].shape != (self.c[0].shape[0], n):
                raise ValueError("output matrices must agree in shape")
            if self.d[i].shape != (self.c[0].shape[0], self.b2[0].shape[1]):
                raise ValueError("feedthrough must be n_y x n_u")

    @property
    def n_rules(self) -> int:
        return len(self.a)

    @property
    def n(self) -> int:
        return self.a[0].shape[0]

    @property
    def n_w(self) -> int:
        return self.b1[0].shape[1]

    @property
    def n_u(self) -> int:
        return self.b2[0].shape[1]

    @property
    def n_y(self) -> int:
        return self.c[0].shape[0]


@dataclass(frozen=True)
class BiboPlant:
    """Linear plant x' = A x + B u, y = C x, started at x0."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        for k in ("a", "b", "c", "x0"):
            object.__setattr__(self, k, np.asarray(getattr(self, k), dtype=np.float64))
        n = self.a.shape[0]
        if self.a.shape != (n, n) or self.b.shape[0] != n:
            raise ValueError("A must be square and B must have n rows")
        if self.c.ndim != 2 or self.c.shape[1] != n or self.x0.shape != (n,):
            raise ValueError("C must be n_y x n and x0 length n")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def n_u(self) -> int:
        return self.b.shape[1]

    @property
    def n_y(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class GainSet:
    """Controller gains, one per rule (a single entry for linear plants)."""

    gains: tuple

    def __post_init__(self):
        arrs = tuple(np.asarray(g, dtype=np.float64) for g in self.gains)
        if not arrs:
            raise ValueError("need at least one gain")
        if any(not np.all(np.isfinite(g)) for g in arrs):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "gains", arrs)


def lorenz_fuzzy_plant() -> RobustFuzzyPlant:
    """Two-rule interpolation of the chaotic 3-state plant, exact for
    x1 in [-20, 30], with matched uncertainty structure."""
    a1 = [[-10.0, 10.0, 0.0], [28.0, -1.0, 20.0], [0.0, -20.0, -8.0 / 3.0]]
    a2 = [[-10.0, 10.0, 0.0], [28.0, -1.0, -30.0], [0.0, 30.0, -8.0 / 3.0]]
    b1 = 0.1 * np.eye(3)
    b2 = [[1.0], [0.0], [0.0]]
    c = np.eye(3)
    d = [[1.0], [1.0], [1.0]]
    h = [[-3.0, 3.0, 0.0], [8.4, 0.0, 0.0], [0.0, 0.0, -0.8]]
    return RobustFuzzyPlant(a=(a1, a2), b1=(b1, b1), b2=(b2, b2), c=(c, c), d=(d, d), h=(h, h))


def bibo_plant() -> BiboPlant:
    return BiboPlant(a=[[-10.0, -5.0], [-4.0, -1.2]],
                     b=[[3.0, 1.0], [0.0, 2.0]],
                     c=[[1.0, 0.7]],
                     x0=[3.0, -4.0])


def _affine_blocks(layout: VariableLayout, exprs) -> tuple[AffineBlock, ...]:
    """Probe affine matrix expressions into constraint blocks: the base is
    the expression at zero, each coefficient is the unit-coordinate probe
    minus the base. Exact because the expressions are affine."""
    zeros = layout.materialize(np.zeros(layout.d))
    bases = [np.asarray(e(zeros), dtype=np.float64) for e in exprs]
    coeffs = [{} for _ in exprs]
    for j in range(layout.d):
        xj = np.zeros(layout.d)
        xj[j] = 1.0
        vals = layout.materialize(xj)
        for bi, e in enumerate(exprs):
            m = np.asarray(e(vals), dtype=np.float64) - bases[bi]
            if np.any(m != 0.0):
                coeffs[bi][j] = SymmetricMatrix(m)
    return tuple(AffineBlock(n=b.shape[0], base=SymmetricMatrix(b), coeffs=c)
                 for b, c in zip(bases, coeffs))


def _example1_layout(plant: RobustFuzzyPlant) -> VariableLayout:
    specs = [("Z", "symmetric", plant.n, plant.n)]
    specs += [(f"M{i + 1}", "rectangular", plant.n_u, plant.n) for i in range(plant.n_rules)]
    return VariableLayout(specs)


def build_example1(plant: RobustFuzzyPlant, alpha, augmented: bool = False) -> ConstraintSystem:
    """Blocks: -Z < 0 and, for every rule pair i <= j, the symmetrized
    performance block built from the attenuation level, the uncertainty
    tolerance and the auxiliary scaling. augmented only changes the
    objective, never the constraints; accepted for interface symmetry."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (3,):
        raise ValueError("alpha must be [gamma, rho, delta]")
    gamma, rho, delta = (float(v) for v in alpha)
    if gamma <= 0.0 or rho <= 0.0 or delta <= 0.0:
        raise ValueError("gamma, rho, delta must all be positive")
    n, n_w, n_u, n_y, nr = plant.n, plant.n_w, plant.n_u, plant.n_y, plant.n_rules
    layout = _example1_layout(plant)

    def omega(i, j, v):
        z = v["Z"]
        mj = v[f"M{j + 1}"]
        btil = np.hstack([delta * np.eye(n), plant.b1[i]])
        ctil = np.vstack([(gamma / (rho * delta)) * plant.h[i], np.sqrt(2.0) * plant.c[i]])
        dtil = np.vstack([np.zeros((n, n_u)), np.sqrt(2.0) * plant.d[i]])
        top = plant.a[i] @ z + z @ plant.a[i].T + plant.b2[i] @ mj + mj.T @ plant.b2[i].T
        low = ctil @ z + dtil @ mj
        return np.block([
            [top, btil, low.T],
            [btil.T, -gamma * np.eye(n + n_w), np.zeros((n + n_w, n + n_y))],
            [low, np.zeros((n + n_y, n + n_w)), -gamma * np.eye(n + n_y)],
        ])

    exprs = [lambda v: -v["Z"]]
    for i in range(nr):
        for j in range(i, nr):
            exprs.append(lambda v, i=i, j=j: omega(i, j, v) + omega(j, i, v))
    blocks = _affine_blocks(layout, exprs)
    return ConstraintSystem(blocks=blocks, layout=layout, d=layout.d)


def _example2_layout(plant: BiboPlant) -> VariableLayout:
    return VariableLayout([("Z", "symmetric", plant.n, plant.n),
                           ("M", "rectangular", plant.n_u, plant.n)])


def build_example2(plant: BiboPlant, alpha) -> ConstraintSystem:
    """Blocks: the closed-loop decay condition plus the three bound
    couplings (initial state inside the invariant set, input norm under
    u_bar, output norm under y_bar), each stated as a negated block."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (2,):
        raise ValueError("alpha must be [u_bar, y_bar]")
    u_bar, y_bar = (float(v) for v in alpha)
    if u_bar <= 0.0 or y_bar <= 0.0:
        raise ValueError("u_bar and y_bar must be positive")
    a, b, c, x0 = plant.a, plant.b, plant.c, plant.x0
    n, n_u, n_y = plant.n, plant.n_u, plant.n_y
    layout = _example2_layout(plant)
    x0col = x0.reshape(n, 1)

    exprs = [
        lambda v: a @ v["Z"] + v["Z"] @ a.T + b @ v["M"] + v["M"].T @ b.T,
        lambda v: -np.block([[np.ones((1, 1)), x0col.T], [x0col, v["Z"]]]),
        lambda v: -np.block([[v["Z"], v["M"].T], [v["M"], u_bar ** 2 * np.eye(n_u)]]),
        lambda v: -np.block([[v["Z"], v["Z"] @ c.T], [c @ v["Z"], y_bar ** 2 * np.eye(n_y)]]),
    ]
    blocks = _affine_blocks(layout, exprs)
    return ConstraintSystem(blocks=blocks, layout=layout, d=layout.d)


def recover_gains(layout: VariableLayout, x_star) -> GainSet:
    """K_i = M_i Z^{-1} for every gain variable in the layout, through an
    SPD solve against Z (raises when Z is not positive definite)."""
    z = extract(layout, x_star, "Z")
    gains = []
    for name in layout.names():
        if name == "Z":
            continue
        m = extract(layout, x_star, name)
        gains.append(solve_spd(z, m.T).T)
    return GainSet(gains=tuple(gains))


def _objective_example1(layout: VariableLayout, augmented: bool):
    def objective(alpha, res):
        if not augmented:
            return np.array([alpha[0], alpha[1]])
        z = extract(layout, res.x_star, "Z")
        return np.array([alpha[0], alpha[1], 1.0 / determinant(SymmetricMatrix(z))])
    return objective


def example1_momip(plant: RobustFuzzyPlant | None = None, augmented: bool = False,
                   bounds=None):
    from .momip import Momip
    plant = plant if plant is not None else lorenz_fuzzy_plant()
    lo, hi = bounds if bounds is not None else BOX_EXAMPLE1
    layout = _example1_layout(plant)
    return Momip(m=3, n_obj=3 if augmented else 2,
                 lo=np.asarray(lo, dtype=np.float64), hi=np.asarray(hi, dtype=np.float64),
                 build=lambda alpha: build_example1(plant, alpha, augmented),
                 objective=_objective_example1(layout, augmented))


def example2_momip(plant: BiboPlant | None = None, bounds=None):
    from .momip import Momip
    plant = plant if plant is not None else bibo_plant()
    lo, hi = bounds if bounds is not None else BOX_EXAMPLE2
    return Momip(m=2, n_obj=2,
                 lo=np.asarray(lo, dtype=np.float64), hi=np.asarray(hi, dtype=np.float64),
                 build=lambda alpha: build_example2(plant, alpha),
                 objective=lambda alpha, res: alpha.copy())


def load_plant(source):
    """Plant from a JSON document (path or parsed dict): named matrices
    as row-major nested arrays under a "type" discriminator."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    kind = data.get("type")
    if kind == "robust_fuzzy":
        return RobustFuzzyPlant(a=tuple(data["a"]), b1=tuple(data["b1"]),
                                b2=tuple(data["b2"]), c=tuple(data["c"]),
                                d=tuple(data["d"]), h=tuple(data["h"]))
    if kind == "bibo":
        return BiboPlant(a=data["a"], b=data["b"], c=data["c"], x0=data["x0"])
    raise ValueError(f'unknown plant type {kind!r} (expected "robust_fuzzy" or "bibo")')
