"""Closed-loop verification by fixed-step RK4 integration.

Two loops: the true nonlinear chaotic 3-state plant under the fuzzy
state-feedback law (with optional parameter perturbation and per-step
random disturbances), and the linear plant under constant state
feedback from its fixed initial state. Both report the max input and
output norms; the disturbed runs also report the L2-gain ratio.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problems import BiboPlant, GainSet, bibo_plant

DIVERGENCE_NORM = 1e9

W_LO = np.array([-0.2, -0.7, -0.1])
W_HI = np.array([0.8, 1.0, 0.3])


class Diverged(Exception):
    """State norm passed the divergence guard during integration."""


class Undefined(Exception):
    """Requested ratio has zero disturbance energy in the denominator."""


@dataclass(frozen=True)
class SimConfig:
    """dt: step size (s); t_end: horizon (s); seed: disturbance stream
    (None turns disturbances off); perturbed: use the drifted plant
    parameters; x0: initial state override (defaults to the origin for
    the chaotic loop and the plant's stored start for the linear one)."""

    dt: float = 1e-3
    t_end: float = 10.0
    seed: Optional[int] = 0
    perturbed: bool = False
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if not (self.t_end >= self.dt and np.isfinite(self.t_end)):
            raise ValueError("t_end must be at least dt")
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=np.float64)
            if x0.ndim != 1 or not np.all(np.isfinite(x0)):
                raise ValueError("x0 must be a finite vector")
            object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class SimResult:
    """Sampled trajectories (one row per time sample) and their summary
    metrics. w is None when the loop has no disturbance input; l2_ratio
    is None when the recorded disturbance has zero energy."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    w: Optional[np.ndarray]
    max_u_norm: float
    max_y_norm: float
    l2_ratio: Optional[float]

    def __post_init__(self):
        n = self.t.shape[0]
        for name in ("x", "u", "y"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[0] != n:
                raise ValueError(f"{name} must have one row per time sample")
        if self.w is not None and (self.w.ndim != 2 or self.w.shape[0] != n):
            raise ValueError("w must have one row per time sample")


def rk4_step(f, x, t: float, dt: float):
    """One classical fourth-order step of x' = f(t, x)."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def membership(x1: float):
    """Rule weights over the first state: xi1 ramps down across
    [-20, 30], xi2 is its complement, so xi1 + xi2 = 1 exactly."""
    xi1 = min(max(-(x1 - 30.0) / 50.0, 0.0), 1.0)
    return xi1, 1.0 - xi1


def _check_norm(x) -> None:
    nrm = float(np.linalg.norm(x))
    if not nrm <= DIVERGENCE_NORM:
        raise Diverged(f"state norm {nrm:.3e} passed {DIVERGENCE_NORM:.0e}")


def _grid(cfg: SimConfig):
    n_steps = int(round(cfg.t_end / cfg.dt))
    if n_steps < 1:
        raise ValueError("horizon shorter than one step")
    return n_steps, cfg.dt * np.arange(n_steps + 1)


def _ratio_or_none(t, y, w) -> Optional[float]:
    try:
        return _l2_ratio_arrays(t, y, w)
    except Undefined:
        return None


def simulate_lorenz(gains: Optional[GainSet], controlled: bool,
                    cfg: SimConfig = SimConfig()) -> SimResult:
    """Integrate the true nonlinear equations

        x1' = -sigma x1 + sigma x2 + u + 0.1 w1
        x2' =  r x1 - x2 - x1 x3   + 0.1 w2
        x3' =  x1 x2 - b x3        + 0.1 w3

    with y_i = x_i + u on every channel and u = xi1 K1 x + xi2 K2 x
    (zero when controlled is false). Nominal parameters sigma=10, r=28,
    b=8/3; the perturbed switch drifts them to sigma=10+sin t, r=0.8*28,
    b=1.1*8/3. Disturbances are drawn once per step, uniformly from
    (-0.2, 0.8) x (-0.7, 1) x (-0.1, 0.3), and held through the step;
    the trailing sample repeats the last draw. The feedback is evaluated
    at every integrator stage state.
    """
    if controlled:
        if gains is None:
            raise ValueError("controlled run needs gains")
        ks = gains.gains
        if any(k.shape != (1, 3) for k in ks):
            raise ValueError("gains must be 1x3 rows")
        k1 = ks[0][0]
        k2 = ks[1][0] if len(ks) > 1 else ks[0][0]

    def u_of(x) -> float:
        if not controlled:
            return 0.0
        xi1, xi2 = membership(x[0])
        return float(xi1 * (k1 @ x) + xi2 * (k2 @ x))

    def f(t, x, w, u):
        if cfg.perturbed:
            sig = 10.0 + np.sin(t)
            r = 0.8 * 28.0
            b = 1.1 * 8.0 / 3.0
        else:
            sig = 10.0
            r = 28.0
            b = 8.0 / 3.0
        return np.array([
            -sig * x[0] + sig * x[1] + u + 0.1 * w[0],
            r * x[0] - x[1] - x[0] * x[2] + 0.1 * w[1],
            x[0] * x[1] - b * x[2] + 0.1 * w[2],
        ])

    n_steps, tgrid = _grid(cfg)
    rng = np.random.default_rng(cfg.seed) if cfg.seed is not None else None
    x = cfg.x0.copy() if cfg.x0 is not None else np.zeros(3)
    if x.shape != (3,):
        raise ValueError("x0 must have 3 states")
    xs = np.empty((n_steps + 1, 3))
    us = np.empty((n_steps + 1, 1))
    ys = np.empty((n_steps + 1, 3))
    ws = np.zeros((n_steps + 1, 3))
    xs[0] = x
    us[0, 0] = u_of(x)
    ys[0] = x + us[0, 0]
    t = 0.0
    for k in range(n_steps):
        w = W_LO + (W_HI - W_LO) * rng.random(3) if rng is not None else np.zeros(3)
        ws[k] = w
        x = rk4_step(lambda tt, xx: f(tt, xx, w, u_of(xx)), x, t, cfg.dt)
        _check_norm(x)
        t += cfg.dt
        xs[k + 1] = x
        us[k + 1, 0] = u_of(x)
        ys[k + 1] = x + us[k + 1, 0]
    ws[n_steps] = ws[n_steps - 1]
    return SimResult(
        t=tgrid, x=xs, u=us, y=ys, w=ws,
        max_u_norm=float(np.max(np.abs(us))),
        max_y_norm=float(np.max(np.linalg.norm(ys, axis=1))),
        l2_ratio=_ratio_or_none(tgrid, ys, ws),
    )


def simulate_bibo(k, cfg: SimConfig = SimConfig(),
                  plant: Optional[BiboPlant] = None) -> SimResult:
    """Integrate x' = (A + B K) x from the plant's stored initial state,
    with u = K x and y = C x. Deterministic: no disturbance input."""
    plant = plant if plant is not None else bibo_plant()
    k = np.asarray(k, dtype=np.float64)
    if k.shape != (plant.n_u, plant.n):
        raise ValueError(f"K must be {plant.n_u} x {plant.n}")
    acl = plant.a + plant.b @ k
    n_steps, tgrid = _grid(cfg)
    x = cfg.x0.copy() if cfg.x0 is not None else plant.x0.copy()
    if x.shape != (plant.n,):
        raise ValueError(f"x0 must have {plant.n} states")
    xs = np.empty((n_steps + 1, plant.n))
    xs[0] = x
    t = 0.0
    for i in range(n_steps):
        x = rk4_step(lambda tt, xx: acl @ xx, x, t, cfg.dt)
        _check_norm(x)
        t += cfg.dt
        xs[i + 1] = x
    us = xs @ k.T
    ys = xs @ plant.c.T
    return SimResult(
        t=tgrid, x=xs, u=us, y=ys, w=None,
        max_u_norm=float(np.max(np.linalg.norm(us, axis=1))),
        max_y_norm=float(np.max(np.linalg.norm(ys, axis=1))),
        l2_ratio=None,
    )


def _l2_ratio_arrays(t, y, w) -> float:
    dt = np.diff(np.asarray(t, dtype=np.float64))
    ey = float(np.sum(0.5 * dt * (np.sum(y[1:] ** 2, axis=1) + np.sum(y[:-1] ** 2, axis=1))))
    ew = float(np.sum(0.5 * dt * (np.sum(w[1:] ** 2, axis=1) + np.sum(w[:-1] ** 2, axis=1))))
    if ew <= 0.0:
        raise Undefined("zero disturbance energy")
    return float(np.sqrt(ey / ew))


def l2_gain_ratio(result: SimResult) -> float:
    """sqrt of the trapezoidal output energy over the trapezoidal
    disturbance energy. Raises Undefined when no disturbance energy was
    recorded."""
    if result.w is None:
        raise Undefined("no disturbance recorded")
    return _l2_ratio_arrays(result.t, result.y, result.w)


def write_trajectory_csv(path, result: SimResult) -> None:
    """One row per time sample, header t,x1..xn,u1..um,y1..yp,w1..wq
    (w columns only when a disturbance was recorded); floats written
    with repr so the file round-trips bit-exactly."""
    cols = [("x", result.x), ("u", result.u), ("y", result.y)]
    if result.w is not None:
        cols.append(("w", result.w))
    header = "t," + ",".join(
        f"{name}{i + 1}" for name, arr in cols for i in range(arr.shape[1]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in range(result.t.shape[0]):
            vals = [repr(float(result.t[row]))]
            vals += [repr(float(arr[row, i])) for _, arr in cols for i in range(arr.shape[1])]
            fh.write(",".join(vals) + "\n")
