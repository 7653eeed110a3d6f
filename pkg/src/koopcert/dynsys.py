"""Benchmark systems, snapshot sampling, and brute-force oracles.

The discrete map under study is the fixed-step RK4 flow of a stable ODE.
Everything here is deterministic given the seed, and the oracles evaluate
the true Lyapunov / stability-boundary series by direct simulation so the
operator-based estimates elsewhere can be checked against ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDomainError,
    DivergenceError,
    IntegrationBlowupError,
    InvalidInputError,
)
from .kernels import WeightedKernelSpec, WeightSpec, weight_values

SYSTEM_KINDS = ("example1", "example2", "linear-contraction")
DOMAIN_KINDS = ("ball", "box")

# Trajectories are aborted once the state norm passes this guard; the
# benchmark systems are stable inside their domains, so hitting it means
# the initial point was outside the basin (or dt is far too coarse).
GUARD_RADIUS = 1e6
STEP_CAP = 100_000


@dataclass(frozen=True)
class SystemSpec:
    """One of the built-in test systems.

    "example1" is a planar globally stable ODE with a sinusoidal
    nonlinearity, "example2" is a planar ODE whose basin of attraction
    excludes the invariant region x1*x2 >= 2, and "linear-contraction"
    is the exact map x -> a*x used for closed-form checks.
    """

    kind: str
    dim: int = 2
    a: float | None = None

    def __post_init__(self):
        if self.kind not in SYSTEM_KINDS:
            raise InvalidInputError(f"unknown system kind {self.kind!r}")
        if self.kind == "linear-contraction":
            if self.a is None or not (0 < self.a < 1):
                raise InvalidInputError("linear contraction needs a factor in (0, 1)")
            if self.dim < 1:
                raise InvalidInputError("state dimension must be >= 1")
        elif self.dim != 2:
            raise InvalidInputError(f"{self.kind} is a planar system")

    @staticmethod
    def example1() -> "SystemSpec":
        return SystemSpec(kind="example1")

    @staticmethod
    def example2() -> "SystemSpec":
        return SystemSpec(kind="example2")

    @staticmethod
    def linear_contraction(a: float, dim: int = 2) -> "SystemSpec":
        return SystemSpec(kind="linear-contraction", dim=dim, a=a)


@dataclass(frozen=True)
class DomainSpec:
    """Sampling region: a centered ball or an axis-aligned box."""

    kind: str
    radius: float = 0.0
    lo: tuple = ()
    hi: tuple = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise InvalidInputError(f"unknown domain kind {self.kind!r}")
        if self.kind == "ball":
            if not np.isfinite(self.radius) or self.radius <= 0:
                raise InvalidInputError("ball radius must be positive")
        else:
            lo = np.asarray(self.lo, dtype=float)
            hi = np.asarray(self.hi, dtype=float)
            if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
                raise InvalidInputError("box needs matching lo/hi tuples")
            if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
                raise InvalidInputError("box bounds must be finite")
            if not np.all(lo < hi):
                raise InvalidInputError("box needs lo < hi componentwise")

    @staticmethod
    def ball(radius: float, dim: int = 2) -> "DomainSpec":
        return DomainSpec(kind="ball", radius=radius, lo=(0.0,) * dim, hi=(0.0,) * dim)

    @staticmethod
    def box(lo, hi) -> "DomainSpec":
        return DomainSpec(kind="box", lo=tuple(float(v) for v in lo), hi=tuple(float(v) for v in hi))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "ball":
            n = self.dim
            return -self.radius * np.ones(n), self.radius * np.ones(n)
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)


@dataclass(frozen=True)
class SnapshotDataset:
    """Paired snapshots (x_i, y_i = f(x_i)) plus optional state-cost values."""

    X: np.ndarray
    Y: np.ndarray
    dt: float
    seed: int
    rejected_count: int = 0
    eta_x: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.X.shape != self.Y.shape or self.X.ndim != 2 or len(self.X) == 0:
            raise InvalidInputError("X and Y must be matching nonempty (m, n) arrays")
        if self.eta_x is not None and self.eta_x.shape != (len(self.X),):
            raise InvalidInputError("eta_x must be one value per snapshot pair")

    def __len__(self) -> int:
        return len(self.X)


def vector_field(sys: SystemSpec, x: np.ndarray) -> np.ndarray:
    """Right-hand side of the ODE, broadcast over leading axes of x."""
    x = np.asarray(x, dtype=float)
    if sys.kind == "linear-contraction":
        raise InvalidInputError("the linear contraction is a discrete map, not a flow")
    x1 = x[..., 0]
    x2 = x[..., 1]
    if sys.kind == "example1":
        d1 = -3.0 * x1 + x2 + np.sin(2.0 * np.pi * x1) / (2.0 * np.pi)
        d2 = x1 - x2
    else:
        s = x1 * x2 - 1.0
        d1 = -x1
        d2 = s * x2**3 + (s + x1**2) * x2
    return np.stack([d1, d2], axis=-1)


def step(sys: SystemSpec, x: np.ndarray, dt: float) -> np.ndarray:
    """One step of the discrete map: classical RK4 for the ODE systems."""
    x = np.asarray(x, dtype=float)
    if sys.kind == "linear-contraction":
        return sys.a * x
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    # Diverging orbits (example2 outside its basin) can overflow inside a
    # single RK4 cascade; the guard checks afterwards catch the inf/nan.
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = vector_field(sys, x)
        k2 = vector_field(sys, x + 0.5 * dt * k1)
        k3 = vector_field(sys, x + 0.5 * dt * k2)
        k4 = vector_field(sys, x + dt * k3)
        return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_state(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)) or np.any(np.sqrt(np.sum(x * x, axis=-1)) > GUARD_RADIUS):
        raise IntegrationBlowupError("trajectory escaped the guard radius 1e6")


def trajectory(sys: SystemSpec, x0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """States x[0..steps] of the discrete map, shape (steps+1, n)."""
    x0 = np.asarray(x0, dtype=float)
    if steps < 0:
        raise InvalidInputError("steps must be >= 0")
    out = np.empty((steps + 1,) + x0.shape)
    out[0] = x0
    _check_state(x0)
    for t in range(steps):
        out[t + 1] = step(sys, out[t], dt)
        _check_state(out[t + 1])
    return out


def sample_uniform(dom: DomainSpec, m: int, seed: int) -> np.ndarray:
    """m points uniform over the domain; ball sampling rejects from its box."""
    if m < 1:
        raise InvalidInputError("need at least one sample")
    rng = np.random.default_rng(seed)
    lo, hi = dom.bounding_box()
    if dom.kind == "box":
        return rng.uniform(lo, hi, size=(m, dom.dim))
    pts = []
    have = 0
    while have < m:
        chunk = rng.uniform(lo, hi, size=(max(2 * (m - have), 64), dom.dim))
        keep = chunk[np.sqrt(np.sum(chunk * chunk, axis=1)) <= dom.radius]
        pts.append(keep)
        have += len(keep)
    return np.concatenate(pts, axis=0)[:m]


def make_dataset(
    sys: SystemSpec,
    dom: DomainSpec,
    m: int,
    dt: float,
    seed: int,
    weight: WeightSpec,
    eta=None,
) -> SnapshotDataset:
    """Draw snapshot pairs, dropping candidates below the weight floor.

    Points with w(x) < floor give an all-but-zero row in the weighted Gram
    and are discarded (the count is recorded). Fewer than m/2 survivors
    means the floor and the domain are incompatible.
    """
    X = sample_uniform(dom, m, seed)
    keep = weight_values(weight, X) >= weight.floor
    X = X[keep]
    rejected = int(m - len(X))
    if len(X) < m / 2:
        raise DegenerateDomainError(
            f"weight floor {weight.floor:g} rejected {rejected} of {m} samples"
        )
    Y = step(sys, X, dt)
    eta_x = None
    if eta is not None:
        eta_x = eta.values(X)
    return SnapshotDataset(X=X, Y=Y, dt=float(dt), seed=int(seed), rejected_count=rejected, eta_x=eta_x)


def check_decay_ratio(ds: SnapshotDataset, weight: WeightSpec, eta=None) -> float:
    """Largest observed one-step weight ratio max_i w(y_i) / w(x_i).

    A value below 1 is evidence the map contracts the weight on the sampled
    region. When a state cost is supplied the ratio is damped by
    exp(-eta(x_i)), matching the operator actually fitted in that mode.
    """
    wx = weight_values(weight, ds.X)
    wy = weight_values(weight, ds.Y)
    if np.any(wx <= 0):
        raise InvalidInputError("decay ratio needs w(x_i) > 0 for every sample")
    ratios = wy / wx
    if eta is not None:
        ratios = np.exp(-eta.values(ds.X)) * ratios
    return float(np.max(ratios))


def oracle_lyapunov(
    sys: SystemSpec, kw: WeightedKernelSpec, x: np.ndarray, dt: float, tail_tol: float = 1e-10
) -> float:
    """True Lyapunov value sum_t k_w(x_t, x_t) by direct simulation.

    The series is truncated once the running term and its geometric tail
    estimate both fall below tail_tol. Identity observable matrix assumed,
    matching the estimator side.
    """
    x = np.asarray(x, dtype=float)
    total = 0.0
    prev = None
    alpha = 0.0
    for t in range(STEP_CAP):
        _check_state(x)
        term = float(weight_values(kw.weight, x[None, :])[0] ** 2)
        total += term
        if prev is not None and prev > 0:
            alpha = max(alpha, np.sqrt(term / prev))
        if term < tail_tol and alpha < 1 and term / (1.0 - alpha**2) < tail_tol:
            return total
        if term == 0.0:
            return total
        prev = term
        x = step(sys, x, dt)
    raise DivergenceError("weight did not decay within the step cap")


def oracle_lyapunov_batch(
    sys: SystemSpec, kw: WeightedKernelSpec, X: np.ndarray, dt: float, tail_tol: float = 1e-10
) -> np.ndarray:
    """Vectorized oracle_lyapunov over rows of X (for grid comparisons)."""
    X = np.asarray(X, dtype=float)
    state = X.copy()
    total = np.zeros(len(X))
    prev = None
    alpha = 0.0
    for t in range(STEP_CAP):
        term = weight_values(kw.weight, state) ** 2
        total += term
        worst = float(np.max(term))
        if prev is not None:
            pos = prev > 0
            if np.any(pos):
                alpha = max(alpha, float(np.sqrt(np.max(term[pos] / prev[pos]))))
        if worst < tail_tol and alpha < 1 and worst / (1.0 - alpha**2) < tail_tol:
            return total
        if worst == 0.0:
            return total
        prev = term
        state = step(sys, state, dt)
        if not np.all(np.isfinite(state)):
            raise IntegrationBlowupError("a grid trajectory produced non-finite state")
    raise DivergenceError("weight did not decay within the step cap")


def oracle_zubov(
    sys: SystemSpec,
    weight: WeightSpec,
    eta,
    x: np.ndarray,
    dt: float,
    steps: int,
    nu: float,
    varsigma: float,
) -> float:
    """True t-step damped stability value by direct simulation.

    Returns exp(-sum_{s<t} eta(x_s)) * g(x_t) with
    g(z) = w(z)^nu / (w(z)^nu + varsigma^nu). Trajectories that escape the
    guard radius contribute zero: the accumulated cost has already driven
    the damping factor below double precision by then.
    """
    x = np.asarray(x, dtype=float)
    if steps < 0:
        raise InvalidInputError("steps must be >= 0")
    cost = 0.0
    for s in range(steps):
        if not np.all(np.isfinite(x)) or np.sqrt(np.sum(x * x)) > GUARD_RADIUS:
            return 0.0
        cost += float(eta.values(x[None, :])[0])
        if cost > 745.0:
            return 0.0
        x = step(sys, x, dt)
    if not np.all(np.isfinite(x)) or np.sqrt(np.sum(x * x)) > GUARD_RADIUS:
        return 0.0
    wv = float(weight_values(weight, x[None, :])[0])
    g = wv**nu / (wv**nu + varsigma**nu)
    return float(np.exp(-cost) * g)


def oracle_zubov_batch(
    sys: SystemSpec,
    weight: WeightSpec,
    eta,
    X: np.ndarray,
    dt: float,
    steps: int,
    nu: float,
    varsigma: float,
) -> np.ndarray:
    """Vectorized oracle_zubov over rows of X."""
    X = np.asarray(X, dtype=float)
    state = X.copy()
    cost = np.zeros(len(X))
    dead = np.zeros(len(X), dtype=bool)

    def _mark_dead():
        with np.errstate(over="ignore", invalid="ignore"):
            bad = ~np.all(np.isfinite(state), axis=1)
            bad |= np.sqrt(np.sum(np.where(np.isfinite(state), state, 0.0) ** 2, axis=1)) > GUARD_RADIUS
        dead[bad] = True
        state[dead] = 0.0

    for s in range(steps):
        _mark_dead()
        alive = ~dead
        if np.any(alive):
            cost[alive] += eta.values(state[alive])
        dead[cost > 745.0] = True
        state = step(sys, state, dt)
    _mark_dead()
    wv = weight_values(weight, state)
    g = wv**nu / (wv**nu + varsigma**nu)
    out = np.exp(-cost) * g
    out[dead] = 0.0
    return out
