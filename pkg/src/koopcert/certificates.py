"""Lyapunov and stability-boundary estimates with computable error bounds.

A fitted contractive operator yields a Lyapunov function as a truncated
operator series evaluated through adjoint coefficient recursions, and a
damped fit yields the t-step Zubov-style value whose sublevel sets bound
the domain of attraction. The closed-form finite-sample bounds collected
here turn the fitted diagnostics into certified error radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynsys import DomainSpec, SnapshotDataset, SystemSpec, check_decay_ratio, step
from .errors import ContractionViolatedError, DivergenceError, InvalidInputError
from .estimator import (
    EtaSpec,
    KoopmanModel,
    adjoint_coeffs,
    forward_coeffs,
    heldout_risk,
)
from .kernels import WeightSpec, gram, weight_values

HORIZON_CAP = 100_000


def truncation_horizon(alpha: float, c_max: float, tol: float) -> int:
    """Smallest T with alpha^(2(T+1)) c_max / (1 - alpha^2) <= tol."""
    if not 0 <= alpha < 1:
        raise InvalidInputError("alpha must lie in [0, 1)")
    if c_max < 0 or tol <= 0:
        raise InvalidInputError("need c_max >= 0 and tol > 0")
    if alpha == 0.0 or c_max == 0.0:
        return 0
    a2 = alpha * alpha
    tail = a2 * c_max / (1.0 - a2)
    T = 0
    while tail > tol:
        tail *= a2
        T += 1
        if T > HORIZON_CAP:
            raise DivergenceError(
                f"truncation horizon exceeds {HORIZON_CAP}; alpha={alpha} is too close to 1"
            )
    return T


@dataclass(frozen=True)
class LyapunovEstimate:
    """Truncated-series Lyapunov function built from a fitted operator.

    alpha is the geometric factor that chose the horizon; alpha_source is
    "op_norm" when the fitted norm certified it and "decay_ratio" when the
    observed per-step weight decay on the anchors stood in for a fitted
    norm at or above one.
    """

    model: KoopmanModel
    horizon: int
    tail_bound: float
    tol: float
    alpha: float = 0.0
    alpha_source: str = "op_norm"
    _quad: dict = field(default_factory=dict, repr=False)


def build_lyapunov(model: KoopmanModel, tol: float = 1e-6, horizon: int | None = None) -> LyapunovEstimate:
    """Choose the truncation horizon from a contraction factor.

    The factor is the fitted operator norm when that is below one. A norm
    at or above one does not by itself make the series diverge (the series
    terms decay at the spectral rate, which the norm only upper-bounds),
    so the observed per-step weight decay on the training anchors stands
    in, recorded via alpha_source. Refuses only when both factors are at
    or above one; then raise beta or enlarge the sample.
    """
    alpha = model.diagnostics.op_norm
    source = "op_norm"
    if alpha >= 1.0:
        train_ds = SnapshotDataset(
            X=model.anchors_x,
            Y=model.anchors_y,
            dt=0.0,
            seed=0,
            eta_x=None if model.eta is None else model.eta.values(model.anchors_x),
        )
        alpha = check_decay_ratio(train_ds, model.kw.weight, eta=model.eta)
        source = "decay_ratio"
        if alpha >= 1.0:
            raise ContractionViolatedError(
                f"fitted operator norm {model.diagnostics.op_norm:.6g} and observed "
                f"decay ratio {alpha:.6g} are both >= 1; raise beta or enlarge the sample"
            )
    c_max = float(np.max(weight_values(model.kw.weight, model.anchors_y) ** 2))
    if horizon is None:
        horizon = truncation_horizon(alpha, c_max, tol)
    a2 = alpha * alpha
    tail = a2 ** (horizon + 1) * c_max / (1.0 - a2) if alpha > 0 else 0.0
    return LyapunovEstimate(
        model=model,
        horizon=horizon,
        tail_bound=tail,
        tol=tol,
        alpha=alpha,
        alpha_source=source,
    )


def lyapunov_value(est: LyapunovEstimate, x: np.ndarray) -> float:
    """k_w(x, x) plus the truncated sum of adjoint-pushed section norms."""
    model = est.model
    x = np.asarray(x, dtype=float)
    w2 = float(weight_values(model.kw.weight, x[None, :])[0] ** 2)
    total = w2
    if est.horizon >= 1:
        kx = gram(model.kw, model.anchors_x, x[None, :])[:, 0]
        b = model.theta.T @ kx
        E = model.cross_xy if model.damping is None else model.cross_xy * model.damping[None, :]
        Lt = model.gram_target
        for t in range(1, est.horizon + 1):
            if t > 1:
                b = model.theta.T @ (E @ b)
            total += float(b @ (Lt @ b))
    return total


def _series_quadratic(est: LyapunovEstimate) -> np.ndarray:
    """Anchor-space quadratic form P with v(x) = k_w(x,x) + k_x' P k_x.

    The t-th series term is b_t' L b_t with b_t = G^(t-1) theta' k_x and
    G = theta' E, so P = theta (sum_t (G')^(t-1) L G^(t-1)) theta'.
    """
    key = est.horizon
    if key not in est._quad:
        model = est.model
        E = model.cross_xy if model.damping is None else model.cross_xy * model.damping[None, :]
        G = model.theta.T @ E
        S = model.gram_target
        acc = S.copy()
        for t in range(2, est.horizon + 1):
            S = G.T @ S @ G
            acc = acc + S
        est._quad[key] = model.theta @ acc @ model.theta.T
    return est._quad[key]


def lyapunov_values(est: LyapunovEstimate, X: np.ndarray) -> np.ndarray:
    """Vectorized lyapunov_value over rows of X via a cached quadratic form."""
    model = est.model
    X = np.asarray(X, dtype=float)
    w2 = weight_values(model.kw.weight, X) ** 2
    if est.horizon < 1:
        return w2
    P = _series_quadratic(est)
    Kx = gram(model.kw, model.anchors_x, X)
    return w2 + np.sum(Kx * (P @ Kx), axis=0)


@dataclass(frozen=True)
class ZubovEstimate:
    """t-step damped stability value from a zubov-mode fit."""

    model: KoopmanModel
    steps: int
    nu: float
    varsigma: float
    g0: np.ndarray
    coeffs: np.ndarray


def build_zubov(model: KoopmanModel, steps: int, nu: float = 1.0, varsigma: float = 0.1) -> ZubovEstimate:
    """Precompute the forward coefficients of the saturating observable.

    The observable section values are g0_j = w(y_j)^nu / (w(y_j)^nu +
    varsigma^nu); damping lives inside the fitted operator application.
    """
    if model.mode != "zubov":
        raise InvalidInputError("zubov estimate needs a damped (zubov-mode) fit")
    if steps < 0:
        raise InvalidInputError("steps must be >= 0")
    if nu < 1 or varsigma <= 0:
        raise InvalidInputError("need nu >= 1 and varsigma > 0")
    wy = weight_values(model.kw.weight, model.anchors_y)
    g0 = wy**nu / (wy**nu + varsigma**nu)
    coeffs = forward_coeffs(model, g0, steps) if steps >= 1 else np.zeros(len(model))
    return ZubovEstimate(model=model, steps=steps, nu=nu, varsigma=varsigma, g0=g0, coeffs=coeffs)


def _saturating_observable(weight: WeightSpec, X: np.ndarray, nu: float, varsigma: float) -> np.ndarray:
    wv = weight_values(weight, X)
    return wv**nu / (wv**nu + varsigma**nu)


def zubov_value(est: ZubovEstimate, x: np.ndarray) -> float:
    """Estimated t-step damped stability value at a single state."""
    x = np.asarray(x, dtype=float)
    if est.steps == 0:
        return float(_saturating_observable(est.model.kw.weight, x[None, :], est.nu, est.varsigma)[0])
    kx = gram(est.model.kw, est.model.anchors_x, x[None, :])[:, 0]
    return float(est.coeffs @ kx)


def zubov_values(est: ZubovEstimate, X: np.ndarray) -> np.ndarray:
    """Vectorized zubov_value over rows of X."""
    X = np.asarray(X, dtype=float)
    if est.steps == 0:
        return _saturating_observable(est.model.kw.weight, X, est.nu, est.varsigma)
    Kx = gram(est.model.kw, est.model.anchors_x, X)
    return est.coeffs @ Kx


def c_nu(nu: float, varsigma: float) -> float:
    """Lipschitz-type constant of the saturating observable.

    1/varsigma for nu = 1; for nu > 1 the stationary-point value
    nu^-1 (nu-1)^((nu-1)/nu) / varsigma.
    """
    if nu < 1 or varsigma <= 0:
        raise InvalidInputError("need nu >= 1 and varsigma > 0")
    if nu == 1:
        return 1.0 / varsigma
    return (nu - 1.0) ** ((nu - 1.0) / nu) / (nu * varsigma)


def generalization_bound(m: int, gamma: float, r: int, delta: float) -> float:
    """High-probability excess-risk radius for the rank-r fit.

    Valid for any fitted operator with HS norm at most gamma; decreasing
    in m, increasing in gamma and r. All logarithms are natural.
    """
    if m < 1 or r < 1:
        raise InvalidInputError("need m >= 1 and r >= 1")
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    if gamma < 0:
        raise InvalidInputError("gamma must be nonnegative")
    l6 = math.log(6.0 / delta)
    l12 = math.log(12.0 * m * m / delta)
    return (
        l6 / m
        + math.sqrt(8.0 * l6 / m)
        + gamma * (gamma + 2.0 * math.sqrt(r)) * (6.0 * l12 / m + math.sqrt(9.0 * l12 / m))
    )


def concentration_epsilons(m: int, delta: float) -> tuple[float, float]:
    """The two concentration radii feeding the excess-risk bound."""
    if m < 1:
        raise InvalidInputError("need m >= 1")
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    l6 = math.log(6.0 / delta)
    l12 = math.log(12.0 * m * m / delta)
    eps_x = 6.0 * l12 / m + 3.0 * math.sqrt(l12 / m)
    eps_y = l6 / m + math.sqrt(8.0 * l6 / m)
    return eps_x, eps_y


def lyapunov_error_bound(alpha: float, q_norm: float, rho: float) -> float:
    """Mean absolute Lyapunov error bound 2 a q / (1-a^2)^2 * sqrt(rho)."""
    if not 0 <= alpha < 1:
        raise InvalidInputError("alpha must lie in [0, 1)")
    if q_norm < 0 or rho < 0:
        raise InvalidInputError("q_norm and rho must be nonnegative")
    return 2.0 * alpha * q_norm / (1.0 - alpha * alpha) ** 2 * math.sqrt(rho)


def zubov_error_bound(t: int, alpha: float, rho: float, nu: float, varsigma: float) -> float:
    """Mean absolute t-step damped-value error bound."""
    if t < 1:
        raise InvalidInputError("t must be >= 1")
    if alpha < 0 or rho < 0:
        raise InvalidInputError("alpha and rho must be nonnegative")
    return t * alpha ** (t - 1) * math.sqrt(rho) * c_nu(nu, varsigma) / varsigma


def doa_level_threshold(
    eta_lower: float,
    mu_fn,
    alpha_lower: float,
    varsigma: float,
    bracket: tuple[float, float],
    tol: float = 1e-10,
) -> float | None:
    """Largest weight level a certified to sit inside the attraction basin.

    A level a is feasible when log(alpha_lower * a / varsigma) >=
    (mu_fn(a) + log 2) / eta_lower * log(1 / alpha_lower). Returns the
    supremum of feasible levels inside the bracket by bisection, or None
    when no bracket point is feasible.
    """
    if eta_lower <= 0 or varsigma <= 0 or not 0 < alpha_lower <= 1:
        raise InvalidInputError("need eta_lower > 0, varsigma > 0, alpha_lower in (0, 1]")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0 < lo < hi):
        raise InvalidInputError("bracket must satisfy 0 < lo < hi")

    def feasible(a: float) -> bool:
        lhs = math.log(alpha_lower * a / varsigma)
        rhs = (mu_fn(a) + math.log(2.0)) / eta_lower * math.log(1.0 / alpha_lower)
        return lhs >= rhs

    if feasible(hi):
        return hi
    if not feasible(lo):
        return None
    a_ok, a_bad = lo, hi
    while a_bad - a_ok > tol * max(1.0, a_ok):
        mid = 0.5 * (a_ok + a_bad)
        if feasible(mid):
            a_ok = mid
        else:
            a_bad = mid
    return a_ok


def estimate_mu_table(
    sys: SystemSpec,
    dom: DomainSpec,
    weight: WeightSpec,
    eta: EtaSpec,
    levels: np.ndarray,
    samples_per_level: int,
    dt: float,
    seed: int,
    tail_tol: float = 1e-6,
    step_cap: int = 10_000,
) -> dict[float, float]:
    """Empirical table a -> mu_a = max over sampled sublevel states of the
    accumulated trajectory cost sum_t eta(x_t).

    States are drawn uniformly from the domain and kept when w(x) <= a;
    each cost series is truncated once its running term and geometric tail
    drop below tail_tol. The table is monotone in a by construction
    (larger levels include all smaller-level samples).
    """
    from .dynsys import sample_uniform

    levels = np.asarray(levels, dtype=float)
    if np.any(levels <= 0) or not np.all(np.diff(levels) > 0):
        raise InvalidInputError("levels must be positive and strictly increasing")
    pool = sample_uniform(dom, samples_per_level * 4, seed)
    wv = weight_values(weight, pool)
    table: dict[float, float] = {}
    prev_mu = 0.0
    for a in levels:
        pts = pool[wv <= a][:samples_per_level]
        mu = prev_mu
        if len(pts):
            costs = accumulated_costs(sys, eta, pts, dt, tail_tol, step_cap)
            mu = max(mu, float(np.max(costs)))
        table[float(a)] = mu
        prev_mu = mu
    return table


def accumulated_costs(
    sys, eta, X, dt, tail_tol: float = 1e-6, step_cap: int = 10_000
) -> np.ndarray:
    """Per-point accumulated cost sum_t eta(x_t) along simulated orbits.

    Points that escape or fail to contract within the cap get +inf: their
    level cannot certify anything. Finite entries mark attracted starts."""
    from .dynsys import GUARD_RADIUS

    state = np.asarray(X, dtype=float).copy()
    total = np.zeros(len(state))
    dead = np.zeros(len(state), dtype=bool)
    prev = None
    for t in range(step_cap):
        with np.errstate(over="ignore", invalid="ignore"):
            bad = ~np.all(np.isfinite(state), axis=1)
            bad |= np.sqrt(np.sum(np.where(np.isfinite(state), state, 0.0) ** 2, axis=1)) > GUARD_RADIUS
        dead |= bad
        state[dead] = 0.0
        alive = ~dead
        if not np.any(alive):
            break
        term = np.zeros(len(state))
        term[alive] = eta.values(state[alive])
        total[alive] += term[alive]
        worst = float(np.max(term[alive]))
        ratio = 0.0
        if prev is not None:
            pos = alive & (prev > 0)
            if np.any(pos):
                ratio = float(np.max(term[pos] / prev[pos]))
        tail = worst * ratio / (1.0 - ratio) if 0 < ratio < 1 else (0.0 if worst == 0.0 else np.inf)
        if worst < tail_tol and tail < tail_tol:
            total[dead] = np.inf
            return total
        prev = term
        state = step(sys, state, dt)
    total[dead] = np.inf
    if prev is not None and np.any(~dead):
        # Hitting the cap without contracting means the level's cost
        # supremum is not finite as far as we can tell.
        alive = ~dead
        if float(np.max(prev[alive])) >= tail_tol:
            total[alive & (prev >= tail_tol)] = np.inf
    return total


def mu_from_table(table: dict[float, float]):
    """Monotone step interpolant of an estimated mu table."""
    levels = np.array(sorted(table))
    values = np.array([table[a] for a in levels])

    def mu_fn(a: float) -> float:
        idx = np.searchsorted(levels, a, side="right") - 1
        if idx < 0:
            return float(values[0])
        if a > levels[-1]:
            raise InvalidInputError(f"mu table does not cover level {a:g}")
        return float(values[idx])

    return mu_fn


@dataclass(frozen=True)
class BoundReport:
    """Closed-form certificate inputs and outputs for a fitted model.

    alpha_plug is max(op_norm, observed decay ratio) and is flagged as a
    plug-in: the true operator norm is not observable, so the certified
    radii are honest only up to this substitution.
    """

    m: int
    gamma: float
    rank: int
    delta: float
    eps_x: float
    eps_y: float
    excess_risk: float
    empirical_risk: float
    heldout_risk: float | None
    op_norm: float
    norm_bound: float
    alpha_plug: float
    lyapunov_const: float
    zubov_const: float | None


def bound_report(
    model: KoopmanModel,
    delta: float = 0.05,
    heldout: SnapshotDataset | None = None,
    nu: float = 1.0,
    varsigma: float = 0.1,
) -> BoundReport:
    """Assemble every closed-form bound for a fitted model."""
    from .dynsys import check_decay_ratio
    from .estimator import operator_norm_bound

    m = len(model)
    gamma = model.diagnostics.hs_norm
    eps_x, eps_y = concentration_epsilons(m, delta)
    rho_check = generalization_bound(m, gamma, model.rank, delta)
    train_ds = SnapshotDataset(
        X=model.anchors_x,
        Y=model.anchors_y,
        dt=0.0,
        seed=0,
        eta_x=None if model.eta is None else model.eta.values(model.anchors_x),
    )
    alpha_hat = check_decay_ratio(train_ds, model.kw.weight, eta=model.eta)
    alpha = max(model.diagnostics.op_norm, alpha_hat)
    h_risk = None if heldout is None else heldout_risk(model, heldout)
    lyap_const = (
        2.0 * alpha / (1.0 - alpha * alpha) ** 2 if alpha < 1 else float("inf")
    )
    zub_const = None
    if model.mode == "zubov":
        zub_const = c_nu(nu, varsigma) / varsigma
    return BoundReport(
        m=m,
        gamma=gamma,
        rank=model.rank,
        delta=delta,
        eps_x=eps_x,
        eps_y=eps_y,
        excess_risk=rho_check,
        empirical_risk=model.diagnostics.risk,
        heldout_risk=h_risk,
        op_norm=model.diagnostics.op_norm,
        norm_bound=operator_norm_bound(model),
        alpha_plug=alpha,
        lyapunov_const=lyap_const,
        zubov_const=zub_const,
    )


def grid_eval(fn, dom: DomainSpec, resolution: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a batch function on a regular grid over the domain box.

    fn maps an (N, n) array of states to an (N,) array of values. Returns
    (coords, values) with coords in row-major order (first axis slowest),
    covering the bounding box of the domain.
    """
    if resolution < 2:
        raise InvalidInputError("grid resolution must be >= 2")
    lo, hi = dom.bounding_box()
    axes = [np.linspace(lo[i], hi[i], resolution) for i in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    values = np.asarray(fn(coords), dtype=float)
    if values.shape != (len(coords),):
        raise InvalidInputError("grid function must return one value per state")
    return coords, values
