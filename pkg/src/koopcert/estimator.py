"""Reduced-rank regression of transfer operators in the weighted RKHS.

Snapshot pairs (x_i, y_i) define input sections k_w(x_i, .) and target
sections k_w(y_i, .); in damped mode the targets are scaled by
exp(-eta(x_i)). The fitted operator is A = sum_ij theta_ij
k_w(x_i, .) (x) psi_j with a rank-r coefficient matrix theta obtained from
a generalized eigenproblem over the two Gram matrices. Coefficient
recursions push kernel sections through powers of A and its adjoint
without ever leaving the m-dimensional sample coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynsys import SnapshotDataset
from .eigsolve import Pencil, generalized_eig_topr, symmetric_eig
from .errors import EtaMismatchError, InvalidInputError, SolverFailureError
from .kernels import WeightedKernelSpec, gram, weight_values

NORMALIZATIONS = ("scale-consistent", "unscaled")


@dataclass(frozen=True)
class EtaSpec:
    """State cost damping the target sections, eta(x) = scale * |x|^2.

    scale = 0 is allowed and makes the damped fit coincide with the plain
    one, which is a useful consistency check.
    """

    kind: str = "quadratic-norm"
    scale: float = 0.5

    def __post_init__(self):
        if self.kind != "quadratic-norm":
            raise InvalidInputError(f"unknown eta kind {self.kind!r}")
        if not np.isfinite(self.scale) or self.scale < 0:
            raise InvalidInputError("eta scale must be a nonnegative real")

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        return self.scale * np.sum(X * X, axis=-1)


@dataclass(frozen=True)
class RRRConfig:
    """Hyperparameters of the reduced-rank fit.

    beta is the ridge strength; when None it is resolved to
    beta_scale * lam_max((1/m) K_w) at fit time. The normalization flag
    picks the eigenvector scaling: "scale-consistent"
    (u' K_w ((1/m) K_w + beta I) u = 1) is the variational minimizer of the
    regularized empirical risk and the default; "unscaled"
    (u' K_w (K_w + beta I) u = 1) drops the 1/m and systematically shrinks
    the fitted operator, and is kept only for comparison.
    """

    rank: int
    beta: float | None = None
    beta_scale: float = 0.01
    normalization: str = "scale-consistent"
    realness_tol: float = 1e-6

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidInputError("rank must be >= 1")
        if self.beta is not None and (not np.isfinite(self.beta) or self.beta <= 0):
            raise InvalidInputError("beta must be positive when given")
        if self.beta is None and (not np.isfinite(self.beta_scale) or self.beta_scale <= 0):
            raise InvalidInputError("beta_scale must be positive")
        if self.normalization not in NORMALIZATIONS:
            raise InvalidInputError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class FitDiagnostics:
    sigma_sq: np.ndarray
    risk: float
    hs_norm: float
    op_norm: float
    op_norm_gram_variant: float


@dataclass(frozen=True)
class KoopmanModel:
    """Fitted finite-rank transfer operator in sample coordinates."""

    anchors_x: np.ndarray
    anchors_y: np.ndarray
    theta: np.ndarray
    kw: WeightedKernelSpec
    mode: str
    eta: EtaSpec | None
    beta: float
    rank: int
    normalization: str
    gram_x: np.ndarray
    gram_target: np.ndarray
    cross_xy: np.ndarray
    damping: np.ndarray | None
    diagnostics: FitDiagnostics

    def __len__(self) -> int:
        return len(self.anchors_x)


def normalize_columns(
    U: np.ndarray, gram_x: np.ndarray, beta: float, m: int, normalization: str
) -> np.ndarray:
    """Rescale eigenvector columns to the chosen unit quadratic form."""
    if normalization == "scale-consistent":
        Q = gram_x @ (gram_x / m + beta * np.eye(m))
    elif normalization == "unscaled":
        Q = gram_x @ (gram_x + beta * np.eye(m))
    else:
        raise InvalidInputError(f"unknown normalization {normalization!r}")
    nrm_sq = np.einsum("ji,jk,ki->i", U, Q, U)
    if np.any(nrm_sq <= 0) or not np.all(np.isfinite(nrm_sq)):
        raise SolverFailureError(
            "an eigenvector has vanishing Gram seminorm; rank exceeds the "
            "effective rank of the data"
        )
    return U / np.sqrt(nrm_sq)[None, :]


def theta_from_factors(U: np.ndarray, gram_x: np.ndarray) -> np.ndarray:
    """Coefficient matrix (1/m) U U' K_w from normalized eigenvectors."""
    m = gram_x.shape[0]
    return (U @ (U.T @ gram_x)) / m


def _fit(
    ds: SnapshotDataset,
    kw: WeightedKernelSpec,
    cfg: RRRConfig,
    eta: EtaSpec | None,
) -> KoopmanModel:
    X, Y = ds.X, ds.Y
    m = len(X)
    if cfg.rank > m:
        raise InvalidInputError(f"rank {cfg.rank} exceeds sample count {m}")
    K = gram(kw, X, X)
    if float(np.max(np.abs(K))) == 0.0:
        raise InvalidInputError("all-zero Gram matrix; weight floor is misconfigured")
    Lp = gram(kw, Y, Y)
    damping = None
    if eta is not None:
        stored = ds.eta_x
        recomputed = eta.values(X)
        if stored is None:
            raise InvalidInputError("damped fit needs eta values stored in the dataset")
        if np.max(np.abs(stored - recomputed)) > 1e-12:
            raise EtaMismatchError("dataset eta values disagree with the eta spec")
        damping = np.exp(-recomputed)
        Lt = damping[:, None] * Lp * damping[None, :]
        mode = "zubov"
    else:
        Lt = Lp
        mode = "koopman"
    beta = cfg.beta
    if beta is None:
        beta = cfg.beta_scale * float(symmetric_eig(K)[0][0]) / m
    pencil = Pencil(left=(Lt @ K) / (m * m), right=K / m + beta * np.eye(m))
    sigma_sq, U = generalized_eig_topr(pencil, cfg.rank, realness_tol=cfg.realness_tol)
    U = normalize_columns(U, K, beta, m, cfg.normalization)
    theta = theta_from_factors(U, K)
    cross = gram(kw, X, Y)
    diag = _diagnostics(theta, K, Lt, sigma_sq, m)
    return KoopmanModel(
        anchors_x=X,
        anchors_y=Y,
        theta=theta,
        kw=kw,
        mode=mode,
        eta=eta,
        beta=float(beta),
        rank=cfg.rank,
        normalization=cfg.normalization,
        gram_x=K,
        gram_target=Lt,
        cross_xy=cross,
        damping=damping,
        diagnostics=diag,
    )


def fit_koopman(ds: SnapshotDataset, kw: WeightedKernelSpec, cfg: RRRConfig) -> KoopmanModel:
    """Reduced-rank fit of the one-step operator from snapshot pairs."""
    return _fit(ds, kw, cfg, eta=None)


def fit_zubov_koopman(
    ds: SnapshotDataset, kw: WeightedKernelSpec, eta: EtaSpec, cfg: RRRConfig
) -> KoopmanModel:
    """Reduced-rank fit of the cost-damped operator from snapshot pairs.

    Only the target Gram changes relative to the plain fit: section j
    becomes exp(-eta(x_j)) k_w(y_j, .). With eta identically zero the
    result matches fit_koopman bit for bit.
    """
    if eta is None:
        raise InvalidInputError("damped fit needs an eta spec")
    return _fit(ds, kw, cfg, eta=eta)


def _sym_sqrt_psd(S: np.ndarray) -> np.ndarray:
    vals, vecs = symmetric_eig(S)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)[None, :]) @ vecs.T


def _diagnostics(theta, K, Lt, sigma_sq, m) -> FitDiagnostics:
    C = theta.T @ K
    R = C - np.eye(m)
    risk = max(float(np.sum(R * (Lt @ R))) / m, 0.0)
    quad = theta.T @ K @ theta
    hs = float(np.sqrt(max(np.sum(quad * Lt), 0.0)))
    Lh = _sym_sqrt_psd(Lt)
    S = Lh @ quad @ Lh
    S = (S + S.T) / 2.0
    opn = float(np.sqrt(max(symmetric_eig(S)[0][0], 0.0)))
    # The source analysis states the operator norm through a congruence by
    # the input Gram instead (and without the square root); both forms are
    # reported so they can be compared.
    kvals, kvecs = symmetric_eig(K)
    cut = 1e-12 * max(kvals[0], 0.0)
    inv_half = np.where(kvals > cut, 1.0 / np.sqrt(np.clip(kvals, cut, None)), 0.0)
    Kih = (kvecs * inv_half[None, :]) @ kvecs.T
    G = Kih @ Lt @ quad @ Lt @ Kih
    G = (G + G.T) / 2.0
    gram_variant = float(max(symmetric_eig(G)[0][0], 0.0))
    return FitDiagnostics(
        sigma_sq=sigma_sq,
        risk=risk,
        hs_norm=hs,
        op_norm=opn,
        op_norm_gram_variant=gram_variant,
    )


def empirical_risk(model: KoopmanModel) -> float:
    """Mean squared section error (1/m) sum_i |A* k_w(x_i,.) - target_i|^2."""
    m = len(model)
    C = model.theta.T @ model.gram_x
    R = C - np.eye(m)
    return max(float(np.sum(R * (model.gram_target @ R))) / m, 0.0)


def hs_norm(model: KoopmanModel) -> float:
    """Hilbert-Schmidt norm sqrt(trace(theta' K_w theta L_w))."""
    quad = model.theta.T @ model.gram_x @ model.theta
    return float(np.sqrt(max(np.sum(quad * model.gram_target), 0.0)))


def op_norm(model: KoopmanModel) -> float:
    """Operator norm sqrt(lam_max(L^1/2 theta' K theta L^1/2))."""
    quad = model.theta.T @ model.gram_x @ model.theta
    Lh = _sym_sqrt_psd(model.gram_target)
    S = Lh @ quad @ Lh
    S = (S + S.T) / 2.0
    return float(np.sqrt(max(symmetric_eig(S)[0][0], 0.0)))


def operator_norm_bound(model: KoopmanModel, beta: float | None = None) -> float:
    """A-priori operator norm bound lam_max(L_w) / (beta m)."""
    if beta is None:
        beta = model.beta
    if beta <= 0:
        raise InvalidInputError("beta must be positive")
    lam = float(symmetric_eig(model.gram_target)[0][0])
    return lam / (beta * len(model))


def regularized_objective(model: KoopmanModel, theta: np.ndarray | None = None) -> float:
    """Empirical risk plus beta times squared HS norm, for any theta."""
    if theta is None:
        theta = model.theta
    m = len(model)
    C = theta.T @ model.gram_x
    R = C - np.eye(m)
    risk = float(np.sum(R * (model.gram_target @ R))) / m
    quad = theta.T @ model.gram_x @ theta
    hs_sq = float(np.sum(quad * model.gram_target))
    return risk + model.beta * hs_sq


def _adjoint_transfer(model: KoopmanModel) -> np.ndarray:
    """Matrix E with b_{t+1} = theta' E b_t; damped on the target index."""
    if model.damping is None:
        return model.cross_xy
    return model.cross_xy * model.damping[None, :]


def adjoint_coeffs(model: KoopmanModel, x: np.ndarray, t: int) -> np.ndarray:
    """Target-basis coefficients of (A*)^t k_w(x, .).

    The returned vector b satisfies (A*)^t k_w(x,.) = sum_j b_j psi_j,
    where psi_j is the (possibly damped) j-th target section.
    """
    if t < 1:
        raise InvalidInputError("adjoint power t must be >= 1")
    x = np.asarray(x, dtype=float)
    kx = gram(model.kw, model.anchors_x, x[None, :])[:, 0]
    b = model.theta.T @ kx
    E = _adjoint_transfer(model)
    for _ in range(t - 1):
        b = model.theta.T @ (E @ b)
    return b


def forward_coeffs(model: KoopmanModel, g0: np.ndarray, t: int) -> np.ndarray:
    """Input-basis coefficients of A^t h for h with section values g0.

    g0 holds the raw values of the weighted observable at the anchors_y;
    in damped mode the exp(-eta) factors are applied internally, matching
    the fitted targets. A^t h = sum_i a_i k_w(x_i, .).
    """
    if t < 1:
        raise InvalidInputError("forward power t must be >= 1")
    g0 = np.asarray(g0, dtype=float)
    if g0.shape != (len(model),):
        raise InvalidInputError("g0 must hold one value per anchor")
    d = model.damping
    a = model.theta @ (g0 if d is None else d * g0)
    K_yx = model.cross_xy.T
    for _ in range(t - 1):
        v = K_yx @ a
        a = model.theta @ (v if d is None else d * v)
    return a


def predict_observable(model: KoopmanModel, g, x: np.ndarray, t: int) -> float:
    """Estimate of (w g)(f^t(x)) pushed through the fitted operator.

    g maps a single state to a real; t = 0 returns w(x) g(x) directly.
    """
    x = np.asarray(x, dtype=float)
    if t == 0:
        return float(weight_values(model.kw.weight, x[None, :])[0] * g(x))
    wy = weight_values(model.kw.weight, model.anchors_y)
    g0 = wy * np.array([g(y) for y in model.anchors_y])
    a = forward_coeffs(model, g0, t)
    kx = gram(model.kw, model.anchors_x, x[None, :])[:, 0]
    return float(a @ kx)


def heldout_risk(model: KoopmanModel, ds: SnapshotDataset) -> float:
    """Mean squared section error of the fitted operator on fresh pairs."""
    Xh, Yh = ds.X, ds.Y
    Cb = model.theta.T @ gram(model.kw, model.anchors_x, Xh)
    G = gram(model.kw, model.anchors_y, Yh)
    # k_w(y, y) = w(y)^2 since the base kernel is 1 on the diagonal.
    t_norm = weight_values(model.kw.weight, Yh) ** 2
    if model.mode == "zubov":
        if ds.eta_x is None:
            raise InvalidInputError("held-out risk in damped mode needs eta values")
        if np.max(np.abs(ds.eta_x - model.eta.values(Xh))) > 1e-12:
            raise EtaMismatchError("held-out eta values disagree with the model eta")
        dh = np.exp(-ds.eta_x)
        G = model.damping[:, None] * G * dh[None, :]
        t_norm = dh**2 * t_norm
    quad = np.sum(Cb * (model.gram_target @ Cb), axis=0)
    cross = np.sum(Cb * G, axis=0)
    per_point = quad - 2.0 * cross + t_norm
    return max(float(np.mean(per_point)), 0.0)
