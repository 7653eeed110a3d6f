"""Dense symmetric and pencil eigensolvers used by the operator fit.

The regression step needs the top eigenpairs of M u = lam B u where B is
symmetric positive definite but M is a product of two Gram matrices and
therefore not symmetric. The pencil is reduced by Cholesky congruence,
C = L^-1 M L^-T with B = L L^T, and C is handed to a general dense
(Hessenberg-QR) eigensolver. True eigenvalues of such pencils are real
and nonnegative; a materially complex value in the retained block means
the matrices are inconsistent and is reported as an anomaly rather than
silently truncated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    InvalidInputError,
    NotPositiveDefiniteError,
    SolverFailureError,
    SpectralAnomalyError,
)

REALNESS_TOL = 1e-6
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Pencil:
    """Generalized eigenproblem left M u = lam (right) B u.

    The right-hand matrix must be symmetric (to 1e-12 relative) positive
    definite; the left-hand matrix may be nonsymmetric.
    """

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        M, B = self.left, self.right
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape != B.shape:
            raise InvalidInputError("pencil needs two square matrices of equal size")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(B))):
            raise InvalidInputError("pencil matrices contain non-finite entries")
        scale = max(1.0, float(np.max(np.abs(B))))
        if np.max(np.abs(B - B.T)) > 1e-12 * scale:
            raise InvalidInputError("right-hand pencil matrix is not symmetric")


def cholesky_spd(B: np.ndarray) -> np.ndarray:
    """Lower-triangular factor with B = L L^T."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidInputError("cholesky needs a square matrix")
    if not np.all(np.isfinite(B)):
        raise InvalidInputError("cholesky input contains non-finite entries")
    try:
        return scipy.linalg.cholesky(B, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc


def symmetric_eig(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of symmetric S."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError("symmetric_eig needs a square matrix")
    if not np.all(np.isfinite(S)):
        raise InvalidInputError("symmetric_eig input contains non-finite entries")
    try:
        vals, vecs = scipy.linalg.eigh(S)
    except scipy.linalg.LinAlgError as exc:
        raise SolverFailureError(str(exc)) from exc
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def generalized_eig_topr(
    pencil: Pencil, r: int, realness_tol: float = REALNESS_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Top-r eigenpairs of left u = lam right u, sorted by real part.

    Returns (vals, U) with vals descending and U the m-by-r eigenvector
    matrix, back-transformed so that left @ u = lam * right @ u. Retained
    eigenvalues with imaginary part above realness_tol * (1 + |real|)
    raise a spectral anomaly; small imaginary dust is truncated and tiny
    negative real parts are clamped to zero.
    """
    M, B = pencil.left, pencil.right
    m = M.shape[0]
    if not 1 <= r <= m:
        raise InvalidInputError(f"rank r={r} must lie in [1, {m}]")
    L = cholesky_spd(B)
    # C = L^-1 M L^-T via two triangular solves.
    T = scipy.linalg.solve_triangular(L, M, lower=True)
    C = scipy.linalg.solve_triangular(L, T.T, lower=True).T
    try:
        vals, Z = scipy.linalg.eig(C)
    except scipy.linalg.LinAlgError as exc:
        raise SolverFailureError(str(exc)) from exc
    order = np.argsort(-vals.real, kind="stable")
    vals = vals[order]
    Z = Z[:, order]
    top = vals[:r]
    bad = np.abs(top.imag) > realness_tol * (1.0 + np.abs(top.real))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SpectralAnomalyError(
            f"retained eigenvalue {i} is complex: {top[i]:.6g} "
            "(matrices are inconsistent with a definite pencil)"
        )
    if r < m and abs(vals[r - 1].real - vals[r].real) <= TIE_TOL * (1.0 + abs(vals[r - 1].real)):
        warnings.warn(
            f"eigenvalues {r - 1} and {r} tie within {TIE_TOL:g}; "
            "retention order falls back to index order",
            RuntimeWarning,
            stacklevel=2,
        )
    lam = np.clip(top.real, 0.0, None)
    Zr = Z[:, :r].real
    U = scipy.linalg.solve_triangular(L, Zr, lower=True, trans="T")
    return lam, U
