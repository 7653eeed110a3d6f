"""Shared fixtures for the test suite: cached fitted models and oracles.

The builders are cached so the first test that needs a model pays the fit
once and later tests reuse it; every builder is fully seeded.
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

from koopcert import (
    DomainSpec,
    EtaSpec,
    KernelSpec,
    RRRConfig,
    SystemSpec,
    WeightSpec,
    WeightedKernelSpec,
    fit_koopman,
    fit_zubov_koopman,
    make_dataset,
    step,
)


def kw_gaussian(gamma: float = 4.0, power: float = 1.0) -> WeightedKernelSpec:
    return WeightedKernelSpec(
        kernel=KernelSpec(kind="gaussian", gamma=gamma),
        weight=WeightSpec(kind="norm-power", exponent=power),
    )


@lru_cache(maxsize=None)
def example1_model():
    """Planar sinusoidal system at its reference settings (m=500, seed 42)."""
    kw = kw_gaussian()
    ds = make_dataset(SystemSpec.example1(), DomainSpec.ball(2.0), 500, 0.05, 42, kw.weight)
    model = fit_koopman(ds, kw, RRRConfig(rank=50))
    return ds, kw, model


@lru_cache(maxsize=None)
def example2_model():
    """Damped fit of the finite-basin system at its reference settings."""
    kw = kw_gaussian(power=0.5)
    eta = EtaSpec(kind="quadratic-norm", scale=0.5)
    ds = make_dataset(
        SystemSpec.example2(),
        DomainSpec.box((-2.0, -2.0), (2.0, 2.0)),
        500,
        0.025,
        42,
        kw.weight,
        eta=eta,
    )
    model = fit_zubov_koopman(ds, kw, eta, RRRConfig(rank=50))
    return ds, kw, eta, model


@lru_cache(maxsize=None)
def linear_model(a: float, m: int, rank: int, seed: int):
    """Fit of the exact contraction map x -> a x on the radius-2 ball."""
    kw = kw_gaussian()
    ds = make_dataset(SystemSpec.linear_contraction(a), DomainSpec.ball(2.0), m, 1.0, seed, kw.weight)
    model = fit_koopman(ds, kw, RRRConfig(rank=rank))
    return ds, kw, model


@lru_cache(maxsize=None)
def random_linear_models():
    """Ten seeded linear-contraction fits with randomized factor and size."""
    rng = np.random.default_rng(1234)
    fits = []
    for seed in range(10):
        a = float(rng.uniform(0.2, 0.9))
        m = int(rng.integers(60, 121))
        fits.append(linear_model(a, m, 10, seed))
    return fits


def model_matrix():
    """All reference fits: both example systems plus ten linear fits."""
    models = [example1_model()[2], example2_model()[3]]
    models.extend(model for _, _, model in random_linear_models())
    return models


def ring_points(n: int, r_lo: float, r_hi: float, seed: int) -> np.ndarray:
    """n planar points with radius uniform in [r_lo, r_hi], seeded."""
    rng = np.random.default_rng(seed)
    radius = rng.uniform(r_lo, r_hi, n)
    angle = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def fine_step(sys: SystemSpec, x: np.ndarray, dt: float, substeps: int = 100) -> np.ndarray:
    """Reference flow map: the same step composed over many substeps."""
    out = np.asarray(x, dtype=float)
    for _ in range(substeps):
        out = step(sys, out, dt / substeps)
    return out


def scalar_weighted_kernel(gamma: float, power: float, x, y) -> float:
    """Loop-free scalar oracle for the weighted Gaussian kernel."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    wx = float(np.linalg.norm(x)) ** power
    wy = float(np.linalg.norm(y)) ** power
    return wx * wy * math.exp(-gamma * float(np.sum((x - y) ** 2)))


def mp_generalization_bound(m: int, gamma: float, r: int, delta: float) -> float:
    """High-precision replica of the excess-risk radius formula."""
    with mpmath.workdps(60):
        mm = mpmath.mpf(m)
        g = mpmath.mpf(gamma)
        rr = mpmath.mpf(r)
        d = mpmath.mpf(delta)
        l6 = mpmath.log(6 / d)
        l12 = mpmath.log(12 * mm * mm / d)
        val = (
            l6 / mm
            + mpmath.sqrt(8 * l6 / mm)
            + g * (g + 2 * mpmath.sqrt(rr)) * (6 * l12 / mm + mpmath.sqrt(9 * l12 / mm))
        )
        return float(val)


def linear_lyapunov_truth(X: np.ndarray, a: float) -> np.ndarray:
    """Closed-form series value for the contraction map with w = |x|."""
    X = np.asarray(X, dtype=float)
    return np.sum(X * X, axis=-1) / (1.0 - a * a)
