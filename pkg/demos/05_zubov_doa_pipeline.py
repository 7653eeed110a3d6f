"""Attraction indicator and certified level set for a finite basin.

The second benchmark system blows up outside the region bounded by the
hyperbola x1 x2 = 2, so its basin of attraction is a strict subset of the
sampling box. A cost-damped fit drives the t-step indicator toward zero on
the non-attracting side, and a bisection over the weight level turns the
simulated cost table into a certified sublevel set.
"""

import numpy as np

from koopcert import (
    DomainSpec,
    EtaSpec,
    KernelSpec,
    RRRConfig,
    SystemSpec,
    WeightSpec,
    WeightedKernelSpec,
    accumulated_costs,
    build_zubov,
    doa_level_threshold,
    estimate_mu_table,
    fit_zubov_koopman,
    make_dataset,
    mu_from_table,
    sample_uniform,
    step,
    weight_values,
    zubov_values,
)

kw = WeightedKernelSpec(
    KernelSpec(kind="gaussian", gamma=4.0),
    WeightSpec(kind="norm-power", exponent=0.5),
)
eta = EtaSpec(kind="quadratic-norm", scale=0.5)
sys = SystemSpec.example2()
dom = DomainSpec.box((-2.0, -2.0), (2.0, 2.0))
dt = 0.025

ds = make_dataset(sys, dom, 500, dt, 42, kw.weight, eta=eta)
model = fit_zubov_koopman(ds, kw, eta, RRRConfig(rank=50))
print(f"damped fit: risk {model.diagnostics.risk:.6f}")

est = build_zubov(model, 6, nu=1.0, varsigma=0.1)
rng = np.random.default_rng(88)
box = rng.uniform(-2.0, 2.0, (4000, 2))
outside = box[box[:, 0] * box[:, 1] >= 2.0][:200]
inside = box[np.linalg.norm(box, axis=1) <= 0.6][:200]
print(f"mean indicator in the non-attracting region: {zubov_values(est, outside).mean():.5f}")
print(f"mean indicator near the equilibrium:         {zubov_values(est, inside).mean():.5f}")

# Certify a weight sublevel set. The cost table mu(a) comes from simulated
# trajectories, the decay floor alpha and the escape rate floor eta come
# from a fresh sample of the box.
levels = np.linspace(0.1, 1.0, 10)
table = estimate_mu_table(sys, dom, kw.weight, eta, levels, 500, dt, 44)
pool = sample_uniform(dom, 500, 44)
costs = accumulated_costs(sys, eta, pool, dt)
attracted = np.isfinite(costs)
eta_lower = float(np.min(eta.values(pool)[~attracted]))
wx = weight_values(kw.weight, pool)
wy = weight_values(kw.weight, step(sys, pool, dt))
alpha_lower = min(float(np.min(wy[attracted] / wx[attracted])), 1.0)
print(f"eta floor off the basin {eta_lower:.4f}, weight decay floor {alpha_lower:.4f}")

a_star = doa_level_threshold(
    eta_lower, mu_from_table(table), alpha_lower, 0.1, bracket=(0.1, 1.0)
)
print(f"certified weight level a* = {a_star}")
print(f"largest simulated cost inside that level: {mu_from_table(table)(a_star):.4f}")
