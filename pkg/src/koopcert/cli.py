"""Command line front end: sample, fit, certify, report, reproduce.

Exit codes: 0 success, 1 configuration or validation problem, 2 degenerate
sampling domain, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .certificates import (
    accumulated_costs,
    bound_report,
    build_lyapunov,
    build_zubov,
    doa_level_threshold,
    estimate_mu_table,
    grid_eval,
    lyapunov_values,
    mu_from_table,
    zubov_error_bound,
    zubov_values,
)
from .config import EXAMPLE1_CONFIG, EXAMPLE2_CONFIG, RunConfig, load_config
from .dynsys import (
    check_decay_ratio,
    make_dataset,
    oracle_lyapunov_batch,
    oracle_zubov_batch,
    sample_uniform,
    step,
    trajectory,
)
from .errors import (
    ContractionViolatedError,
    DegenerateDomainError,
    EtaMismatchError,
    InvalidInputError,
    KoopcertError,
)
from .estimator import fit_koopman, fit_zubov_koopman, predict_observable
from .io import (
    fmt,
    read_dataset,
    read_model,
    write_dataset,
    write_grid,
    write_model,
    write_report,
)
from .kernels import weight_values


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve that
    for degenerate-domain failures, so remap usage problems to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _outdir(args, cfg: RunConfig | None = None) -> Path:
    raw = args.out or (cfg.output.dir if cfg is not None else "out")
    out = Path(raw)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> RunConfig:
    return load_config(args.config, seed_override=args.seed)


def _sample(cfg: RunConfig):
    eta = cfg.eta if cfg.certificate.mode == "zubov" else None
    return make_dataset(
        cfg.system,
        cfg.domain,
        cfg.sampling.m,
        cfg.sampling.dt,
        cfg.sampling.seed,
        cfg.kw.weight,
        eta=eta,
    )


def cmd_sample(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    ds = _sample(cfg)
    path = out / "dataset.csv"
    write_dataset(ds, path)
    alpha = check_decay_ratio(ds, cfg.kw.weight, eta=cfg.eta if ds.eta_x is not None else None)
    _say(args, f"wrote {path} ({len(ds)} pairs, {ds.rejected_count} rejected)")
    _say(args, f"decay ratio alpha_hat = {fmt(alpha)}")
    if alpha >= 1:
        _warn("alpha_hat >= 1: the weight does not contract on this sample")
    return 0


def _fit(cfg: RunConfig, ds):
    if cfg.certificate.mode == "zubov":
        return fit_zubov_koopman(ds, cfg.kw, cfg.eta, cfg.rrr)
    return fit_koopman(ds, cfg.kw, cfg.rrr)


def cmd_fit(args) -> int:
    from .estimator import operator_norm_bound

    cfg = _load(args)
    out = _outdir(args, cfg)
    ds_path = Path(args.dataset) if args.dataset else out / "dataset.csv"
    ds = read_dataset(ds_path)
    model = _fit(cfg, ds)
    path = out / "model.txt"
    write_model(model, path)
    d = model.diagnostics
    _say(args, f"wrote {path} (mode={model.mode}, m={len(model)}, rank={model.rank})")
    _say(args, f"empirical risk   = {fmt(d.risk)}")
    _say(args, f"hs norm          = {fmt(d.hs_norm)}")
    _say(args, f"operator norm    = {fmt(d.op_norm)}")
    _say(args, f"norm bound       = {fmt(operator_norm_bound(model))}")
    head = ", ".join(fmt(v) for v in d.sigma_sq[:5])
    _say(args, f"sigma^2 head     = {head}")
    if d.op_norm >= 1:
        _warn("operator norm >= 1: raise beta (rrr.beta_scale) or enlarge the sample")
    return 0


def cmd_lyapunov(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    model = read_model(Path(args.model) if args.model else out / "model.txt")
    est = build_lyapunov(model, tol=cfg.certificate.tol, horizon=cfg.certificate.horizon)
    coords, vals = grid_eval(
        lambda pts: lyapunov_values(est, pts), cfg.domain, cfg.output.grid_resolution
    )
    grid_path = out / "lyapunov_grid.csv"
    write_grid(coords, vals, grid_path)
    report = bound_report(model, delta=cfg.certificate.delta)
    report_path = out / "report.txt"
    write_report(report, report_path)
    _say(args, f"wrote {grid_path} and {report_path}")
    _say(args, f"series horizon = {est.horizon}, tail bound = {fmt(est.tail_bound)}")
    if est.alpha_source != "op_norm":
        _warn(
            f"fitted operator norm {fmt(model.diagnostics.op_norm)} >= 1; horizon "
            f"chosen from the observed decay ratio {fmt(est.alpha)} instead"
        )
    return 0


def cmd_zubov(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    model = read_model(Path(args.model) if args.model else out / "model.txt")
    cert = cfg.certificate
    steps = cert.zubov_steps(cfg.sampling.dt)
    est = build_zubov(model, steps, nu=cert.nu, varsigma=cert.varsigma)
    coords, vals = grid_eval(
        lambda pts: zubov_values(est, pts), cfg.domain, cfg.output.grid_resolution
    )
    grid_path = out / "zubov_grid.csv"
    write_grid(coords, vals, grid_path)
    report = bound_report(model, delta=cert.delta, nu=cert.nu, varsigma=cert.varsigma)
    report_path = out / "report.txt"
    write_report(report, report_path)
    err = zubov_error_bound(
        steps, report.alpha_plug, report.empirical_risk, cert.nu, cert.varsigma
    )
    _say(args, f"wrote {grid_path} and {report_path}")
    _say(args, f"steps = {steps}, plug-in error bound = {fmt(err)}")
    return 0


def cmd_report(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    model = read_model(Path(args.model) if args.model else out / "model.txt")
    heldout = make_dataset(
        cfg.system,
        cfg.domain,
        cfg.sampling.m,
        cfg.sampling.dt,
        cfg.sampling.seed + 1,
        cfg.kw.weight,
        eta=model.eta,
    )
    report = bound_report(
        model,
        delta=cfg.certificate.delta,
        heldout=heldout,
        nu=cfg.certificate.nu,
        varsigma=cfg.certificate.varsigma,
    )
    path = out / "report.txt"
    write_report(report, path)
    _say(args, f"wrote {path}")
    _say(args, f"empirical risk = {fmt(report.empirical_risk)}")
    _say(args, f"held-out risk  = {fmt(report.heldout_risk)}")
    _say(args, f"excess bound   = {fmt(report.excess_risk)} (delta={cfg.certificate.delta:g})")
    _say(args, f"plug-in alpha  = {fmt(report.alpha_plug)}")
    return 0


def _reproduce_lyapunov(args, cfg: RunConfig, model, out: Path) -> None:
    est = build_lyapunov(model, tol=cfg.certificate.tol)
    if est.alpha_source != "op_norm":
        _warn(
            f"fitted operator norm {fmt(model.diagnostics.op_norm)} >= 1; horizon "
            f"chosen from the observed decay ratio {fmt(est.alpha)} instead"
        )
    res = cfg.output.grid_resolution
    coords, vals = grid_eval(lambda pts: lyapunov_values(est, pts), cfg.domain, res)
    write_grid(coords, vals, out / "lyapunov_grid.csv")
    oracle = oracle_lyapunov_batch(cfg.system, cfg.kw, coords, cfg.sampling.dt, tail_tol=1e-10)
    write_grid(coords, oracle, out / "lyapunov_oracle_grid.csv")
    _say(args, f"wrote lyapunov grids ({res}x{res}, horizon {est.horizon})")

    # Observable tracking from one seeded start: truth w(x_t) q(x_t) against
    # the model's t-step prediction, for two quadratics.
    rng = np.random.default_rng(cfg.sampling.seed + 3)
    x0 = sample_uniform(cfg.domain, 8, cfg.sampling.seed + 3)[int(rng.integers(8))]
    horizon = 100
    traj = trajectory(cfg.system, x0, cfg.sampling.dt, horizon)
    quads = {
        "q1": lambda pts: np.sum(pts * pts, axis=-1),
        "q2": lambda pts: (pts[..., 0] - pts[..., 1]) ** 2,
    }
    w_traj = weight_values(cfg.kw.weight, traj)
    lines = ["step,time," + ",".join(f"truth_{n},pred_{n}" for n in quads)]
    for t in range(horizon + 1):
        cells = [str(t), fmt(t * cfg.sampling.dt)]
        for name, q in quads.items():
            truth = float(w_traj[t] * q(traj[t]))
            pred = predict_observable(model, lambda pts, q=q: q(pts), x0, t)
            cells.extend([fmt(truth), fmt(pred)])
        lines.append(",".join(cells))
    (out / "observables.csv").write_text("\n".join(lines) + "\n")
    _say(args, f"wrote observables.csv (start {fmt(x0[0])}, {fmt(x0[1])})")


def _reproduce_zubov(args, cfg: RunConfig, model, out: Path) -> None:
    cert = cfg.certificate
    steps = cert.zubov_steps(cfg.sampling.dt)
    est = build_zubov(model, steps, nu=cert.nu, varsigma=cert.varsigma)
    res = cfg.output.grid_resolution
    coords, vals = grid_eval(lambda pts: zubov_values(est, pts), cfg.domain, res)
    write_grid(coords, vals, out / "zubov_grid.csv")
    oracle = oracle_zubov_batch(
        cfg.system, cfg.kw.weight, cfg.eta, coords, cfg.sampling.dt, steps, cert.nu, cert.varsigma
    )
    write_grid(coords, oracle, out / "zubov_oracle_grid.csv")
    _say(args, f"wrote zubov grids ({res}x{res}, {steps} steps)")

    # Attraction-level certificate: estimate the cost table and the decay
    # floor from simulation, then bisect for the largest certified level.
    seed = cfg.sampling.seed + 2
    levels = np.linspace(0.1, 1.0, 10)
    table = estimate_mu_table(
        cfg.system, cfg.domain, cfg.kw.weight, cfg.eta, levels, 500, cfg.sampling.dt, seed
    )
    pool = sample_uniform(cfg.domain, 500, seed)
    costs = accumulated_costs(cfg.system, cfg.eta, pool, cfg.sampling.dt)
    attracted = np.isfinite(costs)
    eta_pool = cfg.eta.values(pool)
    eta_lower = float(np.min(eta_pool[~attracted])) if np.any(~attracted) else float("inf")
    wx = weight_values(cfg.kw.weight, pool)
    wy = weight_values(cfg.kw.weight, step(cfg.system, pool, cfg.sampling.dt))
    ok = attracted & (wx > 0)
    alpha_lower = min(float(np.min(wy[ok] / wx[ok])), 1.0) if np.any(ok) else 1.0
    a_star = None
    if alpha_lower > 0 and np.isfinite(eta_lower):
        a_star = doa_level_threshold(
            eta_lower,
            mu_from_table(table),
            alpha_lower,
            cert.varsigma,
            bracket=(float(levels[0]), float(levels[-1])),
        )
    lines = ["[doa]"]
    lines.append(f"eta_lower={fmt(eta_lower)}")
    lines.append(f"alpha_lower={fmt(alpha_lower)}")
    lines.append(f"a_star={'none' if a_star is None else fmt(a_star)}")
    lines.append("[mu_table]")
    for a, mu in table.items():
        lines.append(f"{fmt(a)}={fmt(mu)}")
    (out / "doa.txt").write_text("\n".join(lines) + "\n")
    if a_star is None:
        _say(args, "doa: no level in the bracket certified")
    else:
        _say(args, f"doa: certified weight level a* = {fmt(a_star)}")


def cmd_reproduce(args) -> int:
    text = EXAMPLE1_CONFIG if args.example == "example1" else EXAMPLE2_CONFIG
    out = Path(args.out) if args.out else Path(f"out-{args.example}")
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.ini"
    cfg_path.write_text(text)
    cfg = load_config(cfg_path, seed_override=args.seed)

    ds = _sample(cfg)
    write_dataset(ds, out / "dataset.csv")
    alpha = check_decay_ratio(ds, cfg.kw.weight, eta=cfg.eta if ds.eta_x is not None else None)
    _say(args, f"sampled {len(ds)} pairs, alpha_hat = {fmt(alpha)}")

    model = _fit(cfg, ds)
    write_model(model, out / "model.txt")
    _say(args, f"fit: risk = {fmt(model.diagnostics.risk)}, op norm = {fmt(model.diagnostics.op_norm)}")

    heldout = make_dataset(
        cfg.system,
        cfg.domain,
        cfg.sampling.m,
        cfg.sampling.dt,
        cfg.sampling.seed + 1,
        cfg.kw.weight,
        eta=model.eta,
    )
    report = bound_report(
        model,
        delta=cfg.certificate.delta,
        heldout=heldout,
        nu=cfg.certificate.nu,
        varsigma=cfg.certificate.varsigma,
    )
    write_report(report, out / "report.txt")

    if args.example == "example1":
        _reproduce_lyapunov(args, cfg, model, out)
    else:
        _reproduce_zubov(args, cfg, model, out)
    _say(args, f"artifacts in {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="koopcert", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--seed", type=int, help="override the sampling seed")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--quiet", action="store_true", help="suppress status lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw a snapshot dataset")
    p.set_defaults(func=cmd_sample)
    p = sub.add_parser("fit", parents=[common], help="fit the operator from a dataset")
    p.add_argument("dataset", nargs="?", help="dataset CSV (default <out>/dataset.csv)")
    p.set_defaults(func=cmd_fit)
    p = sub.add_parser("lyapunov", parents=[common], help="evaluate the stability certificate grid")
    p.add_argument("model", nargs="?", help="model file (default <out>/model.txt)")
    p.set_defaults(func=cmd_lyapunov)
    p = sub.add_parser("zubov", parents=[common], help="evaluate the attraction indicator grid")
    p.add_argument("model", nargs="?", help="model file (default <out>/model.txt)")
    p.set_defaults(func=cmd_zubov)
    p = sub.add_parser("report", parents=[common], help="write the bound report")
    p.add_argument("model", nargs="?", help="model file (default <out>/model.txt)")
    p.set_defaults(func=cmd_report)
    p = sub.add_parser("reproduce", parents=[common], help="run a benchmark pipeline end to end")
    p.add_argument("example", choices=("example1", "example2"))
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func in (cmd_sample, cmd_fit, cmd_lyapunov, cmd_zubov, cmd_report) and not args.config:
        parser.error(f"{args.command} requires --config")
    try:
        return args.func(args)
    except (InvalidInputError, EtaMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegenerateDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractionViolatedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: raise beta (rrr.beta_scale) or enlarge the sample", file=sys.stderr)
        return 3
    except KoopcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
