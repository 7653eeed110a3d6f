"""Plain-text persistence: datasets, fitted models, grids, and reports.

All floats are written with 17 significant digits so that reading them
back reproduces the original doubles bit for bit, which is what makes the
pipeline byte-reproducible and lets a reloaded model reproduce its stored
diagnostics exactly.
"""

from __future__ import annotations

import configparser
import io as _io
from pathlib import Path

import numpy as np

from .certificates import BoundReport
from .dynsys import SnapshotDataset
from .errors import InvalidInputError
from .estimator import (
    EtaSpec,
    FitDiagnostics,
    KoopmanModel,
    RRRConfig,
    empirical_risk,
)
from .kernels import KernelSpec, WeightedKernelSpec, WeightSpec


def fmt(x: float) -> str:
    """17-significant-digit decimal rendering; round-trips float64 exactly."""
    return format(float(x), ".17g")


def _fmt_row(row) -> str:
    return ",".join(fmt(v) for v in row)


def write_dataset(ds: SnapshotDataset, path: str | Path) -> None:
    """CSV of snapshot pairs plus a .meta sidecar with the draw settings."""
    path = Path(path)
    n = ds.X.shape[1]
    cols = [f"x{i+1}" for i in range(n)] + [f"y{i+1}" for i in range(n)]
    if ds.eta_x is not None:
        cols.append("eta")
    lines = [",".join(cols)]
    for i in range(len(ds)):
        row = list(ds.X[i]) + list(ds.Y[i])
        if ds.eta_x is not None:
            row.append(ds.eta_x[i])
        lines.append(_fmt_row(row))
    path.write_text("\n".join(lines) + "\n")

    meta = configparser.ConfigParser()
    meta["dataset"] = {
        "m": str(len(ds)),
        "dim": str(n),
        "seed": str(ds.seed),
        "dt": fmt(ds.dt),
        "rejected_count": str(ds.rejected_count),
    }
    with open(path.with_suffix(path.suffix + ".meta"), "w") as fh:
        meta.write(fh)


def read_dataset(path: str | Path) -> SnapshotDataset:
    path = Path(path)
    text = path.read_text().strip().split("\n")
    header = text[0].split(",")
    has_eta = header[-1] == "eta"
    n = (len(header) - (1 if has_eta else 0)) // 2
    try:
        rows = np.array([[float(v) for v in line.split(",")] for line in text[1:]], dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"malformed dataset file {path}: {exc}") from exc
    if rows.ndim != 2 or rows.shape[1] != 2 * n + (1 if has_eta else 0):
        raise InvalidInputError(f"malformed dataset file {path}")
    meta = configparser.ConfigParser()
    meta_path = path.with_suffix(path.suffix + ".meta")
    seed, dt, rejected = 0, 0.0, 0
    if meta_path.exists():
        meta.read(meta_path)
        seed = meta.getint("dataset", "seed", fallback=0)
        dt = meta.getfloat("dataset", "dt", fallback=0.0)
        rejected = meta.getint("dataset", "rejected_count", fallback=0)
    return SnapshotDataset(
        X=rows[:, :n],
        Y=rows[:, n : 2 * n],
        dt=dt,
        seed=seed,
        rejected_count=rejected,
        eta_x=rows[:, -1] if has_eta else None,
    )


def _write_matrix(out: list[str], name: str, M: np.ndarray) -> None:
    out.append(f"[{name}]")
    for row in np.atleast_2d(M):
        out.append(_fmt_row(row))


def write_model(model: KoopmanModel, path: str | Path) -> None:
    """Sectioned text format holding the specs, anchors, and coefficients."""
    out = ["# koopcert model v1", "[meta]"]
    out.append(f"mode={model.mode}")
    out.append(f"m={len(model)}")
    out.append(f"dim={model.anchors_x.shape[1]}")
    out.append(f"rank={model.rank}")
    out.append(f"beta={fmt(model.beta)}")
    out.append(f"normalization={model.normalization}")
    out.append("[kernel]")
    out.append(f"kind={model.kw.kernel.kind}")
    out.append(f"gamma={fmt(model.kw.kernel.gamma)}")
    out.append("[weight]")
    out.append(f"kind={model.kw.weight.kind}")
    out.append(f"exponent={fmt(model.kw.weight.exponent)}")
    out.append(f"floor={fmt(model.kw.weight.floor)}")
    if model.eta is not None:
        out.append("[eta]")
        out.append(f"kind={model.eta.kind}")
        out.append(f"scale={fmt(model.eta.scale)}")
    out.append("[diagnostics]")
    d = model.diagnostics
    out.append(f"risk={fmt(d.risk)}")
    out.append(f"hs_norm={fmt(d.hs_norm)}")
    out.append(f"op_norm={fmt(d.op_norm)}")
    out.append(f"op_norm_gram_variant={fmt(d.op_norm_gram_variant)}")
    out.append(f"sigma_sq={_fmt_row(d.sigma_sq)}")
    _write_matrix(out, "anchors_x", model.anchors_x)
    _write_matrix(out, "anchors_y", model.anchors_y)
    _write_matrix(out, "theta", model.theta)
    Path(path).write_text("\n".join(out) + "\n")


def _parse_sections(text: str) -> dict[str, list[str]]:
    sections: dict[str, list[str]] = {}
    current = None
    for line in text.split("\n"):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return sections


def _kv(lines: list[str]) -> dict[str, str]:
    out = {}
    for line in lines:
        if "=" not in line:
            raise InvalidInputError(f"expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def read_model(path: str | Path) -> KoopmanModel:
    """Rebuild a fitted model; Gram caches are recomputed from the anchors."""
    from .kernels import gram

    sections = _parse_sections(Path(path).read_text())
    for needed in ("meta", "kernel", "weight", "diagnostics", "anchors_x", "anchors_y", "theta"):
        if needed not in sections:
            raise InvalidInputError(f"model file is missing the [{needed}] section")
    meta = _kv(sections["meta"])
    kern = _kv(sections["kernel"])
    wspec = _kv(sections["weight"])
    diag = _kv(sections["diagnostics"])
    kw = WeightedKernelSpec(
        KernelSpec(kind=kern["kind"], gamma=float(kern["gamma"])),
        WeightSpec(kind=wspec["kind"], exponent=float(wspec["exponent"]), floor=float(wspec["floor"])),
    )
    eta = None
    if "eta" in sections:
        e = _kv(sections["eta"])
        eta = EtaSpec(kind=e["kind"], scale=float(e["scale"]))
    X = np.array([[float(v) for v in line.split(",")] for line in sections["anchors_x"]])
    Y = np.array([[float(v) for v in line.split(",")] for line in sections["anchors_y"]])
    theta = np.array([[float(v) for v in line.split(",")] for line in sections["theta"]])
    m = int(meta["m"])
    if X.shape != (m, int(meta["dim"])) or theta.shape != (m, m):
        raise InvalidInputError("model file arrays disagree with the declared sizes")
    K = gram(kw, X, X)
    Lp = gram(kw, Y, Y)
    damping = None
    mode = meta["mode"]
    if mode == "zubov":
        if eta is None:
            raise InvalidInputError("zubov-mode model file lacks an [eta] section")
        damping = np.exp(-eta.values(X))
        Lt = damping[:, None] * Lp * damping[None, :]
    elif mode == "koopman":
        Lt = Lp
    else:
        raise InvalidInputError(f"unknown model mode {mode!r}")
    diagnostics = FitDiagnostics(
        sigma_sq=np.array([float(v) for v in diag["sigma_sq"].split(",")]),
        risk=float(diag["risk"]),
        hs_norm=float(diag["hs_norm"]),
        op_norm=float(diag["op_norm"]),
        op_norm_gram_variant=float(diag["op_norm_gram_variant"]),
    )
    return KoopmanModel(
        anchors_x=X,
        anchors_y=Y,
        theta=theta,
        kw=kw,
        mode=mode,
        eta=eta,
        beta=float(meta["beta"]),
        rank=int(meta["rank"]),
        normalization=meta["normalization"],
        gram_x=K,
        gram_target=Lt,
        cross_xy=gram(kw, X, Y),
        damping=damping,
        diagnostics=diagnostics,
    )


def write_grid(coords: np.ndarray, values: np.ndarray, path: str | Path) -> None:
    """CSV with one row per grid point: coordinates then the value."""
    n = coords.shape[1]
    lines = [",".join([f"x{i+1}" for i in range(n)] + ["value"])]
    for c, v in zip(coords, values):
        lines.append(_fmt_row(list(c) + [v]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_report(report: BoundReport, path: str | Path) -> None:
    """Bound report as a sectioned key=value file."""
    cp = configparser.ConfigParser()
    cp["inputs"] = {
        "m": str(report.m),
        "gamma": fmt(report.gamma),
        "rank": str(report.rank),
        "delta": fmt(report.delta),
    }
    bounds = {
        "eps_x": fmt(report.eps_x),
        "eps_y": fmt(report.eps_y),
        "excess_risk": fmt(report.excess_risk),
        "empirical_risk": fmt(report.empirical_risk),
        "op_norm": fmt(report.op_norm),
        "norm_bound": fmt(report.norm_bound),
        "alpha_plug": fmt(report.alpha_plug),
        "lyapunov_const": fmt(report.lyapunov_const),
    }
    if report.heldout_risk is not None:
        bounds["heldout_risk"] = fmt(report.heldout_risk)
    if report.zubov_const is not None:
        bounds["zubov_const"] = fmt(report.zubov_const)
    cp["bounds"] = bounds
    buf = _io.StringIO()
    cp.write(buf)
    Path(path).write_text(buf.getvalue())


def roundtrip_check(model: KoopmanModel, path: str | Path) -> bool:
    """True when the reloaded model reproduces the stored risk exactly."""
    loaded = read_model(path)
    return fmt(empirical_risk(loaded)) == fmt(model.diagnostics.risk)
