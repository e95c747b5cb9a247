"""Batch experiment runner.

Subcommands: evolve, almost-conservation, strichartz, locality, an-identity,
tensorize, selftest.  Each takes one config path (flat ``key = value`` lines)
and writes a CSV of records, a JSON manifest with the fully resolved config,
and a plain-text summary with pass/fail verdicts of the built-in assertions.

Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 numerical refusal.
Environment overrides: NLSLAB_OUTDIR (output directory), NLSLAB_WORKERS
(worker count for sweep points).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, imethod, locality, solver, strichartz, tensorizer, transform
from .errors import ConfigError, InstabilityError, RefusalError
from .fields import gaussian_profile_coeffs, random_band_coeffs, sobolev_profile_coeffs
from .spectra import ManifoldKind, build_basis

EXPERIMENTS = (
    "evolve",
    "almost-conservation",
    "strichartz",
    "locality",
    "an-identity",
    "tensorize",
    "selftest",
)

_SCHEMAS: dict[str, dict[str, tuple]] = {
    # key: (type, default); REQUIRED means no default
    "evolve": {
        "manifold": (str, "torus"),
        "cutoff": (float, None),
        "lambda": (float, 1.0),
        "dt": (float, None),
        "T": (float, None),
        "scheme": (str, solver.SPLIT_STEP_STRANG),
        "record_every": (int, 10),
        "N": (float, 0.0),            # 0 disables the smoothing diagnostics
        "s": (float, 0.7),
        "bandwidth": (float, 0.0),    # 0 means cutoff / 3
        "seed": (int, 0),
        "outdir": (str, "out"),
    },
    "almost-conservation": {
        "s": (float, 0.7),
        "N_list": ("int_list", None),
        "delta": (float, 0.5),
        "dt": (float, 1e-3),
        "base_bandwidth": (float, 16.0),
        "resolve_factor": (float, 2.5),
        "seed": (int, 0),
        "slope_max": (float, -0.3),
        "record_every": (int, 10),
        "workers": (int, 1),
        "outdir": (str, "out"),
    },
    "strichartz": {
        "manifold": (str, "torus"),
        "N1_list": ("int_list", None),
        "N2": (float, 4.0),
        "trials": (int, 20),
        "regime": (str, "semiclassical"),
        "lambda": (float, 1.0),
        "rtol": (float, 1e-4),
        "max_modes": (int, 0),        # 0 means full band
        "low_band": (bool, False),
        "ratio_factor": (float, 2.0),
        "seed": (int, 0),
        "outdir": (str, "out"),
    },
    "locality": {
        "manifold": (str, "sphere"),
        "lambda_cluster": (float, 20.49),
        "mu_cluster": (float, 6.48),
        "K_list": ("float_list", [0.31, 1.0, 2.0, 3.0]),
        "quadruples": (int, 200),
        "max_xi": (int, 8),
        "tol": (float, 1e-10),
        "seed": (int, 0),
        "outdir": (str, "out"),
    },
    "an-identity": {
        "trials": (int, 100),
        "orders": (int, 2),
        "max_xi": (int, 10),
        "tol": (float, 1e-10),
        "seed": (int, 0),
        "outdir": (str, "out"),
    },
    "tensorize": {
        "symbol": (str, "energy-increment"),
        "N": (float, 16.0),
        "s": (float, 0.7),
        "level": (int, 3),
        "mode_cap": (int, 4),
        "tol": (float, 1e-6),
        "N2": (float, 64.0),
        "N3": (float, 4.0),
        "N4": (float, 1.0),
        "alpha": (int, 10),
        "beta": (int, 0),
        "outdir": (str, "out"),
    },
    "selftest": {
        "outdir": (str, "out"),
        "seed": (int, 0),
    },
}


@dataclass
class RunConfig:
    experiment: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def _parse_value(kind, raw: str, key: str, lineno: int):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "int_list":
            items = [int(x) for x in raw.replace(",", " ").split()]
            if not items:
                raise ValueError("empty list")
            return items
        if kind == "float_list":
            items = [float(x) for x in raw.replace(",", " ").split()]
            if not items:
                raise ValueError("empty list")
            return items
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: cannot parse {key!r} = {raw!r}: {exc}") from exc


def load_config(experiment: str, path: str | Path) -> RunConfig:
    if experiment not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    schema = _SCHEMAS[experiment]
    values = {k: d for k, (_, d) in schema.items()}
    seen_lines: dict[str, int] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} for {experiment}")
        if key in seen_lines:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first at line {seen_lines[key]})")
        seen_lines[key] = lineno
        values[key] = _parse_value(schema[key][0], raw, key, lineno)
    missing = [k for k, v in values.items() if v is None]
    if missing:
        raise ConfigError(f"missing required keys for {experiment}: {', '.join(missing)}")
    if "manifold" in values and values["manifold"] not in ("torus", "sphere"):
        raise ConfigError(f"manifold must be 'torus' or 'sphere', got {values['manifold']!r}")
    return RunConfig(experiment=experiment, values=values)


def _manifold(cfg: RunConfig) -> ManifoldKind:
    return ManifoldKind(cfg["manifold"])


def _outdir(cfg: RunConfig) -> Path:
    out = Path(os.environ.get("NLSLAB_OUTDIR", cfg.values.get("outdir", "out")))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _workers(cfg: RunConfig) -> int:
    env = os.environ.get("NLSLAB_WORKERS")
    if env is not None:
        return max(1, int(env))
    return max(1, int(cfg.values.get("workers", 1)))


def _write(outdir: Path, name: str, text: str):
    (outdir / name).write_text(text)


def _manifest(cfg: RunConfig, extra: dict) -> str:
    doc = {
        "experiment": cfg.experiment,
        "config": cfg.values,
        "version": __version__,
        "numpy": np.__version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True, default=str)


def _parallel_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fit_slope(xs, ys) -> float:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    a = np.vstack([lx, np.ones_like(lx)]).T
    slope, _ = np.linalg.lstsq(a, ly, rcond=None)[0]
    return float(slope)


# --- experiment bodies ------------------------------------------------------


def run_evolve(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    manifold = _manifold(cfg)
    rng = np.random.default_rng(cfg["seed"])
    basis = build_basis(manifold, cfg["cutoff"], lam=cfg["lambda"])
    bandwidth = cfg["bandwidth"] or cfg["cutoff"] / 3.0
    c0 = gaussian_profile_coeffs(basis, rng, bandwidth=bandwidth)
    mult = imethod.IMultiplier(N=cfg["N"], s=cfg["s"]) if cfg["N"] else None
    ecfg = solver.EvolveConfig(
        dt=cfg["dt"], T=cfg["T"], scheme=cfg["scheme"],
        record_every=cfg["record_every"], mult=mult,
    )
    traj = solver.evolve(c0, ecfg)
    _write(outdir, "trajectory.csv", solver.trajectory_csv(traj))
    _write(outdir, "manifest.json", _manifest(cfg, {"basis": basis.descriptor()}))
    mass0, mass1 = traj.reports[0].mass, traj.reports[-1].mass
    drift = abs(mass1 - mass0)
    ok = drift <= 1e-9 * max(mass0, 1.0)
    lines = [
        f"steps recorded: {len(traj.times)}",
        f"mass drift: {drift:.3e} -> {'PASS' if ok else 'FAIL'} (tolerance 1e-9 relative)",
    ]
    return lines, ok


def _conservation_point(args):
    cfg, n_cut, seed = args
    s = cfg["s"]
    lam = float(n_cut) ** ((1.0 - s) / s)
    rng = np.random.default_rng(seed)
    base_basis = build_basis(ManifoldKind.TORUS, cfg["base_bandwidth"])
    u_base = sobolev_profile_coeffs(base_basis, rng, s=s, bandwidth=cfg["base_bandwidth"])
    # headroom above the smoothing cutoff so the spectral flux past N is resolved
    resolve = max(cfg["base_bandwidth"] * 1.25, cfg["resolve_factor"] * n_cut * lam)
    big_base = build_basis(ManifoldKind.TORUS, resolve)
    values = np.zeros(big_base.n_modes, dtype=np.complex128)
    for i, lab in enumerate(map(tuple, base_basis.labels)):
        values[big_base.label_index[lab]] = u_base.values[i]
    from .spectra import SpectralCoeffs

    u0 = imethod.rescale_data(SpectralCoeffs(big_base, values), lam)
    mult = imethod.IMultiplier(N=float(n_cut), s=s)
    ecfg = solver.EvolveConfig(
        dt=cfg["dt"], T=cfg["delta"], record_every=cfg["record_every"], mult=mult
    )
    traj = solver.evolve(u0, ecfg)
    _, increment = solver.modified_energy_series(traj, mult)
    e0 = traj.reports[0].modified_energy
    return n_cut, lam, e0, increment


def run_almost_conservation(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    root = np.random.SeedSequence(cfg["seed"])
    data_seed = root.spawn(1)[0]
    points = [(cfg, n, data_seed) for n in cfg["N_list"]]
    results = _parallel_map(_conservation_point, points, _workers(cfg))
    results.sort(key=lambda r: r[0])

    rows = ["N,lambda,initial_modified_energy,increment"]
    for n_cut, lam, e0, inc in results:
        rows.append(f"{n_cut},{lam:.17g},{e0:.17g},{inc:.17g}")
    slope = _fit_slope([r[0] for r in results], [max(r[3], 1e-300) for r in results])
    rows.append(f"# fitted_slope,{slope:.17g}")
    _write(outdir, "almost_conservation.csv", "\n".join(rows) + "\n")
    _write(outdir, "manifest.json", _manifest(cfg, {"fitted_slope": slope}))
    ok = slope <= cfg["slope_max"]
    decreasing = all(
        results[i][3] >= results[i + 1][3] * 0.5 for i in range(len(results) - 1)
    )
    lines = [
        "N, lambda, increment:",
        *(
            f"  N={n:>3}  lambda={lam:.4f}  E0={e0:.3e}  sup-increment={inc:.3e}"
            for n, lam, e0, inc in results
        ),
        f"fitted log-log slope: {slope:.4f} "
        f"-> {'PASS' if ok else 'FAIL'} (require <= {cfg['slope_max']})",
        f"increments broadly decreasing: {decreasing}",
    ]
    return lines, ok


def run_strichartz(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    manifold = _manifold(cfg)
    samples = strichartz.strichartz_sweep(
        N1_list=cfg["N1_list"],
        N2=cfg["N2"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        manifold=manifold,
        lam=cfg["lambda"],
        regime=cfg["regime"],
        rtol=cfg["rtol"],
        max_modes=cfg["max_modes"] or None,
        low_band=cfg["low_band"],
    )
    _write(outdir, "strichartz.csv", strichartz.sweep_csv(samples))
    by_n1: dict[float, list[float]] = {}
    for s in samples:
        by_n1.setdefault(s.N1, []).append(s.ratio)
    n1s = sorted(by_n1)
    max_lo = max(by_n1[n1s[0]])
    max_hi = max(by_n1[n1s[-1]])
    factor = max(max_hi / max_lo, max_lo / max_hi)
    ok = factor <= cfg["ratio_factor"]
    _write(outdir, "manifest.json", _manifest(cfg, {"ratio_spread_factor": factor}))
    lines = [
        *(f"  N1={n1:>6g}  max ratio={max(by_n1[n1]):.4f}  mean={np.mean(by_n1[n1]):.4f}"
          for n1 in n1s),
        f"max-ratio spread between N1={n1s[0]:g} and N1={n1s[-1]:g}: {factor:.3f} "
        f"-> {'PASS' if ok else 'FAIL'} (require <= {cfg['ratio_factor']})",
    ]
    return lines, ok


def run_locality(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    manifold = _manifold(cfg)
    lines: list[str] = []
    ok = True
    rng = np.random.default_rng(cfg["seed"])

    if manifold is ManifoldKind.SPHERE:
        rows = locality.cluster_decay_table(
            cfg["lambda_cluster"], cfg["mu_cluster"], cfg["K_list"], seed=cfg["seed"]
        )
        body = [",".join(locality.ClusterDecayRow.CSV_COLUMNS)]
        for r in rows:
            body.append(
                f"{r.manifold},{r.lam_cluster:.17g},{r.mu_cluster:.17g},{r.branch},"
                f"{r.K:.17g},{r.nu:.17g},{r.norm:.17g},{r.prefactor:.17g},{r.seed}"
            )
        _write(outdir, "locality.csv", "\n".join(body) + "\n")
        triangle_k = (
            cfg["lambda_cluster"] + 1.0 + cfg["mu_cluster"] + 1.0 - cfg["lambda_cluster"] - 2.0
        ) / cfg["mu_cluster"]
        beyond = [r for r in rows if r.branch == "upper" and r.K > triangle_k]
        worst = max((r.norm for r in beyond), default=0.0)
        ok = worst <= cfg["tol"]
        lines += [
            f"rows: {len(rows)} (see locality.csv)",
            f"beyond-triangle rows: {len(beyond)}, worst norm {worst:.3e} "
            f"-> {'PASS' if ok else 'FAIL'} (tolerance {cfg['tol']:g})",
        ]
    else:
        basis = build_basis(ManifoldKind.TORUS, 4.0 * cfg["max_xi"])
        worst = 0.0
        checked = 0
        from .spectra import single_mode

        body = ["xi1,xi2,xi3,xi4,integral_abs,triangle_active"]
        for _ in range(cfg["quadruples"]):
            xis = rng.integers(-cfg["max_xi"], cfg["max_xi"] + 1, size=(4, 2))
            if (xis.sum(axis=0) == 0).all():
                continue  # resonant; handled by the control assertion below
            chars = [single_mode(basis, (int(a), int(b)), 2.0 * math.pi) for a, b in xis]
            val = abs(transform.correlation_integral(chars))
            worst = max(worst, val)
            checked += 1
            body.append(
                ",".join(f"{a};{b}" for a, b in xis) + f",{val:.17g},offres"
            )
        _write(outdir, "locality.csv", "\n".join(body) + "\n")
        ok = worst <= cfg["tol"]
        lines += [
            f"off-resonance quadruples checked: {checked}, worst |integral| {worst:.3e} "
            f"-> {'PASS' if ok else 'FAIL'} (tolerance {cfg['tol']:g})",
        ]
    _write(outdir, "manifest.json", _manifest(cfg, {}))
    return lines, ok


def run_an_identity(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    used = 0
    skipped = 0
    body = ["xi2,xi3,xi4,denominator,order,rel_error"]
    while used < cfg["trials"]:
        xis = rng.integers(-cfg["max_xi"], cfg["max_xi"] + 1, size=(3, 2))
        res = locality.an_identity_check(*xis, n_iters=cfg["orders"])
        if res.skipped:
            skipped += 1
            continue
        used += 1
        quad = ",".join(f"{a};{b}" for a, b in res.xi[1:])
        for row in res.rows:
            worst = max(worst, row.rel_error)
            body.append(f"{quad},{res.denominator:.17g},{row.order},{row.rel_error:.17g}")
    _write(outdir, "an_identity.csv", "\n".join(body) + "\n")
    ok = worst <= cfg["tol"]
    _write(outdir, "manifest.json", _manifest(cfg, {"max_rel_error": worst}))
    lines = [
        f"resonant quadruples checked: {used} (skipped {skipped} with |denominator| < 1)",
        f"max relative identity error: {worst:.3e} "
        f"-> {'PASS' if ok else 'FAIL'} (tolerance {cfg['tol']:g})",
    ]
    return lines, ok


def run_tensorize(cfg: RunConfig) -> tuple[list[str], bool]:
    outdir = _outdir(cfg)
    mult = imethod.IMultiplier(N=cfg["N"], s=cfg["s"])
    if cfg["symbol"] == "energy-increment":
        block = tensorizer.separated_interval_block(
            mult, level=cfg["level"], N2=cfg["N2"], N3=cfg["N3"], N4=cfg["N4"],
            alpha=cfg["alpha"], beta=cfg["beta"],
        )
    elif cfg["symbol"] == "multiplier-ratio":
        block = tensorizer.multiplier_ratio_symbol(mult, cfg["N2"], cfg["N3"])
    elif cfg["symbol"] == "constant":
        block = tensorizer.constant_symbol(2, 1.0, scales=(cfg["N2"], cfg["N3"]))
    else:
        raise ConfigError(f"unknown symbol {cfg['symbol']!r}")
    expansion = tensorizer.tensorize(block, mode_cap=cfg["mode_cap"], tol=cfg["tol"])
    _write(outdir, "tensor_expansion.json", expansion.to_json())
    _write(outdir, "manifest.json", _manifest(cfg, {"sup_error": expansion.sup_error}))
    lines = [
        f"symbol {block.name}, arity {block.arity}, mode cap {cfg['mode_cap']}",
        f"window: {expansion.window_id}",
        f"l1 mass: {expansion.l1_mass:.6g}",
        f"sup reconstruction error: {expansion.sup_error:.3e} "
        f"-> {'PASS' if expansion.ok else 'FAIL'} (tolerance {cfg['tol']:g})",
    ]
    return lines, expansion.ok


def run_selftest(cfg: RunConfig) -> tuple[list[str], bool]:
    """Fast end-to-end exercise of each experiment family."""
    lines = []
    all_ok = True
    rng = np.random.default_rng(cfg["seed"])

    basis = build_basis(ManifoldKind.TORUS, 8.0)
    c = gaussian_profile_coeffs(basis, rng, bandwidth=8.0 / 3.0)
    traj = solver.evolve(c, solver.EvolveConfig(dt=1e-3, T=0.02, record_every=10))
    drift = abs(traj.reports[-1].mass - traj.reports[0].mass)
    ok = drift < 1e-12
    all_ok &= ok
    lines.append(f"solver mass drift {drift:.2e} -> {'PASS' if ok else 'FAIL'}")

    u0 = random_band_coeffs(basis, (4, 8), rng)
    v0 = random_band_coeffs(basis, (2, 4), rng)
    ratio = strichartz.bilinear_norm(u0, v0, 0.25, rtol=1e-6) / strichartz.lambda_reference(0.25, 4, 2)
    ok = 0.001 < ratio < 100.0
    all_ok &= ok
    lines.append(f"bilinear ratio {ratio:.3f} -> {'PASS' if ok else 'FAIL'}")

    res = locality.an_identity_check((3, 1), (1, 2), (2, -1), n_iters=2)
    worst = max(r.rel_error for r in res.rows) if not res.skipped else float("nan")
    ok = (not res.skipped) and worst < 1e-10
    all_ok &= ok
    lines.append(f"contraction identity error {worst:.2e} -> {'PASS' if ok else 'FAIL'}")

    verdict = locality.crude_localization_check(
        [random_band_coeffs(basis, b, rng) for b in ((7, 8), (1, 2), (1, 2), (1, 2))]
    )
    all_ok &= verdict.passed
    lines.append(
        f"triangle rule |integral| {abs(verdict.integral):.2e} -> "
        f"{'PASS' if verdict.passed else 'FAIL'}"
    )

    exp = tensorizer.tensorize(tensorizer.constant_symbol(2, 1.0, scales=(4.0, 4.0)), 4)
    got = tensorizer.apply_tensorized_form(exp, [u0, v0])
    want = transform.correlation_integral([u0, v0])
    ok = abs(got - want) < 1e-10
    all_ok &= ok
    lines.append(f"tensorized form error {abs(got - want):.2e} -> {'PASS' if ok else 'FAIL'}")

    mrep = imethod.functionals(c, imethod.IMultiplier(N=4, s=0.7))
    ok = mrep.modified_energy == mrep.kinetic + mrep.potential and mrep.modified_energy >= 0
    all_ok &= ok
    lines.append(f"energy report consistent -> {'PASS' if ok else 'FAIL'}")
    return lines, all_ok


_RUNNERS = {
    "evolve": run_evolve,
    "almost-conservation": run_almost_conservation,
    "strichartz": run_strichartz,
    "locality": run_locality,
    "an-identity": run_an_identity,
    "tensorize": run_tensorize,
    "selftest": run_selftest,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlslab", description="cubic NLS spectral laboratory experiment runner"
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        if name == "selftest":
            p.add_argument("config", nargs="?", default=None)
        else:
            p.add_argument("config")
    args = parser.parse_args(argv)

    try:
        if args.experiment == "selftest" and args.config is None:
            cfg = RunConfig("selftest", {k: d for k, (_, d) in _SCHEMAS["selftest"].items()})
        else:
            cfg = load_config(args.experiment, args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        lines, ok = _RUNNERS[args.experiment](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RefusalError as exc:
        print(f"numerical refusal: {exc}", file=sys.stderr)
        return 3
    except InstabilityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    summary = "\n".join([f"experiment: {cfg.experiment}", *lines,
                         f"verdict: {'PASS' if ok else 'FAIL'}"]) + "\n"
    print(summary, end="")
    try:
        _write(_outdir(cfg), "summary.txt", summary)
    except OSError as exc:
        print(f"cannot write summary: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
