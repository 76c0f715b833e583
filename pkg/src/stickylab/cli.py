"""Command-line front end: models -> instances -> bounds -> verification.

Subcommands
-----------
model-info   partition values, interior fraction, collar comparison constants
bounds       composed super/weak rate bounds on an r-grid, with regime labels
verify-sp    super-inequality oracle + randomized verification on an instance
verify-wp    weak-inequality oracle + randomized verification on an instance
semigroup    exact decay curves and their rate-function bounds
mc           occupation-time simulation of the jump chain
report       one-stop pipeline writing all of the above into a directory

Exit codes: 0 success, 1 verification failure, 2 configuration error.
All outputs are deterministic functions of (config, seed): rerunning a
command reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import discretize, mc, ratefn, semigroup, verify
from .errors import StickyLabError, ConfigError, NonFinite
from .export import write_csv, write_svg_chart
from .model import Strip, model_from_config, model_to_config, partition_constants
from .ratefn import comparison_constants

__all__ = ["main"]


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _parse_grid(text: str, flag: str) -> np.ndarray:
    """Parse 'a:b:n' into n log-spaced points from a to b (both > 0)."""
    try:
        a_s, b_s, n_s = text.split(":")
        a, b, n = float(a_s), float(b_s), int(n_s)
    except ValueError:
        raise ConfigError(f"{flag} expects 'a:b:n', got {text!r}") from None
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise ConfigError(f"{flag} endpoints must be positive and finite, got {text!r}")
    if n < 1:
        raise ConfigError(f"{flag} needs at least one point, got {text!r}")
    return np.logspace(math.log10(a), math.log10(b), n)


def _load_model(path: str):
    p = Path(path)
    try:
        config = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return model_from_config(config)


def _seed(value: str) -> int:
    s = int(value)
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {value}")
    return s


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stage(msg: str) -> None:
    print(f"[stickylab] {msg}", flush=True)


# ---------------------------------------------------------------------------
# rate calibration shared by bounds / semigroup
# ---------------------------------------------------------------------------


def _tabulated_rate(r_values, values, margin):
    """Margin-scaled non-increasing envelope of oracle values as a rate."""
    vals = np.asarray(values, dtype=float) * margin
    vals = np.maximum.accumulate(vals[::-1])[::-1]
    keep = vals > 0
    if int(keep.sum()) < 2:
        raise ConfigError("calibration produced fewer than two positive oracle values")
    return ratefn.Tabulated(np.asarray(r_values, dtype=float)[keep], vals[keep])


def _calibrated_sp(inst, r_values, restarts, seed, margin=1.05):
    # table accuracy only has to live under the margin, so a loose ascent
    # tolerance buys a large speedup on steep-tailed instances
    vals = [
        verify.sp_oracle(inst, float(r), restarts=restarts, seed=seed, tol=1e-4).value
        for r in r_values
    ]
    return _tabulated_rate(r_values, vals, margin)


def _calibrated_wp(inst, r_values, seed, margin=1.05):
    r_values = np.asarray([r for r in r_values if r < 1.0], dtype=float)
    if r_values.size < 2:
        raise ConfigError("weak calibration needs at least two grid points below 1")
    vals = [
        verify.wp_oracle(inst, float(r), candidates=min(32, inst.n), seed=seed).value
        for r in r_values
    ]
    return _tabulated_rate(r_values, vals, margin)


def _boundary_dimension(model) -> int:
    return 1 if isinstance(model.domain, Strip) else 0


def _span_grid(lo: float, hi: float, per_decade: float = 3.0, min_points: int = 8) -> np.ndarray:
    """Log-spaced grid covering [lo, hi] with a little slack at both ends."""
    lo, hi = 0.9 * float(lo), 1.1 * float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo <= hi):
        raise NonFinite(f"calibration range [{lo:.3g}, {hi:.3g}] is degenerate")
    span = math.log10(hi / lo)
    npts = max(min_points, int(math.ceil(span * per_decade)) + 1)
    return np.logspace(math.log10(lo), math.log10(hi), npts)


def _composed_bounds(model, r_values, n_coarse, restarts, seed):
    """Composed (sp, wp) rates for a model, plus a route label and notes.

    With boundary diffusion on a genuine (>=1-dimensional) boundary, the
    component route combines interior and boundary rates through the max
    form; otherwise the collar-comparison route transfers interior rates
    alone.  Component rates are oracle tables from coarse single-measure
    instances, spanning exactly the argument range each composition maps
    the requested grid onto.  ``n_coarse=None`` picks a size the dense
    weak-oracle calibration can afford (per axis on two-dimensional
    domains).

    A steep potential can make the collar comparison constants diverge
    (the transfer hypotheses genuinely fail, e.g. a power drift blowing
    up at the sticky wall).  Each side then comes back as None with the
    reason recorded in ``notes`` instead of a number that means nothing.
    """
    if n_coarse is None:
        n_coarse = 24 if isinstance(model.domain, Strip) else 160
    r_min, r_max = float(np.min(r_values)), float(np.max(r_values))
    interior = discretize.interior_only_instance(model, n_coarse)
    try:
        consts = comparison_constants(model)
        consts_err = None
    except (NonFinite, StickyLabError) as exc:
        consts, consts_err = None, f"comparison constants unavailable: {exc}"
    sp_rate = wp_rate = None
    notes: dict = {}
    if model.boundary_diffusion > 0 and _boundary_dimension(model) >= 1:
        route = "with-boundary-diffusion"
        dl = model.boundary_diffusion
        boundary = discretize.boundary_only_instance(model, max(8, n_coarse))
        th = partition_constants(model).interior_fraction
        sp_rate = ratefn.sp_bound_with_boundary(
            _calibrated_sp(interior, _span_grid(r_min, r_max), restarts, seed),
            _calibrated_sp(boundary, _span_grid(dl * r_min, dl * r_max), restarts, seed + 1),
            th,
            dl,
        )
        if consts is None:
            notes["wp"] = consts_err
        else:
            try:
                s_lo = float(ratefn.wp_argument_with_boundary(consts, r_min))
                s_hi = float(ratefn.wp_argument_with_boundary(consts, r_max))
                wp_grid = _span_grid(s_lo, s_hi)
                wp_rate = ratefn.wp_bound_with_boundary(
                    _calibrated_wp(interior, wp_grid, seed),
                    _calibrated_wp(boundary, wp_grid, seed + 1),
                    consts,
                    dl,
                )
            except NonFinite as exc:
                notes["wp"] = str(exc)
    else:
        route = "collar-comparison"
        if consts is None:
            notes["sp"] = notes["wp"] = consts_err
        else:
            try:
                g_lo = float(ratefn.sp_argument_without_boundary(consts, r_min))
                g_hi = float(ratefn.sp_argument_without_boundary(consts, r_max))
                sp_rate = ratefn.sp_bound_without_boundary(
                    _calibrated_sp(interior, _span_grid(g_lo, g_hi), restarts, seed), consts
                )
            except NonFinite as exc:
                notes["sp"] = str(exc)
            try:
                s_lo = float(ratefn.wp_argument_without_boundary(consts, r_min))
                s_hi = float(ratefn.wp_argument_without_boundary(consts, r_max))
                wp_rate = ratefn.wp_bound_without_boundary(
                    _calibrated_wp(interior, _span_grid(s_lo, s_hi), seed), consts
                )
            except NonFinite as exc:
                notes["wp"] = str(exc)
    return sp_rate, wp_rate, route, notes


def _regime_payload(model) -> dict:
    """Closed-form regime classification when the interior potential is a power."""
    pot = model.interior_potential
    if getattr(pot, "form", None) != "power":
        return {"labels": ["unclassified"], "source": "no closed-form rate family"}
    rates = ratefn.power_potential_rates(pot.tau)
    report = ratefn.classify_regime(sp_rate=rates.sp_rate, wp_rate=rates.wp_rate)
    return {
        "labels": list(report.labels),
        "exponents": report.exponents,
        "notes": report.notes,
        "source": f"power potential tau={pot.tau:g}",
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_model_info(args) -> int:
    model = _load_model(args.config)
    summary = partition_constants(model)
    info = {
        "name": model.name,
        "config": model_to_config(model),
        "z_interior": summary.z_interior,
        "z_boundary": summary.z_boundary,
        "interior_fraction": summary.interior_fraction,
    }
    try:
        info["comparison_constants"] = comparison_constants(model).as_dict()
    except StickyLabError as exc:
        info["comparison_constants"] = f"unavailable ({exc})"
    print(json.dumps(info, indent=2, sort_keys=True))
    return 0


def cmd_bounds(args) -> int:
    model = _load_model(args.config)
    if args.r_grid is not None:
        r_values = _parse_grid(args.r_grid, "--r-grid")
    else:
        if not (args.r_min > 0 and args.r_max > 0 and args.r_points >= 1):
            raise ConfigError("need positive --r-min/--r-max and --r-points >= 1")
        r_values = np.logspace(math.log10(args.r_min), math.log10(args.r_max), args.r_points)
    _stage(f"composing rate bounds for {model.name} on {len(r_values)} grid points")
    sp_rate, wp_rate, route, notes = _composed_bounds(
        model, r_values, args.n, args.restarts, args.seed
    )
    for side, why in sorted(notes.items()):
        _stage(f"{side} bound unavailable: {why}")
    out = _out_dir(args)
    rows = []
    for r in r_values:
        sp_v = float(sp_rate.value(r)) if sp_rate is not None else ""
        if wp_rate is None:
            wp_v = ""
        else:
            wp_v = float(wp_rate.value(r)) if r < 1 else 0.0
        rows.append((r, sp_v, wp_v))
    csv_path = write_csv(out / "bounds.csv", ["r", "sp_bound", "wp_bound"], rows)
    meta = {
        "model": model.name,
        "route": route,
        "regime": _regime_payload(model),
        "sp_description": sp_rate.to_json() if sp_rate is not None else None,
        "wp_description": wp_rate.to_json() if wp_rate is not None else None,
        "notes": notes,
    }
    (out / "bounds.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    series = {}
    if sp_rate is not None:
        series["sp bound"] = [row[1] for row in rows]
    if wp_rate is not None:
        series["wp bound"] = [row[2] for row in rows]
    if args.svg and series:
        write_svg_chart(
            out / "bounds.svg",
            r_values,
            series,
            title=f"Composed rate bounds: {model.name}",
            x_label="r",
            y_label="bound",
            log_x=True,
            log_y=True,
        )
    _stage(f"wrote {csv_path}")
    return 0


def cmd_verify_sp(args) -> int:
    model = _load_model(args.config)
    r_values = _parse_grid(args.r_grid, "--r-grid")
    inst = discretize.build_instance(model, args.n)
    _stage(f"running the super oracle on {inst.n} nodes, {len(r_values)} grid points")
    results = [
        verify.sp_oracle(inst, r, restarts=args.restarts, seed=args.seed) for r in r_values
    ]
    out = _out_dir(args)
    write_csv(
        out / "sp_oracle.csv",
        ["r", "value", "spread", "iterations"],
        [(res.r, res.value, res.spread, res.iterations) for res in results],
    )
    rate = ratefn.Tabulated(r_values, np.array([res.value for res in results]) * args.margin)
    rate = ratefn.scale_rate(rate, args.bound_scale)
    _stage(f"checking {args.trials} random functions per grid point")
    report = verify.check_super_poincare(inst, rate, r_values, trials=args.trials, seed=args.seed)
    # the oracle maximizers are the sharpest witnesses: check them explicitly
    for res in results:
        lhs = float(inst.mean(res.maximizer**2))
        rhs = res.r * float(inst.energy(res.maximizer)) + float(rate.value(res.r)) * float(
            inst.mean(np.abs(res.maximizer))
        ) ** 2
        report.checked += 1
        if verify._is_violation(lhs, rhs):
            report.violations.append(
                verify.Violation(r=res.r, trial=-1, ensemble="oracle-max", lhs=lhs, rhs=rhs)
            )
    write_csv(
        out / "sp_violations.csv",
        ["r", "trial", "ensemble", "lhs", "rhs"],
        [(v.r, v.trial, v.ensemble, v.lhs, v.rhs) for v in report.violations],
    )
    if args.svg:
        write_svg_chart(
            out / "sp_oracle.svg",
            r_values,
            {"oracle": [res.value for res in results], "tested rate": rate.value(r_values)},
            title=f"Super-inequality rate: {model.name}",
            x_label="r",
            y_label="rate",
            log_x=True,
            log_y=True,
        )
    _stage(report.summary())
    return 0 if report.ok else 1


def cmd_verify_wp(args) -> int:
    model = _load_model(args.config)
    r_values = _parse_grid(args.r_grid, "--r-grid")
    inst = discretize.build_instance(model, args.n)
    _stage(f"running the weak oracle on {inst.n} nodes, {len(r_values)} grid points")
    results = [verify.wp_oracle(inst, r, seed=args.seed) for r in r_values]
    out = _out_dir(args)
    write_csv(
        out / "wp_oracle.csv",
        ["r", "value"],
        [(res.r, res.value) for res in results],
    )
    sub = np.asarray([r for r in r_values if r < 1.0])
    if sub.size == 0:
        raise ConfigError("--r-grid for verify-wp needs at least one point below 1")
    vals = np.array([res.value for res, r in zip(results, r_values) if r < 1.0])
    rate = ratefn.Tabulated(sub, np.maximum(vals, 1e-300) * args.margin)
    rate = ratefn.scale_rate(rate, args.bound_scale)
    _stage(f"checking {args.trials} random functions per grid point")
    report = verify.check_weak_poincare(inst, rate, sub, trials=args.trials, seed=args.seed)
    for res, r in zip(results, r_values):
        if r >= 1.0 or not np.any(res.maximizer):
            continue
        f = res.maximizer - float(inst.mean(res.maximizer))
        lhs = float(inst.mean(f * f))
        rhs = float(rate.value(r)) * float(inst.energy(f)) + r * float(np.max(np.abs(f))) ** 2
        report.checked += 1
        if verify._is_violation(lhs, rhs):
            report.violations.append(
                verify.Violation(r=float(r), trial=-1, ensemble="oracle-max", lhs=lhs, rhs=rhs)
            )
    write_csv(
        out / "wp_violations.csv",
        ["r", "trial", "ensemble", "lhs", "rhs"],
        [(v.r, v.trial, v.ensemble, v.lhs, v.rhs) for v in report.violations],
    )
    _stage(report.summary())
    return 0 if report.ok else 1


def cmd_semigroup(args) -> int:
    model = _load_model(args.config)
    t_values = _parse_grid(args.t_grid, "--t-grid")
    inst = discretize.build_instance(model, args.n)
    _stage(f"diagonalizing {inst.n} nodes")
    spec = semigroup.SpectralData.from_instance(inst)
    r_cal = np.logspace(-2.5, -0.05, 10)
    wp_rate = _calibrated_wp(inst, r_cal, args.seed)
    rows = []
    failures = 0
    for t in t_values:
        bracket = semigroup.norm_infty_to_2_bounds(spec, t, trials=args.trials, seed=args.seed)
        xi = ratefn.decay_profile_from_wp(wp_rate, t)
        lower_sq = bracket["lower"] ** 2
        if lower_sq > xi * (1 + 1e-10) + 1e-14:
            failures += 1
        rows.append(
            (t, semigroup.decay_2to2(spec, t), semigroup.kernel_sup(spec, t),
             bracket["lower"], bracket["upper"], xi)
        )
    out = _out_dir(args)
    csv_path = write_csv(
        out / "decay.csv",
        ["t", "decay_2to2", "kernel_sup", "lower", "upper", "xi_bound"],
        rows,
    )
    if args.svg:
        write_svg_chart(
            out / "decay.svg",
            t_values,
            {
                "2->2 decay": [row[1] for row in rows],
                "kernel sup": [row[2] for row in rows],
                "inf->2 lower": [row[3] for row in rows],
                "inf->2 upper": [row[4] for row in rows],
                "xi bound (on square)": [row[5] for row in rows],
            },
            title=f"Decay curves: {model.name}",
            x_label="t",
            y_label="norm",
            log_x=True,
            log_y=True,
        )
    _stage(f"wrote {csv_path}; {failures} of {len(t_values)} points broke the weak-rate bound")
    return 0 if failures == 0 else 1


def cmd_mc(args) -> int:
    model = _load_model(args.config)
    inst = discretize.build_instance(model, args.n)
    gen = discretize.generator_of(inst)
    theta = partition_constants(model).interior_fraction
    start = args.start if args.start == "stationary" else int(args.start)
    _stage(f"simulating horizon {args.horizon:g} on {inst.n} nodes")
    table = mc.batch_table(gen, start, args.horizon, seed=args.seed)
    stats = mc.stats_from_batches(table)
    out = _out_dir(args)
    rows = [(str(b), t_in, t_in + t_out) for b, t_in, t_out, _, _, _ in table]
    write_csv(out / "occupation.csv", ["batch", "interior_time", "total_time"], rows)
    if args.svg:
        write_svg_chart(
            out / "occupation.svg",
            np.arange(len(rows)),
            {"batch interior fraction": [r[1] / r[2] for r in rows]},
            title=f"Occupation fractions: {model.name}",
            x_label="batch",
            y_label="interior share",
        )
    payload = {
        "interior_time": stats.interior_time,
        "boundary_time": stats.boundary_time,
        "total_time": stats.total_time,
        "jump_count": stats.jump_count,
        "occupation_fraction": stats.occupation_fraction,
        "stderr": stats.stderr,
        "interior_fraction": theta,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    dev = abs(stats.occupation_fraction - theta)
    ok = dev <= 3 * stats.stderr or dev <= 0.02
    _stage(
        f"occupation fraction {stats.occupation_fraction:.5f} vs stationary {theta:.5f} "
        f"({'ok' if ok else 'off'} at 3 standard errors)"
    )
    return 0 if ok else 1


def cmd_report(args) -> int:
    model = _load_model(args.config)
    out = _out_dir(args)
    failures = []

    _stage("stage 1/5: model measures")
    summary = partition_constants(model)
    info = {
        "name": model.name,
        "z_interior": summary.z_interior,
        "z_boundary": summary.z_boundary,
        "interior_fraction": summary.interior_fraction,
        "regime": _regime_payload(model),
    }

    _stage("stage 2/5: composed bounds")
    r_values = np.logspace(-2.5, -0.5, 7)
    try:
        sp_rate, wp_rate, route, notes = _composed_bounds(model, r_values, None, 4, args.seed)
        write_csv(
            out / "bounds.csv",
            ["r", "sp_bound", "wp_bound"],
            [
                (
                    r,
                    float(sp_rate.value(r)) if sp_rate is not None else "",
                    float(wp_rate.value(r)) if wp_rate is not None else "",
                )
                for r in r_values
            ],
        )
        info["bounds_route"] = route
        if notes:
            info["bounds_notes"] = notes
    except StickyLabError as exc:
        info["bounds_route"] = f"unavailable ({exc})"

    _stage("stage 3/5: inequality verification")
    inst = discretize.build_instance(model, args.n)
    sp_results = [verify.sp_oracle(inst, r, restarts=4, seed=args.seed) for r in r_values]
    sp_tab = ratefn.Tabulated(r_values, np.array([res.value for res in sp_results]) * 1.05)
    sp_report = verify.check_super_poincare(inst, sp_tab, r_values, trials=args.trials, seed=args.seed)
    if not sp_report.ok:
        failures.append("super-inequality check")
    wp_rate_inst = _calibrated_wp(inst, r_values, args.seed)
    wp_report = verify.check_weak_poincare(inst, wp_rate_inst, r_values, trials=args.trials, seed=args.seed)
    if not wp_report.ok:
        failures.append("weak-inequality check")
    write_csv(
        out / "sp_oracle.csv",
        ["r", "value", "spread"],
        [(res.r, res.value, res.spread) for res in sp_results],
    )
    info["sp_check"] = sp_report.summary()
    info["wp_check"] = wp_report.summary()

    _stage("stage 4/5: decay curves")
    spec = semigroup.SpectralData.from_instance(inst)
    t_values = np.logspace(-2, 1, 12)
    rows = []
    for t in t_values:
        bracket = semigroup.norm_infty_to_2_bounds(spec, t, trials=32, seed=args.seed)
        xi = ratefn.decay_profile_from_wp(wp_rate_inst, t)
        if bracket["lower"] ** 2 > xi * (1 + 1e-10) + 1e-14:
            failures.append(f"decay bound at t={t:g}")
        rows.append((t, semigroup.decay_2to2(spec, t), semigroup.kernel_sup(spec, t),
                     bracket["lower"], bracket["upper"], xi))
    write_csv(out / "decay.csv", ["t", "decay_2to2", "kernel_sup", "lower", "upper", "xi_bound"], rows)
    if args.svg:
        write_svg_chart(
            out / "decay.svg",
            t_values,
            {"2->2 decay": [r[1] for r in rows], "inf->2 lower": [r[3] for r in rows],
             "xi bound (on square)": [r[5] for r in rows]},
            title=f"Decay curves: {model.name}",
            x_label="t", y_label="norm", log_x=True, log_y=True,
        )
    info["spectral_gap"] = spec.spectral_gap

    _stage("stage 5/5: occupation simulation")
    gen = discretize.generator_of(inst)
    jump_rate = float(np.sum(inst.m * gen.exit_rates))
    horizon = 2.0e6 / jump_rate
    stats = mc.simulate(gen, "stationary", horizon, seed=args.seed)
    dev = abs(stats.occupation_fraction - summary.interior_fraction)
    if dev > 3 * stats.stderr and dev > 0.02:
        failures.append("occupation fraction")
    info["occupation"] = {
        "fraction": stats.occupation_fraction,
        "stderr": stats.stderr,
        "jumps": stats.jump_count,
    }

    info["failures"] = failures
    (out / "report.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    _stage(f"report written to {out / 'report.json'}")
    return 0 if not failures else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sub, n_default=200):
    sub.add_argument("--config", required=True, help="model config JSON")
    sub.add_argument("--seed", type=_seed, default=0, help="64-bit unsigned seed")
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--svg", action="store_true", help="also write SVG plots")
    sub.add_argument("--n", type=int, default=n_default, help="interior grid size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stickylab",
        description="numerical laboratory for sticky-reflected diffusions and their functional inequalities",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("model-info", help="partition values and comparison constants")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_model_info)

    p = subs.add_parser("bounds", help="composed super/weak bounds on an r-grid")
    _add_common(p, n_default=None)
    p.add_argument("--r-grid", default=None, help="a:b:n log-spaced grid")
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=1e-1)
    p.add_argument("--r-points", type=int, default=8)
    p.add_argument("--restarts", type=int, default=4)
    p.set_defaults(func=cmd_bounds)

    p = subs.add_parser("verify-sp", help="super-inequality oracle and randomized check")
    _add_common(p)
    p.add_argument("--r-grid", default="1e-3:1e-1:8", help="a:b:n log-spaced grid")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--margin", type=float, default=1.05, help="calibration headroom factor")
    p.add_argument("--bound-scale", type=float, default=1.0,
                   help="extra factor on the tested rate (for injection experiments)")
    p.set_defaults(func=cmd_verify_sp)

    p = subs.add_parser("verify-wp", help="weak-inequality oracle and randomized check")
    _add_common(p)
    p.add_argument("--r-grid", default="1e-2:0.9:8", help="a:b:n log-spaced grid")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--margin", type=float, default=1.05)
    p.add_argument("--bound-scale", type=float, default=1.0,
                   help="extra factor on the tested rate (for injection experiments)")
    p.set_defaults(func=cmd_verify_wp)

    p = subs.add_parser("semigroup", help="decay curves and rate-function bounds")
    _add_common(p)
    p.add_argument("--t-grid", default="1e-2:1e1:20", help="a:b:n log-spaced grid")
    p.add_argument("--trials", type=int, default=64, help="sign vectors per bracket")
    p.set_defaults(func=cmd_semigroup)

    p = subs.add_parser("mc", help="occupation-time simulation")
    _add_common(p)
    p.add_argument("--horizon", type=float, default=50.0)
    p.add_argument("--start", default="stationary",
                   help="start node index, or 'stationary' for invariant draws")
    p.set_defaults(func=cmd_mc)

    p = subs.add_parser("report", help="full pipeline into a directory")
    _add_common(p)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except StickyLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
