"""Command-line entry point: spectrum | density | ensemble | regime | verify.

Exit codes: 0 ok, 1 verification failure, 2 usage, 3 numerical failure,
4 regime violation.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import density_core as dc
from . import ensemble_sim as es
from . import regime as rg
from .errors import (
    ConvergenceFailure,
    DegenerateRoots,
    DimensionTooSmall,
    Infeasible,
    OutsideDomain,
    RegimeViolation,
    StepTooLarge,
    ZeroCoefficient,
)
from .serialize import write_csv, write_json, write_pgm
from .symbol_geometry import SymbolParams, gap_to_unit_ellipse, normalize
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC, EXIT_REGIME = 0, 1, 2, 3, 4

# flags that change how, not what, is computed; kept out of data manifests
_EXECUTION_ONLY = ("workers", "out_dir", "handler")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing

def _common(p: argparse.ArgumentParser, delta_default):
    p.add_argument("--n", type=int, default=101, help="matrix dimension N")
    for name in ("a", "b"):
        p.add_argument(f"--{name}-re", type=float, default=None)
        p.add_argument(f"--{name}-im", type=float, default=None)
    p.add_argument("--delta", type=float, default=delta_default, help="perturbation strength")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path("."))


def _regime_flags(p):
    p.add_argument("--r0", type=float, default=None,
                   help="outer radius; defaults to the largest admissible value")
    p.add_argument("--r1-margin", type=float, default=0.1,
                   help="inner radius is sqrt(|b/a|) + margin")
    p.add_argument("--threshold", type=float, default=rg.DEFAULT_THRESHOLD)


def _grid_flags(p, cells):
    p.add_argument("--nx", type=int, default=cells)
    p.add_argument("--ny", type=int, default=cells)
    for edge in ("re-min", "re-max", "im-min", "im-max"):
        p.add_argument(f"--{edge}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toeplitz-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="analytic (and optionally numeric) eigenvalues")
    _common(p, None)
    p.add_argument("--no-balance", action="store_true")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("density", help="leading-order density on a grid")
    _common(p, 1e-8)
    _regime_flags(p)
    _grid_flags(p, 200)
    p.add_argument("--force", action="store_true", help="continue despite a regime failure")
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("ensemble", help="Monte Carlo eigenvalue counts against the density")
    _common(p, 1e-8)
    _regime_flags(p)
    _grid_flags(p, 40)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--inner", type=float, default=None, help="override the annulus inner |zeta_-|")
    p.add_argument("--outer", type=float, default=None, help="override the annulus outer |zeta_-|")
    p.add_argument("--no-balance", action="store_true")
    p.add_argument("--force", action="store_true", help="accepted for symmetry; the regime check is advisory here")
    p.set_defaults(handler=cmd_ensemble)

    p = sub.add_parser("regime", help="evaluate the parameter conditions")
    _common(p, 1e-8)
    _regime_flags(p)
    p.set_defaults(handler=cmd_regime)

    p = sub.add_parser("verify", help="run the identity suite")
    _common(p, None)
    p.add_argument("--n-list", type=str, default="2,8,32,128")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(handler=cmd_verify)
    return parser


def _complex_flag(re, im, default):
    if re is None and im is None:
        return complex(default)
    return complex(re or 0.0, im or 0.0)


def raw_params(args) -> SymbolParams:
    a = _complex_flag(args.a_re, args.a_im, 1.0)
    b = _complex_flag(args.b_re, args.b_im, 0.25)
    return SymbolParams(a, b)


def _check_basic(args, min_n=1):
    if args.n < min_n:
        raise UsageError(f"--n must be at least {min_n}")
    if args.delta is not None and args.delta < 0:
        raise UsageError("--delta must be non-negative")
    if args.workers < 1:
        raise UsageError("--workers must be positive")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must fit in 64 unsigned bits")


def manifest(args) -> dict:
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
              if k not in _EXECUTION_ONLY}
    return {"command": args.command, "parameters": params, "seed": args.seed, "version": __version__}


def _write_run_manifest(args, outputs, started):
    m = manifest(args)
    m.update({"duration_s": time.perf_counter() - started, "workers": args.workers, "outputs": outputs})
    write_json(args.out_dir / "manifest.json", m)


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- regime helpers

def _resolve_region(args, geo: SymbolParams):
    """(r0, r1, regime report); raises Infeasible when no r0 is admissible."""
    if args.r1_margin <= 0:
        raise UsageError("--r1-margin must be positive")
    c_margin = 1.0 / args.r1_margin
    delta = args.delta
    r0 = args.r0
    if r0 is None:
        r0 = rg.max_admissible_r0(geo, args.n, delta, args.threshold, c_margin=c_margin)
    rep = rg.regime_report(geo, args.n, delta, r0, args.threshold, c_margin=c_margin)
    return r0, rep.r1, rep


def _grid(args, geo: SymbolParams, outer: float) -> es.GridSpec:
    auto = es.GridSpec.around(geo, max(outer, geo.r_min), args.nx, args.ny)
    pick = lambda v, d: d if v is None else v  # noqa: E731
    return es.GridSpec(pick(args.re_min, auto.re_min), pick(args.re_max, auto.re_max),
                       pick(args.im_min, auto.im_min), pick(args.im_max, auto.im_max),
                       args.nx, args.ny)


# ---------------------------------------------------------------- commands

def cmd_spectrum(args) -> int:
    _check_basic(args, 1)
    params = raw_params(args)
    rows = [(z.real, z.imag, "analytic") for z in es.unperturbed_spectrum(params, args.n)]
    if args.delta is not None:
        if args.n < 2:
            raise UsageError("a numeric spectrum needs --n >= 2")
        m = es.build_toeplitz(params, args.n)
        if args.delta > 0:
            m = m + args.delta * es.draw_gaussian(args.n, args.seed, 0)
        ev = np.sort_complex(es.eigenvalues(m, balance=not args.no_balance))
        rows += [(z.real, z.imag, "numeric") for z in ev]
    write_csv(args.out_dir / "spectrum.csv", ["re", "im", "source"], rows)
    return EXIT_OK


def cmd_regime(args) -> int:
    _check_basic(args, 2)
    geo = normalize(*_pair(args))
    out = {"manifest": manifest(args)}
    try:
        out["max_admissible_r0"] = rg.max_admissible_r0(
            geo, args.n, args.delta, args.threshold, c_margin=1.0 / args.r1_margin)
    except Infeasible as exc:
        out["max_admissible_r0"] = None
        out["infeasible_reason"] = str(exc)
    r0 = args.r0 if args.r0 is not None else out["max_admissible_r0"]
    if r0 is None:
        r0 = 0.5
    rep = rg.regime_report(geo, args.n, args.delta, r0, args.threshold, c_margin=1.0 / args.r1_margin)
    out["report"] = rep.to_dict()
    write_json(args.out_dir / "regime.json", out)
    return EXIT_OK if rep.verdict else EXIT_REGIME


def _pair(args):
    p = raw_params(args)
    return p.a, p.b


def cmd_density(args) -> int:
    _check_basic(args, 2)
    geo = normalize(*_pair(args))
    try:
        r0, r1, rep = _resolve_region(args, geo)
    except Infeasible as exc:
        write_json(args.out_dir / "regime.json", {"manifest": manifest(args), "infeasible_reason": str(exc)})
        _warn(str(exc))
        return EXIT_REGIME
    write_json(args.out_dir / "regime.json", {"manifest": manifest(args), "report": rep.to_dict()})
    if not rep.verdict and not args.force:
        _warn("regime conditions fail; rerun with --force to evaluate anyway")
        return EXIT_REGIME
    outer = r0 - 1.0 / args.n
    grid = _grid(args, geo, outer)
    field = dc.density_field(geo, args.n, args.delta, (grid.re_min, grid.re_max, grid.im_min, grid.im_max),
                             grid.nx, grid.ny, r0, r1, check_regime=False, workers=args.workers)
    re_c, im_c = field.re_centers, field.im_centers
    rows = [(re_c[i], im_c[j], field.values[i, j], bool(field.mask[i, j]))
            for i in range(grid.nx) for j in range(grid.ny)]
    write_csv(args.out_dir / "density.csv", ["re", "im", "xi", "masked"], rows)
    write_pgm(args.out_dir / "density.pgm", field.values, field.mask)
    masked = int(field.mask.sum())
    if masked == 0:
        _warn("no grid cell centre lies in the annulus")
    quad = None
    if geo.r_min < r1 < outer < 1.0:
        quad = dc.annulus_integral(geo, r1, outer)
    vals = field.values[field.mask]
    write_json(args.out_dir / "density.json", {
        "manifest": manifest(args),
        "r0": r0, "r1": r1, "outer_radius": outer,
        "bounds": [grid.re_min, grid.re_max, grid.im_min, grid.im_max],
        "nx": grid.nx, "ny": grid.ny, "cell_area": field.cell_area,
        "masked_cells": masked,
        "integral": field.integral(),
        "annulus_quadrature": quad,
        "xi_min": float(vals.min()) if masked else None,
        "xi_max": float(vals.max()) if masked else None,
        "regime_verdict": rep.to_dict()["verdict"],
    })
    return EXIT_OK


def cmd_ensemble(args) -> int:
    _check_basic(args, 2)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    params = raw_params(args)
    geo = normalize(params.a, params.b)
    try:
        r0, r1, rep = _resolve_region(args, geo)
        regime_dict = rep.to_dict()
    except Infeasible as exc:
        if args.inner is None or args.outer is None:
            _warn(str(exc))
            return EXIT_REGIME
        r0, r1, regime_dict = None, None, {"infeasible_reason": str(exc)}
    inner = args.inner if args.inner is not None else r1
    outer = args.outer if args.outer is not None else r0 - 1.0 / args.n
    try:
        region = es.Annulus(inner, outer)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if regime_dict.get("verdict") != "pass":
        _warn("parameters lie outside the admissible regime; the comparison is indicative only")
    grid = _grid(args, geo, outer)
    cfg = es.EnsembleConfig(n=args.n, delta=args.delta, trials=args.trials, seed=args.seed,
                            params=params, region=region, grid=grid,
                            balance=not args.no_balance, workers=args.workers)
    intensity, _ = es.run_ensemble(cfg)

    theory_total = None
    if geo.r_min < inner < outer < 1.0:
        theory_total = dc.annulus_integral(geo, inner, outer)
    re_c, im_c = grid.centers()
    zc = re_c[:, None] + 1j * im_c[None, :]
    cell_in = region.contains(geo, zc) & (gap_to_unit_ellipse(geo, zc) > 0)
    theory = np.zeros(zc.shape)
    if cell_in.any():
        theory[cell_in] = dc.xi_density(geo, zc[cell_in]) * grid.cell_area
    k = intensity.trials_used
    per_cell = []
    for i in range(grid.nx):
        for j in range(grid.ny):
            emp = intensity.mean_counts[i, j]
            if not (cell_in[i, j] or emp > 0):
                continue
            se = np.sqrt(intensity.var_counts[i, j] / k) if k else 0.0
            per_cell.append({"re": re_c[i], "im": im_c[j], "theory": theory[i, j],
                             "empirical_mean": emp,
                             "z_score": (emp - theory[i, j]) / se if se > 0 else None})
    envelope = rg.growth_term(args.n, args.delta, outer) + rg.coupling_term(args.n, args.delta) \
        if args.delta > 0 else None
    write_json(args.out_dir / "ensemble.json", {
        "manifest": manifest(args),
        "annulus": {"inner": inner, "outer": outer},
        "theory_integral": theory_total,
        "total_mean": intensity.total_mean,
        "total_stderr": intensity.total_stderr,
        "trials_used": k,
        "truncated_trials": intensity.truncated_trials,
        "aborted_trials": intensity.aborted_trials,
        "error_envelope": envelope,
        "regime": regime_dict,
        "per_cell": per_cell,
    })
    if len(intensity.aborted_trials) > 0.01 * args.trials:
        _warn(f"{len(intensity.aborted_trials)} of {args.trials} trials aborted")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args) -> int:
    _check_basic(args, 1)
    try:
        n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError("--n-list must be comma-separated integers") from exc
    if not n_list or min(n_list) < 1 or args.samples < 1 or args.tol <= 0:
        raise UsageError("invalid --n-list, --samples or --tol")
    geo = normalize(*_pair(args))
    report = run_suite(geo, n_list=n_list, samples=args.samples, tol=args.tol, seed=args.seed)
    out = report.to_dict()
    out["manifest"] = manifest(args)
    write_json(args.out_dir / "verify.json", out)
    for c in report.checks:
        if not c.passed:
            _warn(f"{c.name} failed: worst {c.worst:.3g} vs {c.tol:.3g} at {c.location}")
    return EXIT_OK if report.passed else EXIT_VERIFY


# ---------------------------------------------------------------- entry

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        code = args.handler(args)
    except (UsageError, ZeroCoefficient, DimensionTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ConvergenceFailure, OutsideDomain, StepTooLarge, DegenerateRoots, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    outputs = sorted(p.name for p in args.out_dir.iterdir()
                     if p.suffix in (".csv", ".json", ".pgm") and p.name != "manifest.json")
    _write_run_manifest(args, outputs, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
