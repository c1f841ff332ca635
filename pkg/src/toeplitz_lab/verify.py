"""Self-check suite for the analytic machinery.

Each check samples points, records the worst error and where it occurred,
and compares against a fixed tolerance.  Only the curvature identity uses the
user-adjustable tolerance.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import density_core as dc
from .ensemble_sim import unperturbed_spectrum
from .symbol_geometry import SymbolParams, characteristic_roots, f_eval, sample_annulus

BRANCH_TOL = 1e-12
SERIES_TOL = 1e-10
ROOT_TOL = 1e-8
ORDER_BRACKET = 100.0
LOWER_BOUND_SLACK = 1e-6


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    location: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _loc(z, **extra):
    return {"re": float(np.real(z)), "im": float(np.imag(z)), **extra}


def check_branches(params: SymbolParams, zs) -> CheckResult:
    zm, zp = characteristic_roots(params, zs)
    scale = np.abs(zs / params.a) + np.abs(params.b / params.a) + 1.0
    errs = np.max(np.stack([
        np.abs(zm * zp - params.b / params.a) / scale,
        np.abs(zm + zp - zs / params.a) / scale,
        np.abs(f_eval(params, zm) - zs) / (np.abs(zs) + 1.0),
        np.abs(f_eval(params, zp) - zs) / (np.abs(zs) + 1.0),
        np.maximum(np.abs(zp) - np.abs(zm), 0.0),
    ]), axis=0)
    k = int(np.argmax(errs))
    return CheckResult("branch_relations", bool(errs[k] <= BRANCH_TOL), float(errs[k]), BRANCH_TOL, _loc(zs[k]))


def check_identity(params, n_list, zs, tol) -> list[CheckResult]:
    """Curvature identity, lower bound and order-of-magnitude bracket, sharing
    the finite-difference evaluations."""
    worst_rel = (-1.0, None)
    worst_bound = (np.inf, None)
    ratios = []
    bound = dc.lower_bound_value(params)
    for n in n_list:
        for z in zs:
            lhs, rhs, _ = dc.prop42_sides(params, n, z)
            rel = 0.0 if n == 1 else dc._rel_err(lhs, rhs)
            if rel > worst_rel[0]:
                worst_rel = (rel, _loc(z, n=n))
            if n >= 2:
                margin = lhs / bound
                if margin < worst_bound[0]:
                    worst_bound = (margin, _loc(z, n=n))
                rho2 = abs(characteristic_roots(params, z)[0]) ** 2
                ratios.append((lhs / float(dc._real_partial_geom(rho2, n)) ** 4, _loc(z, n=n)))
    out = [CheckResult("curvature_identity", bool(worst_rel[0] <= tol), worst_rel[0], tol, worst_rel[1])]
    if worst_bound[1] is not None:
        out.append(CheckResult("lower_bound", bool(worst_bound[0] >= 1.0 - LOWER_BOUND_SLACK),
                               float(worst_bound[0]), 1.0 - LOWER_BOUND_SLACK, worst_bound[1]))
    if ratios:
        # distance from 1 on a log scale; pass iff every ratio is in the bracket
        dev = [abs(np.log(r)) for r, _ in ratios]
        k = int(np.argmax(dev))
        out.append(CheckResult("order_bracket", bool(dev[k] <= np.log(ORDER_BRACKET)),
                               float(ratios[k][0]), ORDER_BRACKET, ratios[k][1]))
    return out


def check_kernel_series(params, zs, terms=10_000) -> CheckResult:
    closed = dc.k_inf(params, zs)
    series = dc.k_series(params, zs, terms)
    rel = np.abs(closed - series) / np.abs(series)
    k = int(np.argmax(rel))
    return CheckResult("kernel_closed_form", bool(rel[k] <= SERIES_TOL), float(rel[k]), SERIES_TOL, _loc(zs[k]))


def check_g0_roots(params, n_max=12) -> CheckResult:
    worst, where = 0.0, {}
    for n in range(1, n_max + 1):
        found = dc.g0_zeros(params, n)
        expect = unperturbed_spectrum(params, n)
        if found.size != n:
            return CheckResult("g0_roots", False, float("inf"), ROOT_TOL, {"n": n, "found": int(found.size)})
        rows, cols = linear_sum_assignment(np.abs(found[:, None] - expect[None, :]))
        err = np.abs(found[rows] - expect[cols])
        if err.max() > worst:
            worst, where = float(err.max()), _loc(expect[cols][np.argmax(err)], n=n)
    return CheckResult("g0_roots", worst <= ROOT_TOL, worst, ROOT_TOL, where)


def run_suite(params: SymbolParams | None = None, n_list=(2, 8, 32, 128), samples: int = 100,
              tol: float = 1e-6, seed: int = 0) -> SuiteReport:
    params = params or SymbolParams(1.0, 0.25)
    rng = np.random.default_rng(seed)
    interior = sample_annulus(params, 0.6, 0.9, samples, rng)
    wide = sample_annulus(params, params.r_min * (1 + 1e-6), 0.95, 10 * samples, rng)
    checks = [check_branches(params, wide)]
    checks += check_identity(params, list(n_list), interior, tol)
    checks.append(check_kernel_series(params, wide))
    checks.append(check_g0_roots(params))
    return SuiteReport(checks)
