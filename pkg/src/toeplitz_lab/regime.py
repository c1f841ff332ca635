"""Admissible (N, delta, r0) triples for the interior density formula.

Two smallness terms must be small together:

    term_growth   = N r0^(N-1) (1 - r0)^2 / delta
    term_coupling = delta N^3

plus delta >= exp(-N / c_floor) and 1/c_margin <= r0 <= 1 - 1/N.  The inner
radius of the admissible annulus is r1 = sqrt(|b/a|) + 1/c_margin.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import Infeasible
from .symbol_geometry import SymbolParams

DEFAULT_THRESHOLD = 0.2
# "C >> 1" constants; the floor and the annulus margin are allowed to differ
C_FLOOR = 5.0
C_MARGIN = 10.0


@dataclass(frozen=True)
class RegimeReport:
    n: int
    delta: float
    r0: float
    r1: float
    term_growth: float
    term_coupling: float
    delta_floor_ok: bool
    r0_ok: bool
    threshold: float
    verdict: bool

    @property
    def r1_value(self) -> float:
        return self.r1

    @property
    def total(self) -> float:
        return self.term_growth + self.term_coupling

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = "pass" if self.verdict else "fail"
        return d


def growth_term(n: int, delta: float, r) -> float:
    """N r^(N-1) (1-r)^2 / delta, evaluated in log space so tiny r^(N-1) does
    not underflow before the division."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        log_val = np.log(n) + (n - 1) * np.log(r) + 2.0 * np.log(np.abs(1.0 - r)) - np.log(delta)
    out = np.exp(log_val)
    return float(out) if out.ndim == 0 else out


def coupling_term(n: int, delta: float) -> float:
    return float(delta) * float(n) ** 3


def inner_radius(params: SymbolParams, c_margin: float = C_MARGIN) -> float:
    return float(np.sqrt(abs(params.b / params.a)) + 1.0 / c_margin)


def regime_report(params: SymbolParams, n: int, delta: float, r0: float,
                  threshold: float = DEFAULT_THRESHOLD, *,
                  c_floor: float = C_FLOOR, c_margin: float = C_MARGIN) -> RegimeReport:
    """Evaluate every term of the parameter conditions.  Never raises for
    out-of-range values; the verdict carries the failure."""
    n = int(n)
    delta = float(delta)
    r0 = float(r0)
    if 0.0 < r0 < 1.0 and delta > 0.0 and n >= 1:
        growth = growth_term(n, delta, r0)
    else:
        growth = float("inf")
    coupling = coupling_term(n, delta)
    floor_ok = bool(delta > 0.0 and delta >= np.exp(-n / c_floor))
    r0_ok = bool(1.0 / c_margin <= r0 <= 1.0 - 1.0 / n)
    verdict = bool(growth + coupling <= threshold and floor_ok and r0_ok)
    return RegimeReport(n=n, delta=delta, r0=r0, r1=inner_radius(params, c_margin),
                        term_growth=float(growth), term_coupling=coupling,
                        delta_floor_ok=floor_ok, r0_ok=r0_ok, threshold=float(threshold),
                        verdict=verdict)


def growth_peak(n: int) -> float:
    """Maximiser of r^(N-1)(1-r)^2 on [0, 1]; the function increases before it."""
    return (n - 1.0) / (n + 1.0)


def max_admissible_r0(params: SymbolParams, n: int, delta: float,
                      threshold: float = DEFAULT_THRESHOLD, *,
                      c_floor: float = C_FLOOR, c_margin: float = C_MARGIN,
                      xtol: float = 1e-9) -> float:
    """Largest r0 <= 1 - 1/N whose growth term fits in threshold - delta N^3.

    Bisection on [1/c_margin, (N-1)/(N+1)], where the growth term is
    increasing.  Past the peak the term decreases again, so if the peak
    value fits then the whole range does and 1 - 1/N is returned.
    """
    lo = 1.0 / c_margin
    hi_cap = 1.0 - 1.0 / n
    budget = threshold - coupling_term(n, delta)
    if budget <= 0.0 or lo > hi_cap:
        raise Infeasible(f"delta N^3 = {coupling_term(n, delta):.4g} exceeds threshold {threshold}")
    if delta < np.exp(-n / c_floor):
        raise Infeasible(f"delta = {delta:.3g} is below the floor exp(-N/{c_floor:g})")
    if growth_term(n, delta, lo) > budget:
        raise Infeasible(f"no r0 >= {lo} satisfies the growth condition")
    peak = min(growth_peak(n), hi_cap)
    if growth_term(n, delta, peak) <= budget:
        return hi_cap
    hi = peak
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if growth_term(n, delta, mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo
