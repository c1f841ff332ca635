"""Monte Carlo eigenvalue statistics for P + delta Q.

P is the bidiagonal Toeplitz matrix with a on the superdiagonal and b on the
subdiagonal; Q has i.i.d. standard complex Gaussian entries.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import regime as _regime
from .density_core import annulus_mask
from .errors import ConvergenceFailure, DimensionTooSmall
from .symbol_geometry import SymbolParams

C1_DEFAULT = 2.0


# ---------------------------------------------------------------- matrices

def build_toeplitz(params: SymbolParams, n: int) -> np.ndarray:
    if n < 2:
        raise DimensionTooSmall(f"n must be at least 2, got {n}")
    m = np.zeros((n, n), dtype=complex)
    idx = np.arange(n - 1)
    m[idx, idx + 1] = params.a
    m[idx + 1, idx] = params.b
    return m


def unperturbed_spectrum(params: SymbolParams, n: int) -> np.ndarray:
    """2 sqrt(ab) cos(pi nu / (n+1)), nu = 1..n."""
    nu = np.arange(1, n + 1)
    return 2.0 * np.sqrt(params.a * params.b) * np.cos(np.pi * nu / (n + 1))


def draw_gaussian(n: int, seed: int, trial_index: int) -> np.ndarray:
    """n x n matrix of i.i.d. N_C(0, 1) entries (E|q|^2 = 1).

    Each trial has its own stream, spawned from ``seed`` by trial index, so a
    trial's draw does not depend on which other trials run or in what order.
    """
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(trial_index),)))
    parts = rng.standard_normal((2, n, n))
    return (parts[0] + 1j * parts[1]) * np.sqrt(0.5)


def hs_norm(q) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(q)) ** 2)))


# ---------------------------------------------------------------- eigensolver

def balance_matrix(m: np.ndarray, tol: float = 1e-12, maxiter: int = 100):
    """Diagonal similarity D^-1 m D minimising the Frobenius norm.

    With D = diag(exp(x)) the objective sum_ij |m_ij|^2 exp(2(x_j - x_i)) is
    convex in x; Newton steps (the Hessian is a weighted graph Laplacian)
    converge in a handful of iterations.  For a bidiagonal Toeplitz matrix the
    optimum makes |a| and |b| equal, i.e. the balanced matrix is normal up to
    a rotation.  LAPACK's own balancing only equalises row and column norms
    to powers of two and falls far short of that for large n.

    Returns (balanced matrix, scaling vector d).
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    with np.errstate(divide="ignore"):
        logw = 2.0 * np.log(np.abs(m))
    np.fill_diagonal(logw, -np.inf)
    x = np.zeros(n)

    def weights(x):
        return np.exp(logw + 2.0 * (x[None, :] - x[:, None]))

    s = weights(x)
    for _ in range(maxiter):
        f = s.sum()
        grad = 2.0 * (s.sum(axis=0) - s.sum(axis=1))
        if f == 0.0 or np.linalg.norm(grad) <= tol * f:
            break
        W = s + s.T
        H = 4.0 * (np.diag(W.sum(axis=1)) - W) + np.full((n, n), 1.0 / n)
        try:
            step = -sla.cho_solve(sla.cho_factor(H), grad)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            step = -np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        slope = grad @ step
        while True:
            xn = x + t * step
            sn = weights(xn)
            if sn.sum() <= f + 1e-4 * t * slope or t < 1e-10:
                break
            t *= 0.5
        x = xn - xn.mean()
        s = weights(x)
    d = np.exp(x)
    return m * (d[None, :] / d[:, None]), d


def eigenvalues(m: np.ndarray, balance: bool = True) -> np.ndarray:
    """All n eigenvalues of a dense complex matrix.

    ``balance=False`` reads the eigenvalues off a complex Schur form computed
    without any scaling, which exposes the instability of non-normal inputs.
    """
    m = np.asarray(m, dtype=complex)
    try:
        if balance:
            return sla.eigvals(balance_matrix(m)[0])
        T = sla.schur(m, output="complex")[0]
        return np.diag(T).copy()
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise ConvergenceFailure(str(exc)) from exc


# ---------------------------------------------------------------- configs

@dataclass(frozen=True)
class GridSpec:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise ValueError("grid bounds must be increasing")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")

    @property
    def cell_area(self) -> float:
        return (self.re_max - self.re_min) / self.nx * (self.im_max - self.im_min) / self.ny

    def centers(self):
        re = self.re_min + (np.arange(self.nx) + 0.5) * (self.re_max - self.re_min) / self.nx
        im = self.im_min + (np.arange(self.ny) + 0.5) * (self.im_max - self.im_min) / self.ny
        return re, im

    def cell_index(self, z):
        """(i, j, inside) with half-open cells [lo, hi); values on the upper
        global edge go to the last cell."""
        z = np.asarray(z, dtype=complex)
        fx = (z.real - self.re_min) / (self.re_max - self.re_min) * self.nx
        fy = (z.imag - self.im_min) / (self.im_max - self.im_min) * self.ny
        inside = (z.real >= self.re_min) & (z.real <= self.re_max) & \
                 (z.imag >= self.im_min) & (z.imag <= self.im_max)
        i = np.clip(np.floor(fx).astype(np.int64), 0, self.nx - 1)
        j = np.clip(np.floor(fy).astype(np.int64), 0, self.ny - 1)
        return i, j, inside

    @classmethod
    def around(cls, params: SymbolParams, r: float, nx: int = 40, ny: int = 40, pad: float = 1.02):
        R = pad * (abs(params.a) * r + abs(params.b) / r)
        return cls(-R, R, -R, R, nx, ny)


@dataclass(frozen=True)
class Annulus:
    """Region inner < |zeta_-(z)| <= outer."""
    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 < self.inner < self.outer):
            raise ValueError("need 0 < inner < outer")

    def contains(self, params: SymbolParams, z):
        return annulus_mask(params, z, self.outer, self.inner)


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    delta: float
    trials: int
    seed: int
    params: SymbolParams
    region: Annulus
    grid: GridSpec | None = None
    c1: float = C1_DEFAULT
    balance: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise DimensionTooSmall(f"n must be at least 2, got {self.n}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.grid is None:
            object.__setattr__(self, "grid", GridSpec.around(self.normalized_params, self.region.outer))

    @property
    def normalized_params(self) -> SymbolParams:
        """Geometry (ellipses, roots) always uses |a| >= |b|; the matrix is
        built from ``params`` as given."""
        p = self.params
        return p if p.is_normalized else p.transposed()


@dataclass(frozen=True)
class SpectrumSample:
    trial_index: int
    eigenvalues: np.ndarray | None
    hs_norm_q: float
    truncated: bool
    aborted: bool = False
    error: str | None = None


@dataclass
class EmpiricalIntensity:
    grid: GridSpec
    mean_counts: np.ndarray
    var_counts: np.ndarray
    total_mean: float
    total_stderr: float
    trials_used: int
    truncated_trials: list = field(default_factory=list)
    aborted_trials: list = field(default_factory=list)


# ---------------------------------------------------------------- simulation

def _run_trial(config: EnsembleConfig, base: np.ndarray, k: int) -> SpectrumSample:
    q = draw_gaussian(config.n, config.seed, k)
    norm = hs_norm(q)
    truncated = norm > config.c1 * config.n
    try:
        ev = eigenvalues(base + config.delta * q, balance=config.balance)
    except ConvergenceFailure as exc:
        return SpectrumSample(k, None, norm, truncated, aborted=True, error=str(exc))
    return SpectrumSample(k, ev, norm, truncated)


def simulate(config: EnsembleConfig) -> list[SpectrumSample]:
    """All trials, in trial order, independent of the worker count."""
    base = build_toeplitz(config.params, config.n)
    work = range(config.trials)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as ex:
            return list(ex.map(lambda k: _run_trial(config, base, k), work))
    return [_run_trial(config, base, k) for k in work]


def _usable(samples):
    return [s for s in samples if not (s.aborted or s.truncated)]


def _region_points(config: EnsembleConfig, ev):
    geo = config.normalized_params
    i, j, inside = config.grid.cell_index(ev)
    keep = inside & config.region.contains(geo, ev)
    return i[keep], j[keep], ev[keep]


def run_ensemble(config: EnsembleConfig, samples: list[SpectrumSample] | None = None):
    """Bin the eigenvalues that fall in the annulus (and the grid).

    Truncated trials (||Q||_HS > c1 n) and aborted ones are listed and
    excluded from the averages.  Returns (EmpiricalIntensity, samples).
    """
    outer_r0 = config.region.outer + 1.0 / config.n
    if config.delta > 0:
        rep = _regime.regime_report(config.normalized_params, config.n, config.delta, outer_r0)
        if not rep.verdict:
            warnings.warn("ensemble parameters lie outside the admissible regime", RuntimeWarning, stacklevel=2)
    if samples is None:
        samples = simulate(config)
    g = config.grid
    used = _usable(samples)
    counts = np.zeros((len(used), g.nx, g.ny))
    for t, s in enumerate(used):
        i, j, _ = _region_points(config, s.eigenvalues)
        np.add.at(counts[t], (i, j), 1.0)
    totals = counts.sum(axis=(1, 2))
    k = len(used)
    if k:
        mean = counts.mean(axis=0)
        var = counts.var(axis=0, ddof=1) if k > 1 else np.zeros_like(mean)
        total_mean = float(totals.mean())
        total_stderr = float(totals.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    else:
        mean = var = np.zeros((g.nx, g.ny))
        total_mean = total_stderr = 0.0
    intensity = EmpiricalIntensity(
        grid=g, mean_counts=mean, var_counts=var, total_mean=total_mean,
        total_stderr=total_stderr, trials_used=k,
        truncated_trials=[s.trial_index for s in samples if s.truncated and not s.aborted],
        aborted_trials=[s.trial_index for s in samples if s.aborted],
    )
    return intensity, samples


@dataclass(frozen=True)
class TestFunction:
    """phi for linear statistics: ``zero``, ``annulus`` (indicator of the
    config's annulus, restricted to the grid) or ``bump``
    (amplitude * (1 - (|z - center| / width)^2)^2 inside the disc)."""
    __test__ = False  # not a pytest class
    kind: str
    center: complex = 0j
    width: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "annulus", "bump"):
            raise ValueError(f"unknown test function {self.kind!r}")

    def bump(self, z):
        d = np.abs(np.asarray(z) - self.center) / self.width
        return np.where(d < 1.0, self.amplitude * (1.0 - d * d) ** 2, 0.0)


def linear_statistic(config: EnsembleConfig, phi: TestFunction,
                     samples: list[SpectrumSample] | None = None):
    """Monte Carlo mean of sum_lambda phi(lambda) and its standard error."""
    if phi.kind == "zero":
        return 0.0, 0.0
    if samples is None:
        samples = simulate(config)
    used = _usable(samples)
    vals = []
    for s in used:
        if phi.kind == "annulus":
            vals.append(float(_region_points(config, s.eigenvalues)[2].size))
        else:
            vals.append(float(np.sum(phi.bump(s.eigenvalues))))
    vals = np.asarray(vals)
    if vals.size == 0:
        return 0.0, 0.0
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), se
