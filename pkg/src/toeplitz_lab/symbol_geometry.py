"""Symbol p(xi) = a e^{i xi} + b e^{-i xi}, its confocal ellipses and the
characteristic roots of a*zeta + b/zeta = z.

Conventions: after :func:`normalize`, |a| >= |b|.  The two roots are ordered
|zeta_plus| <= |zeta_minus|; zeta_minus is the root that leaves the disc
first, so a point z lies in Sigma_r exactly when |zeta_minus(z)| <= r.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveRadius, RadiusBelowMinimum, ZeroArgument, ZeroCoefficient

# relative tolerance for OnCurve / OnFocalSegment decisions
CLASSIFY_RTOL = 1e-9
# relative modulus gap under which the two roots count as tied
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SymbolParams:
    a: complex
    b: complex
    swapped: bool = False

    def __post_init__(self):
        if self.a == 0 or self.b == 0:
            raise ZeroCoefficient(f"coefficients must be nonzero, got a={self.a!r}, b={self.b!r}")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))

    @property
    def r_min(self) -> float:
        return float(np.sqrt(abs(self.b) / abs(self.a)))

    @property
    def is_normalized(self) -> bool:
        return abs(self.a) >= abs(self.b)

    def transposed(self) -> "SymbolParams":
        return SymbolParams(self.b, self.a, not self.swapped)


@dataclass(frozen=True)
class BranchPair:
    zeta_plus: complex
    zeta_minus: complex
    z: complex


@dataclass(frozen=True)
class EllipseGeometry:
    r: float
    major: float
    minor: float
    direction: float
    foci: tuple


class PointClass(enum.Enum):
    Interior = "interior"
    OnCurve = "on_curve"
    Exterior = "exterior"
    OnFocalSegment = "on_focal_segment"


def normalize(a: complex, b: complex) -> SymbolParams:
    """Order the coefficients so that |a| >= |b|.

    P and its transpose share a spectrum and swapping a and b transposes P,
    so nothing spectral changes.
    """
    if a == 0 or b == 0:
        raise ZeroCoefficient(f"coefficients must be nonzero, got a={a!r}, b={b!r}")
    if abs(b) > abs(a):
        return SymbolParams(complex(b), complex(a), swapped=True)
    return SymbolParams(complex(a), complex(b), swapped=False)


def symbol_eval(params: SymbolParams, xi):
    return params.a * np.exp(1j * xi) + params.b * np.exp(-1j * xi)


def f_eval(params: SymbolParams, zeta):
    """f_{a,b}(zeta) = a*zeta + b/zeta."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(zeta == 0):
        raise ZeroArgument("f_{a,b} is undefined at zeta = 0")
    out = params.a * zeta + params.b / zeta
    return out[()] if out.ndim == 0 else out


def focal_points(params: SymbolParams) -> tuple[complex, complex]:
    c = 2.0 * np.sqrt(params.a * params.b)
    return complex(c), complex(-c)


def ellipse_geometry(params: SymbolParams, r: float) -> EllipseGeometry:
    if not r > 0:
        raise NonPositiveRadius(f"r must be positive, got {r}")
    A, B = abs(params.a), abs(params.b)
    major = A * r + B / r
    # E_r and E_{r_min^2 / r} coincide, so the minor semi-axis is symmetric about r_min
    minor = abs(A * r - B / r)
    direction = (np.angle(params.a) + np.angle(params.b)) / 2.0
    return EllipseGeometry(r=float(r), major=float(major), minor=float(minor),
                           direction=float(direction), foci=focal_points(params))


def characteristic_roots(params: SymbolParams, z):
    """Vectorised roots of zeta^2 - (z/a) zeta + b/a = 0.

    Returns ``(zeta_minus, zeta_plus)`` with |zeta_plus| <= |zeta_minus|.
    The larger root is taken from the sign-matched quadratic formula and the
    smaller from the product relation, which avoids cancellation for large
    |z/a|.  On the focal segment (equal moduli) zeta_minus is the root with
    Im(zeta_minus / sqrt(b/a)) >= 0.
    """
    z = np.asarray(z, dtype=complex)
    s = z / params.a
    p = params.b / params.a
    disc = np.sqrt(s * s - 4.0 * p)
    sign = np.where((np.conj(s) * disc).real >= 0.0, 1.0, -1.0)
    big = 0.5 * (s + sign * disc)
    small = p / big

    sqrt_p = np.sqrt(p)
    tied = np.abs(np.abs(big) - np.abs(small)) <= _TIE_RTOL * np.abs(big)
    flip = tied & ((big / sqrt_p).imag < 0.0)
    zeta_minus = np.where(flip, small, big)
    zeta_plus = np.where(flip, big, small)
    if z.ndim == 0:
        return complex(zeta_minus), complex(zeta_plus)
    return zeta_minus, zeta_plus


def solve_characteristic(params: SymbolParams, z: complex) -> BranchPair:
    zm, zp = characteristic_roots(params, complex(z))
    return BranchPair(zeta_plus=zp, zeta_minus=zm, z=complex(z))


def classify(params: SymbolParams, z: complex, r: float) -> PointClass:
    if r < params.r_min * (1.0 - _TIE_RTOL):
        raise RadiusBelowMinimum(f"r={r} is below r_min={params.r_min}")
    zm, zp = characteristic_roots(params, complex(z))
    m, p = abs(zm), abs(zp)
    if m - p <= CLASSIFY_RTOL * m:
        return PointClass.OnFocalSegment
    if abs(m - r) <= CLASSIFY_RTOL * r:
        return PointClass.OnCurve
    return PointClass.Interior if m < r else PointClass.Exterior


def zeta_minus_modulus(params: SymbolParams, z):
    """|zeta_minus(z)|, the index of the confocal ellipse through z."""
    zm, _ = characteristic_roots(params, z)
    return np.abs(zm)


def distance_to_focal_segment(params: SymbolParams, z):
    c, _ = focal_points(params)
    z = np.asarray(z, dtype=complex)
    u = np.clip((z * np.conj(c)).real / abs(c) ** 2, -1.0, 1.0)
    out = np.abs(z - u * c)
    return float(out) if out.ndim == 0 else out


def gap_to_unit_ellipse(params: SymbolParams, z):
    """g(1) - g(|zeta_minus|): distance from E_{|zeta_minus|} to E_1 along the
    major axis.

    Confocal ellipses are closest at the major-axis vertices, so this is a
    lower bound for the distance from z to E_1.  Negative outside E_1.
    """
    rho = zeta_minus_modulus(params, z)
    A, B = abs(params.a), abs(params.b)
    out = (A + B) - (A * rho + B / rho)
    return float(out) if np.ndim(out) == 0 else out


def ellipse_points(params: SymbolParams, r: float = 1.0, m: int = 4096):
    theta = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    return params.a * r * np.exp(1j * theta) + params.b / r * np.exp(-1j * theta)


def distance_to_ellipse(params: SymbolParams, z, r: float = 1.0, m: int = 8192):
    """Distance from each z to a dense polygonal sample of E_r (accurate to
    about one chord length, 2*pi*g(r)/m)."""
    pts = ellipse_points(params, r, m)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=float)
    for k in range(0, z.size, 256):
        block = z.ravel()[k:k + 256]
        out.ravel()[k:k + 256] = np.min(np.abs(block[:, None] - pts[None, :]), axis=1)
    return out


def sample_annulus(params: SymbolParams, rho_min: float, rho_max: float, size: int, rng):
    """Random z = f(zeta) with |zeta| uniform in [rho_min, rho_max] and
    uniform angle; for rho_min > r_min this is zeta_minus(z)."""
    rho = rng.uniform(rho_min, rho_max, size)
    theta = rng.uniform(0.0, 2.0 * np.pi, size)
    return f_eval(params, rho * np.exp(1j * theta))
