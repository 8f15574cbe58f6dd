"""Critical-strip geometry, cone fields, and tangent-map checks.

The folded map expands horizontally by df/dx = 2 + 2 pi L cos(2 pi x)
except on two thin vertical bands around x = 1/4 and x = 3/4 where the
cosine changes sign.  For a cutoff exponent eta in (0, 1), the critical
strip is the set |2 + 2 pi L cos(2 pi x)| <= 2 L^eta; outside it the
derivative pushes the horizontal cone |w| <= xi |u| strictly into the
narrower cone of aperture 1 / (2 L^eta - xi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ApertureDomain, StripDegenerate, ZeroVector
from .numerics import TWO_PI, cos2pi

DEFAULT_L_MIN = 100.0


def dfdx(x, L):
    """Derivative of the angle function: 2 + 2 pi L cos(2 pi x)."""
    return 2.0 + TWO_PI * L * cos2pi(x)


def d2fdx2(x, L):
    from .numerics import sin2pi

    return -(TWO_PI ** 2) * L * sin2pi(x)


@dataclass(frozen=True)
class CriticalStrips:
    """The two closed x-intervals where horizontal expansion drops below 2 L^eta."""

    L: float
    eta: float
    intervals: tuple  # ((lo1, hi1), (lo2, hi2)), lo1 < 1/4 < hi1, lo2 < 3/4 < hi2

    @property
    def threshold(self) -> float:
        return 2.0 * self.L ** self.eta

    @property
    def measure(self) -> float:
        (a1, b1), (a2, b2) = self.intervals
        return (b1 - a1) + (b2 - a2)

    def contains(self, x) -> bool:
        return in_strip(x, self)


def _bisect(fn, a, b, tol=1e-14, max_iter=200):
    fa = fn(a)
    fb = fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ValueError("bisection bracket does not straddle a root")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0 or (b - a) <= tol:
            return m
        if fa * fm < 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def critical_intervals(L: float, eta: float, L_min: float = DEFAULT_L_MIN) -> CriticalStrips:
    """Locate the two strip intervals by bisection on the monotone branches.

    Endpoints solve |2 + 2 pi L cos(2 pi x)| = 2 L^eta to 1e-14.  Raises
    StripDegenerate when 2 L^eta >= 2 pi L - 2, i.e. when the bands would
    merge or swallow the circle.  L below L_min only triggers a warning:
    the asymptotic-regime assumption is reported, not enforced.
    """
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    if L <= 0:
        raise ValueError("L must be positive")
    thr = 2.0 * L ** eta
    if thr >= TWO_PI * L - 2.0:
        raise StripDegenerate(
            f"2 L^eta = {thr:.6g} >= 2 pi L - 2; strips merge at L={L}, eta={eta}"
        )
    if L < L_min:
        warnings.warn(
            f"L = {L} below advisory minimum {L_min}; strip asymptotics untrusted",
            stacklevel=2,
        )

    # df/dx decreases monotonically on (0, 1/2) from 2 + 2 pi L to 2 - 2 pi L
    lo1 = _bisect(lambda x: dfdx(x, L) - thr, 0.0, 0.5)
    hi1 = _bisect(lambda x: dfdx(x, L) + thr, 0.0, 0.5)
    # and increases back on (1/2, 1)
    lo2 = _bisect(lambda x: dfdx(x, L) + thr, 0.5, 1.0)
    hi2 = _bisect(lambda x: dfdx(x, L) - thr, 0.5, 1.0)
    return CriticalStrips(L=L, eta=eta, intervals=((lo1, hi1), (lo2, hi2)))


@lru_cache(maxsize=256)
def strip_intervals_cached(L: float, eta: float):
    """Memoized strip endpoints for the decomposition engine."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return critical_intervals(L, eta).intervals


def in_strip(x, strips: CriticalStrips):
    """True iff |2 + 2 pi L cos(2 pi x)| <= 2 L^eta (closed strips)."""
    val = np.abs(dfdx(x, strips.L))
    out = val <= strips.threshold
    if np.ndim(x) == 0:
        return bool(out)
    return out


@dataclass(frozen=True)
class Cone:
    """Horizontal cone |w| <= xi |u| in the tangent plane."""

    xi: float

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError("cone aperture must be positive")

    def contains(self, v) -> bool:
        return cone_contains(self, v)


def cone_contains(cone: Cone, v) -> bool:
    u, w = float(v[0]), float(v[1])
    if u == 0.0 and w == 0.0:
        raise ZeroVector("cone membership of the zero vector is undefined")
    return abs(w) <= cone.xi * abs(u)


@dataclass(frozen=True)
class TangentMatrix:
    """2x2 derivative of the folded map at a point; det = 1 identically."""

    m: np.ndarray

    def det(self) -> float:
        return float(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])

    def apply(self, v) -> np.ndarray:
        return self.m @ np.asarray(v, dtype=float)


def jacobian_hatF(p, L: float) -> TangentMatrix:
    """Derivative of (x, y) -> (f(x) - y, x): rows (f'(x), -1) and (1, 0).

    Note this is the honest derivative of the folded map as defined; some
    displayed forms flip both off-diagonal signs, which leaves every cone
    statement unchanged.
    """
    x = p[0]
    return TangentMatrix(np.array([[dfdx(x, L), -1.0], [1.0, 0.0]]))


def pushed_cone_aperture(xi: float, eta: float, L: float) -> float:
    """Image aperture 1 / (2 L^eta - xi) for vectors leaving C_xi off-strip."""
    thr = L ** eta
    if xi > thr:
        raise ApertureDomain(f"xi = {xi} exceeds L^eta = {thr}")
    if 2.0 * thr <= xi:
        raise ApertureDomain("2 L^eta must exceed xi")
    return 1.0 / (2.0 * thr - xi)
