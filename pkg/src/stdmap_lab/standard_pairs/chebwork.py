"""Chebyshev interpolation helpers for curve and density models.

Image curves produced by the dynamics are graphs of inverse branches of
the angle function; they are analytic with slopes O(L^-1/4), so modest
Chebyshev degrees represent them to ~1e-13.  Fits use values at
Chebyshev extrema (CGL nodes) turned into coefficients by a DCT, which
keeps batched fitting of many curve pieces a single FFT call.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C


def cgl_nodes(deg: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes on [-1, 1], descending from 1 to -1."""
    return np.cos(np.pi * np.arange(deg + 1) / deg)


def fit_from_values(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through values at CGL nodes.

    `values` has the node axis last; batched leading axes are allowed.
    Uses the even-extension DCT trick via rfft.
    """
    vals = np.asarray(values, dtype=float)
    n = vals.shape[-1] - 1
    if n == 0:
        return vals.copy()
    ext = np.concatenate([vals, vals[..., -2:0:-1]], axis=-1)
    coeffs = np.fft.rfft(ext, axis=-1).real / n
    coeffs = coeffs[..., : n + 1]
    coeffs[..., 0] *= 0.5
    coeffs[..., -1] *= 0.5
    return coeffs


def tail_smallness(coeffs: np.ndarray, k: int = 4) -> float:
    """Max magnitude of the trailing k coefficients relative to the largest."""
    c = np.abs(np.asarray(coeffs))
    scale = c.max() if c.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(c[-k:].max() / scale)


def trim_coefficients(coeffs: np.ndarray, rel_tol: float = 1e-14,
                      abs_floor: float = 1e-300) -> np.ndarray:
    """Drop the negligible tail of a coefficient vector (keeps >= 2 terms)."""
    c = np.asarray(coeffs, dtype=float)
    mags = np.abs(c)
    thresh = max(rel_tol * float(mags.max(initial=0.0)), abs_floor)
    keep = np.nonzero(mags > thresh)[0]
    cut = max(2, int(keep[-1]) + 1) if keep.size else 2
    return c[:cut].copy()


class ChebModel:
    """A Chebyshev series on an interval [lo, hi] with derivative access."""

    __slots__ = ("lo", "hi", "coeffs", "_dcoeffs", "_d2coeffs", "_icoeffs")

    def __init__(self, coeffs: np.ndarray, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self._dcoeffs = None
        self._d2coeffs = None
        self._icoeffs = None

    @classmethod
    def from_nodes(cls, fn, lo: float, hi: float, deg: int) -> "ChebModel":
        x = cls.nodes_on(lo, hi, deg)
        return cls(fit_from_values(fn(x)), lo, hi)

    @staticmethod
    def nodes_on(lo: float, hi: float, deg: int) -> np.ndarray:
        t = cgl_nodes(deg)
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t

    def _t(self, x):
        return (2.0 * np.asarray(x, dtype=float) - (self.lo + self.hi)) / (self.hi - self.lo)

    @property
    def scale(self) -> float:
        # d t / d x
        return 2.0 / (self.hi - self.lo)

    def __call__(self, x):
        return C.chebval(self._t(x), self.coeffs)

    def deriv(self, x):
        if self._dcoeffs is None:
            self._dcoeffs = C.chebder(self.coeffs)
        return C.chebval(self._t(x), self._dcoeffs) * self.scale

    def deriv2(self, x):
        if self._d2coeffs is None:
            self._d2coeffs = C.chebder(self.coeffs, 2)
        return C.chebval(self._t(x), self._d2coeffs) * self.scale ** 2

    def cumulative(self, a, b):
        """Integral of the series between a and b (inside the domain)."""
        if self._icoeffs is None:
            self._icoeffs = C.chebint(self.coeffs)
        ic = self._icoeffs
        return (C.chebval(self._t(b), ic) - C.chebval(self._t(a), ic)) / self.scale

    def tail(self, k: int = 4) -> float:
        return tail_smallness(self.coeffs, k)
