"""Compensated floating-point kernels used throughout the laboratory.

The standard-map angle f(x) = 2x + L sin(2pi x) is evaluated at parameters
up to L ~ 2^40, where the naive product L*sin already loses ~L*ulp of
absolute accuracy before any mod-1 reduction happens.  Everything here
exists to keep fractional parts trustworthy at that scale:

  * error-free transforms (two_sum / two_prod, Dekker splitting; no fma
    required),
  * a small double-double ("dd") layer, vectorized over numpy arrays,
  * sin2pi / cos2pi with exact quadrant reduction, so x in {0, 1/2} gives
    an exact zero,
  * sin2pi_dd, a double-double sine accurate to ~1e-31 absolute,
  * frac / frac_dd, mod-1 reductions onto [0, 1),
  * Kahan accumulation for long orbit sums.

All functions accept scalars or numpy arrays and broadcast like numpy.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi
# 2*pi as a double-double: hi is the rounded double, lo the remainder.
TWO_PI_HI = 6.283185307179586
TWO_PI_LO = 2.4492935982947064e-16

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


# ---------------------------------------------------------------------------
# error-free transforms
# ---------------------------------------------------------------------------

def two_sum(a, b):
    """Return (s, e) with s = fl(a+b) and s + e = a + b exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    e = b - (s - a)
    return s, e


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    lo = a - hi
    return hi, lo


def two_prod(a, b):
    """Return (p, e) with p = fl(a*b) and p + e = a * b exactly."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


# ---------------------------------------------------------------------------
# double-double arithmetic: a value is an (hi, lo) pair with |lo| <= ulp(hi)
# ---------------------------------------------------------------------------

def dd_normalize(hi, lo):
    return quick_two_sum(hi, lo)


def dd_add(a, b):
    ah, al = a
    bh, bl = b
    s, e = two_sum(ah, bh)
    e = e + (al + bl)
    return quick_two_sum(s, e)


def dd_add_d(a, b):
    ah, al = a
    s, e = two_sum(ah, b)
    e = e + al
    return quick_two_sum(s, e)


def dd_neg(a):
    return (-a[0], -a[1])


def dd_sub(a, b):
    return dd_add(a, dd_neg(b))


def dd_mul(a, b):
    ah, al = a
    bh, bl = b
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return quick_two_sum(p, e)


def dd_mul_d(a, b):
    ah, al = a
    p, e = two_prod(ah, b)
    e = e + al * b
    return quick_two_sum(p, e)


def dd_div(a, b):
    ah, al = a
    bh, bl = b
    q1 = ah / bh
    # r = a - q1*b, computed in dd
    p, e = two_prod(q1, bh)
    r = dd_sub(a, (p, e + q1 * bl))
    q2 = r[0] / bh
    p, e = two_prod(q2, bh)
    r2 = dd_sub(r, (p, e + q2 * bl))
    q3 = r2[0] / bh
    q, eq = quick_two_sum(q1, q2)
    return quick_two_sum(q, eq + q3)


def dd_ipow(a, n: int):
    """Integer power of a dd value by binary exponentiation."""
    if n < 0:
        num = dd_ipow(a, -n)
        return dd_div((1.0, 0.0), num)
    result = (1.0, 0.0)
    base = a
    while n > 0:
        if n & 1:
            result = dd_mul(result, base)
        base = dd_mul(base, base)
        n >>= 1
    return result


def dd_to_float(a):
    return a[0] + a[1]


# ---------------------------------------------------------------------------
# mod-1 reduction
# ---------------------------------------------------------------------------

def frac(x):
    """Reduce to the fundamental domain [0, 1).

    Negative inputs map to their representative in [0, 1).  The rounded
    result 1.0 (possible for tiny negative x) is folded back to 0.0.
    """
    r = x - np.floor(x)
    r = np.where(r >= 1.0, r - 1.0, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


def frac_dd(a):
    """Fractional part of a dd value, returned as a dd in [0, 1)."""
    hi, lo = a
    base = np.floor(hi)
    r = hi - base  # exact
    s, e = two_sum(r, lo)
    # fold into [0, 1); lo can push the sum across either boundary
    shift = np.floor(s)
    s = s - shift
    s, e = quick_two_sum(s, e)
    down = s < 0.0
    s = np.where(down, s + 1.0, s)
    up = s >= 1.0
    s = np.where(up, s - 1.0, s)
    s, e = quick_two_sum(s, e + 0.0)
    if np.ndim(s) == 0:
        return float(s), float(e)
    return s, e


# ---------------------------------------------------------------------------
# quadrant-reduced trigonometry on the unit circle
# ---------------------------------------------------------------------------

def _reduce_quadrant(x):
    """Map x to (t, sign) with sin(2pi x) = sign * sin(2pi t), |t| <= 1/4.

    The subtractions r - 1/2 and r - 1 are exact (Sterbenz), so x landing
    on 0 or 1/2 mod 1 yields t = 0 exactly and hence an exact zero sine.
    """
    r = frac(x)
    r = np.asarray(r, dtype=float)
    t = np.where(r <= 0.25, r, np.where(r < 0.75, r - 0.5, r - 1.0))
    sign = np.where((r > 0.25) & (r < 0.75), -1.0, 1.0)
    return t, sign


def sin2pi(x):
    """sin(2 pi x) with exact zeros at x = 0, 1/2 (mod 1)."""
    t, sign = _reduce_quadrant(x)
    out = sign * np.sin(TWO_PI * t)
    if np.ndim(x) == 0:
        return float(out)
    return out


def cos2pi(x):
    """cos(2 pi x), sharing the sine's quadrant reduction."""
    t, sign = _reduce_quadrant(x)
    out = sign * np.cos(TWO_PI * t)
    if np.ndim(x) == 0:
        return float(out)
    return out


def _dd_sin_coefficients():
    # dd representations of (-1)^k / (2k+1)!, k = 0..17
    coeffs = []
    for k in range(18):
        val = Fraction((-1) ** k, math.factorial(2 * k + 1))
        hi = float(val)
        lo = float(val - Fraction(hi))
        coeffs.append((hi, lo))
    return coeffs


_SIN_COEFFS = _dd_sin_coefficients()
_SIN_HEAD = _SIN_COEFFS[:9]            # summed in dd
_SIN_TAIL = [c[0] for c in _SIN_COEFFS[9:]]  # magnitude <= 1e-17; double is plenty


def sin2pi_dd(x):
    """sin(2 pi x) as a double-double, absolute error ~1e-30.

    Needed wherever the product L * sin(2 pi x) must keep an accurate
    fractional part: a plain double sine costs ~L * 1e-16 there, which is
    fatal for L beyond ~1e4.  Argument reduction is exact, the angle
    2 pi t is formed in dd, and the Taylor series of sin on |u| <= pi/2
    is summed by Horner: the first nine terms in dd, the remainder (whose
    total contribution is ~1e-13) in plain doubles.
    """
    t, sign = _reduce_quadrant(x)
    # u = 2*pi*t in dd
    p, e = two_prod(TWO_PI_HI, t)
    u = quick_two_sum(p, e + TWO_PI_LO * t)
    w = dd_mul(u, u)
    w_hi = w[0]
    acc_t = np.full_like(np.asarray(w_hi, dtype=float), _SIN_TAIL[-1])
    for c in _SIN_TAIL[-2::-1]:
        acc_t = acc_t * w_hi + c
    acc = (acc_t, np.zeros_like(acc_t))
    for c in _SIN_HEAD[::-1]:
        acc = dd_add(dd_mul(acc, w), c)
    s = dd_mul(acc, u)
    return dd_mul_d(s, sign)


def sin2pi_dd_arg(x_hi, x_lo):
    """sin(2 pi x) for a dd argument x = x_hi + x_lo.

    First-order correction through the derivative; the neglected term is
    O(x_lo^2) ~ 1e-32 relative.
    """
    s = sin2pi_dd(x_hi)
    corr = TWO_PI * cos2pi(x_hi) * x_lo
    return dd_add_d(s, corr)


# ---------------------------------------------------------------------------
# compensated accumulation
# ---------------------------------------------------------------------------

class KahanSum:
    """Incremental compensated summation (Kahan).

    Accepts scalars or arrays of a fixed shape; `value` returns the
    running sum with the carry folded in.
    """

    def __init__(self, shape=None):
        if shape is None:
            self.s = 0.0
            self.c = 0.0
        else:
            self.s = np.zeros(shape)
            self.c = np.zeros(shape)

    def add(self, x):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t

    @property
    def value(self):
        return self.s - self.c


def pairwise_sum(values):
    """Deterministic pairwise tree reduction of a 1-d sequence."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(vals[i] + vals[i + 1])
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]
