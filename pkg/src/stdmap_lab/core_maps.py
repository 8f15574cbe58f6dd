"""Map families of the laboratory.

Two equivalent pictures of the same dynamics live here:

  * the standard map F_L(x, y) = (x + y + L sin(2pi x), y + L sin(2pi x))
    on the torus, together with its folded form
    hatF(x, y) = (f(x) - y mod 1, x) where f(x) = 2x + L sin(2pi x),
    reached through the coordinate change y -> x - y;
  * the slow-fast system G_eps(x, z) on the cylinder, a shear composed
    with a tilt, conjugate to F_L under z = eps^(1+alpha) y with
    L = eps^-alpha.

All public step operations return points reduced to the fundamental
domain [0, 1) (the lifted variant keeps its first coordinate unreduced).
`trajectory` iterates in compensated double-double state internally so
that the conjugacy between the two pictures survives the ~L-per-step
error amplification of the chaotic dynamics for short orbit segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import PrecisionDomainExceeded
from .numerics import (
    KahanSum,
    dd_add,
    dd_add_d,
    dd_div,
    dd_ipow,
    dd_mul,
    dd_mul_d,
    dd_sub,
    dd_to_float,
    frac,
    frac_dd,
    sin2pi,
    sin2pi_dd,
    sin2pi_dd_arg,
    two_prod,
)

PRECISION_DOMAIN_CAP = 2.0 ** 40

_EPS = np.finfo(float).eps


class TorusPoint(NamedTuple):
    x: float
    y: float


class LiftedPoint(NamedTuple):
    x: float  # unreduced horizontal coordinate
    y: float


class CylinderState(NamedTuple):
    x: float
    z: float


def floor_guarded(v: float) -> int:
    """floor(v) robust to v sitting one rounding step below an integer.

    Decimal inputs like eps = 0.1 give eps**-2 = 99.999...99 in binary;
    the guard of a few ulp restores the intended floor(100) = 100.
    """
    return int(math.floor(v + 8.0 * _EPS * max(1.0, abs(v))))


def _dd_pow_of(eps: float, exponent: float):
    """eps**exponent as a dd pair, exact-path when the exponent is integral."""
    if exponent == int(exponent):
        inv = dd_div((1.0, 0.0), (eps, 0.0))
        n = int(exponent)
        if n >= 0:
            return dd_ipow((eps, 0.0), n)
        return dd_ipow(inv, -n)
    return (eps ** exponent, 0.0)


@dataclass(frozen=True)
class MapParams:
    """Parameter bundle tying the two pictures together.

    L = eps^-alpha, beta = 2/alpha, and N_of_L = floor(L^beta) is the
    natural iterate count of the diffusive scaling.
    """

    L: float
    epsilon: float
    alpha: float
    beta: float = field(init=False)
    N_of_L: int = field(init=False)

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        expected = self.epsilon ** (-self.alpha)
        if abs(self.L - expected) > 1e-12 * expected:
            raise ValueError(
                f"inconsistent parameters: L={self.L!r} but "
                f"epsilon**-alpha={expected!r}"
            )
        object.__setattr__(self, "beta", 2.0 / self.alpha)
        object.__setattr__(self, "N_of_L", floor_guarded(self.L ** self.beta))

    @classmethod
    def from_epsilon(cls, epsilon: float, alpha: float) -> "MapParams":
        L = dd_to_float(_dd_pow_of(epsilon, -alpha))
        return cls(L=L, epsilon=epsilon, alpha=alpha)

    @classmethod
    def from_L(cls, L: float, alpha: float) -> "MapParams":
        eps = L ** (-1.0 / alpha)
        return cls(L=L, epsilon=eps, alpha=alpha)

    @property
    def shear_coefficient(self) -> float:
        return dd_to_float(self.shear_dd)

    @property
    def shear_dd(self):
        return _dd_pow_of(self.epsilon, -(1.0 + self.alpha))

    @property
    def L_dd(self):
        return _dd_pow_of(self.epsilon, -self.alpha)

    @property
    def z_scale_dd(self):
        # eps^(1+alpha), the factor carrying y to the slow variable
        return _dd_pow_of(self.epsilon, 1.0 + self.alpha)

    def in_precision_domain(self) -> bool:
        return self.shear_coefficient <= PRECISION_DOMAIN_CAP


# ---------------------------------------------------------------------------
# the angle function f(x) = 2x + L sin(2 pi x)
# ---------------------------------------------------------------------------

def eval_f(x: float, L: float) -> float:
    """f(x) = 2x + L sin(2 pi x), unreduced.

    The sine is evaluated in double-double and the product against L by
    an error-free transform, so the *fractional* part of the result is
    accurate to well under 1e-12 for L up to 2^40; the returned double
    is the correct rounding of the full value.  Use `eval_f_parts` when
    the fractional part must survive L larger than ~2^52.
    """
    n, r = eval_f_parts(x, L)
    return n + r


def eval_f_parts(x, L, h=0.0):
    """Split evaluation of f(x) - h as (integer_part, fractional_part).

    integer_part is an integer-valued float, fractional_part lies in
    [0, 1); their sum represents 2x + L sin(2 pi x) - h with absolute
    error ~1e-15 in the fractional part for L <= 2^40.  Vectorized.
    """
    s_hi, s_lo = sin2pi_dd(x)
    p, e = two_prod(L, s_hi)
    base = np.floor(p)
    r = p - base  # exact
    tail = dd_add_d((r, 0.0), e + L * s_lo)
    tail = dd_add_d(tail, 2.0 * x)
    tail = dd_add_d(tail, -h)
    t_hi, t_lo = tail
    shift = np.floor(t_hi)
    fr = (t_hi - shift) + t_lo
    extra = np.floor(fr)
    out_frac = fr - extra
    out_int = base + shift + extra
    if np.ndim(x) == 0 and np.ndim(h) == 0:
        return float(out_int), float(out_frac)
    return out_int, out_frac


def eval_f_parts_fast(x, L, h=0.0):
    """eval_f_parts with the libm sine: fractional error ~L * 1e-16.

    Good enough for bracketing work; finish with the strict evaluator
    where 1e-12 residuals are contractual.
    """
    s = sin2pi(x)
    p, e = two_prod(L, s)
    base = np.floor(p)
    r = (p - base) + e + 2.0 * x - h
    shift = np.floor(r)
    return base + shift, r - shift


# ---------------------------------------------------------------------------
# single-step maps (scalar, strict precision)
# ---------------------------------------------------------------------------

def step_hatF(p, L: float) -> TorusPoint:
    """(x, y) -> (f(x) - y mod 1, x)."""
    x, y = p
    _, r = eval_f_parts(x, L, h=y)
    return TorusPoint(r, frac(x))


def step_F(p, L: float) -> TorusPoint:
    """The standard map (x, y) -> (x + y + L sin, y + L sin) mod 1."""
    x, y = p
    s_hi, s_lo = sin2pi_dd(x)
    p1, e1 = two_prod(L, s_hi)
    kick = dd_add_d((p1, e1), L * s_lo)
    y_new = frac_dd(dd_add_d(kick, y))
    x_new = frac_dd(dd_add_d(dd_add(kick, (y, 0.0)), x))
    return TorusPoint(dd_to_float(x_new), dd_to_float(y_new))


def conjugate(p) -> TorusPoint:
    """Coordinate change (x, y) -> (x, x - y mod 1); an involution.

    Intertwines the two torus pictures: conjugate(step_F(p)) equals
    step_hatF(conjugate(p)) up to rounding.
    """
    x, y = p
    return TorusPoint(frac(x), frac(x - y))


def step_lifted(p, L: float) -> LiftedPoint:
    """Like step_hatF but without reducing the first coordinate."""
    x, y = p
    n, r = eval_f_parts(x, L, h=y)
    return LiftedPoint(n + r, frac(x))


def step_slowfast(s, params: MapParams) -> CylinderState:
    """One step of the slow-fast system, composed as shear after tilt.

    Raises PrecisionDomainExceeded outside the trusted range of the
    shear coefficient; route through the conjugated picture there.
    """
    if not params.in_precision_domain():
        raise PrecisionDomainExceeded(
            f"eps**-(1+alpha) = {params.shear_coefficient:.6g} exceeds 2^40"
        )
    x, z = s
    s_dd = sin2pi_dd(x)
    # tilt: z picks up eps * sin(2 pi x)
    z_new = dd_add(
        (z, 0.0), dd_mul_d(s_dd, params.epsilon)
    )
    # shear: x advances by eps^-(1+alpha) * z_new
    drift = dd_mul(params.shear_dd, z_new)
    x_new = frac_dd(dd_add_d(drift, x))
    return CylinderState(dd_to_float(x_new), dd_to_float(z_new))


# ---------------------------------------------------------------------------
# trajectories (compensated internal state)
# ---------------------------------------------------------------------------

_MAPS = ("hatF", "F", "lifted", "slowfast")


def trajectory(p0, params, n: int, which: str = "hatF"):
    """Orbit of length n+1 under the selected map family.

    `params` is a MapParams (required for "slowfast") or a bare L.  The
    state is carried in double-double across iterations, so two
    trajectories related by an exact conjugacy stay together despite the
    per-step error amplification of order L.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if which not in _MAPS:
        raise ValueError(f"unknown map {which!r}; expected one of {_MAPS}")
    if which == "slowfast":
        if not isinstance(params, MapParams):
            raise TypeError("slowfast trajectories need MapParams")
        return _trajectory_slowfast(p0, params, n)
    L = params.L if isinstance(params, MapParams) else float(params)
    if which == "hatF":
        return _trajectory_hatF(p0, L, n)
    if which == "F":
        return _trajectory_F(p0, L, n)
    return _trajectory_lifted(p0, L, n)


def _kick_dd(x_dd, L):
    s = sin2pi_dd_arg(*x_dd)
    p, e = two_prod(L, s[0])
    return dd_add_d((p, e), L * s[1])


def _as_state(v):
    arr = np.asarray(v, dtype=float)
    return (arr + 0.0, np.zeros_like(arr))


def _trajectory_hatF(p0, L, n):
    x = (frac(p0[0]), np.zeros_like(np.asarray(p0[0], dtype=float)))
    w = (frac(p0[1]), np.zeros_like(np.asarray(p0[1], dtype=float)))
    out = [TorusPoint(dd_to_float(x), dd_to_float(w))]
    for _ in range(n):
        kick = _kick_dd(x, L)
        val = dd_add(dd_mul_d(x, 2.0), kick)
        val = dd_sub(val, w)
        x, w = frac_dd(val), x
        out.append(TorusPoint(dd_to_float(x), dd_to_float(w)))
    return out


def _trajectory_F(p0, L, n):
    x = (frac(p0[0]), np.zeros_like(np.asarray(p0[0], dtype=float)))
    y = (frac(p0[1]), np.zeros_like(np.asarray(p0[1], dtype=float)))
    out = [TorusPoint(dd_to_float(x), dd_to_float(y))]
    for _ in range(n):
        kick = _kick_dd(x, L)
        y = frac_dd(dd_add(y, kick))
        # x + y_old + kick == x + y_new (mod 1)
        x = frac_dd(dd_add(x, y))
        out.append(TorusPoint(dd_to_float(x), dd_to_float(y)))
    return out


def _trajectory_lifted(p0, L, n):
    x = _as_state(p0[0])
    w = (frac(p0[1]), np.zeros_like(np.asarray(p0[1], dtype=float)))
    out = [LiftedPoint(dd_to_float(x), dd_to_float(w))]
    for _ in range(n):
        x_red = frac_dd(x)
        kick = _kick_dd(x_red, L)
        val = dd_add(dd_mul_d(x_red, 2.0), kick)
        val = dd_sub(val, w)
        x, w = val, x_red
        out.append(LiftedPoint(dd_to_float(x), dd_to_float(w)))
    return out


def _trajectory_slowfast(s0, params, n):
    if not params.in_precision_domain():
        raise PrecisionDomainExceeded(
            f"eps**-(1+alpha) = {params.shear_coefficient:.6g} exceeds 2^40"
        )
    shear = params.shear_dd
    eps = params.epsilon
    x = (frac(s0[0]), np.zeros_like(np.asarray(s0[0], dtype=float)))
    z = _as_state(s0[1])
    out = [CylinderState(dd_to_float(x), dd_to_float(z))]
    for _ in range(n):
        s = sin2pi_dd_arg(*x)
        z = dd_add(z, dd_mul_d(s, eps))
        x = frac_dd(dd_add(x, dd_mul(shear, z)))
        out.append(CylinderState(dd_to_float(x), dd_to_float(z)))
    return out


# ---------------------------------------------------------------------------
# vectorized ensemble kernels (used by the statistics module)
# ---------------------------------------------------------------------------

def ensemble_step_hatF(x, w, L, strict: bool = False):
    """One folded-map step for arrays of states; returns (x', w') = (f(x)-w mod 1, x).

    The fast path uses the libm sine plus an error-free product, keeping
    fractional parts accurate to ~L * 1e-16; the strict path evaluates
    the sine in double-double as well.
    """
    if strict:
        s_hi, s_lo = sin2pi_dd(x)
        p, e = two_prod(L, s_hi)
        tail = e + L * s_lo
    else:
        s = sin2pi(x)
        p, e = two_prod(L, s)
        tail = e
    r = p - np.floor(p)
    tot = r + tail + 2.0 * x - w
    x_new = tot - np.floor(tot)
    x_new = np.where(x_new >= 1.0, x_new - 1.0, x_new)
    return x_new, x


def ensemble_x_marginal(x0, w0, L, n, strict: bool = False):
    """x-coordinate after n folded-map steps, vectorized."""
    x = np.array(x0, dtype=float, copy=True)
    w = np.array(w0, dtype=float, copy=True)
    for _ in range(n):
        x, w = ensemble_step_hatF(x, w, L, strict=strict)
    return x


def ensemble_birkhoff(x0, w0, L, N, phi, strict: bool = False):
    """Birkhoff sums sum_{i<N} phi(x_i) along folded-map orbits.

    phi acts on the x-coordinate only; accumulation is compensated.
    """
    x = np.array(x0, dtype=float, copy=True)
    w = np.array(w0, dtype=float, copy=True)
    acc = KahanSum(x.shape)
    for _ in range(N):
        acc.add(phi(x))
        x, w = ensemble_step_hatF(x, w, L, strict=strict)
    return acc.value
