"""Graph curves, transported densities, and measure pairs.

A u-curve is a graph {(x, h(x)) : x in I} over an interval I of length
at most 1 with slope bounded by 1/10 and curvature bounded by L.  The
image of a strip-free piece under the folded map is again a graph, of
the inverse branch of f_gamma(x) = f(x) - h(x); pieces carry their
parent reference and parent-domain subinterval, and both the height and
the transported density are flattened to Chebyshev interpolants at
creation (tail target ~1e-12), so evaluation cost does not grow with
ancestry depth.  Domains live in covering coordinates: lo in [0, 1),
hi <= lo + 1; reduce mod 1 only when a point on the torus is needed.

One step of density transport obeys

    d log rho' / dx = ( (1/f_gamma') d log rho / dx
                        - f_gamma'' / f_gamma'^2 ) o (f_gamma)^{-1},

which bounds the new log-derivative by L^-eta * old + C0 * L^(1-2eta)
off the eta-strips, with C0 = 8 pi^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from ..core_maps import eval_f_parts, eval_f_parts_fast
from ..errors import BracketError, CurveDomainError, InvariantViolation, StripOverlap
from ..geometry import d2fdx2, dfdx, strip_intervals_cached
from .chebwork import ChebModel, fit_from_values, trim_coefficients

C0 = 8.0 * math.pi ** 2
A0_DEFAULT = 1.0 / 16.0
SLOPE_BOUND = 0.1

_FIT_DEGREES = (48, 96, 192, 384)
_FIT_TAIL_TOL = 5e-12


class Regularity(Enum):
    FULL_CROSSING = "full"
    STANDARD = "standard"
    SUBSTANDARD = "substandard"


# ---------------------------------------------------------------------------
# height models
# ---------------------------------------------------------------------------

class ConstHeight:
    __slots__ = ("y0",)

    def __init__(self, y0: float):
        self.y0 = float(y0)

    def h(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.y0)

    def dh(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def d2h(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class ChebHeight:
    __slots__ = ("model",)

    def __init__(self, model: ChebModel):
        self.model = model

    def h(self, x):
        return self.model(x)

    def dh(self, x):
        return self.model.deriv(x)

    def d2h(self, x):
        return self.model.deriv2(x)


HeightModel = Union[ConstHeight, ChebHeight]


# ---------------------------------------------------------------------------
# provenance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Root:
    y0: float


@dataclass(frozen=True)
class Child:
    parent: "MeasurePair"
    parent_interval: tuple
    window: int


# ---------------------------------------------------------------------------
# the curve itself
# ---------------------------------------------------------------------------

@dataclass
class UCurve:
    lo: float
    hi: float
    L: float
    height: HeightModel
    provenance: Union[Root, Child]

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError("empty curve domain")
        if self.hi - self.lo > 1.0 + 1e-12:
            raise ValueError("curve domain longer than the circle")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def fully_crossing(self) -> bool:
        return abs(self.length - 1.0) <= 1e-12

    def h(self, x):
        return self.height.h(x)

    def dh(self, x):
        return self.height.dh(x)

    def d2h(self, x):
        return self.height.d2h(x)

    def contains(self, x, tol: float = 1e-12):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def sample_points(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)


def f_gamma_parts(curve: UCurve, x, fast: bool = False):
    """f(x) - h(x) as (integer_part, fractional_part); vectorized."""
    if fast:
        return eval_f_parts_fast(x, curve.L, h=curve.h(x))
    return eval_f_parts(x, curve.L, h=curve.h(x))


def f_gamma(curve: UCurve, x, check_domain: bool = True):
    """The shifted angle function f(x) - h_gamma(x), unreduced."""
    if check_domain and not np.all(curve.contains(x)):
        raise CurveDomainError("point outside the curve domain")
    n, r = f_gamma_parts(curve, x)
    return n + r


def df_gamma(curve: UCurve, x):
    return dfdx(x, curve.L) - curve.dh(x)


def d2f_gamma(curve: UCurve, x):
    return d2fdx2(x, curve.L) - curve.d2h(x)


def _parts_of(value) -> tuple:
    base = np.floor(value)
    return base, value - base


def invert_f_gamma_batch(curve, t_int, t_frac, lo, hi, tol=1e-13, max_iter=80,
                         strict: bool = True):
    """Solve f_gamma(x) = t_int + t_frac on monotone brackets [lo, hi].

    Vectorized safeguarded Newton: brackets shrink with every residual
    sign, and steps leaving the bracket fall back to bisection.  The
    residual is formed in split (integer, fraction) arithmetic so
    magnitudes ~4L never touch the achievable 1e-12.  Iteration runs on
    the cheap libm evaluator first and polishes with the strict one,
    whose jitter stays ~1e-15 at any L in range.
    """
    t_int = np.asarray(t_int, dtype=float)
    t_frac = np.asarray(t_frac, dtype=float)
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)

    n_lo, r_lo = f_gamma_parts(curve, lo, fast=True)
    n_hi, r_hi = f_gamma_parts(curve, hi, fast=True)
    res_lo = (n_lo - t_int) + (r_lo - t_frac)
    res_hi = (n_hi - t_int) + (r_hi - t_frac)
    increasing = res_hi > res_lo

    span = res_hi - res_lo
    with np.errstate(divide="ignore", invalid="ignore"):
        guess = lo + (hi - lo) * np.where(span != 0.0, -res_lo / span, 0.5)
    x = np.clip(guess, lo, hi)

    # The root is representable only to ulp(x); the residual there is up to
    # |f'| * ulp(x) / 2, so the target tolerance carries a per-point floor.
    eps = np.finfo(float).eps
    fast_tol = max(tol, 4e-16 * curve.L)
    phases = [(True, fast_tol, max_iter)]
    if strict:
        phases.append((False, tol, 10))
    res = np.full_like(np.asarray(x, dtype=float), np.inf)
    for fast, phase_tol, iters in phases:
        converged = False
        for _ in range(iters):
            n, r = f_gamma_parts(curve, x, fast=fast)
            res = (n - t_int) + (r - t_frac)
            d = df_gamma(curve, x)
            quantum = 2.0 * eps * np.abs(d) * np.maximum(np.abs(x), 0.25)
            done = np.abs(res) <= np.maximum(phase_tol, quantum)
            if done.all():
                converged = True
                break
            below = np.where(increasing, res < 0.0, res > 0.0)
            lo = np.where(below & ~done, x, lo)
            hi = np.where(~below & ~done, x, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = res / d
            x_new = x - step
            bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
            x_new = np.where(bad, 0.5 * (lo + hi), x_new)
            x = np.where(done, x, x_new)
        if not converged and not fast:
            quantum = 2.0 * eps * np.abs(d) * np.maximum(np.abs(x), 0.25)
            worst = float((np.abs(res) - np.maximum(1e-12, quantum)).max())
            if worst > 0.0:
                raise BracketError(
                    f"inverse iteration stalled {worst:.3e} above tolerance"
                )
    return x


def invert_f_gamma(curve: UCurve, target: float, bracket) -> float:
    """Scalar inverse of f_gamma on a monotone bracket; BracketError if not enclosed."""
    a, b = float(bracket[0]), float(bracket[1])
    if not (curve.contains(a) and curve.contains(b)):
        raise CurveDomainError("bracket leaves the curve domain")
    fa = f_gamma(curve, a)
    fb = f_gamma(curve, b)
    lo_v, hi_v = (fa, fb) if fa <= fb else (fb, fa)
    if not (lo_v - 1e-9 <= target <= hi_v + 1e-9):
        raise BracketError(
            f"target {target!r} outside f_gamma(bracket) = [{lo_v!r}, {hi_v!r}]"
        )
    ti, tf = _parts_of(np.asarray(target, dtype=float))
    x = invert_f_gamma_batch(curve, ti, tf, np.asarray(a), np.asarray(b))
    return float(x)


# ---------------------------------------------------------------------------
# density models
# ---------------------------------------------------------------------------

class ConstDensity:
    __slots__ = ("value", "lo", "hi")

    def __init__(self, lo: float, hi: float):
        self.lo = float(lo)
        self.hi = float(hi)
        self.value = 1.0 / (self.hi - self.lo)

    def rho(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def log_rho(self, x):
        return np.full_like(np.asarray(x, dtype=float), math.log(self.value))

    def dlog_rho(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def cumulative(self, a, b):
        return (np.asarray(b, dtype=float) - np.asarray(a, dtype=float)) * self.value

    def antiderivative(self, x):
        return (np.asarray(x, dtype=float) - self.lo) * self.value


class ChebDensity:
    """Normalized Chebyshev density; `offset` shifts query coordinates."""

    __slots__ = ("model", "offset")

    def __init__(self, model: ChebModel, offset: float = 0.0):
        self.model = model
        self.offset = float(offset)

    @property
    def lo(self):
        return self.model.lo + self.offset

    @property
    def hi(self):
        return self.model.hi + self.offset

    def rho(self, x):
        return self.model(np.asarray(x, dtype=float) - self.offset)

    def log_rho(self, x):
        return np.log(self.rho(x))

    def dlog_rho(self, x):
        u = np.asarray(x, dtype=float) - self.offset
        return self.model.deriv(u) / self.model(u)

    def cumulative(self, a, b):
        return self.model.cumulative(
            np.asarray(a, dtype=float) - self.offset,
            np.asarray(b, dtype=float) - self.offset,
        )

    def antiderivative(self, x):
        return self.model.cumulative(self.model.lo, np.asarray(x, dtype=float) - self.offset)


DensityModel = Union[ConstDensity, ChebDensity]


@dataclass
class PairDensity:
    """A positive probability density on the curve's domain.

    log_derivative_bound is the class bound the density is guaranteed to
    satisfy (checked by sampling), not the sampled supremum itself.
    """

    model: DensityModel
    log_derivative_bound: float

    def rho(self, x):
        return self.model.rho(x)

    def log_rho(self, x):
        return self.model.log_rho(x)

    def dlog_rho(self, x):
        return self.model.dlog_rho(x)

    def cumulative(self, a, b):
        return self.model.cumulative(a, b)

    def antiderivative(self, x):
        return self.model.antiderivative(x)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "PairDensity":
        return cls(model=ConstDensity(lo, hi), log_derivative_bound=0.0)

    @classmethod
    def from_callable(cls, fn, lo: float, hi: float, bound: Optional[float] = None,
                      deg: int = 128) -> "PairDensity":
        model = ChebModel.from_nodes(lambda x: np.asarray(fn(x), dtype=float), lo, hi, deg)
        total = model.cumulative(lo, hi)
        if total <= 0:
            raise InvariantViolation("density must have positive mass")
        model = ChebModel(model.coeffs / total, lo, hi)
        dens = cls(model=ChebDensity(model), log_derivative_bound=math.inf)
        if bound is None:
            xs = np.linspace(lo, hi, 512)
            bound = float(np.abs(dens.dlog_rho(xs)).max()) * (1.0 + 1e-9) + 1e-12
        dens.log_derivative_bound = bound
        return dens


# ---------------------------------------------------------------------------
# measure pairs
# ---------------------------------------------------------------------------

@dataclass
class MeasurePair:
    curve: UCurve
    density: PairDensity
    mass: float
    regularity: Regularity

    @property
    def L(self) -> float:
        return self.curve.L

    def integral_over(self, a, b):
        """Mass carried by the sub-piece [a, b] of the domain."""
        return self.mass * float(self.density.cumulative(a, b))


def root_pair(y0: float, L: float, density_fn=None, mass: float = 1.0) -> MeasurePair:
    """The fully-crossing horizontal pair at height y0 (uniform by default)."""
    curve = UCurve(lo=0.0, hi=1.0, L=float(L), height=ConstHeight(y0), provenance=Root(y0))
    if density_fn is None:
        density = PairDensity.uniform(0.0, 1.0)
    else:
        density = PairDensity.from_callable(density_fn, 0.0, 1.0)
    return MeasurePair(curve=curve, density=density, mass=mass, regularity=Regularity.FULL_CROSSING)


# ---------------------------------------------------------------------------
# transported children
# ---------------------------------------------------------------------------

def transported_bound(old_bound: float, L: float, eta: float) -> float:
    return L ** (-eta) * old_bound + C0 * L ** (1.0 - 2.0 * eta)


def _fit_child_models(parent: MeasurePair, a: float, b: float, window: float,
                      lo_c: float, hi_c: float):
    """Fit Chebyshev models of the image height and transported density.

    Nodes live in the child domain [lo_c, hi_c]; each node u pulls back
    to t = f_gamma^{-1}(u + window) in the parent domain, giving
    h(u) = t and rho_hat(u) = rho_parent(t) / |f_gamma'(t)|.
    """
    curve = parent.curve
    xa, xb = (a, b) if a < b else (b, a)
    for deg in _FIT_DEGREES:
        nodes = ChebModel.nodes_on(lo_c, hi_c, deg)
        ti, tf = _parts_of(nodes + 0.0)
        t = invert_f_gamma_batch(curve, ti + window, tf,
                                 np.full(nodes.shape, xa), np.full(nodes.shape, xb),
                                 strict=False)
        h_coeffs = fit_from_values(t)
        rho_vals = parent.density.rho(t) / np.abs(df_gamma(curve, t))
        rho_coeffs = fit_from_values(rho_vals)
        h_model = ChebModel(h_coeffs, lo_c, hi_c)
        rho_model = ChebModel(rho_coeffs, lo_c, hi_c)
        if max(h_model.tail(), rho_model.tail()) <= _FIT_TAIL_TOL:
            h_model = ChebModel(trim_coefficients(h_coeffs), lo_c, hi_c)
            rho_model = ChebModel(trim_coefficients(rho_coeffs), lo_c, hi_c)
            break
    if np.any(rho_vals <= 0.0):
        raise InvariantViolation("transported density lost positivity")
    return h_model, rho_model


def make_child_pair(parent: MeasurePair, a: float, b: float, window: float,
                    lo_c: float, hi_c: float, regularity: Regularity,
                    eta: float, mass: Optional[float] = None) -> MeasurePair:
    """Image pair of the parent piece [a, b], shifted into window coordinates.

    The preimage piece must be strip-free at level eta (caller's duty);
    the transported log-derivative bound follows the one-step distortion
    estimate at that eta.
    """
    h_model, rho_model = _fit_child_models(parent, a, b, float(window), lo_c, hi_c)
    Z = rho_model.cumulative(lo_c, hi_c)
    if not (Z > 0.0):
        raise InvariantViolation("child density normalization failed")
    rho_model = ChebModel(rho_model.coeffs / Z, lo_c, hi_c)
    if mass is None:
        mass = abs(parent.integral_over(a, b))
    curve = UCurve(
        lo=lo_c, hi=hi_c, L=parent.L,
        height=ChebHeight(h_model),
        provenance=Child(parent=parent, parent_interval=(a, b), window=int(window)),
    )
    density = PairDensity(
        model=ChebDensity(rho_model),
        log_derivative_bound=transported_bound(parent.density.log_derivative_bound, parent.L, eta),
    )
    return MeasurePair(curve=curve, density=density, mass=float(mass), regularity=regularity)


def make_children_batch(parent: MeasurePair, a, b, window, lo, hi,
                        regularity: Regularity, eta: float, masses):
    """Materialize many children of one parent in a single batched fit.

    All rows share the parent curve, so the node inversions and the
    Chebyshev transforms run as one vectorized call at the base degree;
    rows whose coefficient tails have not converged fall back to the
    adaptive single-child path.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    window = np.asarray(window, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    masses = np.asarray(masses, dtype=float)
    n = a.size
    if n == 0:
        return []
    deg = _FIT_DEGREES[0]
    from .chebwork import cgl_nodes

    base_nodes = cgl_nodes(deg)  # (deg+1,)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * base_nodes[None, :]
    targets = nodes + window[:, None]
    ti = np.floor(targets)
    tf = targets - ti
    lo_b = np.broadcast_to(a[:, None], nodes.shape).ravel()
    hi_b = np.broadcast_to(b[:, None], nodes.shape).ravel()
    t = invert_f_gamma_batch(parent.curve, ti.ravel(), tf.ravel(), lo_b, hi_b,
                             strict=False).reshape(nodes.shape)
    h_coeffs = fit_from_values(t)
    rho_vals = parent.density.rho(t) / np.abs(df_gamma(parent.curve, t))
    if np.any(rho_vals <= 0.0):
        raise InvariantViolation("transported density lost positivity")
    rho_coeffs = fit_from_values(rho_vals)

    scale_h = np.abs(h_coeffs).max(axis=1)
    scale_r = np.abs(rho_coeffs).max(axis=1)
    tail_h = np.abs(h_coeffs[:, -4:]).max(axis=1) / np.maximum(scale_h, 1e-300)
    tail_r = np.abs(rho_coeffs[:, -4:]).max(axis=1) / np.maximum(scale_r, 1e-300)
    good = (tail_h <= _FIT_TAIL_TOL) & (tail_r <= _FIT_TAIL_TOL)

    bound = transported_bound(parent.density.log_derivative_bound, parent.L, eta)
    out = []
    for i in range(n):
        if not good[i]:
            out.append(make_child_pair(parent, float(a[i]), float(b[i]),
                                       float(window[i]), float(lo[i]), float(hi[i]),
                                       regularity, eta, mass=float(masses[i])))
            continue
        h_model = ChebModel(trim_coefficients(h_coeffs[i]), lo[i], hi[i])
        rho_model = ChebModel(trim_coefficients(rho_coeffs[i]), lo[i], hi[i])
        Z = rho_model.cumulative(lo[i], hi[i])
        rho_model = ChebModel(rho_model.coeffs / Z, lo[i], hi[i])
        curve = UCurve(
            lo=float(lo[i]), hi=float(hi[i]), L=parent.L,
            height=ChebHeight(h_model),
            provenance=Child(parent=parent,
                             parent_interval=(float(a[i]), float(b[i])),
                             window=int(window[i])),
        )
        density = PairDensity(model=ChebDensity(rho_model),
                              log_derivative_bound=bound)
        out.append(MeasurePair(curve=curve, density=density,
                               mass=float(masses[i]), regularity=regularity))
    return out


def height_via_parent(pair: MeasurePair, x):
    """Dual-route height evaluation through the parent's inverse branch.

    Ignores the stored interpolant; used to verify flattening fidelity.
    """
    prov = pair.curve.provenance
    if not isinstance(prov, Child):
        return pair.curve.h(x)
    a, b = prov.parent_interval
    xa, xb = (a, b) if a < b else (b, a)
    x = np.asarray(x, dtype=float)
    ti, tf = _parts_of(x)
    return invert_f_gamma_batch(prov.parent.curve, ti + prov.window, tf,
                                np.full(x.shape, xa), np.full(x.shape, xb))


def transport_density(pair: MeasurePair, image_interval, branch=None) -> PairDensity:
    """Push the pair's density one step forward onto an image subinterval.

    `image_interval` = (A, B) in lifted image coordinates, inside the
    image of a single monotone branch of f_gamma.  `branch` is the
    branch's domain bracket; it defaults to the whole domain, which must
    then be monotone.  The preimage must avoid the critical strips: the
    eta = 1/2 strips give the strong bound, falling back to eta = 1/4;
    StripOverlap otherwise.
    """
    A, B = float(image_interval[0]), float(image_interval[1])
    if not (B > A):
        raise ValueError("empty image interval")
    curve = pair.curve
    if branch is None:
        branch = (curve.lo, curve.hi)
    ba, bb = float(branch[0]), float(branch[1])
    probe = np.linspace(ba, bb, 65)
    signs = np.sign(df_gamma(curve, probe))
    if not (np.all(signs > 0) or np.all(signs < 0)):
        raise ValueError("branch is not monotone; pass a strip-free bracket")
    ends = f_gamma(curve, np.array([ba, bb]))
    lo_v, hi_v = min(ends), max(ends)
    if A < lo_v - 1e-9 or B > hi_v + 1e-9:
        raise BracketError("image interval outside f_gamma(branch)")
    ti, tf = _parts_of(np.array([A, B]))
    pre = invert_f_gamma_batch(curve, ti, tf, np.full(2, ba), np.full(2, bb))
    pa, pb = float(pre.min()), float(pre.max())
    eta = _strip_free_level(curve.L, pa, pb)
    if eta is None:
        raise StripOverlap("preimage of the requested interval meets the critical strips")
    # condition the fit by shifting near zero
    k = math.floor(A)
    dummy = MeasurePair(curve=curve, density=pair.density, mass=pair.mass,
                        regularity=pair.regularity)
    h_model, rho_model = _fit_child_models(dummy, pa, pb, float(k), A - k, B - k)
    Z = rho_model.cumulative(A - k, B - k)
    rho_model = ChebModel(rho_model.coeffs / Z, A - k, B - k)
    return PairDensity(
        model=ChebDensity(rho_model, offset=float(k)),
        log_derivative_bound=transported_bound(pair.density.log_derivative_bound, curve.L, eta),
    )


def _strip_free_level(L: float, a: float, b: float):
    """Largest eta in {1/2, 1/4} whose strips the cover-interval [a, b] avoids."""
    for eta in (0.5, 0.25):
        if _avoids_strips(L, eta, a, b):
            return eta
    return None


def _avoids_strips(L: float, eta: float, a: float, b: float) -> bool:
    strips = strip_intervals_cached(L, eta)
    for s_lo, s_hi in strips:
        for k in range(math.floor(a) - 1, math.floor(b) + 2):
            if a < s_hi + k and b > s_lo + k:
                return False
    return True


# ---------------------------------------------------------------------------
# class invariants
# ---------------------------------------------------------------------------

def validate_pair(pair: MeasurePair, a0: float = A0_DEFAULT, n_samples: int = 33,
                  tol: float = 1e-9):
    """Check the u-curve and class invariants by sampling; raise on failure."""
    curve = pair.curve
    L = pair.L
    xs = curve.sample_points(n_samples)
    slope = float(np.abs(curve.dh(xs)).max())
    if slope > SLOPE_BOUND * (1.0 + tol):
        raise InvariantViolation(f"slope bound violated: {slope:.6g} > 1/10")
    curv = float(np.abs(curve.d2h(xs)).max())
    if curv > L * (1.0 + tol):
        raise InvariantViolation(f"curvature bound violated: {curv:.6g} > L")
    rho = pair.density.rho(xs)
    if np.any(rho <= 0.0):
        raise InvariantViolation("density must be positive")
    dlog = float(np.abs(pair.density.dlog_rho(xs)).max())
    bound = pair.density.log_derivative_bound
    if dlog > bound * (1.0 + 1e-6) + 1e-9:
        raise InvariantViolation(
            f"log-derivative {dlog:.6g} exceeds declared bound {bound:.6g}"
        )
    if pair.mass < 0:
        raise InvariantViolation("negative mass")

    length = curve.length
    if pair.regularity is Regularity.FULL_CROSSING:
        if not curve.fully_crossing:
            raise InvariantViolation("full-crossing pair on a short curve")
        if bound > 3.0 * C0 * (1.0 + 1e-9):
            raise InvariantViolation("full-crossing pair with a weak distortion bound")
    elif pair.regularity is Regularity.STANDARD:
        if length <= a0:
            raise InvariantViolation(f"standard pair too short: |I| = {length:.6g} <= a0")
        if bound > 3.0 * C0 * (1.0 + 1e-9):
            raise InvariantViolation("standard pair with a weak distortion bound")
    elif pair.regularity is Regularity.SUBSTANDARD:
        if not (L ** -0.5 * (1.0 - 1e-9) <= length <= a0 * (1.0 + 1e-9)):
            raise InvariantViolation(
                f"substandard length {length:.6g} outside [L^-1/2, a0]"
            )
        if bound > 2.0 * C0 * math.sqrt(L) * (1.0 + 1e-9):
            raise InvariantViolation("substandard pair with a weak distortion bound")
        if not _avoids_strips(L, 0.5, curve.lo, curve.hi):
            raise InvariantViolation("substandard pair domain meets the eta=1/2 strips")
    return True
