"""Quadrature of observables along measure pairs.

`integrate_observable` is an adaptive Gauss-Legendre scheme for smooth
integrands phi(x, h(x)) rho(x) on the curve.  `pair_pushforward_integral`
evaluates int phi o F^n d(gamma, rho) by direct orbit evaluation at the
quadrature nodes; the integrand oscillates ~(2 pi L)^n times along the
curve, so the node budget scales accordingly and the operation refuses
(ResolutionExceeded) rather than silently under-resolve.  A Monte Carlo
companion covers parameter ranges the quadrature cannot reach.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.random import Generator, Philox

from ..core_maps import ensemble_x_marginal
from ..errors import QuadratureFailure, ResolutionExceeded
from ..numerics import frac
from .curves import MeasurePair

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _wants_two_args(phi) -> bool:
    try:
        phi(np.array([0.125]), np.array([0.125]))
        return True
    except TypeError:
        return False


def _curve_integrand(pair: MeasurePair, phi):
    two = _wants_two_args(phi)

    def integrand(x):
        if two:
            vals = phi(frac(x), frac(pair.curve.h(x)))
        else:
            vals = phi(frac(x))
        return vals * pair.density.rho(x)

    return integrand


def _gl_panel(fn, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(_GL_WEIGHTS, fn(mid + half * _GL_NODES)))


def adaptive_integral(fn, a: float, b: float, tol: float = 1e-10,
                      max_depth: int = 28) -> float:
    """Adaptive bisection with a 10-point Gauss rule per panel."""
    whole = _gl_panel(fn, a, b)
    return _adapt(fn, a, b, whole, tol, max_depth)


def _adapt(fn, a, b, whole, tol, depth):
    mid = 0.5 * (a + b)
    left = _gl_panel(fn, a, mid)
    right = _gl_panel(fn, mid, b)
    err = abs(left + right - whole)
    if err <= max(tol, 1e-16 * abs(whole)):
        return left + right
    if depth <= 0:
        raise QuadratureFailure(
            f"panel [{a}, {b}] still carries error {err:.3e} at maximum depth"
        )
    half_tol = 0.5 * tol
    return (_adapt(fn, a, mid, left, half_tol, depth - 1)
            + _adapt(fn, mid, b, right, half_tol, depth - 1))


def integrate_observable(pair: MeasurePair, phi, tol: float = 1e-10) -> float:
    """int phi(x, h(x)) rho(x) dx over the pair, to `tol` absolute."""
    fn = _curve_integrand(pair, phi)
    return pair.mass * adaptive_integral(fn, pair.curve.lo, pair.curve.hi, tol=tol)


# ---------------------------------------------------------------------------
# pushforward integrals
# ---------------------------------------------------------------------------

#: Gauss points per expected oscillation of the composed map.
NODES_PER_OSCILLATION = 24.0
DEFAULT_NODE_CAP = 2 * 10 ** 8


def pushforward_node_count(L: float, n: int) -> int:
    """Node budget resolving the worst-case local frequency (2 pi L + 2)^n."""
    rate = (2.0 * math.pi * L + 2.0) ** n
    return int(math.ceil(NODES_PER_OSCILLATION * rate / (2.0 * math.pi)))


def pair_pushforward_integral(pair: MeasurePair, phi, n: int,
                              node_cap: int = DEFAULT_NODE_CAP,
                              mean_zero_tol: float = 1e-10,
                              _nodes_override: int = None) -> float:
    """int phi o F^n d(gamma, rho) by composite quadrature along the curve.

    phi must be mean-zero on the circle (checked).  The orbit of every
    quadrature node is evaluated directly; when the oscillation budget
    does not fit under node_cap the call raises ResolutionExceeded (use
    the Monte Carlo companion instead).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    mean = adaptive_integral(lambda x: np.asarray(phi(x), dtype=float), 0.0, 1.0)
    if abs(mean) > mean_zero_tol:
        from ..errors import NotMeanZero

        raise NotMeanZero(f"int phi dx = {mean:.3e}")
    total_nodes = _nodes_override or pushforward_node_count(pair.L, n)
    if total_nodes > node_cap:
        raise ResolutionExceeded(
            f"resolving phi o F^{n} at L = {pair.L:g} needs ~{total_nodes:.3g} nodes"
            f" > cap {node_cap:g}"
        )
    panels = max(8, total_nodes // _GL_NODES.size)
    lo, hi = pair.curve.lo, pair.curve.hi
    edges = np.linspace(lo, hi, panels + 1)
    acc = 0.0
    comp = 0.0
    chunk = max(1, (2 ** 20) // _GL_NODES.size)
    for start in range(0, panels, chunk):
        stop = min(panels, start + chunk)
        a = edges[start:stop, None]
        b = edges[start + 1:stop + 1, None]
        half = 0.5 * (b - a)
        x = (0.5 * (a + b) + half * _GL_NODES[None, :]).ravel()
        w = (half * _GL_WEIGHTS[None, :]).ravel()
        y0 = frac(pair.curve.h(x))
        w0 = frac(x - y0)
        xn = ensemble_x_marginal(frac(x), w0, pair.L, n)
        vals = np.asarray(phi(xn), dtype=float) * pair.density.rho(x) * w
        s = float(vals.sum())
        # Kahan across chunks
        y = s - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return pair.mass * acc


def pair_pushforward_mc(pair: MeasurePair, phi, n: int, samples: int = 10 ** 6,
                        seed: int = 0):
    """Monte Carlo estimate of int phi o F^n d(gamma, rho) with its stderr.

    Draws x from the pair density by inverse transform on the cumulative
    and follows the orbit of (x, h(x)); usable at (n, L) far beyond any
    quadrature budget.
    """
    rng = Generator(Philox(key=np.array([seed, 0x9E3779B97F4A7C15], dtype=np.uint64)))
    u = rng.random(samples)
    x = _sample_from_density(pair, u)
    y0 = frac(pair.curve.h(x))
    w0 = frac(x - y0)
    xn = ensemble_x_marginal(frac(x), w0, pair.L, n)
    vals = np.asarray(phi(xn), dtype=float)
    mean = float(vals.mean()) * pair.mass
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) * pair.mass
    return mean, stderr


def _sample_from_density(pair: MeasurePair, u: np.ndarray) -> np.ndarray:
    lo, hi = pair.curve.lo, pair.curve.hi
    x = lo + (hi - lo) * u
    # Newton on the cumulative; the density is bounded below on the domain
    for _ in range(60):
        res = pair.density.antiderivative(x) - u
        if np.abs(res).max() <= 1e-13:
            break
        x = np.clip(x - res / pair.density.rho(x), lo, hi)
    return x
