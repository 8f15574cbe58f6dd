"""Ensemble experiments: Birkhoff sums, correlations, CLT, diffusion.

Sampling follows a counter-based contract: uniforms come from Philox
streams keyed by (seed, purpose, chunk), with a fixed chunk granularity
of 2^14 samples, so sequential and parallel runs draw identical numbers
and any thread count reproduces the sequential output bit for bit.

The x-marginal statistics of the standard map and its folded form agree,
so every experiment iterates the folded two-term recurrence; the
slow-fast diffusion experiment also routes through it (the x-dynamics of
the cylinder system from (x, eps^(1+alpha) y) coincide with the torus
dynamics from (x, y), which removes the precision restriction on the raw
shear coefficient).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import erfc

from .core_maps import MapParams, ensemble_step_hatF, floor_guarded, step_hatF
from .errors import EmptySample, NotMeanZero
from .numerics import (
    KahanSum,
    dd_mul_d,
    frac,
    frac_dd,
    pairwise_sum,
    sin2pi,
    two_prod,
)

RNG_CHUNK = 1 << 14

# purpose tags for the uniform streams
PURPOSE_X0 = 0
PURPOSE_W0 = 1
PURPOSE_CORR_X0 = 2
PURPOSE_CORR_W0 = 3
PURPOSE_Z0 = 4
PURPOSE_DIFF_X0 = 5


def uniform_chunk(seed: int, purpose: int, chunk_index: int, count: int) -> np.ndarray:
    """`count` uniforms from the Philox stream keyed by (seed, purpose, chunk)."""
    key = np.array([seed, (purpose << 32) | chunk_index], dtype=np.uint64)
    return Generator(Philox(key=key)).random(count)


def uniform_stream(seed: int, purpose: int, count: int) -> np.ndarray:
    out = np.empty(count)
    for k, start in enumerate(range(0, count, RNG_CHUNK)):
        n = min(RNG_CHUNK, count - start)
        out[start:start + n] = uniform_chunk(seed, purpose, k, n)
    return out


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """An x-dependent observable with its known circle mean and L2 norm."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    mean: float
    variance: Optional[float] = None  # int phi^2 dx when known in closed form

    def __call__(self, x):
        return self.fn(x)


def _fourier_observable(name, modes):
    """modes: list of (k, a_k, b_k) meaning a sin(2 pi k x) + b cos(2 pi k x)."""

    def fn(x):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for k, a, b in modes:
            if a:
                out = out + a * sin2pi(k * np.asarray(x, dtype=float))
            if b:
                out = out + b * np.cos(2.0 * math.pi * k * np.asarray(x, dtype=float))
        return out

    var = 0.5 * sum(a * a + b * b for _, a, b in modes)
    return Observable(name=name, fn=fn, mean=0.0, variance=var)


def make_observable(spec: str) -> Observable:
    """Parse an observable selector: sin | cos | fourier:k | file:path."""
    if spec == "sin":
        return Observable("sin", lambda x: sin2pi(x), 0.0, 0.5)
    if spec == "cos":
        return Observable("cos", lambda x: np.cos(2.0 * math.pi * np.asarray(x, dtype=float)),
                          0.0, 0.5)
    if spec.startswith("fourier:"):
        k = int(spec.split(":", 1)[1])
        if k < 1:
            raise ValueError("fourier mode index must be >= 1")
        return _fourier_observable(spec, [(k, 1.0, 0.0)])
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        modes = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                k, a, b = line.split()
                modes.append((int(k), float(a), float(b)))
        if not modes:
            raise ValueError(f"no Fourier modes found in {path}")
        return _fourier_observable(spec, modes)
    raise ValueError(f"unknown observable {spec!r}")


def variance_of_observable(phi, tol: float = 1e-10) -> float:
    """int phi^2 dx over the circle; phi must be mean-zero (checked)."""
    from .standard_pairs.quadrature import adaptive_integral

    fn = phi.fn if isinstance(phi, Observable) else phi
    mean = adaptive_integral(lambda x: np.asarray(fn(x), dtype=float), 0.0, 1.0, tol=tol)
    if abs(mean) > tol:
        raise NotMeanZero(f"int phi dx = {mean:.3e} exceeds {tol:g}")
    return adaptive_integral(lambda x: np.asarray(fn(x), dtype=float) ** 2, 0.0, 1.0, tol=tol)


# ---------------------------------------------------------------------------
# basic statistics
# ---------------------------------------------------------------------------

def birkhoff_sum(p0, phi, N: int, L: float) -> float:
    """Compensated sum of phi over the first N points of a folded-map orbit."""
    if N < 1:
        raise ValueError("N must be at least 1")
    fn = phi.fn if isinstance(phi, Observable) else phi
    x, y = frac(p0[0]), frac(p0[1])
    acc = KahanSum()
    p = (x, y)
    for _ in range(N):
        acc.add(float(fn(p[0])))
        p = step_hatF(p, L)
    return acc.value


def normal_cdf(x, variance: float = 1.0):
    """Gaussian CDF through the complementary error function."""
    sigma = math.sqrt(variance)
    return 0.5 * erfc(-np.asarray(x, dtype=float) / (sigma * math.sqrt(2.0)))


def ks_statistic(samples, reference_cdf) -> float:
    """Exact sup-distance between the empirical CDF and a reference CDF."""
    vals = np.sort(np.asarray(samples, dtype=float))
    n = vals.size
    if n == 0:
        raise EmptySample("KS statistic of an empty sample")
    cdf = np.asarray(reference_cdf(vals), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    return float(max(d_plus, d_minus))


@dataclass
class SampleSummary:
    mean: float
    variance: float
    skewness: float
    ks: float
    stderr_mean: float
    M: int
    reference_variance: float
    warnings: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "ks": self.ks,
            "stderr_mean": self.stderr_mean,
            "M": self.M,
            "reference_variance": self.reference_variance,
            "warnings": list(self.warnings),
            **self.extras,
        }


def summarize(values: np.ndarray, reference_variance: float) -> SampleSummary:
    values = np.asarray(values, dtype=float)
    M = values.size
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if M > 1 else 0.0
    centered = values - mean
    m2 = float((centered ** 2).mean())
    m3 = float((centered ** 3).mean())
    skew = m3 / m2 ** 1.5 if m2 > 0 else 0.0
    ks = ks_statistic(values, lambda x: normal_cdf(x, reference_variance))
    stderr = math.sqrt(var / M) if M > 1 else math.inf
    return SampleSummary(mean=mean, variance=var, skewness=skew, ks=ks,
                         stderr_mean=stderr, M=M, reference_variance=reference_variance)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Shared experiment setup; either L or (epsilon, alpha) pins the map."""

    L: Optional[float] = None
    epsilon: Optional[float] = None
    alpha: Optional[float] = None
    N: Optional[int] = None
    M: int = 10 ** 5
    seed: int = 0
    phi: Observable = field(default_factory=lambda: make_observable("sin"))
    interval: tuple = (0.0, 1.0)
    y_grid: int = 64
    x_strata: int = 4096
    threads: int = 1

    def resolved_L(self) -> float:
        if self.L is not None:
            return float(self.L)
        if self.epsilon is None or self.alpha is None:
            raise ValueError("need L or (epsilon, alpha)")
        return MapParams.from_epsilon(self.epsilon, self.alpha).L

    def resolved_N(self) -> int:
        if self.N is not None:
            return int(self.N)
        if self.epsilon is not None:
            return floor_guarded(self.epsilon ** -2.0)
        # stays well inside the N(L) L^-1/4 -> 0 window at reachable L
        return max(1, floor_guarded(self.resolved_L() ** 0.2))

    def scaling_ratio(self) -> float:
        return self.resolved_N() * self.resolved_L() ** -0.25

    def scaling_warnings(self) -> list:
        out = []
        ratio = self.scaling_ratio()
        if ratio > 0.5:
            out.append(
                f"N * L^-1/4 = {ratio:.3f} > 0.5; asymptotic regime doubtful"
            )
        return out


def _run_chunked(total: int, chunk: int, worker, threads: int = 1):
    """Apply worker(chunk_index, start, count) over a partition, in order."""
    jobs = []
    for k, start in enumerate(range(0, total, chunk)):
        jobs.append((k, start, min(chunk, total - start)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda j: worker(*j), jobs))
    else:
        results = [worker(*j) for j in jobs]
    return results


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def clt_experiment(config: ExperimentConfig):
    """Distribution of S_N phi / sqrt(N) over uniform initial conditions.

    Returns (summary, values); the KS reference is the centered Gaussian
    with variance int phi^2 dx.
    """
    L = config.resolved_L()
    N = config.resolved_N()
    M = config.M
    phi = config.phi
    if phi.variance is not None:
        sigma2 = phi.variance
    else:
        sigma2 = variance_of_observable(phi)
    if sigma2 <= 0:
        raise NotMeanZero("phi must not be identically zero")

    def worker(k, start, count):
        x = uniform_chunk(config.seed, PURPOSE_X0, k, count)
        w = uniform_chunk(config.seed, PURPOSE_W0, k, count)
        acc = KahanSum(x.shape)
        for _ in range(N):
            acc.add(phi.fn(x))
            x, w = ensemble_step_hatF(x, w, L)
        return acc.value

    chunks = _run_chunked(M, RNG_CHUNK, worker, config.threads)
    values = np.concatenate(chunks) / math.sqrt(N)
    summary = summarize(values, sigma2)
    summary.warnings.extend(config.scaling_warnings())
    summary.extras.update(L=L, N=N, seed=config.seed, phi=phi.name,
                          scaling_ratio=config.scaling_ratio())
    return summary, values


@dataclass
class CorrelationResult:
    n: int
    estimate: float
    stderr: float
    method: str
    bound_value: float
    L: float
    M: int

    def to_dict(self):
        return {"n": self.n, "estimate": self.estimate, "stderr": self.stderr,
                "method": self.method, "bound_value": self.bound_value,
                "L": self.L, "M": self.M}


def correlation_bound(n: int, L: float) -> float:
    return (n - 1) * L ** -0.75 + L ** -0.5


def correlation(phi, psi, n: int, L: float, method: str = "montecarlo",
                M: int = 10 ** 6, seed: int = 0, threads: int = 1,
                x_strata: int = 4096, y_grid: int = 64) -> CorrelationResult:
    """Estimate int psi * (phi o F^n) dLeb - int phi int psi.

    montecarlo: M uniform starts, estimator stderr = sd / sqrt(M).
    ygrid: stratified x against a uniform y-grid; the grid average of a
    single step is an exact trigonometric quadrature, so lag-1 single
    Fourier modes vanish to rounding.
    """
    if n < 1:
        raise ValueError("lag must be >= 1")
    phi = phi if isinstance(phi, Observable) else Observable("phi", phi, 0.0)
    psi = psi if isinstance(psi, Observable) else Observable("psi", psi, 0.0)
    product_of_means = phi.mean * psi.mean

    if method == "montecarlo":
        def worker(k, start, count):
            x0 = uniform_chunk(seed, PURPOSE_CORR_X0, k, count)
            w0 = uniform_chunk(seed, PURPOSE_CORR_W0, k, count)
            x = x0
            w = w0
            for _ in range(n):
                x, w = ensemble_step_hatF(x, w, L)
            prod = psi.fn(x0) * phi.fn(x)
            return (float(prod.sum()), float((prod * prod).sum()), count)

        parts = _run_chunked(M, RNG_CHUNK, worker, threads)
        s1 = pairwise_sum([p[0] for p in parts])
        s2 = pairwise_sum([p[1] for p in parts])
        mean = s1 / M
        var = max(0.0, s2 / M - mean * mean)
        stderr = math.sqrt(var / M)
        est = mean - product_of_means
        return CorrelationResult(n=n, estimate=est, stderr=stderr,
                                 method="montecarlo",
                                 bound_value=correlation_bound(n, L), L=L, M=M)

    if method == "ygrid":
        xs = (np.arange(x_strata) + 0.5) / x_strata
        ys = np.arange(y_grid) / y_grid
        total = KahanSum()
        # chunk over strata to bound memory at x_strata * y_grid points
        chunk = max(1, (1 << 18) // y_grid)
        for start in range(0, x_strata, chunk):
            xi = xs[start:start + chunk]
            x = np.repeat(xi, y_grid)
            w = frac(x - np.tile(ys, xi.size))
            for _ in range(n):
                x, w = ensemble_step_hatF(x, w, L)
            vals = phi.fn(x).reshape(xi.size, y_grid).mean(axis=1)
            total.add(float(np.dot(psi.fn(xi), vals)))
        est = total.value / x_strata - product_of_means
        return CorrelationResult(n=n, estimate=est, stderr=0.0, method="ygrid",
                                 bound_value=correlation_bound(n, L), L=L,
                                 M=x_strata * y_grid)

    raise ValueError(f"unknown method {method!r}")


def diffusion_experiment(config: ExperimentConfig):
    """Displacement of the slow variable over N(eps) = floor(eps^-2) steps.

    Z is uniform on [a, b], X uniform on the circle; the orbit runs
    through the conjugated torus map with y = frac(eps^-(1+alpha) Z)
    (the product is formed error-free before reduction), and the
    displacement is eps times the compensated sine sum.  The KS
    reference is N(0, 1/2).
    """
    if config.epsilon is None or config.alpha is None:
        raise ValueError("diffusion experiment needs epsilon and alpha")
    params = MapParams.from_epsilon(config.epsilon, config.alpha)
    eps = params.epsilon
    L = params.L
    N = config.N if config.N is not None else floor_guarded(eps ** -2.0)
    a, b = config.interval
    M = config.M
    shear = params.shear_dd

    def worker(k, start, count):
        z = a + (b - a) * uniform_chunk(config.seed, PURPOSE_Z0, k, count)
        x = uniform_chunk(config.seed, PURPOSE_DIFF_X0, k, count)
        y_hi, y_lo = frac_dd(dd_mul_d(shear, z))
        w = frac(x - (y_hi + y_lo))
        acc = KahanSum(x.shape)
        for _ in range(N):
            acc.add(sin2pi(x))
            x, w = ensemble_step_hatF(x, w, L)
        return acc.value

    chunks = _run_chunked(M, RNG_CHUNK, worker, config.threads)
    values = eps * np.concatenate(chunks)
    summary = summarize(values, 0.5)
    scale = eps * math.sqrt(N)
    summary.extras.update(
        epsilon=eps, alpha=config.alpha, L=L, N=N, seed=config.seed,
        interval=[a, b], scale_factor=scale,
    )
    if config.alpha <= 8.0:
        summary.warnings.append(
            f"alpha = {config.alpha} outside the proven regime alpha > 8"
        )
    summary.warnings.extend(ExperimentConfig(
        L=L, N=N, epsilon=eps, alpha=config.alpha).scaling_warnings())
    return summary, values
