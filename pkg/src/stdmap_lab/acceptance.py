"""Executable acceptance suite.

Each criterion is a function returning (passed, detail); the CLI exposes
them through `stdmap-lab acceptance [--id N]` and the test suite wraps
them one test per criterion.

Quantitative bounds use constants frozen from the calibration protocol
(tools/calibrate.py, seed 20250601, 2x slack, fit at the smallest L,
verified here at larger L on the independent acceptance seed).  The
lag-2 autocorrelation constant is floored by its analytic Bessel
envelope because the underlying quantity -J2(2 pi L)/2 oscillates in L.

Criterion 4 (five exhaustive decomposition steps at L = 1e3 under a
1e7-curve cap) is reported honestly: each fully-crossing curve images
across ~4L integer windows, so the step-2 inventory alone is ~1.6e7
curves and the five-step exhaustive tree has ~(4L)^5 ~ 1e18 leaves.  The
run raises BudgetExceeded, the criterion FAILS as stated, and the same
conservation property is demonstrated at every reachable depth
(exhaustive to n = 2, sampled to n = 5).
"""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
from numpy.random import Generator, Philox

from .core_maps import MapParams, trajectory
from .errors import BudgetExceeded
from .geometry import critical_intervals, dfdx
from .numerics import frac
from .standard_pairs import (
    cut_full,
    df_gamma,
    invert_f_gamma_batch,
    iterate_decomposition,
    pair_pushforward_integral,
    root_pair,
    transport_density,
)
from .statistics import (
    ExperimentConfig,
    clt_experiment,
    correlation,
    diffusion_experiment,
    make_observable,
)

#: frozen by tools/calibrate.py at seed 20250601 (fit at smallest L, 2x slack)
FROZEN = {
    "calibration_seed": 20250601,
    "slack": 2.0,
    "C_E": 0.4052849715281545,
    "C_E_raw": 0.20264248576407726,
    "C_I": 2.1253962481102153,
    "C_J": 0.33322060739775744,
    "C_corr": 0.3183098861837907,
    "C_corr_raw": 0.11748235731186071,
    "C_corr_envelope": 0.15915494309189535,  # half of sqrt(2/(pi 2 pi L)) scale
    "push_quadrature_floor": 1e-09,
    "ks_clt_threshold": 0.02,
    "ks_clt_calibrated": 0.003795896650910263,
    "ks_diffusion_threshold": 0.05,
    "ks_diffusion_calibrated": 0.001929707254055557,
}

ACCEPTANCE_SEED = 42


def _circle_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b))
    return np.minimum(d, 1.0 - d)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1():
    """Conjugacy of the raw slow-fast orbit and the folded torus orbit."""
    eps = 2.0 ** -10
    params = MapParams.from_epsilon(eps, 1.0)
    rng = Generator(Philox(key=np.array([ACCEPTANCE_SEED, 1], dtype=np.uint64)))
    x0 = rng.random(1000)
    y0 = rng.random(1000)
    z0 = (eps * eps) * y0  # exact: eps^2 is a power of two
    orb_g = trajectory((x0, z0), params, 5, "slowfast")
    orb_h = trajectory((x0, frac(x0 - y0)), params.L, 5, "hatF")
    worst = max(float(_circle_distance(g.x, h.x).max())
                for g, h in zip(orb_g, orb_h))
    ok = worst <= 1e-6
    return ok, f"max |x_G - x_hatF| over 5 steps = {worst:.3e} (tol 1e-6)"


def criterion_2():
    """Cone field invariance off the eta = 1/4 strips."""
    rng = Generator(Philox(key=np.array([ACCEPTANCE_SEED, 2], dtype=np.uint64)))
    n = 10 ** 5
    L = 10 ** rng.uniform(3, 6, n)
    x = rng.random(n)
    thr = 2.0 * L ** 0.25
    inside = np.abs(dfdx(x, L)) <= thr
    while inside.any():
        x[inside] = rng.random(int(inside.sum()))
        inside = np.abs(dfdx(x, L)) <= thr
    u = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    w = rng.uniform(-0.1, 0.1, n) * np.abs(u)
    img_u = dfdx(x, L) * u - w
    img_w = u
    xi_out = 1.0 / (2.0 * L ** 0.25 - 0.1)
    violations = int(np.sum(np.abs(img_w) > xi_out * np.abs(img_u)))
    return violations == 0, f"{violations} violations in {n} samples"


def criterion_3():
    """Strip measure scales like L^(eta - 1) with a tight constant band."""
    ratios = []
    for eta in (0.25, 0.5):
        for L in (1e3, 1e4, 1e5, 1e6):
            st = critical_intervals(L, eta)
            ratios.append(st.measure / L ** (eta - 1.0))
    band = max(ratios) / min(ratios)
    ok = band <= 10.0
    return ok, f"measure / L^(eta-1) in [{min(ratios):.4f}, {max(ratios):.4f}], ratio {band:.3f} (<= 10)"


def criterion_4():
    """Five exhaustive steps at L = 1e3 under the 1e7-curve cap, as stated."""
    seed_pair = root_pair(0.0, 1e3)
    try:
        ledger = iterate_decomposition(seed_pair, 5, mode="exhaustive", cap=10 ** 7)
    except BudgetExceeded as exc:
        return False, (
            f"BudgetExceeded: {exc}; each fully-crossing curve spawns ~4L = 4e3 "
            "children, so the five-step exhaustive inventory (~(4L)^5) cannot fit "
            "under a 1e7-curve cap (see notes); conservation is verified to the "
            "reachable depth by criterion 4a/4b"
        )
    defect = ledger.max_conservation_defect()
    return defect <= 1e-9, f"max conservation defect {defect:.3e}"


def criterion_4a():
    """Supplementary: exhaustive conservation to the feasible depth (n = 2)."""
    ledger = iterate_decomposition(root_pair(0.0, 1e3), 2, mode="exhaustive",
                                   cap=2 * 10 ** 7)
    defect = ledger.max_conservation_defect()
    return defect <= 1e-9, f"exhaustive n=2 max conservation defect {defect:.3e}"


def criterion_4b():
    """Supplementary: sampled-mode conservation over five steps."""
    ledger = iterate_decomposition(root_pair(0.0, 1e3), 5, mode="sampled",
                                   samples=80, batches=8, seed=ACCEPTANCE_SEED)
    defect = ledger.max_conservation_defect()
    return defect <= 1e-9, f"sampled n=5 max conservation defect {defect:.3e}"


def criterion_5():
    """Class-mass scaling over ten steps at L in {1e3, 1e4} (sampled mode)."""
    C_E, C_I, C_J = FROZEN["C_E"], FROZEN["C_I"], FROZEN["C_J"]
    msgs = []
    ok = True
    for L, samples in ((1e3, 96), (1e4, 64)):
        ledger = iterate_decomposition(root_pair(0.0, L), 10, mode="sampled",
                                       samples=samples, batches=8,
                                       seed=ACCEPTANCE_SEED)
        sqrtL = math.sqrt(L)
        for r in ledger.rows:
            s_L, s_I, s_J, s_E = ledger.class_stderr[r.step]
            if r.m_E > C_E * r.step * L ** -0.75 + 3.0 * s_E:
                ok = False
                msgs.append(f"m_E[{r.step}] = {r.m_E:.3e} breaks the bound at L={L:g}")
            if r.m_I * sqrtL > C_I + 3.0 * s_I * sqrtL:
                ok = False
                msgs.append(f"m_I[{r.step}]*sqrt(L) = {r.m_I * sqrtL:.3f} > {C_I:.3f} at L={L:g}")
            if r.m_J * sqrtL > C_J + 3.0 * s_J * sqrtL:
                ok = False
                msgs.append(f"m_J[{r.step}]*sqrt(L) = {r.m_J * sqrtL:.3f} > {C_J:.3f} at L={L:g}")
            if r.m_J > 0.5:
                ok = False
                msgs.append(f"m_J[{r.step}] = {r.m_J:.3f} > 1/2 at L={L:g}")
        msgs.append(
            f"L={L:g}: m_E[10] = {ledger.rows[-1].m_E:.3e} "
            f"(bound {C_E * 10 * L ** -0.75:.3e})"
        )
    return ok, "; ".join(msgs)


def criterion_6():
    """Distortion recursion: finite differences against the closed form."""
    rng = Generator(Philox(key=np.array([ACCEPTANCE_SEED, 6], dtype=np.uint64)))
    worst = 0.0
    from .geometry import strip_intervals_cached
    from .standard_pairs.curves import d2f_gamma

    for _ in range(100):
        L = float(rng.choice([1e3, 1e4, 1e5]))
        a_coef = rng.uniform(-1.5, 1.5)
        b_coef = rng.uniform(-1.5, 1.5)
        y0 = rng.random()
        pair = root_pair(
            y0, L,
            density_fn=lambda x: np.exp(
                a_coef * np.sin(2 * np.pi * x) + b_coef * np.cos(2 * np.pi * x)),
        )
        (s1, s2) = strip_intervals_cached(L, 0.5)
        branch = [(0.0, s1[0]), (s1[1], s2[0]), (s2[1], 1.0)][int(rng.integers(3))]
        fa = _f_val(pair, branch[0])
        fb = _f_val(pair, branch[1])
        lo_v, hi_v = (fa, fb) if fa < fb else (fb, fa)
        span = hi_v - lo_v
        width = min(0.8, 0.2 * span)
        start = lo_v + (span - width) * rng.random()
        dens = transport_density(pair, (start, start + width), branch=branch)
        xs = start + (width * 0.02) + (width * 0.96) * np.sort(rng.random(1000))
        h = 1e-5 * max(1.0, width)
        fd = (np.log(dens.rho(xs + h)) - np.log(dens.rho(xs - h))) / (2.0 * h)
        ti = np.floor(xs)
        t = invert_f_gamma_batch(pair.curve, ti, xs - ti,
                                 np.full(xs.shape, min(branch)),
                                 np.full(xs.shape, max(branch)))
        cf = (pair.density.dlog_rho(t) / df_gamma(pair.curve, t)
              - d2f_gamma(pair.curve, t) / df_gamma(pair.curve, t) ** 2)
        rel = np.abs(fd - cf) / np.maximum(np.abs(cf), 1.0)
        worst = max(worst, float(rel.max()))
    ok = worst <= 1e-6
    return ok, f"max relative mismatch {worst:.3e} over 100 curves x 1000 points (tol 1e-6)"


def _f_val(pair, x):
    from .standard_pairs import f_gamma

    return float(f_gamma(pair.curve, x))


def criterion_7():
    """Exact lag-1 decorrelation of sine modes under the y-grid method."""
    worst = 0.0
    for L in (1e3, 3.7e4, 1e6):
        r = correlation(make_observable("sin"), make_observable("sin"), 1, L,
                        method="ygrid")
        worst = max(worst, abs(r.estimate))
    ok = worst <= 1e-12
    return ok, f"max |lag-1 estimate| = {worst:.3e} (tol 1e-12)"


def criterion_8():
    """Lag-2 correlation decay at M = 1e7 across three decades of L."""
    C = FROZEN["C_corr"]
    msgs = []
    ok = True
    for L in (1e3, 1e4, 1e5):
        r = correlation(make_observable("sin"), make_observable("sin"), 2, L,
                        method="montecarlo", M=10 ** 7, seed=ACCEPTANCE_SEED)
        bound = C * L ** -0.5 + 3.0 * r.stderr
        ok = ok and abs(r.estimate) <= bound
        msgs.append(f"L={L:g}: |{r.estimate:.3e}| <= {bound:.3e}")
    return ok, "; ".join(msgs)


def criterion_9():
    """One-step equidistribution of the uniform horizontal seed pair."""
    phi = make_observable("sin")
    floor = FROZEN["push_quadrature_floor"]
    v3 = pair_pushforward_integral(root_pair(0.0, 1e3), phi.fn, 1)
    C = 2.0 * abs(v3) / 1e3 ** -0.5
    msgs = [f"fit at L=1e3: |{v3:.3e}| -> C = {C:.3e}"]
    ok = True
    for L in (1e4, 1e5):
        val = pair_pushforward_integral(root_pair(0.0, L), phi.fn, 1)
        bound = C * L ** -0.5 + floor
        ok = ok and abs(val) <= bound
        msgs.append(f"L={L:g}: |{val:.3e}| <= {bound:.3e}")
    return ok, "; ".join(msgs)


def criterion_10():
    """CLT at L = 1e6, N = 15, M = 2e5."""
    cfg = ExperimentConfig(L=1e6, N=15, M=2 * 10 ** 5, seed=ACCEPTANCE_SEED)
    summary, _ = clt_experiment(cfg)
    ks_ok = summary.ks <= FROZEN["ks_clt_threshold"]
    var_ok = 0.4 <= summary.variance <= 0.6
    return ks_ok and var_ok, (
        f"KS = {summary.ks:.4f} (<= {FROZEN['ks_clt_threshold']}), "
        f"variance = {summary.variance:.4f} (in [0.4, 0.6])"
    )


def criterion_11():
    """Diffusion limit at eps = 0.05, alpha = 9 via the conjugated route."""
    cfg = ExperimentConfig(epsilon=0.05, alpha=9.0, M=10 ** 5,
                           seed=ACCEPTANCE_SEED, interval=(0.0, 1.0))
    summary, _ = diffusion_experiment(cfg)
    ks_ok = summary.ks <= FROZEN["ks_diffusion_threshold"]
    var_ok = 0.375 <= summary.variance <= 0.625
    return ks_ok and var_ok, (
        f"KS = {summary.ks:.4f} (<= {FROZEN['ks_diffusion_threshold']}), "
        f"variance = {summary.variance:.4f} (in [0.375, 0.625])"
    )


# ---------------------------------------------------------------------------
# determinism (criterion 12)
# ---------------------------------------------------------------------------

_DETERMINISM_INVOCATIONS = {
    "crit4_pushforward": ["pushforward", "--L", "1e3", "--n", "5",
                          "--mode", "exhaustive", "--cap", "1e7", "--seed", "0"],
    "crit8_corr": ["corr", "--L", "1e3", "--n", "2", "--method", "montecarlo",
                   "--M", "1e7", "--seed", str(ACCEPTANCE_SEED)],
    "crit10_clt": ["clt", "--L", "1e6", "--N", "15", "--M", "2e5",
                   "--seed", str(ACCEPTANCE_SEED), "--dump-samples"],
    "crit11_diffusion": ["diffusion", "--epsilon", "0.05", "--alpha", "9",
                         "--M", "1e5", "--seed", str(ACCEPTANCE_SEED),
                         "--dump-samples"],
}


def _run_cli_captured(argv, out_dir):
    from . import cli

    stdout = io.StringIO()
    stderr = io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = cli.main(argv + ["--threads", "1", "--out", out_dir])
    return code, stdout.getvalue(), stderr.getvalue()


def _data_files(out_dir):
    out = {}
    if not os.path.isdir(out_dir):
        return out
    for name in sorted(os.listdir(out_dir)):
        if name == "manifest.json":
            continue  # carries timestamps by design
        with open(os.path.join(out_dir, name), "rb") as fh:
            out[name] = fh.read()
    return out


def criterion_12():
    """Byte-identical re-runs of the criterion 4/8/10/11 invocations."""
    msgs = []
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in _DETERMINISM_INVOCATIONS.items():
            runs = []
            for rep in (0, 1):
                out_dir = os.path.join(tmp, f"{name}_{rep}")
                code, out_text, err_text = _run_cli_captured(list(argv), out_dir)
                runs.append((code, out_text, err_text, _data_files(out_dir)))
            same = runs[0] == runs[1]
            ok = ok and same
            detail = "identical" if same else "MISMATCH"
            msgs.append(f"{name}: exit {runs[0][0]}, outputs {detail}")
    return ok, "; ".join(msgs)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

CRITERIA = {
    "1": (criterion_1, "conjugacy of slow-fast and folded-map x-orbits"),
    "2": (criterion_2, "cone invariance off the eta=1/4 strips"),
    "3": (criterion_3, "strip measure scaling"),
    "4": (criterion_4, "exhaustive 5-step mass conservation (as stated)"),
    "4a": (criterion_4a, "exhaustive conservation at feasible depth"),
    "4b": (criterion_4b, "sampled conservation over 5 steps"),
    "5": (criterion_5, "class-mass scaling bounds"),
    "6": (criterion_6, "distortion transport recursion"),
    "7": (criterion_7, "exact lag-1 decorrelation"),
    "8": (criterion_8, "lag-2 correlation decay"),
    "9": (criterion_9, "one-step equidistribution of the seed pair"),
    "10": (criterion_10, "central limit theorem"),
    "11": (criterion_11, "slow-variable diffusion limit"),
    "12": (criterion_12, "byte-identical deterministic re-runs"),
}


def all_ids():
    return list(CRITERIA)


def run_criterion(cid):
    cid = str(cid)
    if cid not in CRITERIA:
        raise KeyError(f"unknown criterion {cid!r}")
    fn, _ = CRITERIA[cid]
    return fn()


def run_all():
    results = {}
    for cid, (fn, title) in CRITERIA.items():
        passed, detail = fn()
        results[cid] = (passed, title, detail)
    return results
