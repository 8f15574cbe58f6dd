#!/usr/bin/env python3
"""Calibration protocol for the frozen acceptance constants.

Asymptotic statements only pin rates, never constants, so every
quantitative acceptance check uses a constant produced here: fit at the
smallest parameter value with the fixed calibration seed, widen by the
2x safety factor, freeze into stdmap_lab/acceptance.py, then verify at
the larger parameter values.  Oscillatory quantities (the lag-2
autocorrelation is a Bessel function of L) are additionally floored by
their analytic envelope so a lucky near-zero fit cannot produce an
unpassable bound.

Run:  PYTHONPATH=src python3 tools/calibrate.py
and paste the printed block into FROZEN in stdmap_lab/acceptance.py.
"""

import json
import math
import sys

sys.path.insert(0, "src")

import numpy as np  # noqa: E402

from stdmap_lab.standard_pairs import (  # noqa: E402
    cut_full,
    iterate_decomposition,
    pair_pushforward_integral,
    root_pair,
)
from stdmap_lab.statistics import (  # noqa: E402
    ExperimentConfig,
    clt_experiment,
    correlation,
    diffusion_experiment,
    make_observable,
)

CAL_SEED = 20250601
SLACK = 2.0


def fit_error_class_constant():
    # exhaustive one-step cut of the uniform horizontal seed at L = 1e3
    L = 1e3
    step = cut_full(root_pair(0.0, L))
    c_raw = step.error_mass / L ** -0.75
    return c_raw


def fit_class_scaling_constants():
    # sampled ten-step ledger at L = 1e3; fit sup over steps
    led = iterate_decomposition(root_pair(0.0, 1e3), 10, mode="sampled",
                                samples=96, batches=8, seed=CAL_SEED)
    ci = max(r.m_I * 1e3 ** 0.5 for r in led.rows)
    cj = max(r.m_J * 1e3 ** 0.5 for r in led.rows)
    return ci, cj


def fit_correlation_constant():
    r = correlation(make_observable("sin"), make_observable("sin"), 2, 1e3,
                    method="montecarlo", M=10 ** 6, seed=CAL_SEED)
    fitted = abs(r.estimate) / 1e3 ** -0.5
    envelope = 1.0 / (2.0 * math.pi)  # |J2(2 pi L)| <= sqrt(1/(pi^2 L)), halved
    return fitted, envelope


def fit_pushforward_floor():
    # the seed at height 0 integrates to zero by symmetry; record the
    # quadrature noise floor actually observed at L = 1e3
    val = pair_pushforward_integral(root_pair(0.0, 1e3), make_observable("sin").fn, 1)
    return abs(val)


def calibrate_ks_thresholds():
    cfg = ExperimentConfig(L=1e6, N=15, M=2 * 10 ** 5, seed=CAL_SEED)
    clt_summary, _ = clt_experiment(cfg)
    dcfg = ExperimentConfig(epsilon=0.05, alpha=9.0, M=10 ** 5, seed=CAL_SEED,
                            interval=(0.0, 1.0))
    diff_summary, _ = diffusion_experiment(dcfg)
    return clt_summary.ks, diff_summary.ks


def main():
    ce_raw = fit_error_class_constant()
    ci_raw, cj_raw = fit_class_scaling_constants()
    corr_raw, corr_env = fit_correlation_constant()
    push_floor = fit_pushforward_floor()
    ks_clt, ks_diff = calibrate_ks_thresholds()

    frozen = {
        "calibration_seed": CAL_SEED,
        "slack": SLACK,
        "C_E": SLACK * ce_raw,
        "C_E_raw": ce_raw,
        "C_I": SLACK * ci_raw,
        "C_J": SLACK * cj_raw,
        "C_corr": SLACK * max(corr_raw, corr_env),
        "C_corr_raw": corr_raw,
        "C_corr_envelope": corr_env,
        "push_quadrature_floor": max(1e-9, SLACK * push_floor),
        "ks_clt_threshold": 0.02,
        "ks_clt_calibrated": ks_clt,
        "ks_diffusion_threshold": 0.05,
        "ks_diffusion_calibrated": ks_diff,
    }
    if 2.0 * ks_clt > frozen["ks_clt_threshold"]:
        frozen["ks_clt_threshold_note"] = "calibrated value exceeds target/2"
    if 2.0 * ks_diff > frozen["ks_diffusion_threshold"]:
        frozen["ks_diffusion_threshold_note"] = "calibrated value exceeds target/2"
    print(json.dumps(frozen, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
