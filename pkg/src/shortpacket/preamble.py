"""False alarm, misdetection and PER upper bound for the time-multiplexed preamble."""

from __future__ import annotations

import math

import numpy as np

from .fbl import CodingSpec, decoding_error, q_function
from .model import ErrorBreakdown, PreambleDesign, Scenario


def _check(design: PreambleDesign, scenario: Scenario) -> None:
    if design.n_p >= scenario.n:
        raise ValueError(f"preamble length {design.n_p} leaves no room for data in n={scenario.n}")


def noise_std(design: PreambleDesign) -> float:
    return math.sqrt(design.n_p / 2.0)


def fa_lag_means(design: PreambleDesign, scenario: Scenario) -> np.ndarray:
    """Mean correlator output at every pre-arrival lag ``k = 1..t_r-1``."""
    lags = np.arange(1, scenario.recovery)
    means = np.zeros(lags.size)
    profile = design.sequence.profile()
    near = lags < design.n_p
    means[near] = math.sqrt(scenario.P) * profile[lags[near]]
    return means


def fa_offset_probability(design: PreambleDesign, scenario: Scenario, k: int) -> float:
    if not 1 <= k <= scenario.recovery - 1:
        raise ValueError(f"lag {k} outside 1..{scenario.recovery - 1}")
    mean = math.sqrt(scenario.P) * design.sequence.profile()[k] if k < design.n_p else 0.0
    return q_function((design.delta - mean) / noise_std(design))


def fa_union_bound(design: PreambleDesign, scenario: Scenario) -> float:
    return float(fa_union_bound_vec(design, scenario, design.delta))


def fa_union_bound_vec(design: PreambleDesign, scenario: Scenario, delta) -> np.ndarray:
    """Union bound for an array of thresholds (design's own threshold is ignored)."""
    delta = np.asarray(delta, dtype=float)
    means = fa_lag_means(design, scenario)
    if means.size == 0:
        return np.zeros_like(delta)
    z = (delta[..., None] - means) / noise_std(design)
    return np.minimum(1.0, q_function(z).sum(axis=-1))


def md_probability(design: PreambleDesign, scenario: Scenario) -> float:
    return float(md_probability_vec(design, scenario, design.delta))


def md_probability_vec(design: PreambleDesign, scenario: Scenario, delta) -> np.ndarray:
    mean = math.sqrt(scenario.P) * design.n_p
    return q_function((mean - np.asarray(delta, dtype=float)) / noise_std(design))


def decoding_term(design: PreambleDesign, scenario: Scenario) -> float:
    _check(design, scenario)
    return decoding_error(CodingSpec(scenario.n - design.n_p, scenario.bits), scenario.P)


def per_upper_bound(design: PreambleDesign, scenario: Scenario) -> ErrorBreakdown:
    _check(design, scenario)
    p_fa = fa_union_bound(design, scenario)
    p_md = md_probability(design, scenario)
    eps_d = decoding_term(design, scenario)
    return ErrorBreakdown(p_fa=p_fa, p_md=p_md, eps_d=eps_d, per=min(1.0, p_fa + p_md + eps_d))


def per_vec(design: PreambleDesign, scenario: Scenario, delta) -> np.ndarray:
    """PER bound over an array of thresholds; matches :func:`per_upper_bound` pointwise."""
    eps_d = decoding_term(design, scenario)
    total = fa_union_bound_vec(design, scenario, delta) + md_probability_vec(design, scenario, delta) + eps_d
    return np.minimum(1.0, total)


def detection_bracket(design: PreambleDesign, scenario: Scenario) -> tuple[float, float]:
    """Threshold search range: zero up to the arrival mean plus ten noise sigmas."""
    return 0.0, math.sqrt(scenario.P) * design.n_p + 10.0 * noise_std(design)
