"""Gaussian-approximation error terms for a detection sequence superimposed on the data.

Two false-alarm kinds are separated. Lags ``k >= N`` see noise only (FA1);
lags ``1 <= k < N`` also see the sequence's own partial correlation and a
partial overlap with the codeword (FA2). The codeword overlap is treated as
Gaussian, which is the large-``N`` limit of the shell-code projection.
"""

from __future__ import annotations

import math

import numpy as np

from .fbl import CodingSpec, decoding_error, q_function
from .model import CorrelatorStats, ErrorBreakdown, Scenario, SuperimposedDesign


def _check(design: SuperimposedDesign, scenario: Scenario) -> None:
    if design.sequence.length != scenario.n:
        raise ValueError(f"sequence length {design.sequence.length} differs from n={scenario.n}")


def fa1_lag_count(scenario: Scenario) -> int:
    return max(0, scenario.recovery - scenario.n)


def fa2_lags(scenario: Scenario) -> np.ndarray:
    # lags beyond t_r - 1 are outside the false-alarm window
    return np.arange(1, min(scenario.n, scenario.recovery))


def fa1_bound_vec(design: SuperimposedDesign, scenario: Scenario, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    count = fa1_lag_count(scenario)
    if count == 0:
        return np.zeros_like(delta)
    return np.minimum(1.0, count * q_function(delta / math.sqrt(scenario.n / 2.0)))


def fa1_bound(design: SuperimposedDesign, scenario: Scenario) -> float:
    _check(design, scenario)
    return float(fa1_bound_vec(design, scenario, design.delta))


def fa2_offset_stats(design: SuperimposedDesign, scenario: Scenario, k: int) -> CorrelatorStats:
    N = scenario.n
    if not 1 <= k <= N - 1:
        raise ValueError(f"lag {k} outside 1..{N - 1}")
    mean = math.sqrt(design.alpha * scenario.P) * design.sequence.profile()[k]
    variance = N / 2.0 + 0.5 * (1.0 - design.alpha) * (N - k) * scenario.P
    return CorrelatorStats(mean, variance)


def _fa2_moments(design: SuperimposedDesign, scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    N = scenario.n
    lags = fa2_lags(scenario)
    means = math.sqrt(design.alpha * scenario.P) * design.sequence.profile()[lags]
    variances = N / 2.0 + 0.5 * (1.0 - design.alpha) * (N - lags) * scenario.P
    return means, np.sqrt(variances)


def fa2_bound_vec(design: SuperimposedDesign, scenario: Scenario, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    means, stds = _fa2_moments(design, scenario)
    if means.size == 0:
        return np.zeros_like(delta)
    return np.minimum(1.0, q_function((delta[..., None] - means) / stds).sum(axis=-1))


def fa2_bound(design: SuperimposedDesign, scenario: Scenario) -> float:
    _check(design, scenario)
    return float(fa2_bound_vec(design, scenario, design.delta))


def arrival_stats(design: SuperimposedDesign, scenario: Scenario) -> CorrelatorStats:
    N, P, a = scenario.n, scenario.P, design.alpha
    return CorrelatorStats(math.sqrt(a * P) * N, N / 2.0 + 0.5 * (1.0 - a) * P * N)


def md_probability_vec(design: SuperimposedDesign, scenario: Scenario, delta) -> np.ndarray:
    st = arrival_stats(design, scenario)
    return q_function((st.mean - np.asarray(delta, dtype=float)) / st.std)


def md_probability(design: SuperimposedDesign, scenario: Scenario) -> float:
    _check(design, scenario)
    return float(md_probability_vec(design, scenario, design.delta))


def decoding_term(design: SuperimposedDesign, scenario: Scenario) -> float:
    # the known sequence is cancelled before decoding, so only the data power remains
    return decoding_error(CodingSpec(scenario.n, scenario.bits), (1.0 - design.alpha) * scenario.P)


def per_approximation(design: SuperimposedDesign, scenario: Scenario) -> ErrorBreakdown:
    _check(design, scenario)
    fa1 = fa1_bound(design, scenario)
    fa2 = fa2_bound(design, scenario)
    md = md_probability(design, scenario)
    eps_d = decoding_term(design, scenario)
    return ErrorBreakdown(
        p_fa=min(1.0, fa1 + fa2),
        p_md=md,
        eps_d=eps_d,
        per=min(1.0, fa1 + fa2 + md + eps_d),
        p_fa1=fa1,
        p_fa2=fa2,
    )


def per_vec(design: SuperimposedDesign, scenario: Scenario, delta) -> np.ndarray:
    """PER approximation over an array of thresholds at the design's alpha."""
    _check(design, scenario)
    eps_d = decoding_term(design, scenario)
    total = (
        fa1_bound_vec(design, scenario, delta)
        + fa2_bound_vec(design, scenario, delta)
        + md_probability_vec(design, scenario, delta)
        + eps_d
    )
    return np.minimum(1.0, total)


def detection_bracket(design: SuperimposedDesign, scenario: Scenario) -> tuple[float, float]:
    st = arrival_stats(design, scenario)
    return 0.0, st.mean + 10.0 * st.std
