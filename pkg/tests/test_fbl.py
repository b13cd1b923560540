import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import eps_d_mp, q_mp
from shortpacket.fbl import CodingSpec, capacity, decoding_error, dispersion, log_decoding_error, q_argument, q_function

LOG2E2 = math.log2(math.e) ** 2


def test_q_basics():
    assert q_function(0.0) == 0.5
    assert q_function(np.inf) == 0.0
    assert q_function(-np.inf) == 1.0


@given(st.floats(-30, 30))
def test_q_symmetry(x):
    assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-15)


def test_q_golden(golden):
    assert q_function(6.0) == pytest.approx(golden["q_6"], rel=1e-13)


def test_q_matches_high_precision():
    for x in np.linspace(-8, 8, 97):
        assert q_function(x) == pytest.approx(float(q_mp(x)), rel=1e-12)
    for x in (10.0, 20.0, 30.0, 37.0):
        assert q_function(x) == pytest.approx(float(q_mp(x)), rel=1e-12)


def test_q_monotone():
    x = np.linspace(-10, 10, 1001)
    assert np.all(np.diff(q_function(x)) <= 0)


def test_capacity_values():
    assert capacity(0) == 0
    assert capacity(1) == 0.5
    assert capacity(3) == 1.0
    with pytest.raises(ValueError):
        capacity(-1)


def test_dispersion_values(golden):
    assert dispersion(0) == 0
    assert dispersion(1) == pytest.approx(golden["dispersion_1"], rel=1e-14)
    assert abs(dispersion(1e6) - LOG2E2 / 2) < 1e-5
    grid = np.logspace(-2, 4, 60)
    assert np.all(np.diff([dispersion(p) for p in grid]) > 0)
    with pytest.raises(ValueError):
        dispersion(-0.1)


def test_decoding_error_golden(golden):
    spec = CodingSpec(257, 128)
    assert decoding_error(spec, 1.0) == pytest.approx(golden["eps_d_257_128_1"], rel=1e-10)
    assert q_argument(spec, 1.0) == pytest.approx(6.665, abs=5e-3)


def test_decoding_error_far_below_capacity():
    assert decoding_error(CodingSpec(257, 1), 100.0) < 1e-15


def test_decoding_error_at_boundary():
    # choose P so that 2N_c C(P) + log2(2N_c)/2 equals b exactly
    n_c, b = 100, 150
    target = (b - 0.5 * math.log2(2 * n_c)) / (2 * n_c)
    P = 2 ** (2 * target) - 1
    assert decoding_error(CodingSpec(n_c, b), P) == pytest.approx(0.5, abs=1e-12)


def test_decoding_error_zero_snr_warns():
    with pytest.warns(RuntimeWarning):
        assert decoding_error(CodingSpec(10, 5), 0.0) == 1.0


def test_decoding_error_monotone_in_snr():
    spec = CodingSpec(257, 128)
    vals = [decoding_error(spec, p) for p in np.linspace(0.1, 3.0, 200)]
    positive = [v for v in vals if v > 0]
    assert np.all(np.diff(positive) < 0)


def test_decoding_error_monotone_in_length():
    b, P = 128, 1.0
    lengths = [n for n in range(60, 400, 7) if 2 * n * capacity(P) > b]
    vals = [decoding_error(CodingSpec(n, b), P) for n in lengths]
    positive = [v for v in vals if v > 0]
    assert np.all(np.diff(positive) < 0)


def test_log_domain_survives_underflow():
    spec = CodingSpec(257, 10)
    assert decoding_error(spec, 50.0) == 0.0
    lv = log_decoding_error(spec, 50.0)
    assert np.isfinite(lv) and lv < -700
    ref = eps_d_mp(257, 10, 50)
    assert lv == pytest.approx(float(mp.log(ref)), rel=1e-9)


def test_codingspec_validation():
    with pytest.raises(ValueError):
        CodingSpec(0, 1)
    with pytest.raises(ValueError):
        CodingSpec(5, 0)
