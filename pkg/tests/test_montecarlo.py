import math

import numpy as np
import pytest
from scipy import stats

from shortpacket import montecarlo as mc
from shortpacket import preamble as pre
from shortpacket import superimposed as si
from shortpacket.model import PreambleDesign, Scenario, SuperimposedDesign
from shortpacket.optimize import optimize_alpha, optimize_preamble

SMALL = Scenario(n=65, bits=32, P=10 ** (-0.2), recovery=72)


@pytest.fixture(scope="module")
def designs():
    sc = Scenario.from_db(257, 128, -2.0, 283)
    return sc, optimize_preamble(sc).design, optimize_alpha(sc).design


def test_shell_codeword_norm():
    rng = np.random.default_rng(0)
    for n in (1, 2, 64, 257):
        d = mc.sample_shell_codeword(n, rng)
        assert np.linalg.norm(d) ** 2 == pytest.approx(n, rel=1e-9)
    with pytest.raises(ValueError):
        mc.sample_shell_codeword(0, rng)


def test_scalar_codeword_has_uniform_phase():
    rng = np.random.Generator(np.random.Philox(3))
    z = np.array([mc.sample_shell_codeword(1, rng)[0] for _ in range(100_000)])
    np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)
    phase = (np.angle(z) + math.pi) / (2 * math.pi)
    assert stats.kstest(phase, "uniform").statistic < 0.02


def test_codeword_entries_have_unit_variance():
    rng = np.random.Generator(np.random.Philox(4))
    d = np.array([mc.sample_shell_codeword(64, rng) for _ in range(100_000)])
    var = np.mean(np.abs(d) ** 2, axis=0)
    assert np.all(np.abs(var - 1) < 0.05)
    assert abs(np.mean(d)) < 0.01


def test_window_zero_snr_is_noise():
    sc = Scenario(n=65, bits=32, P=0.0, recovery=72)
    y = np.concatenate([mc.build_tx_window("preamble", sc, PreambleDesign(7, 1.0), mc.trial_rng(1, t)) for t in range(700)])
    assert y.size == 700 * (71 + 65)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, abs=0.02)


def test_window_preamble_power():
    sc = Scenario(n=65, bits=32, P=2.0, recovery=72)
    d = PreambleDesign(7, 1.0)
    ys = np.array([mc.build_tx_window("preamble", sc, d, mc.trial_rng(2, t)) for t in range(1600)])
    packet = ys[:, 71:].ravel()
    idle = ys[:, :71].ravel()
    # |y|^2 of a unit-variance complex Gaussian around a fixed point has variance 1 + 2|x|^2
    tol = 3 * math.sqrt((1 + 2 * sc.P) / packet.size) + 1e-3
    assert np.mean(np.abs(packet) ** 2) == pytest.approx(sc.P + 1, abs=tol)
    assert np.mean(np.abs(idle) ** 2) == pytest.approx(1.0, abs=3 * math.sqrt(1 / idle.size) + 1e-3)


def test_window_superimposed_sequence_power():
    sc = Scenario(n=65, bits=32, P=2.0, recovery=72)
    d = SuperimposedDesign.for_scenario(sc, 0.3, 1.0)
    y = mc.build_tx_window("superimposed", sc, d, mc.trial_rng(0, 0), zero_data=True, noise=False)
    assert np.all(y[:71] == 0)
    np.testing.assert_allclose(np.abs(y[71:]) ** 2, 0.3 * 2.0, rtol=1e-12)
    y = mc.build_tx_window("superimposed", sc, d, mc.trial_rng(0, 0), noise=False)
    assert np.mean(np.abs(y[71:]) ** 2) == pytest.approx(2.0, rel=0.3)


def test_correlator_matches_direct_sum():
    sc = SMALL
    d = PreambleDesign(9, 3.0)
    y = mc.build_tx_window("preamble", sc, d, mc.trial_rng(5, 5))
    r = mc.correlator_outputs(y, d, sc.recovery)
    p = d.sequence.symbols
    for s in (0, 13, 70, 71):
        assert r[s] == pytest.approx(sum((p[j].conjugate() * y[s + j]).real for j in range(9)), abs=1e-12)


def test_infinite_threshold_always_misses():
    sc = SMALL
    for structure, d in (("preamble", PreambleDesign(9, 1e9)), ("superimposed", SuperimposedDesign.for_scenario(sc, 0.3, 1e9))):
        outs = [mc.run_trial(structure, sc, d, mc.trial_rng(1, t)) for t in range(1000)]
        assert all(o.misdetection and not o.false_alarm and o.packet_error for o in outs)


def test_negative_threshold_always_false_alarms():
    # Re-statistics of Gaussian noise exceed -1 with overwhelming probability at the first lag already,
    # but the event only requires one idle lag above the threshold
    sc = SMALL
    d = PreambleDesign(9, -1.0)
    outs = [mc.run_trial("preamble", sc, d, mc.trial_rng(1, t)) for t in range(1000)]
    assert all(o.false_alarm and not o.misdetection and not o.decode_error for o in outs)


def test_batch_kernel_matches_run_trial(designs):
    sc, dp, ds = designs
    for structure, d in (("preamble", dp), ("superimposed", ds)):
        outs = [mc.run_trial(structure, sc, d, mc.trial_rng(9, t)) for t in range(100, 400)]
        counts = mc._chunk_counts(structure, sc, d, 9, 100, 400)
        assert counts[0] == sum(o.packet_error for o in outs)
        assert counts[1] == sum(o.false_alarm for o in outs)
        assert counts[5] == sum(o.decode_error for o in outs)


def test_estimate_rejects_bad_input():
    d = PreambleDesign(9, 1.0)
    with pytest.raises(ValueError):
        mc.estimate_per("preamble", SMALL, d, 0, 1)
    with pytest.raises(ValueError):
        mc.estimate_per("superimposed", SMALL, d, 10, 1)
    with pytest.raises(ValueError):
        mc.estimate_per("preamble", SMALL, d, 10, -1)


def test_all_error_configuration():
    est = mc.estimate_per("preamble", SMALL, PreambleDesign(9, 1e9), 1000, 3)
    assert est.per_hat == 1.0
    assert est.ci_low > 0.9 and est.ci_high == pytest.approx(1.0)
    assert est.ci_low <= est.per_hat <= est.ci_high


def test_determinism_and_thread_independence():
    d = PreambleDesign(15, 8.0)
    a = mc.estimate_per("preamble", SMALL, d, 5000, 77)
    b = mc.estimate_per("preamble", SMALL, d, 5000, 77)
    c = mc.estimate_per("preamble", SMALL, d, 5000, 77, workers=4)
    e = mc.estimate_per("preamble", SMALL, d, 5000, 77, chunk=333)
    assert a == b == c == e
    assert mc.estimate_per("preamble", SMALL, d, 5000, 78) != a


def test_wilson_interval_contains_estimate():
    for k, n in ((0, 10), (3, 10), (10, 10), (500, 100_000)):
        lo, hi = mc.wilson_interval(k, n)
        assert 0 <= lo <= k / n <= hi <= 1


def test_analytic_terms_against_simulation(designs):
    sc, dp, ds = designs
    n = 100_000
    est = mc.estimate_per("preamble", sc, dp, n, 2024)
    bd = pre.per_upper_bound(dp, sc)
    assert est.frequency(est.fa_events) <= bd.p_fa + 3 * est.stderr(est.fa_events)
    assert abs(est.frequency(est.md_events) - bd.p_md) <= 3 * math.sqrt(bd.p_md * (1 - bd.p_md) / n)
    assert est.per_hat <= bd.per + 3 * est.stderr()

    est = mc.estimate_per("superimposed", sc, ds, n, 2024)
    bd = si.per_approximation(ds, sc)
    assert est.frequency(est.fa2_events) == pytest.approx(bd.p_fa2, rel=0.3)
    assert est.frequency(est.md_events) == pytest.approx(bd.p_md, rel=0.3)


def test_rd_samples_deterministic():
    a = mc.empirical_rd_samples(31, 1.0, 1000, 5)
    b = mc.empirical_rd_samples(31, 1.0, 1000, 5)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        mc.empirical_rd_samples(30, 1.0, 10, 5)
