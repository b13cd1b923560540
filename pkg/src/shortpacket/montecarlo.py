"""Seeded Monte Carlo validation of detection and end-to-end PER.

Each trial draws from its own Philox stream keyed by the run seed with the
trial index in the second counter word, so a trial's randomness depends only
on ``(seed, trial)``. Chunks of trials can therefore run on any number of
threads and integer counts add up to the same totals.

Per-trial draw order: decode uniform, window noise (sample by sample, real
then imaginary), codeword. Detection only reads a prefix of the window, which
lets the batch kernel stop drawing early for the preamble structure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.stats import binomtest

from . import preamble, superimposed
from .model import DetectionDesign, PreambleDesign, Scenario, SuperimposedDesign
from .zc import best_sequence

RNG_NAME = "numpy.random.Philox(key=seed, counter=[0, trial, 0, 0])"
CHUNK_TRIALS = 2048
_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class TrialOutcome:
    false_alarm: bool
    misdetection: bool
    decode_error: bool

    @property
    def packet_error(self) -> bool:
        return self.false_alarm or self.misdetection or self.decode_error


@dataclass(frozen=True)
class McEstimate:
    trials: int
    errors: int
    ci_low: float
    ci_high: float
    seed: int
    fa_events: int = 0
    fa1_events: int = 0  # noise-only lags (k >= N); superimposed only
    fa2_events: int = 0  # overlapping lags (k < N); superimposed only
    md_events: int = 0  # arrival statistic <= threshold, counted regardless of false alarms
    decode_events: int = 0
    rng: str = RNG_NAME

    @property
    def per_hat(self) -> float:
        return self.errors / self.trials

    def frequency(self, count: int) -> float:
        return count / self.trials

    def stderr(self, count: int | None = None) -> float:
        p = self.frequency(self.errors if count is None else count)
        return math.sqrt(p * (1.0 - p) / self.trials)


def structure_of(design: DetectionDesign) -> str:
    return "preamble" if isinstance(design, PreambleDesign) else "superimposed"


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial."""
    return np.random.Generator(np.random.Philox(key=_check_seed(seed), counter=[0, int(trial), 0, 0]))


class _TrialStreams:
    """Re-keys a single Philox in place; cheaper than building one per trial."""

    def __init__(self, seed: int):
        self._bitgen = np.random.Philox(key=_check_seed(seed))
        self.generator = np.random.Generator(self._bitgen)
        self._key = self._bitgen.state["state"]["key"]

    def at(self, trial: int) -> np.random.Generator:
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([0, trial, 0, 0], dtype=np.uint64), "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self.generator


def _complex_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    # unit-variance circularly-symmetric samples
    return rng.standard_normal(2 * n).view(np.complex128) / math.sqrt(2.0)


def sample_shell_codeword(n_c: int, rng: np.random.Generator) -> np.ndarray:
    """Codeword uniform on the complex sphere of radius ``sqrt(n_c)``."""
    if n_c < 1:
        raise ValueError("codeword length must be >= 1")
    d = _complex_normal(rng, n_c)
    return math.sqrt(n_c) * d / np.linalg.norm(d)


def _packet(structure: str, scenario: Scenario, design: DetectionDesign, codeword, zero_data: bool) -> np.ndarray:
    N, P = scenario.n, scenario.P
    p = design.sequence.symbols
    data = np.zeros_like(codeword) if zero_data else codeword
    if structure == "preamble":
        return math.sqrt(P) * np.concatenate([p, data])
    a = design.alpha
    return math.sqrt(P) * (math.sqrt(a) * p + math.sqrt(1.0 - a) * data)


def build_tx_window(
    structure: str,
    scenario: Scenario,
    design: DetectionDesign,
    rng: np.random.Generator,
    *,
    zero_data: bool = False,
    noise: bool = True,
) -> np.ndarray:
    """Received samples: ``t_r - 1`` idle slots followed by the ``n``-symbol packet.

    ``zero_data`` and ``noise=False`` are test hooks; the random draws are
    consumed either way so the stream position does not change.
    """
    _validate(structure, scenario, design)
    pre = scenario.recovery - 1
    w = _complex_normal(rng, pre + scenario.n)
    n_c = scenario.n - design.n_p if structure == "preamble" else scenario.n
    d = sample_shell_codeword(n_c, rng)
    y = w if noise else np.zeros_like(w)
    y[pre:] += _packet(structure, scenario, design, d, zero_data)
    return y


def correlator_outputs(y: np.ndarray, design: DetectionDesign, recovery: int) -> np.ndarray:
    """``Re[sum_j conj(p_j) y[s+j]]`` for window starts ``s = 0..recovery-1``."""
    p = design.sequence.symbols
    windows = np.lib.stride_tricks.sliding_window_view(y, p.size)[:recovery]
    return np.real(windows @ np.conj(p))


def _validate(structure: str, scenario: Scenario, design: DetectionDesign) -> None:
    if structure != structure_of(design):
        raise ValueError(f"design {type(design).__name__} does not match structure {structure!r}")
    if structure == "preamble" and design.n_p >= scenario.n:
        raise ValueError("preamble must be shorter than the packet")
    if structure == "superimposed" and design.sequence.length != scenario.n:
        raise ValueError("superimposed sequence must span the packet")


def _decode_probability(structure: str, scenario: Scenario, design: DetectionDesign) -> float:
    if structure == "preamble":
        return preamble.decoding_term(design, scenario)
    return superimposed.decoding_term(design, scenario)


def run_trial(structure: str, scenario: Scenario, design: DetectionDesign, rng: np.random.Generator) -> TrialOutcome:
    """One packet: false alarm on the idle lags preempts misdetection, which preempts decoding."""
    _validate(structure, scenario, design)
    u = rng.random()
    y = build_tx_window(structure, scenario, design, rng)
    r = correlator_outputs(y, design, scenario.recovery)
    fa = bool(np.any(r[:-1] > design.delta))
    md = (not fa) and bool(r[-1] <= design.delta)
    de = (not fa) and (not md) and u < _decode_probability(structure, scenario, design)
    return TrialOutcome(fa, md, bool(de))


def _chunk_counts(structure: str, scenario: Scenario, design: DetectionDesign, seed: int, start: int, stop: int) -> np.ndarray:
    pre = scenario.recovery - 1
    N, P = scenario.n, scenario.P
    p = design.sequence.symbols
    L = p.size
    span = pre + L  # samples read by the correlator
    superimposed_case = structure == "superimposed"
    eps_d = _decode_probability(structure, scenario, design)
    count = stop - start

    streams = _TrialStreams(seed)
    u = np.empty(count)
    y = np.empty((count, span), dtype=np.complex128)
    codewords = np.empty((count, N), dtype=np.complex128) if superimposed_case else None
    for i, t in enumerate(range(start, stop)):
        g = streams.at(t)
        u[i] = g.random()
        y[i] = _complex_normal(g, span)
        if superimposed_case:
            codewords[i] = _complex_normal(g, N)

    if superimposed_case:
        codewords *= math.sqrt(N) / np.linalg.norm(codewords, axis=1, keepdims=True)
        a = design.alpha
        y[:, pre:] += math.sqrt(P) * (math.sqrt(a) * p + math.sqrt(1.0 - a) * codewords)
    else:
        y[:, pre:] += math.sqrt(P) * p

    nfft = scipy.fft.next_fast_len(span)
    spectrum = np.conj(scipy.fft.fft(p, nfft))
    r = np.real(scipy.fft.ifft(scipy.fft.fft(y, nfft, axis=1) * spectrum, axis=1))[:, : pre + 1]

    delta = design.delta
    idle = r[:, :pre] > delta
    fa = idle.any(axis=1)
    if superimposed_case:
        # window start s sees lag k = pre - s; lags k >= N are noise only
        split = max(0, pre - (N - 1))
        fa1 = idle[:, :split].any(axis=1)
        fa2 = idle[:, split:].any(axis=1)
    else:
        fa1 = fa2 = np.zeros(count, dtype=bool)
    md_raw = r[:, pre] <= delta
    md = ~fa & md_raw
    de = ~fa & ~md & (u < eps_d)
    err = fa | md | de
    return np.array([err.sum(), fa.sum(), fa1.sum(), fa2.sum(), md_raw.sum(), de.sum()], dtype=np.int64)


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_per(
    structure: str,
    scenario: Scenario,
    design: DetectionDesign,
    trials: int,
    seed: int,
    *,
    workers: int = 1,
    chunk: int = CHUNK_TRIALS,
) -> McEstimate:
    """Monte Carlo PER; counts are identical for any ``workers`` given the same seed."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = _check_seed(seed)
    _validate(structure, scenario, design)
    bounds = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]

    def work(b):
        return _chunk_counts(structure, scenario, design, seed, *b)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    errors, fa, fa1, fa2, md, de = (int(v) for v in np.sum(parts, axis=0))
    lo, hi = wilson_interval(errors, trials)
    return McEstimate(
        trials=trials,
        errors=errors,
        ci_low=lo,
        ci_high=hi,
        seed=seed,
        fa_events=fa,
        fa1_events=fa1,
        fa2_events=fa2,
        md_events=md,
        decode_events=de,
    )


def empirical_rd_samples(N: int, P: float, count: int, seed: int, *, chunk: int = 8192) -> np.ndarray:
    """Samples of ``Re[sqrt(P) p^H D]`` for shell codewords ``D`` of length ``N``."""
    if N % 2 == 0:
        raise ValueError("N must be odd")
    p = best_sequence(N).symbols
    rng = np.random.Generator(np.random.Philox(key=_check_seed(seed)))
    out = np.empty(count)
    for s in range(0, count, chunk):
        m = min(chunk, count - s)
        d = rng.standard_normal((m, 2 * N)).view(np.complex128)
        d *= math.sqrt(N) / np.linalg.norm(d, axis=1, keepdims=True)
        out[s : s + m] = math.sqrt(P) * np.real(d @ np.conj(p))
    return out
