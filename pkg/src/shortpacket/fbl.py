"""Normal approximation of the AWGN decoding error at finite blocklength."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class CodingSpec:
    codeword_length: int  # complex channel uses
    payload_bits: int

    def __post_init__(self):
        if self.codeword_length < 1:
            raise ValueError("codeword_length must be >= 1")
        if self.payload_bits < 1:
            raise ValueError("payload_bits must be >= 1")


def q_function(x):
    """Gaussian tail probability, ``erfc(x / sqrt(2)) / 2``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def log_q_function(x):
    """Natural log of :func:`q_function`, finite far into the upper tail."""
    out = special.log_ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def capacity(P: float) -> float:
    """Bits per real channel use at linear SNR ``P``."""
    if P < 0:
        raise ValueError(f"SNR must be non-negative, got {P}")
    return 0.5 * math.log2(1.0 + P)


def dispersion(P: float) -> float:
    """Channel dispersion in squared bits per real channel use."""
    if P < 0:
        raise ValueError(f"SNR must be non-negative, got {P}")
    return P * (P + 2.0) / (2.0 * (P + 1.0) ** 2) * LOG2E**2


def q_argument(spec: CodingSpec, P: float) -> float:
    """Argument of Q in the decoding-error approximation (complex length counted as 2N_c real uses)."""
    n_real = 2 * spec.codeword_length
    num = n_real * capacity(P) - spec.payload_bits + 0.5 * math.log2(n_real)
    return num / math.sqrt(n_real * dispersion(P))


def decoding_error(spec: CodingSpec, P: float) -> float:
    if P < 0:
        raise ValueError(f"SNR must be non-negative, got {P}")
    if P == 0:
        warnings.warn("zero SNR: decoding error set to 1", RuntimeWarning, stacklevel=2)
        return 1.0
    return min(1.0, max(0.0, q_function(q_argument(spec, P))))


def log_decoding_error(spec: CodingSpec, P: float) -> float:
    """Log-domain decoding error; stays finite where :func:`decoding_error` underflows to 0."""
    if P <= 0:
        return 0.0
    return log_q_function(q_argument(spec, P))
