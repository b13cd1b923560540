"""Zadoff-Chu detection sequences and their aperiodic (partial-period) correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class ZadoffChuSequence:
    root: int
    length: int
    symbols: np.ndarray

    def __len__(self) -> int:
        return self.length

    @cached_property
    def _profile(self) -> np.ndarray:
        out = partial_correlation_profile(self)
        out.setflags(write=False)
        return out

    def profile(self) -> np.ndarray:
        """Partial correlation at every lag 0..length-1 (cached, read-only)."""
        return self._profile


def generate(root: int, length: int) -> ZadoffChuSequence:
    """Odd-length Zadoff-Chu sequence ``exp(-i*pi*root*j*(j+1)/length)``.

    ``length == 1`` is accepted with ``root == 1`` and yields ``[1]``.
    """
    root, length = int(root), int(length)
    if length < 1 or length % 2 == 0:
        raise ValueError(f"Zadoff-Chu length must be odd and positive, got {length}")
    if length == 1:
        if root != 1:
            raise ValueError("length-1 sequence only admits root 1")
    elif not 1 <= root < length:
        raise ValueError(f"root must lie in [1, {length - 1}], got {root}")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} is not coprime with length {length}")

    j = np.arange(length, dtype=np.int64)
    # reduce the phase index modulo 2*length before scaling to keep it exact
    phase = (root * j * (j + 1)) % (2 * length)
    symbols = np.exp(-1j * np.pi * phase / length)
    symbols.setflags(write=False)
    return ZadoffChuSequence(root, length, symbols)


def partial_correlation(seq: ZadoffChuSequence, k: int) -> float:
    """``Re[sum_{j=k}^{L-1} conj(p_j) p_{j-k}]``; zero for ``k >= L``."""
    if k < 0:
        raise ValueError("lag must be non-negative")
    if k >= seq.length:
        return 0.0
    if k == 0:
        return float(seq.length)
    p = seq.symbols
    return float(np.real(np.vdot(p[k:], p[: seq.length - k])))


def partial_correlation_profile(seq: ZadoffChuSequence) -> np.ndarray:
    L = seq.length
    p = seq.symbols
    # np.correlate(a, v)[L-1+k] = sum_m a[m+k] conj(v[m]); Re is invariant under conj
    full = np.correlate(p, p, mode="full")
    out = np.real(full[L - 1 :]).copy()
    out[0] = float(L)
    return out


def cyclic_autocorrelation(seq: ZadoffChuSequence) -> np.ndarray:
    """Complex periodic autocorrelation ``sum_j conj(p_j) p_{(j+k) mod L}``."""
    p = seq.symbols
    return np.fft.ifft(np.abs(np.fft.fft(p)) ** 2)


def _minmax_score(seq: ZadoffChuSequence) -> float:
    if seq.length == 1:
        return 0.0
    return float(np.max(np.abs(partial_correlation_profile(seq)[1:])))


@lru_cache(maxsize=None)
def select_root(length: int) -> int:
    """Coprime root minimising the worst-case partial correlation over lags 1..L-1.

    Scores are compared with a tolerance of ``1e-9 * length`` so that the
    conjugate pair ``u, L-u`` (identical profiles) ties deterministically to
    the smaller root.
    """
    length = int(length)
    if length < 1 or length % 2 == 0:
        raise ValueError(f"Zadoff-Chu length must be odd and positive, got {length}")
    if length == 1:
        return 1
    roots = [u for u in range(1, length) if math.gcd(u, length) == 1]
    scores = np.array([_minmax_score(generate(u, length)) for u in roots])
    best = scores.min()
    return roots[int(np.flatnonzero(scores <= best + 1e-9 * length)[0])]


@lru_cache(maxsize=None)
def best_sequence(length: int) -> ZadoffChuSequence:
    """Sequence of the given length built from :func:`select_root`."""
    return generate(select_root(length), length)
