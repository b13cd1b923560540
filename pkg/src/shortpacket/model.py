"""Scenario and design records shared by the analysis, optimizer and simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .zc import ZadoffChuSequence, best_sequence


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(P: float) -> float:
    return 10.0 * math.log10(P)


@dataclass(frozen=True)
class Scenario:
    """Blocklength ``n`` (complex channel uses), payload ``bits``, linear SNR ``P`` and recovery time."""

    n: int
    bits: int
    P: float
    recovery: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.P < 0:
            raise ValueError("SNR must be non-negative")
        if self.recovery < 1:
            raise ValueError("recovery time must be >= 1")

    @classmethod
    def from_db(cls, n: int, bits: int, snr_db: float, recovery: int) -> "Scenario":
        return cls(n=n, bits=bits, P=db_to_linear(snr_db), recovery=recovery)

    def with_snr(self, P: float) -> "Scenario":
        return Scenario(self.n, self.bits, P, self.recovery)


@dataclass(frozen=True)
class PreambleDesign:
    n_p: int
    delta: float
    sequence: Optional[ZadoffChuSequence] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_p < 1 or self.n_p % 2 == 0:
            raise ValueError(f"preamble length must be odd and positive, got {self.n_p}")
        if self.sequence is None:
            object.__setattr__(self, "sequence", best_sequence(self.n_p))
        elif self.sequence.length != self.n_p:
            raise ValueError("sequence length does not match n_p")

    def with_delta(self, delta: float) -> "PreambleDesign":
        return PreambleDesign(self.n_p, delta, self.sequence)

    @property
    def overhead(self) -> int:
        return self.n_p


@dataclass(frozen=True)
class SuperimposedDesign:
    alpha: float
    delta: float
    sequence: ZadoffChuSequence = field(compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @classmethod
    def for_scenario(cls, scenario: Scenario, alpha: float, delta: float) -> "SuperimposedDesign":
        if scenario.n % 2 == 0:
            raise ValueError("superimposed structure requires odd n")
        return cls(alpha, delta, best_sequence(scenario.n))

    def with_delta(self, delta: float) -> "SuperimposedDesign":
        return SuperimposedDesign(self.alpha, delta, self.sequence)

    def with_alpha(self, alpha: float) -> "SuperimposedDesign":
        return SuperimposedDesign(alpha, self.delta, self.sequence)

    @property
    def overhead(self) -> float:
        return self.alpha


DetectionDesign = Union[PreambleDesign, SuperimposedDesign]


@dataclass(frozen=True)
class ErrorBreakdown:
    """Error terms of one design; ``per`` is their sum clamped to 1.

    For the superimposed structure ``p_fa = p_fa1 + p_fa2`` (each clamped).
    """

    p_fa: float
    p_md: float
    eps_d: float
    per: float
    p_fa1: Optional[float] = None
    p_fa2: Optional[float] = None

    @property
    def unclamped(self) -> float:
        return self.p_fa + self.p_md + self.eps_d


@dataclass(frozen=True)
class CorrelatorStats:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return self.variance**0.5
