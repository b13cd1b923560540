"""PER minimisation over overhead (preamble length or power split) and threshold.

The threshold search is a coarse grid followed by golden-section refinement
of the best grid cell. The overhead is scanned exhaustively (odd preamble
lengths) or on a fixed grid refined locally (power split).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import preamble, superimposed
from .fbl import CodingSpec
from .model import DetectionDesign, ErrorBreakdown, PreambleDesign, Scenario, SuperimposedDesign, db_to_linear
from .zc import best_sequence

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
THRESHOLD_GRID_POINTS = 129
ALPHA_GRID = np.round(np.arange(1, 200) * 0.005, 3)


class NumericalError(ArithmeticError):
    """Objective returned a non-finite value."""


@dataclass(frozen=True)
class OptimizationResult:
    design: DetectionDesign
    per: float
    breakdown: ErrorBreakdown
    evaluations: int

    @property
    def structure(self) -> str:
        return "preamble" if isinstance(self.design, PreambleDesign) else "superimposed"


def _finite(values, where: str):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite objective value in {where}")
    return arr


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float, int]:
    """Minimise a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``.

    Returns ``(x, f(x), evaluations)`` for the best point seen.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = float(_finite(f(c), "golden section")), float(_finite(f(d), "golden section"))
    evals = 2
    best = min((fc, c), (fd, d))
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = float(_finite(f(c), "golden section"))
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = float(_finite(f(d), "golden section"))
            best = min(best, (fd, d))
        evals += 1
    return best[1], best[0], evals


def optimize_threshold(
    objective: Callable,
    bracket: tuple[float, float],
    *,
    grid_points: int = THRESHOLD_GRID_POINTS,
    rtol: float = 1e-6,
    vectorized: bool = False,
) -> tuple[float, float, int]:
    """Best threshold on ``bracket``: ``(delta, objective(delta), evaluations)``.

    The returned value is never worse than any coarse grid point; on ties the
    smallest threshold wins.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValueError(f"empty threshold bracket {bracket}")
    grid = np.linspace(lo, hi, grid_points)
    if vectorized:
        values = _finite(objective(grid), "threshold grid")
    else:
        values = _finite([objective(x) for x in grid], "threshold grid")
    i = int(np.argmin(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]

    scalar = (lambda x: float(objective(np.array([x]))[0])) if vectorized else objective
    x, fx, evals = golden_section(scalar, a, b, rtol * (hi - lo))
    if fx < values[i]:
        return float(x), float(fx), grid_points + evals
    return float(grid[i]), float(values[i]), grid_points + evals


def preamble_lengths(n: int) -> range:
    """Odd preamble lengths leaving at least one data symbol."""
    return range(1, n, 2)


def optimize_preamble_delta(scenario: Scenario, n_p: int, **kw) -> OptimizationResult:
    """Fixed preamble length, threshold optimised."""
    design = PreambleDesign(n_p, 0.0, best_sequence(n_p))
    delta, _, evals = optimize_threshold(
        lambda d: preamble.per_vec(design, scenario, d),
        preamble.detection_bracket(design, scenario),
        vectorized=True,
        **kw,
    )
    design = design.with_delta(delta)
    bd = preamble.per_upper_bound(design, scenario)
    return OptimizationResult(design, bd.per, bd, evals)


def preamble_curve(scenario: Scenario, lengths: Optional[Iterable[int]] = None) -> list[OptimizationResult]:
    """Threshold-optimised PER for each preamble length (the tradeoff curve)."""
    lengths = preamble_lengths(scenario.n) if lengths is None else lengths
    return [optimize_preamble_delta(scenario, n_p) for n_p in lengths]


def _argmin(results: Sequence[OptimizationResult]) -> int:
    # lowest PER; ties go to the smaller overhead, then the smaller threshold
    keys = [(r.per, r.design.overhead, r.design.delta) for r in results]
    return min(range(len(keys)), key=keys.__getitem__)


def optimize_preamble(scenario: Scenario) -> OptimizationResult:
    curve = preamble_curve(scenario)
    best = curve[_argmin(curve)]
    total = sum(r.evaluations for r in curve)
    return OptimizationResult(best.design, best.per, best.breakdown, total)


def optimize_superimposed_delta(scenario: Scenario, alpha: float, **kw) -> OptimizationResult:
    """Fixed power split, threshold optimised."""
    design = SuperimposedDesign.for_scenario(scenario, alpha, 0.0)
    delta, _, evals = optimize_threshold(
        lambda d: superimposed.per_vec(design, scenario, d),
        superimposed.detection_bracket(design, scenario),
        vectorized=True,
        **kw,
    )
    design = design.with_delta(delta)
    bd = superimposed.per_approximation(design, scenario)
    return OptimizationResult(design, bd.per, bd, evals)


def superimposed_curve(scenario: Scenario, alphas: Optional[Iterable[float]] = None) -> list[OptimizationResult]:
    alphas = ALPHA_GRID if alphas is None else alphas
    return [optimize_superimposed_delta(scenario, float(a)) for a in alphas]


def optimize_alpha(scenario: Scenario, *, alpha_tol: float = 1e-7) -> OptimizationResult:
    """Coarse power-split grid, then golden-section refinement around the best cell."""
    curve = superimposed_curve(scenario)
    i = _argmin(curve)
    evals = sum(r.evaluations for r in curve)
    best = curve[i]

    lo = float(ALPHA_GRID[i - 1]) if i > 0 else float(ALPHA_GRID[0]) / 2
    hi = float(ALPHA_GRID[i + 1]) if i < len(ALPHA_GRID) - 1 else (1.0 + float(ALPHA_GRID[-1])) / 2
    cache: dict[float, OptimizationResult] = {}

    def f(a: float) -> float:
        if a not in cache:
            cache[a] = optimize_superimposed_delta(scenario, a)
        return cache[a].per

    a_star, per_star, _ = golden_section(f, lo, hi, alpha_tol)
    evals += sum(r.evaluations for r in cache.values())
    if per_star < best.per:
        best = cache[a_star]
    return OptimizationResult(best.design, best.per, best.breakdown, evals)


def optimize(scenario: Scenario, structure: str) -> OptimizationResult:
    if structure == "preamble":
        return optimize_preamble(scenario)
    if structure == "superimposed":
        return optimize_alpha(scenario)
    raise ValueError(f"unknown structure {structure!r}")


def snr_sweep(
    scenario: Scenario,
    snr_db: Iterable[float],
    structure: str,
    *,
    workers: int = 1,
) -> list[tuple[float, OptimizationResult]]:
    """Optimum per SNR point; ordering follows ``snr_db`` whatever ``workers`` is."""
    points = [float(s) for s in snr_db]
    scenarios = [scenario.with_snr(db_to_linear(s)) for s in points]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda sc: optimize(sc, structure), scenarios))
    else:
        results = [optimize(sc, structure) for sc in scenarios]
    return list(zip(points, results))


# --- pragmatic adaptive-rate scheme ---------------------------------------------------------


@dataclass(frozen=True)
class Anchor:
    snr_db: float
    coding: CodingSpec
    n_p: int
    delta: float


@dataclass(frozen=True)
class PragmaticSchedule:
    """One codebook (hence one preamble length) per SNR interval centred on an anchor.

    ``freeze_delta`` keeps the anchor's threshold across its interval; otherwise
    the receiver threshold is re-optimised at each SNR.
    """

    anchors: tuple[Anchor, ...]
    interval_width_db: float = 1.0
    freeze_delta: bool = False

    @staticmethod
    def center_of(snr_db: float, width: float) -> float:
        # intervals are [c - w/2, c + w/2); the upper edge belongs to the next anchor
        return round(math.floor(snr_db / width + 0.5) * width, 9)

    @classmethod
    def build(
        cls,
        scenario: Scenario,
        snr_db: Iterable[float],
        interval_width_db: float = 1.0,
        freeze_delta: bool = False,
    ) -> "PragmaticSchedule":
        centers = sorted({cls.center_of(float(s), interval_width_db) for s in snr_db})
        anchors = []
        for c in centers:
            res = optimize_preamble(scenario.with_snr(db_to_linear(c)))
            n_p = res.design.n_p
            anchors.append(Anchor(c, CodingSpec(scenario.n - n_p, scenario.bits), n_p, res.design.delta))
        return cls(tuple(anchors), interval_width_db, freeze_delta)

    def anchor_for(self, snr_db: float) -> Anchor:
        c = self.center_of(snr_db, self.interval_width_db)
        for a in self.anchors:
            if abs(a.snr_db - c) < 1e-9:
                return a
        raise ValueError(f"SNR {snr_db} dB is not covered by the schedule")


@dataclass(frozen=True)
class PragmaticPoint:
    snr_db: float
    anchor: Anchor
    result: OptimizationResult

    @property
    def per(self) -> float:
        return self.result.per


def pragmatic_sweep(scenario: Scenario, snr_db: Iterable[float], schedule: PragmaticSchedule) -> list[PragmaticPoint]:
    out = []
    for s in snr_db:
        s = float(s)
        anchor = schedule.anchor_for(s)
        sc = scenario.with_snr(db_to_linear(s))
        if schedule.freeze_delta:
            design = PreambleDesign(anchor.n_p, anchor.delta, best_sequence(anchor.n_p))
            bd = preamble.per_upper_bound(design, sc)
            res = OptimizationResult(design, bd.per, bd, 1)
        else:
            res = optimize_preamble_delta(sc, anchor.n_p)
        out.append(PragmaticPoint(s, anchor, res))
    return out
