"""Order-of-magnitude classification along geometric ε grids.

``O(ε^n)`` and ``O(ε^-N)`` statements become slope thresholds on a
least-squares line through ``(log ε, log |value|)``. A fixed margin of 0.1
absorbs finite-window effects. Logarithmic corrections such as
``ε² |ln ε|`` show up as a slope that drifts across the window, so every
verdict also looks at the two half-windows separately.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAGNITUDE_FLOOR = 1e-300
LOG_FLOOR = math.log(MAGNITUDE_FLOOR)
SLOPE_MARGIN = 0.1
RESIDUAL_CAP = 0.05
FLOOR_FRACTION = 0.75
CLEAR_MARGIN = 0.5
MIN_SAMPLES = 8


class SignalBelowFloor(ValueError):
    """Too few samples above the magnitude floor to fit a slope."""


class NonFiniteSample(ValueError):
    pass


@dataclass(frozen=True)
class EpsGrid:
    eps_min: float = 1e-6
    eps_max: float = 1e-1
    n: int = 40

    def __post_init__(self):
        if not 0 < self.eps_min < self.eps_max <= 1:
            raise ValueError("EpsGrid requires 0 < eps_min < eps_max <= 1")
        if self.n < 8:
            raise ValueError("EpsGrid requires n >= 8")

    def points(self) -> np.ndarray:
        """Grid points in decreasing order, ``eps_max`` first."""
        return np.geomspace(self.eps_max, self.eps_min, self.n)


@dataclass(frozen=True)
class Sample:
    eps: float
    log_magnitude: float
    clipped: bool

    @property
    def magnitude(self) -> float:
        return 0.0 if self.clipped else math.exp(min(self.log_magnitude, 709.0))


@dataclass(frozen=True)
class AsymptoticFit:
    slope: float
    intercept: float
    residual_rms: float
    window: tuple
    n_used: int
    floor_hits: int

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_rms": self.residual_rms,
            "window": list(self.window),
            "n_used": self.n_used,
            "floor_hits": self.floor_hits,
        }


@dataclass(frozen=True)
class OrderVerdict:
    verdict: bool
    fit: AsymptoticFit | None
    halves: tuple = ()
    below_floor: bool = False
    order: float | None = None

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "order": self.order,
            "below_floor": self.below_floor,
            "fit": self.fit.as_dict() if self.fit else None,
            "halves": [h.as_dict() for h in self.halves],
        }


@dataclass(frozen=True)
class ModeratenessResult:
    N: int | None
    N_max: int
    fit: AsymptoticFit | None
    halves: tuple = field(default=())

    @property
    def moderate(self) -> bool:
        return self.N is not None

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "N_max": self.N_max,
            "moderate": self.moderate,
            "fit": self.fit.as_dict() if self.fit else None,
            "halves": [h.as_dict() for h in self.halves],
        }


def _log_magnitude(value) -> float:
    """Accept a plain number or anything carrying ``log_abs`` (log-space results)."""
    log_abs = getattr(value, "log_abs", None)
    if log_abs is not None:
        return float(log_abs)
    mag = abs(complex(value)) if isinstance(value, complex) else abs(float(value))
    if math.isnan(mag) or math.isinf(mag):
        return math.nan
    return math.log(mag) if mag > 0 else -math.inf


def sample_magnitudes(
    value_at: Callable[[float], object], grid: EpsGrid, threads: int = 1
) -> list[Sample]:
    eps = grid.points()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(value_at, eps))
    else:
        raw = [value_at(e) for e in eps]
    out = []
    for e, v in zip(eps, raw):
        lm = _log_magnitude(v)
        if math.isnan(lm) or lm == math.inf:
            raise NonFiniteSample(f"non-finite magnitude at eps={e!r}")
        clipped = lm < LOG_FLOOR
        out.append(Sample(float(e), max(lm, LOG_FLOOR), clipped))
    return out


def fit_log_slope(samples: list[Sample], window: tuple | None = None) -> AsymptoticFit:
    if window is None:
        window = (min(s.eps for s in samples), max(s.eps for s in samples))
    lo, hi = window
    inside = [s for s in samples if lo * (1 - 1e-12) <= s.eps <= hi * (1 + 1e-12)]
    used = [s for s in inside if not s.clipped]
    if len(used) < MIN_SAMPLES:
        raise SignalBelowFloor("signal below floor")
    x = np.log([s.eps for s in used])
    y = np.array([s.log_magnitude for s in used])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return AsymptoticFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        window=(float(lo), float(hi)),
        n_used=len(used),
        floor_hits=len(inside) - len(used),
    )


def _half_windows(samples: list[Sample]):
    eps = sorted(s.eps for s in samples)
    mid = math.sqrt(eps[0] * eps[-1])
    return (eps[0], mid), (mid, eps[-1])


def _mostly_floor(samples: list[Sample]) -> bool:
    hits = sum(s.clipped for s in samples)
    return hits >= FLOOR_FRACTION * len(samples)


def _fits(samples):
    full = fit_log_slope(samples)
    try:
        halves = tuple(fit_log_slope(samples, w) for w in _half_windows(samples))
    except SignalBelowFloor:
        halves = ()
    return full, halves


def negligibility_from_samples(samples: list[Sample], n_target: float) -> OrderVerdict:
    """Verdict for ``|value| = O(ε^n_target)`` on already collected samples."""
    if _mostly_floor(samples):
        return OrderVerdict(True, None, below_floor=True, order=n_target)
    try:
        full, halves = _fits(samples)
    except SignalBelowFloor:
        return OrderVerdict(True, None, below_floor=True, order=n_target)
    threshold = n_target - SLOPE_MARGIN
    worst = min([full.slope] + [h.slope for h in halves])
    slopes_ok = worst >= threshold
    # a curved signal whose every slope clears the target by a wide margin
    # (ε² |ln ε| against n = 1) needs no straightness check
    straight = (
        worst >= n_target + CLEAR_MARGIN
        or full.residual_rms <= RESIDUAL_CAP
        or (len(halves) == 2 and all(h.residual_rms <= RESIDUAL_CAP for h in halves))
    )
    return OrderVerdict(slopes_ok and straight, full, halves, order=n_target)


def moderateness_from_samples(samples: list[Sample], N_max: int) -> ModeratenessResult:
    """Smallest ``N <= N_max`` with ``|value| = O(ε^-N)``, else ``N=None``."""
    if _mostly_floor(samples):
        return ModeratenessResult(0, N_max, None)
    try:
        full, halves = _fits(samples)
    except SignalBelowFloor:
        return ModeratenessResult(0, N_max, None)
    worst = min([full.slope] + [h.slope for h in halves])
    for N in range(N_max + 1):
        if worst >= -N - SLOPE_MARGIN:
            return ModeratenessResult(N, N_max, full, halves)
    return ModeratenessResult(None, N_max, full, halves)


def classify_negligibility_order(
    value_at: Callable, grid: EpsGrid, n_target: float, threads: int = 1
) -> OrderVerdict:
    return negligibility_from_samples(sample_magnitudes(value_at, grid, threads), n_target)


def classify_moderateness_order(
    value_at: Callable, grid: EpsGrid, N_max: int, threads: int = 1
) -> ModeratenessResult:
    return moderateness_from_samples(sample_magnitudes(value_at, grid, threads), N_max)
