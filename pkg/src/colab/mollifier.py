"""Test functions with prescribed moments, built over a shifted-bump basis.

Every constructor sets up a small linear system whose rows are functionals
(mass, moments, half-moment) evaluated on the basis elements and takes the
minimum-norm coefficient vector. The functionals are the same trapezoid
sums used everywhere else, so the constructed samples meet their
constraints to rounding, not merely to quadrature accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from colab.grid_fn import (
    DEFAULT_N_POINTS,
    TestFunction,
    half_moment,
    inner_product,
    integrate,
    moment,
)

COEFF_NORM_LIMIT = 1e6
RANK_TOL = 1e-13


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class MollifierSpec:
    q: int
    support_radius: float = 1.0
    basis_size: int | None = None
    n_points: int = DEFAULT_N_POINTS
    precise: bool = False

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be nonnegative")
        if self.support_radius <= 0:
            raise ValueError("support_radius must be positive")
        if self.basis_size is None:
            object.__setattr__(self, "basis_size", self.q + 6)
        if self.basis_size < self.q + 3:
            raise ValueError("basis_size must be at least q + 3")

    @property
    def window(self):
        return (-2 * self.support_radius, 2 * self.support_radius)


@dataclass(frozen=True)
class MomentReport:
    mass: float
    moments: list  # moments[k - 1] is the moment of order k
    half_moment: float
    inner: float


def _profile(t):
    """Unnormalized bump ``exp(-1/(1-t²))`` on ``|t| < 1``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out


def _profile_mp(t):
    if abs(t) >= 1:
        return mpmath.mpf(0)
    return mpmath.exp(-1 / (1 - t * t))


def build_bump(
    center: float = 0.0,
    radius: float = 1.0,
    n_points: int = DEFAULT_N_POINTS,
    window: tuple | None = None,
    precise: bool = False,
) -> TestFunction:
    """Unit-mass bump ``c·exp(-1/(1-((x-center)/radius)²))``.

    Sampled on its own support unless ``window`` asks for a wider grid
    (used to put several bumps on one common grid).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    lo, hi = window if window is not None else (center - radius, center + radius)
    if precise:
        c, r = mpmath.mpf(center), mpmath.mpf(radius)
        raw = TestFunction.from_callable(
            lambda x: _profile_mp((x - c) / r), mpmath.mpf(lo), mpmath.mpf(hi), n_points
        )
    else:
        raw = TestFunction.from_callable(
            lambda x: _profile((x - center) / radius), float(lo), float(hi), n_points
        )
    return TestFunction(raw.lo, raw.hi, raw.samples / integrate(raw))


def _basis(spec: MollifierSpec) -> list[TestFunction]:
    r = spec.support_radius
    centers = np.linspace(-r, r, spec.basis_size)
    return [
        build_bump(c, r, spec.n_points, spec.window, spec.precise) for c in centers
    ]


def _solve(
    spec: MollifierSpec,
    rows: Sequence[Callable[[TestFunction], float]],
    rhs: Sequence[float],
) -> TestFunction:
    basis = _basis(spec)
    if len(rows) >= len(basis):
        raise RankDeficientError("constraint system rank-deficient")
    if spec.precise:
        A = mpmath.matrix([[row(b) for b in basis] for row in rows])
        b = mpmath.matrix([mpmath.mpf(v) for v in rhs])
        gram = A * A.T
        try:
            y = mpmath.lu_solve(gram, b)
        except ZeroDivisionError as exc:
            raise RankDeficientError("constraint system rank-deficient") from exc
        coeffs = A.T * y
        coeffs = [coeffs[i] for i in range(len(basis))]
        norm = float(mpmath.norm(mpmath.matrix(coeffs)))
    else:
        A = np.array([[row(b) for b in basis] for row in rows], dtype=float)
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[-1] <= RANK_TOL * sv[0]:
            raise RankDeficientError("constraint system rank-deficient")
        coeffs, *_ = np.linalg.lstsq(A, np.asarray(rhs, dtype=float), rcond=None)
        norm = float(np.linalg.norm(coeffs))
    if norm > COEFF_NORM_LIMIT:
        raise RankDeficientError(
            f"constraint system rank-deficient (coefficient norm {norm:.3g})"
        )
    samples = coeffs[0] * basis[0].samples
    for c, bf in zip(coeffs[1:], basis[1:]):
        samples = samples + c * bf.samples
    samples[0] = samples[-1] = basis[0].samples[0]
    return TestFunction(basis[0].lo, basis[0].hi, samples)


def _moment_row(k):
    return lambda f: moment(f, k)


def build_in_Aq(spec: MollifierSpec) -> TestFunction:
    """Unit mass with vanishing moments of orders ``1..q``."""
    rows = [_moment_row(k) for k in range(spec.q + 1)]
    rhs = [1.0] + [0.0] * spec.q
    return _solve(spec, rows, rhs)


def build_delta_moment_companion(q: int, **spec_kw) -> TestFunction:
    """Zero mass with ``moment(ψ, k) = δ_{kq}`` for ``k = 1..q``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    spec = MollifierSpec(q, **spec_kw)
    rows = [_moment_row(k) for k in range(q + 1)]
    rhs = [0.0] * q + [1.0]
    return _solve(spec, rows, rhs)


def build_constrained_pair(q: int, **spec_kw) -> tuple[TestFunction, TestFunction]:
    """Two members of ``A_q`` with half-moments 0 and 1 and ``(q+1)``-moment 1.

    Their affine combinations ``(1-λ)φ₀ + λφ₁`` stay in ``A_q`` and have
    half-moment exactly ``λ``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    spec = MollifierSpec(q, **spec_kw)
    rows = [_moment_row(k) for k in range(q + 1)] + [half_moment, _moment_row(q + 1)]
    base = [1.0] + [0.0] * q
    phi0 = _solve(spec, rows, base + [0.0, 1.0])
    phi1 = _solve(spec, rows, base + [1.0, 1.0])
    return phi0, phi1


def moment_report(f: TestFunction, q_max: int) -> MomentReport:
    if not 1 <= q_max <= 12:
        raise ValueError("q_max must lie in 1..12")
    return MomentReport(
        mass=integrate(f),
        moments=[moment(f, k) for k in range(1, q_max + 1)],
        half_moment=half_moment(f),
        inner=inner_product(f, f),
    )
