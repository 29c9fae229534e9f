"""Representatives ``R(φ, x)``: the series P and Q, the named examples R0-R5,
the embeddings ι f and σ f, and finite-difference differentials in φ.

P and Q are evaluated term by term in log-magnitude space. ``e(v(φ))`` can
underflow and the scaled factors ``<S_εφ|S_εφ>^{γ_k}`` can overflow long
before the products themselves are out of range. The scaled evaluation
``R(S_εφ)`` therefore works from the functionals of the unscaled ``φ`` and
applies the exact scaling relations in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from colab.grid_fn import (
    TestFunction,
    evaluate_at,
    half_moment,
    inner_product,
    integrate,
    linear_combine,
    moment,
    scale,
)

TWO_PI = 2 * math.pi
A0_TOL = 1e-8


# -- scalar kernels -----------------------------------------------------------


def kernel_g(x):
    """``x / (1 + x²)``; bounded by 1/2, attained at ``x = ±1``."""
    return x / (1 + x * x)


def kernel_g_deriv(x, l: int):
    """``g^{(l)}(x)`` from ``g(x) = Re 1/(x - i)``, exact for every order."""
    if l < 0:
        raise ValueError("derivative order must be nonnegative")
    if l == 0:
        return kernel_g(x)
    return ((-1) ** l * math.factorial(l) / (complex(x, -1.0)) ** (l + 1)).real


def kernel_e(x):
    """``exp(-1/x)`` for ``x > 0``, else 0. Underflows to 0 below ``x ≈ 1/745``."""
    if x <= 0:
        return 0.0
    return math.exp(-1.0 / x)


def _smoothstep(t):
    """0 for ``t <= 0``, 1 for ``t >= 1``, smooth in between."""
    a, b = kernel_e(t), kernel_e(1.0 - t)
    return a / (a + b)


def cutoff_sigma(x):
    """Even smooth cutoff: 1 on ``|x| <= 1/2``, 0 on ``|x| >= 3/2``."""
    return _smoothstep(1.5 - abs(x))


def gamma_k(k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return k + 1.0 / k


def kernel_h(k: int, x):
    """``σ(x)·2g(x) + (1-σ(x))·sgn(x)·|2g(x)|^{γ_k}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = cutoff_sigma(x)
    two_g = 2.0 * kernel_g(x)
    if s == 1.0:
        return two_g
    sgn = (x > 0) - (x < 0)
    return s * two_g + (1.0 - s) * sgn * abs(two_g) ** gamma_k(k)


def _log_abs_2g_from_log(log_abs_x: float) -> float:
    """``log|2g(x)|`` given ``log|x|``, stable for huge and tiny ``|x|``."""
    if log_abs_x > 0:
        return math.log(2.0) - log_abs_x - math.log1p(math.exp(-2 * log_abs_x))
    return math.log(2.0) + log_abs_x - math.log1p(math.exp(2 * log_abs_x))


def _log_g_pos(log_x: float) -> float:
    """``log g(X)`` for ``X = exp(log_x) > 0``."""
    return _log_abs_2g_from_log(log_x) - math.log(2.0)


# -- value types --------------------------------------------------------------


@dataclass(frozen=True)
class ComplexValue:
    """A complex number held as ``(log|z|, arg z)``.

    ``phase`` is NaN when the argument is not representable (for example
    ``exp(i·exp(A))`` with ``exp(A)`` beyond double range); the magnitude
    stays exact in that case.
    """

    log_abs: float
    phase: float = 0.0

    @classmethod
    def from_complex(cls, z) -> "ComplexValue":
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))

    @property
    def abs(self) -> float:
        return math.exp(self.log_abs) if self.log_abs < 709.7 else math.inf

    @property
    def re(self) -> float:
        return self.abs * math.cos(self.phase)

    @property
    def im(self) -> float:
        return self.abs * math.sin(self.phase)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class SeriesTruncation:
    k_max: int = 25
    tail_tol: float = 1e-14

    def __post_init__(self):
        if self.k_max < 1 or self.tail_tol <= 0:
            raise ValueError("k_max must be >= 1 and tail_tol > 0")


@dataclass(frozen=True)
class SeriesResult:
    """Truncated series value in log space plus convergence bookkeeping."""

    log_abs: float
    sign: int
    converged: bool
    n_terms: int
    tail_bound: float  # estimated remainder relative to |sum|
    log_terms: tuple = field(default=(), repr=False)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * (math.exp(self.log_abs) if self.log_abs < 709.7 else math.inf)


@dataclass(frozen=True)
class Functionals:
    """The scalar functionals of an unscaled test function that R0-R5, P, Q need."""

    mass: float
    inner: float
    half: float
    moments: tuple  # moments[k] for k = 0..k_max
    at_zero: float

    @classmethod
    def of(cls, phi: TestFunction, k_max: int = 25) -> "Functionals":
        f = phi.to_float()
        return cls(
            mass=float(integrate(f)),
            inner=float(inner_product(f, f)),
            half=float(half_moment(f)),
            moments=tuple(float(moment(f, k)) for k in range(k_max + 1)),
            at_zero=float(evaluate_at(f, 0.0)),
        )

    @property
    def v(self) -> float:
        return math.sqrt(self.inner) * self.half


def _logsum(log_terms: Sequence[tuple[float, int]]):
    live = [(l, s) for l, s in log_terms if s != 0 and l > -math.inf]
    if not live:
        return -math.inf, 0
    top = max(l for l, _ in live)
    total = math.fsum(s * math.exp(l - top) for l, s in live)
    if total == 0:
        return -math.inf, 0
    return top + math.log(abs(total)), (1 if total > 0 else -1)


def _finish(terms: list[tuple[float, int]], truncation: SeriesTruncation) -> SeriesResult:
    log_abs, sign = _logsum(terms)
    tail = 0.0
    live = [l for l, s in terms if s != 0 and l > -math.inf]
    if len(live) >= 2 and sign != 0:
        last, prev = terms[-1][0], terms[-2][0]
        if last > -math.inf and prev > -math.inf:
            log_r = last - prev
            if log_r >= 0:
                tail = math.inf
            else:
                r = math.exp(log_r)
                tail = math.exp(last - log_abs) * r / (1 - r)
    return SeriesResult(
        log_abs=log_abs,
        sign=sign,
        converged=tail <= truncation.tail_tol,
        n_terms=len(terms),
        tail_bound=tail,
        log_terms=tuple(l for l, _ in terms),
    )


def _require_A0(fn: Functionals):
    if abs(fn.mass - 1.0) > A0_TOL:
        raise ValueError("requires A₀ membership")


def _as_functionals(phi, k_max) -> Functionals:
    if isinstance(phi, Functionals):
        if len(phi.moments) <= k_max:
            raise ValueError("not enough moments for the requested truncation")
        return phi
    return Functionals.of(phi, k_max)


def p_terms(fn: Functionals, eps: float, truncation: SeriesTruncation):
    """Log-magnitude and sign of each term of ``P(S_εφ)``."""
    if fn.half <= 0:
        return [(-math.inf, 0)] * truncation.k_max
    v = fn.v
    log_e = -1.0 / v
    log_a = math.log(fn.inner) - math.log(eps)
    out = []
    for k in range(1, truncation.k_max + 1):
        m = fn.moments[k]
        if m == 0:
            out.append((-math.inf, 0))
            continue
        gk = gamma_k(k)
        log_x = gk * log_a + log_e
        log_t = (
            -math.lgamma(k + 1)
            + _log_g_pos(log_x)
            + gk * log_a
            + k * math.log(eps)
            + math.log(abs(m))
        )
        out.append((log_t, 1 if m > 0 else -1))
    return out


def _log_abs_h(k: int, log_abs_y: float, y_sign: int) -> float:
    if log_abs_y < math.log(1.5):
        y = y_sign * math.exp(log_abs_y)
        h = kernel_h(k, y)
        return math.log(abs(h)) if h != 0 else -math.inf
    return gamma_k(k) * _log_abs_2g_from_log(log_abs_y)


def q_terms(fn: Functionals, eps: float, truncation: SeriesTruncation):
    """Log-magnitude and sign of each term of ``Q(S_εφ)``."""
    if fn.half == 0:
        return [(-math.inf, 0)] * truncation.k_max
    y_sign = 1 if fn.half > 0 else -1
    log_y = 1.5 * math.log(fn.inner) + math.log(abs(fn.half)) - math.log(eps)
    log_a = math.log(fn.inner) - math.log(eps)
    out = []
    for k in range(1, truncation.k_max + 1):
        m = fn.moments[k]
        if m == 0:
            out.append((-math.inf, 0))
            continue
        log_h = _log_abs_h(k, log_y, y_sign)
        log_t = (
            -math.lgamma(k + 1)
            + log_h
            + gamma_k(k) * log_a
            + k * math.log(eps)
            + math.log(abs(m))
        )
        out.append((log_t, y_sign * (1 if m > 0 else -1)))
    return out


def eval_P(
    phi, truncation: SeriesTruncation = SeriesTruncation(), x: float = 0.0, eps: float = 1.0
) -> SeriesResult:
    """``P(S_εφ, x)``; independent of ``x``. ``phi`` may be precomputed :class:`Functionals`."""
    fn = _as_functionals(phi, truncation.k_max)
    _require_A0(fn)
    return _finish(p_terms(fn, eps, truncation), truncation)


def eval_Q(
    phi, truncation: SeriesTruncation = SeriesTruncation(), x: float = 0.0, eps: float = 1.0
) -> SeriesResult:
    """``Q(S_εφ, x)``; independent of ``x``."""
    fn = _as_functionals(phi, truncation.k_max)
    _require_A0(fn)
    return _finish(q_terms(fn, eps, truncation), truncation)


# -- named examples -----------------------------------------------------------

NAMED = ("R0", "R1", "R2", "R3", "R4", "R5")


def _phase_of_exp(log_arg: float) -> float:
    """``exp(exp(log_arg)) mod 2π`` as a phase, NaN once it cannot be resolved."""
    if log_arg > math.log(2**52):
        return math.nan
    return math.fmod(math.exp(log_arg), TWO_PI)


def _real_value(log_abs: float, negative: bool) -> ComplexValue:
    return ComplexValue(log_abs, math.pi if negative else 0.0)


def eval_named(name: str, phi, x: float = 0.0, eps: float = 1.0) -> ComplexValue:
    """Closed-form R0..R5 at ``(S_εφ, x)``."""
    if name not in NAMED:
        raise ValueError(f"unknown representative {name!r}")
    fn = phi if isinstance(phi, Functionals) else Functionals.of(phi, 2)
    A = fn.inner / eps
    m1 = fn.moments[1] * eps
    p0 = fn.at_zero / eps
    if name == "R0":
        return ComplexValue(0.0, _phase_of_exp(math.log(A)))
    if name == "R1":
        if m1 == 0:
            return ComplexValue(-math.inf, 0.0)
        return _real_value(math.log(abs(m1)) + A, m1 < 0)
    if name == "R2":
        return ComplexValue(A * A * m1, 0.0)
    if name == "R3":
        return ComplexValue(p0 * p0 * m1, 0.0)
    if name == "R4":
        if m1 == 0:
            return ComplexValue(-math.inf, 0.0)
        return _real_value(math.log(abs(m1)) + p0, m1 < 0)
    # R5
    return ComplexValue(-A, _phase_of_exp(math.log(2 * A)))


# -- smooth data and the two embeddings ---------------------------------------


@dataclass(frozen=True)
class SmoothDatum:
    """Closed-form smooth function from a fixed registry.

    kinds: ``sin``, ``cos``, ``poly`` (coefficients, lowest degree first,
    degree <= 6), ``gauss`` (``exp(-x²)``), ``const``.
    """

    kind: str
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("sin", "cos", "poly", "gauss", "const"):
            raise ValueError(f"unknown smooth datum {self.kind!r}")
        if self.kind == "poly" and not 1 <= len(self.coeffs) <= 7:
            raise ValueError("polynomial datum must have degree 0..6")
        if self.kind == "const" and len(self.coeffs) != 1:
            raise ValueError("const datum takes one coefficient")

    def __call__(self, x):
        if isinstance(x, np.ndarray) and x.dtype == object or isinstance(x, mpmath.mpf):
            return self._eval(x, mp=True)
        return self._eval(x, mp=False)

    def _eval(self, x, mp):
        lib = _MP if mp else np
        if self.kind == "sin":
            return lib.sin(x)
        if self.kind == "cos":
            return lib.cos(x)
        if self.kind == "gauss":
            return lib.exp(-x * x)
        if self.kind == "const":
            return x * 0 + self.coeffs[0]
        acc = x * 0 + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def increment(self, x, h):
        """``f(x + h) - f(x)`` arranged to avoid cancellation where possible."""
        mp = isinstance(h, np.ndarray) and h.dtype == object
        lib = _MP if mp else np
        if self.kind == "sin":
            return 2 * lib.cos(x + h / 2) * lib.sin(h / 2)
        if self.kind == "cos":
            return -2 * lib.sin(x + h / 2) * lib.sin(h / 2)
        if self.kind == "gauss":
            return lib.exp(-x * x) * lib.expm1(-2 * x * h - h * h)
        if self.kind == "const":
            return h * 0
        return self._eval(x + h, mp) - self._eval(x * (h * 0 + 1), mp)


class _MP:
    """numpy-like elementwise wrappers around mpmath for object arrays."""

    @staticmethod
    def _map(fn, x):
        if isinstance(x, np.ndarray):
            return np.array([fn(v) for v in x], dtype=object)
        return fn(x)

    sin = staticmethod(lambda x: _MP._map(mpmath.sin, x))
    cos = staticmethod(lambda x: _MP._map(mpmath.cos, x))
    exp = staticmethod(lambda x: _MP._map(mpmath.exp, x))
    expm1 = staticmethod(lambda x: _MP._map(mpmath.expm1, x))


def eval_iota(datum: SmoothDatum, phi: TestFunction, x: float = 0.0, eps: float = 1.0):
    """``(ι f)(S_εφ, x) = ∫ f(x + εz) φ(z) dz``."""
    z = phi.grid
    return phi.dx * _fsum(datum(x + eps * z) * phi.samples)


def eval_sigma(datum: SmoothDatum, phi: TestFunction | None = None, x: float = 0.0, eps: float = 1.0):
    """``(σ f)(φ, x) = f(x)``; ignores the test function."""
    return datum(x)


def eval_iota_minus_sigma(datum: SmoothDatum, phi: TestFunction, x: float, eps: float):
    """``∫ [f(x + εz) - f(x)] φ(z) dz`` by trapezoid quadrature on φ's grid.

    With an mpmath-sampled ``phi`` the whole computation runs in the current
    ``mpmath.mp`` precision.
    """
    z = phi.grid
    if phi.precise:
        x, eps = mpmath.mpf(x), mpmath.mpf(eps)
    return phi.dx * _fsum(datum.increment(x, eps * z) * phi.samples)


def _fsum(a):
    if a.dtype == object:
        return mpmath.fsum(a)
    return math.fsum(a)


# -- representatives as objects -----------------------------------------------


@dataclass(frozen=True)
class Representative:
    name: str
    truncation: SeriesTruncation = SeriesTruncation()
    smooth_datum: SmoothDatum | None = None

    def __post_init__(self):
        if self.name not in ("P", "Q", "iota", "sigma") + NAMED:
            raise ValueError(f"unknown representative {self.name!r}")
        if self.name in ("iota", "sigma") and self.smooth_datum is None:
            raise ValueError(f"{self.name} requires a smooth datum")

    def evaluate(self, phi, x: float = 0.0, eps: float = 1.0):
        """Value at ``(S_εφ, x)``; result carries ``log_abs`` for order fits."""
        if self.name == "P":
            return eval_P(phi, self.truncation, x, eps)
        if self.name == "Q":
            return eval_Q(phi, self.truncation, x, eps)
        if self.name == "iota":
            return ComplexValue.from_complex(float(eval_iota(self.smooth_datum, phi, x, eps)))
        if self.name == "sigma":
            return ComplexValue.from_complex(float(eval_sigma(self.smooth_datum, phi, x, eps)))
        return eval_named(self.name, phi, x, eps)

    def scalar(self, phi, x: float = 0.0, eps: float = 1.0):
        """Plain numeric value (float for real representatives, complex for R0/R5)."""
        r = self.evaluate(phi, x, eps)
        if isinstance(r, SeriesResult):
            return r.value
        if self.name in ("R0", "R5"):
            return r.value
        return r.re


# -- differentials ------------------------------------------------------------

FD_STEP = 1e-4


def _norm(psi: TestFunction) -> float:
    return math.sqrt(float(inner_product(psi, psi)))


def directional_differential_fd(
    R: Representative | Callable,
    eps: float,
    phi: TestFunction,
    x: float,
    directions: Sequence[TestFunction],
) -> float:
    """``d^k R_ε(φ, x)(ψ₁, …, ψ_k)`` by mixed central differences.

    Each direction gets the step ``1e-4 / ||ψ_i||``; one Richardson level
    (``h`` and ``h/2``) removes the leading ``O(h²)`` error.
    """
    k = len(directions)
    if k > 3:
        raise ValueError("differential order must be <= 3")
    for psi in directions:
        if abs(float(integrate(psi))) > A0_TOL:
            raise ValueError("direction must have zero mass")

    if isinstance(R, Representative):
        def f(p):
            return R.scalar(p, x, eps)
    else:
        def f(p):
            return R(scale(p, eps) if eps != 1.0 else p, x)

    if k == 0:
        return f(phi)
    steps = [FD_STEP / _norm(psi) for psi in directions]

    def mixed(h_scale):
        hs = [h * h_scale for h in steps]
        total = 0.0
        for signs in np.ndindex(*(2,) * k):
            sg = [1 if s == 0 else -1 for s in signs]
            coeffs = [1.0] + [s * h for s, h in zip(sg, hs)]
            total += math.prod(sg) * f(linear_combine(coeffs, [phi, *directions]))
        return total / math.prod(2 * h for h in hs)

    d1, d2 = mixed(1.0), mixed(0.5)
    return (4 * d2 - d1) / 3
