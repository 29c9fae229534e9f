"""Diffeomorphism action on (test function, point) pairs and on representatives.

In one dimension ``μ̄_ε(φ̃, x̃) = (ψ, μx̃)`` with

    ψ(ξ) = φ̃(η(ξ)) · |(μ⁻¹)'(εξ + μx̃)|,    η(ξ) = (μ⁻¹(εξ + μx̃) - x̃) / ε.

Substituting ``ξ = (μ(x̃ + εη) - μx̃)/ε`` turns every integral against ψ into
an integral against φ̃ on φ̃'s own grid, so moments and the functionals fed
to representatives are computed without any resampling error. Each map
therefore carries ``increment(x, h) = μ(x+h) - μ(x)`` in a form that does
not cancel for small ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from colab.asymptotics import EpsGrid
from colab.grid_fn import TestFunction, evaluate_at, half_moment
from colab.mollifier import build_bump
from colab.representatives import (
    ComplexValue,
    Functionals,
    Representative,
    SeriesResult,
    eval_named,
    eval_P,
    eval_Q,
)
from colab.test_objects import (
    NOISE_FACTOR,
    TestObjectPath,
    TypeReport,
    sine_shift_path,
    type_report_from_table,
)

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 200
PAD_CELLS = 2
K_MAX = 25


class ChartError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Diffeomorphism:
    name: str
    forward: Callable
    inverse: Callable
    forward_deriv: Callable
    increment: Callable  # (x, h) -> μ(x + h) - μ(x)
    inverse_increment: Callable  # (y, k) -> μ⁻¹(y + k) - μ⁻¹(y)
    domain: tuple = (-math.inf, math.inf)
    params: dict = field(default_factory=dict)

    def inverse_deriv(self, y):
        return 1.0 / self.forward_deriv(self.inverse(y))

    def in_domain(self, x) -> bool:
        lo, hi = self.domain
        return bool(np.all((np.asarray(x) > lo) & (np.asarray(x) < hi)))


def identity() -> Diffeomorphism:
    return Diffeomorphism(
        "identity",
        forward=lambda x: x,
        inverse=lambda y: y,
        forward_deriv=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        increment=lambda x, h: h,
        inverse_increment=lambda y, k: k,
    )


def affine(a: float, b: float) -> Diffeomorphism:
    if not a > 0:
        raise ValueError("affine map needs a > 0")
    return Diffeomorphism(
        f"affine({a!r},{b!r})",
        forward=lambda x: a * x + b,
        inverse=lambda y: (y - b) / a,
        forward_deriv=lambda x: a * np.ones_like(np.asarray(x, dtype=float)),
        increment=lambda x, h: a * h,
        inverse_increment=lambda y, k: k / a,
        params={"a": a, "b": b},
    )


def _exp_shift_solve(x, k):
    """Solve ``t + e^x expm1(t) = k`` for t by Newton with a bisection guard.

    The left side f is increasing, convex and satisfies ``f(t) >= t(1 + e^x)``,
    so Newton started at ``k/(1 + e^x)`` descends monotonically onto the
    root. Residuals are driven below ``1e-14 · |k|``.
    """
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    x, k = np.broadcast_arrays(x, k)
    ex = np.exp(x)
    t = k / (1.0 + ex)
    lo = np.minimum(k, 0.0) - 1.0
    hi = np.maximum(t, 0.0) + 1.0
    tol = NEWTON_TOL * np.abs(k) + 1e-300
    for _ in range(NEWTON_MAX_ITER):
        r = t + ex * np.expm1(t) - k
        if np.all(np.abs(r) <= tol):
            break
        lo = np.where(r < 0, t, lo)
        hi = np.where(r > 0, t, hi)
        step = r / (1.0 + ex * np.exp(t))
        t_new = t - step
        outside = (t_new <= lo) | (t_new >= hi) | ~np.isfinite(t_new)
        t = np.where(outside, 0.5 * (lo + hi), t_new)
    else:
        raise ArithmeticError("exp_shift inverse did not converge")
    return t


def exp_shift(domain: tuple = (-math.inf, math.inf)) -> Diffeomorphism:
    """``μ(x) = x + e^x``, a diffeomorphism of ℝ onto ℝ."""

    def inverse(y):
        y = np.asarray(y, dtype=float)
        # μ(0) = 1, so μ⁻¹(y) = 0 + (μ⁻¹(1 + (y - 1)) - μ⁻¹(1))
        out = _exp_shift_solve(0.0, y - 1.0)
        return float(out) if out.ndim == 0 else out

    return Diffeomorphism(
        "exp_shift",
        forward=lambda x: x + np.exp(x),
        inverse=inverse,
        forward_deriv=lambda x: 1.0 + np.exp(x),
        increment=lambda x, h: h + np.exp(x) * np.expm1(h),
        inverse_increment=lambda y, k: _exp_shift_solve(inverse(y), k),
        domain=domain,
    )


def compose(first: Diffeomorphism, second: Diffeomorphism) -> Diffeomorphism:
    """``second ∘ first``."""
    return Diffeomorphism(
        f"{second.name}∘{first.name}",
        forward=lambda x: second.forward(first.forward(x)),
        inverse=lambda y: first.inverse(second.inverse(y)),
        forward_deriv=lambda x: second.forward_deriv(first.forward(x)) * first.forward_deriv(x),
        increment=lambda x, h: second.increment(first.forward(x), first.increment(x, h)),
        inverse_increment=lambda y, k: first.inverse_increment(
            second.inverse(y), second.inverse_increment(y, k)
        ),
        domain=first.domain,
        params={"first": first.name, "second": second.name},
    )


def registry() -> dict[str, Diffeomorphism]:
    return {"identity": identity(), "affine": affine(2.0, 0.5), "exp_shift": exp_shift()}


# -- μ̄_ε on test functions ----------------------------------------------------


def _check_chart(mu: Diffeomorphism, phi_t: TestFunction, x_t: float, eps: float):
    if not eps > 0:
        raise ValueError("eps must be positive")
    ends = np.array([x_t + eps * phi_t.lo, x_t + eps * phi_t.hi])
    if not mu.in_domain(ends):
        raise ChartError("scale too large for chart")


def _xi_of_eta(mu, x_t, eps, eta):
    """``(μ(x̃ + εη) - μx̃)/ε``."""
    return mu.increment(x_t, eps * eta) / eps


def mu_bar_eps(phi_t: TestFunction, x_t: float, eps: float, mu: Diffeomorphism) -> TestFunction:
    """First component of ``μ̄_ε(φ̃, x̃)``, resampled on the mapped support."""
    _check_chart(mu, phi_t, x_t, eps)
    phi_t = phi_t.to_float()
    lo = float(_xi_of_eta(mu, x_t, eps, phi_t.lo))
    hi = float(_xi_of_eta(mu, x_t, eps, phi_t.hi))
    n = phi_t.n_points
    pad = PAD_CELLS * (hi - lo) / (n - 1 - 2 * PAD_CELLS)
    lo, hi = lo - pad, hi + pad
    xi = np.linspace(lo, hi, n)
    y0 = float(mu.forward(x_t))
    eta = np.asarray(mu.inverse_increment(y0, eps * xi), dtype=float) / eps
    jac = 1.0 / np.asarray(mu.forward_deriv(x_t + eps * eta), dtype=float)
    vals = np.asarray(evaluate_at(phi_t, eta), dtype=float) * jac
    vals[0] = vals[-1] = 0.0
    return TestFunction(lo, hi, vals)


def transformed_moment(
    phi_t: TestFunction, x_t: float, eps: float, mu: Diffeomorphism, alpha: int
) -> tuple[float, float]:
    """``<ξ^α, pr₁ μ̄_ε(φ̃, x̃)>`` and its rounding-noise scale, on φ̃'s grid."""
    _check_chart(mu, phi_t, x_t, eps)
    f = phi_t.to_float()
    w = np.asarray(_xi_of_eta(mu, x_t, eps, f.grid), dtype=float) ** alpha * f.samples
    return f.dx * math.fsum(w), NOISE_FACTOR * f.dx * float(np.sum(np.abs(w)))


def transformed_functionals(
    phi_t: TestFunction, x_t: float, eps: float, mu: Diffeomorphism, k_max: int = K_MAX
) -> Functionals:
    """Unscaled functionals of ``ψ = pr₁ μ̄_ε(φ̃, x̃)``.

    ``∫ψ² = ∫φ̃(η)²/μ'(x̃+εη) dη``; the half-moment uses
    ``|ξ|^{1/2} = |η|^{1/2} (ξ/η)^{1/2}`` with a smooth ratio ``ξ/η``.
    """
    _check_chart(mu, phi_t, x_t, eps)
    f = phi_t.to_float()
    eta = f.grid
    xi = np.asarray(_xi_of_eta(mu, x_t, eps, eta), dtype=float)
    d0 = float(np.asarray(mu.forward_deriv(x_t)))
    ratio = np.empty_like(eta)
    nz = eta != 0
    ratio[nz] = xi[nz] / eta[nz]
    ratio[~nz] = d0
    weighted = TestFunction(f.lo, f.hi, f.samples * np.sqrt(ratio))
    jac = 1.0 / np.asarray(mu.forward_deriv(x_t + eps * eta), dtype=float)
    dx = f.dx
    return Functionals(
        mass=dx * math.fsum(f.samples),
        inner=dx * math.fsum(f.samples**2 * jac),
        half=float(half_moment(weighted)),
        moments=tuple(dx * math.fsum(xi**k * f.samples) for k in range(k_max + 1)),
        at_zero=float(evaluate_at(f, 0.0)) / d0,
    )


def pullback_eval(
    R: Representative, mu: Diffeomorphism, phi_t: TestFunction, x_t: float, eps: float
):
    """``(μ̂_ε R)(φ̃, x̃) = R(S_ε ψ, μx̃)`` with ``(ψ, μx̃) = μ̄_ε(φ̃, x̃)``."""
    y = float(mu.forward(x_t))
    if R.name == "sigma":
        return ComplexValue.from_complex(float(R.smooth_datum(y)))
    if R.name == "iota":
        _check_chart(mu, phi_t, x_t, eps)
        f = phi_t.to_float()
        pts = x_t + eps * f.grid
        vals = np.asarray(R.smooth_datum(np.asarray(mu.forward(pts), dtype=float)))
        return ComplexValue.from_complex(f.dx * math.fsum(vals * f.samples))
    fn = transformed_functionals(phi_t, x_t, eps, mu, R.truncation.k_max)
    if R.name == "P":
        return eval_P(fn, R.truncation, y, eps)
    if R.name == "Q":
        return eval_Q(fn, R.truncation, y, eps)
    return eval_named(R.name, fn, y, eps)


def log_abs(value) -> float:
    if isinstance(value, SeriesResult):
        return value.log_abs
    return value.log_abs


# -- induced paths ------------------------------------------------------------


def transformed_path(mu: Diffeomorphism, phi_t: TestFunction) -> TestObjectPath:
    """``(ε, x) ↦ pr₁ μ̄_ε(φ̃, μ⁻¹x)``."""
    return TestObjectPath(
        "eps_x",
        f"transformed[{mu.name}]",
        lambda eps, x: mu_bar_eps(phi_t, float(mu.inverse(x)), eps, mu),
        None,
        0,
        {"mu": mu.name},
    )


def transformed_moment_orders(
    mu: Diffeomorphism,
    phi_t: TestFunction,
    x_t_set: Sequence[float],
    q: int,
    grid: EpsGrid = EpsGrid(),
) -> TypeReport:
    """Moment orders (β = 0) of the induced path on ``K = μ(x̃_set)``.

    The probe set is the same for the local and global verdicts.
    """
    if len(x_t_set) == 0:
        raise ValueError("x_t_set must be nonempty")
    eps_pts = grid.points()
    table = np.zeros((len(eps_pts), len(x_t_set), 1, q))
    for i, e in enumerate(eps_pts):
        for j, xt in enumerate(x_t_set):
            for a in range(1, q + 1):
                m, noise = transformed_moment(phi_t, float(xt), float(e), mu, a)
                table[i, j, 0, a - 1] = 0.0 if abs(m) <= noise else abs(m)
    probe = {
        "x_tilde": [float(x) for x in x_t_set],
        "K": [float(mu.forward(x)) for x in x_t_set],
        "beta_max": 0,
        "path": f"transformed[{mu.name}]",
    }
    return type_report_from_table(table, len(x_t_set), q, grid, probe)


# -- the sine-shift obstruction -----------------------------------------------


def sine_shift_obstruction(
    psi: TestFunction | None = None,
    candidates: dict[str, Diffeomorphism] | None = None,
    trials: Sequence[TestFunction] | None = None,
) -> dict:
    """Check the two point relations forced on any ``(φ̃, μ)`` reproducing ψ(ξ + sin x).

    Relation 1 (ξ = 0, x = 0) reads ``ψ(0) = φ̃(0)|(μ⁻¹)'(μ(0))|`` and forces
    ``φ̃(0) ≠ 0``; relation 2 (x = π/2) reads ``ψ(1) = φ̃(0)|(μ⁻¹)'(μ(π/2))|``
    and forces ``φ̃(0) = 0``. Only the sampled candidates are examined.
    """
    psi = psi if psi is not None else build_bump(0.0, 1.0)
    candidates = candidates if candidates is not None else registry()
    trials = list(trials) if trials is not None else [psi]
    path = sine_shift_path(psi)
    rel1 = float(evaluate_at(path.at(1.0, 0.0), 0.0))
    rel2 = float(evaluate_at(path.at(1.0, math.pi / 2), 0.0))
    if rel1 == 0:
        raise ValueError("requires psi(0) != 0")
    out = {"relation1_lhs": rel1, "relation2_lhs": rel2, "candidates": {}}
    all_flagged = True
    for name, mu in candidates.items():
        f1 = abs(float(mu.inverse_deriv(mu.forward(0.0))))
        f2 = abs(float(mu.inverse_deriv(mu.forward(math.pi / 2))))
        need1 = rel1 / f1  # φ̃(0) demanded by relation 1
        need2 = rel2 / f2  # φ̃(0) demanded by relation 2
        flagged = need1 != 0 and need2 == 0
        all_flagged &= flagged
        out["candidates"][name] = {
            "jacobian_at_0": f1,
            "jacobian_at_half_pi": f2,
            "phi_tilde_0_from_relation1": need1,
            "phi_tilde_0_from_relation2": need2,
            "trial_residuals": [
                [abs(float(evaluate_at(t, 0.0)) * f1 - rel1),
                 abs(float(evaluate_at(t, 0.0)) * f2 - rel2)]
                for t in trials
            ],
            "contradiction": flagged,
        }
    out["contradiction_for_all"] = all_flagged
    out["scope"] = "sampled registry only"
    return out
