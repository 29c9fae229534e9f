import math

import numpy as np
import pytest

from colab.asymptotics import EpsGrid
from colab.grid_fn import half_moment, inner_product, integrate, linear_combine, moment
from colab.mollifier import (
    MollifierSpec,
    build_bump,
    build_constrained_pair,
    build_delta_moment_companion,
    build_in_Aq,
)
from colab.test_objects import (
    constant_path,
    damped_path,
    eval_path,
    find_lambda0,
    lambda_family_path,
    lambda_witness,
    moment_order_report,
    path_x_derivative,
    phi1_path,
    phi2_path,
    sine_shift_path,
    singleton_kq_class,
    witness_eps,
)

K = list(np.linspace(-1.0, 1.0, 21))


def test_constant_path_is_bitwise_constant():
    phi = build_in_Aq(MollifierSpec(2))
    p = constant_path(phi)
    assert eval_path(p, 0.3, 1.7) is phi
    assert not np.any(path_x_derivative(p, 0.3, 1.7, 1).samples)
    with pytest.raises(ValueError):
        eval_path(p, 0.0, 0.0)
    with pytest.raises(ValueError):
        eval_path(p, 1.5, 0.0)


def test_phi1_values():
    p = phi1_path(2)
    phi = p.params["phi"]
    assert np.array_equal(eval_path(p, 0.1, 0.0).samples, phi.samples)
    m2 = float(moment(eval_path(p, 0.1, 1.0), 2))
    assert m2 == pytest.approx(0.01 * math.sin(abs(math.log(0.1))), rel=1e-9)


def test_phi1_derivative_ratio_is_abs_log():
    p = phi1_path(2)
    for eps in EpsGrid().points():
        m = float(moment(path_x_derivative(p, float(eps), 0.0, 1), 2))
        assert m / (eps**2 * abs(math.log(eps))) == pytest.approx(1.0, abs=1e-6)


def test_phi1_analytic_derivative_matches_finite_difference():
    p = phi1_path(2)
    from colab.test_objects import _fd_x

    a = path_x_derivative(p, 0.05, 0.4, 1)
    b = _fd_x(p, 0.05, 0.4, 1, 1e-3)
    assert np.max(np.abs(a.samples - b.samples)) <= 1e-9 * np.max(np.abs(a.samples)) + 1e-12


def test_phi2_locally_constant_on_plateau():
    p = phi2_path(K, 2)
    for x in (-1.0, 0.0, 1.0):
        d = path_x_derivative(p, 0.1, x, 1)
        assert np.max(np.abs(d.samples)) <= 1e-12
    assert abs(float(moment(eval_path(p, 0.1, 4.5), 1)) - 0.5) < 1e-12


def test_fd_fallback_limits():
    with pytest.raises(ValueError):
        path_x_derivative(phi2_path(K, 2), 0.1, 0.0, 3)


@pytest.mark.parametrize(
    "path",
    [phi1_path(2), phi2_path(K, 2), sine_shift_path(), constant_path(build_bump())],
    ids=["phi1", "phi2", "sine", "constant"],
)
def test_unit_mass_everywhere(path):
    for eps in (1.0, 0.1, 1e-4):
        for x in (-3.0, 0.0, 0.8, 2.0):
            assert abs(float(integrate(eval_path(path, eps, x))) - 1) <= 1e-8


def test_sine_shift_translates():
    p = sine_shift_path()
    f = eval_path(p, 0.5, math.pi / 2)
    assert float(moment(f, 1)) == pytest.approx(-1.0, abs=1e-12)


def test_lambda_witness_half_moment_and_limit():
    for lam in (0.5, 0.1, 0.01):
        e, f = lambda_witness(2, lam)
        assert half_moment(f) == pytest.approx(lam, abs=1e-8)
        assert e > 0
    assert witness_eps(2, 1e-3) < 1e-40 < witness_eps(2, 1e-2)
    with pytest.raises(ValueError):
        lambda_witness(2, 0.0)
    with pytest.raises(ValueError):
        lambda_witness(2, 1.5)


def test_q_variant_eps_from_high_resolution_oracle():
    phi0, phi1 = build_constrained_pair(2, n_points=8192)
    f = linear_combine([0.5, 0.5], [phi0, phi1])
    ref = float(inner_product(f, f)) ** 1.5 * 0.5
    assert witness_eps(2, 0.5, "Q") == pytest.approx(ref, rel=1e-8)


def test_eps_lambda_increasing_below_lambda0():
    lam0 = find_lambda0(2)
    assert witness_eps(2, lam0) < 1
    lams = np.linspace(lam0 / 20, lam0, 20)
    eps = [witness_eps(2, float(l)) for l in lams]
    assert all(b > a for a, b in zip(eps, eps[1:]))


def test_lambda_family_path_hits_eps():
    p = lambda_family_path(2)
    lam_of = p.params["lambda_of"]
    for eps in (1e-2, 1e-5):
        assert witness_eps(2, lam_of(eps)) == pytest.approx(eps, rel=1e-6)


def _implications_hold(v):
    if v["A_g_inf"]:
        assert v["A_l_inf"] and v["A_g"]
    if v["A_l_inf"] or v["A_g"]:
        assert v["A_l"]


def test_constant_path_type_V():
    r = moment_order_report(constant_path(build_in_Aq(MollifierSpec(2))), K, 2, 1)
    assert r.verdicts["V"] and r.verdicts["A_g_inf"]
    assert all(v.below_floor for v in r.fits.values())
    _implications_hold(r.verdicts)


def test_phi1_type_gap():
    r = moment_order_report(phi1_path(2), K, 2, 1)
    assert r.verdicts["A_g"] and not r.verdicts["A_g_inf"]
    assert r.slopes["alpha=2,beta=0,global"] >= 1.9
    assert 1.0 <= r.slopes["alpha=2,beta=1,global"] < 1.9
    _implications_hold(r.verdicts)


def test_phi2_local_but_not_global():
    r = moment_order_report(phi2_path(K, 2), K, 2, 1)
    assert r.verdicts["A_l_inf"] and r.verdicts["A_l"]
    assert not r.verdicts["A_g"]
    _implications_hold(r.verdicts)


def test_report_requires_K():
    with pytest.raises(ValueError):
        moment_order_report(phi1_path(2), [], 2, 0)


def test_singleton_classes():
    phi = build_in_Aq(MollifierSpec(2))
    zero_psi = linear_combine([1.0, -1.0], [phi, build_in_Aq(MollifierSpec(4))])
    ok, _ = singleton_kq_class([constant_path(phi), constant_path(zero_psi)], 2)
    assert ok
    psi = build_delta_moment_companion(2)
    ok, rep = singleton_kq_class([damped_path(phi, psi, 2), constant_path(zero_psi)], 2)
    assert ok
    assert rep[0]["moments"][2]["fit"]["slope"] == pytest.approx(2.0, abs=0.05)
    first = build_delta_moment_companion(1)
    ok, _ = singleton_kq_class([constant_path(phi), constant_path(first)], 2)
    assert not ok
    with pytest.raises(ValueError):
        singleton_kq_class([constant_path(first)], 2)
