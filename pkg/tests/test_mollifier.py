import pytest

from colab.grid_fn import half_moment, integrate, moment
from colab.mollifier import (
    MollifierSpec,
    RankDeficientError,
    _moment_row,
    _solve,
    build_constrained_pair,
    build_delta_moment_companion,
    build_in_Aq,
    moment_report,
)


@pytest.mark.parametrize("q", range(1, 9))
def test_in_Aq(q):
    phi = build_in_Aq(MollifierSpec(q))
    assert abs(integrate(phi) - 1) <= 1e-12
    assert max(abs(moment(phi, k)) for k in range(1, q + 1)) <= 1e-10
    # odd moments vanish by symmetry, so the first surviving one has even order
    first = q + 1 if q % 2 else q + 2
    assert abs(moment(phi, first)) > 1e-8


@pytest.mark.parametrize("q", [2, 3])
def test_constrained_pair(q):
    phi0, phi1 = build_constrained_pair(q)
    for phi, half in ((phi0, 0.0), (phi1, 1.0)):
        assert abs(integrate(phi) - 1) <= 1e-8
        for k in range(1, q + 1):
            assert abs(moment(phi, k)) <= 1e-8
        assert abs(half_moment(phi) - half) <= 1e-8
        assert abs(moment(phi, q + 1) - 1) <= 1e-8


def test_pair_is_affine_in_half_moment():
    phi0, phi1 = build_constrained_pair(2)
    from colab.grid_fn import linear_combine

    for lam in (0.1, 0.37, 0.9):
        f = linear_combine([1 - lam, lam], [phi0, phi1])
        assert half_moment(f) == pytest.approx(lam, abs=1e-9)


def test_companion_moments():
    psi = build_delta_moment_companion(3)
    assert abs(integrate(psi)) <= 1e-12
    assert [round(float(moment(psi, k)), 10) for k in (1, 2, 3)] == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        build_delta_moment_companion(0)


def test_spec_validation():
    with pytest.raises(ValueError):
        MollifierSpec(-1)
    with pytest.raises(ValueError):
        MollifierSpec(2, basis_size=4)
    assert MollifierSpec(3).basis_size == 9
    assert MollifierSpec(1, support_radius=0.5).window == (-1.0, 1.0)


def test_rank_deficient():
    spec = MollifierSpec(1, basis_size=4)
    rows = [_moment_row(k) for k in range(5)]
    with pytest.raises(RankDeficientError, match="rank-deficient"):
        _solve(spec, rows, [1, 0, 0, 0, 0])


def test_precise_build_reaches_mp_accuracy():
    import mpmath

    with mpmath.workdps(50):
        phi = build_in_Aq(MollifierSpec(4, n_points=256, precise=True))
        assert abs(integrate(phi) - 1) < mpmath.mpf(10) ** -40
        assert max(abs(moment(phi, k)) for k in range(1, 5)) < mpmath.mpf(10) ** -40


def test_moment_report_range():
    phi = build_in_Aq(MollifierSpec(2))
    rep = moment_report(phi, 4)
    assert len(rep.moments) == 4 and rep.inner > 0
    with pytest.raises(ValueError):
        moment_report(phi, 13)
