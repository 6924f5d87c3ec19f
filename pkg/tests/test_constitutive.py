"""Material-law tests against high-precision reference values.

The golden numbers below were produced offline with a 50-digit
arbitrary-precision evaluation of the closed forms and of the defining
integrals (notes/oracle_constitutive.py in the workspace), then frozen
here.  In-test cross-checks use composite Simpson quadrature, which shares
no code with the cached Gauss-Legendre tables.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracflow.constitutive import (
    FRACTURE_SOIL,
    MATRIX_SOIL,
    LinearModel,
    TableRangeError,
    VanGenuchtenModel,
    VanGenuchtenParams,
)


@pytest.fixture(scope="module")
def matrix_model():
    return VanGenuchtenModel(MATRIX_SOIL)


@pytest.fixture(scope="module")
def fracture_model():
    return VanGenuchtenModel(FRACTURE_SOIL)


def simpson(fn, a, b, n=20001):
    xs = np.linspace(a, b, n)
    return float(np.trapz(fn(xs), xs)) if n < 3 else float(
        (xs[1] - xs[0]) / 3.0 * (fn(xs[0]) + fn(xs[-1])
                                 + 4.0 * fn(xs[1:-1:2]).sum()
                                 + 2.0 * fn(xs[2:-1:2]).sum()))


# -- parameter validation ----------------------------------------------------


def test_params_reject_nonphysical_values():
    with pytest.raises(ValueError):
        VanGenuchtenParams(alpha=0.0, n=2.0, theta_S=0.4, theta_R=0.1, K_S=1e-6)
    with pytest.raises(ValueError):
        VanGenuchtenParams(alpha=0.4, n=1.0, theta_S=0.4, theta_R=0.1, K_S=1e-6)
    with pytest.raises(ValueError):
        VanGenuchtenParams(alpha=0.4, n=2.0, theta_S=0.1, theta_R=0.4, K_S=1e-6)
    with pytest.raises(ValueError):
        VanGenuchtenParams(alpha=0.4, n=2.0, theta_S=0.4, theta_R=0.1, K_S=0.0)


def test_mualem_exponent():
    assert MATRIX_SOIL.m == pytest.approx(1.0 - 1.0 / 2.06, rel=1e-15)
    assert FRACTURE_SOIL.m == pytest.approx(1.0 - 1.0 / 7.09, rel=1e-15)


def test_bundled_material_ratios():
    # these ratios define the default proportionality constants of the
    # two-material problem
    assert FRACTURE_SOIL.K_S / MATRIX_SOIL.K_S == pytest.approx(61.0975, rel=1e-4)
    assert FRACTURE_SOIL.theta_S / MATRIX_SOIL.theta_S == pytest.approx(
        0.469 / 0.396, rel=1e-15)


# -- closed forms against frozen references ----------------------------------


def test_saturation_matrix(matrix_model):
    assert matrix_model.saturation(-1.0) == pytest.approx(
        0.94808323252704865722, rel=1e-12)
    assert matrix_model.saturation(-3.0) == pytest.approx(
        0.73739742061202367722, rel=1e-12)
    assert matrix_model.saturation(-10.0) == pytest.approx(
        0.4722114179552583751, rel=1e-12)


def test_saturation_fracture(fracture_model):
    assert fracture_model.saturation(-1.0) == pytest.approx(
        0.9962748189079326591, rel=1e-12)
    assert fracture_model.saturation(-3.0) == pytest.approx(
        0.45315221801601764647, rel=1e-12)
    assert fracture_model.saturation(-10.0) == pytest.approx(
        0.40515020899201468001, rel=1e-12)


def test_storage_derivative(matrix_model, fracture_model):
    assert matrix_model.d_saturation(-1.0) == pytest.approx(
        0.095035799405808337979, rel=1e-12)
    assert matrix_model.d_saturation(-3.0) == pytest.approx(
        0.089110913599743413293, rel=1e-12)
    assert matrix_model.d_saturation(-10.0) == pytest.approx(
        0.014257957730079232029, rel=1e-12)
    assert fracture_model.d_saturation(-1.0) == pytest.approx(
        0.026232626379249270179, rel=1e-12)
    assert fracture_model.d_saturation(-3.0) == pytest.approx(
        0.092302289611452267443, rel=1e-12)
    assert fracture_model.d_saturation(-10.0) == pytest.approx(
        0.000020059143555169402207, rel=1e-12)


def test_storage_derivative_matches_finite_difference(matrix_model):
    h = 1e-6
    for psi in (-0.5, -2.0, -7.5, -25.0):
        fd = (matrix_model.saturation(psi + h)
              - matrix_model.saturation(psi - h)) / (2.0 * h)
        assert matrix_model.d_saturation(psi) == pytest.approx(fd, rel=1e-7)


def test_rel_conductivity_from_head(matrix_model, fracture_model):
    assert matrix_model.rel_conductivity(psi=-1.0) == pytest.approx(
        0.3805257773214421345, rel=1e-12)
    assert matrix_model.rel_conductivity(psi=-3.0) == pytest.approx(
        0.037002287155653218524, rel=1e-12)
    assert matrix_model.rel_conductivity(psi=-10.0) == pytest.approx(
        0.00029639067835056163304, rel=1e-12)
    assert fracture_model.rel_conductivity(psi=-1.0) == pytest.approx(
        0.96799147038537016119, rel=1e-12)
    assert fracture_model.rel_conductivity(psi=-3.0) == pytest.approx(
        0.00060281394294687845958, rel=1e-12)
    assert fracture_model.rel_conductivity(psi=-10.0) == pytest.approx(
        6.7324445380281893952e-13, rel=1e-10)


def test_rel_conductivity_two_routes_agree(matrix_model):
    psis = np.linspace(-12.0, -0.1, 37)
    via_head = matrix_model.rel_conductivity(psi=psis)
    via_sat = matrix_model.rel_conductivity(matrix_model.saturation(psis))
    np.testing.assert_allclose(via_sat, via_head, rtol=1e-9)


def test_rel_conductivity_argument_checks(matrix_model):
    with pytest.raises(ValueError):
        matrix_model.rel_conductivity()
    with pytest.raises(ValueError):
        matrix_model.rel_conductivity(0.5, psi=-1.0)
    with pytest.raises(ValueError):
        matrix_model.rel_conductivity(0.05)  # below residual saturation
    with pytest.raises(ValueError):
        matrix_model.rel_conductivity(1.5)


def test_saturated_branch(matrix_model):
    assert matrix_model.saturation(2.0) == 1.0
    assert matrix_model.saturation(0.0) == 1.0
    assert matrix_model.d_saturation(1.0) == 0.0
    assert matrix_model.rel_conductivity(psi=4.0) == 1.0
    assert matrix_model.rel_conductivity(psi=0.0) == 1.0
    # continuity approaching full saturation from below
    assert matrix_model.saturation(-1e-9) == pytest.approx(1.0, abs=1e-8)
    assert matrix_model.rel_conductivity(psi=-1e-9) == pytest.approx(
        1.0, abs=1e-6)


def test_regularization_floor_tail():
    model = VanGenuchtenModel(MATRIX_SOIL, regularization_floor=-20.0)
    ref = VanGenuchtenModel(MATRIX_SOIL)
    # asymptotic branch stays within the power-law tail's accuracy
    for psi in (-25.0, -40.0):
        assert model.saturation(psi) == pytest.approx(
            ref.saturation(psi), rel=2e-2)
        assert model.d_saturation(psi) == pytest.approx(
            ref.d_saturation(psi), rel=2e-1)
        assert model.rel_conductivity(psi=psi) == pytest.approx(
            ref.rel_conductivity(psi=psi), rel=5e-1)
    # far below the floor the full expression overflows; the tail must not
    huge = model.rel_conductivity(psi=-1e9)
    assert np.isfinite(huge) and huge >= 0.0


# -- Kirchhoff transform ------------------------------------------------------


def test_kirchhoff_reference_values(matrix_model, fracture_model):
    assert matrix_model.kirchhoff(-1.0) == pytest.approx(
        -0.66555104769109282319, abs=1e-10)
    assert matrix_model.kirchhoff(-3.0) == pytest.approx(
        -0.95712572787233056383, abs=1e-10)
    assert fracture_model.kirchhoff(-1.0) == pytest.approx(
        -0.99550602253921011996, abs=1e-10)
    assert fracture_model.kirchhoff(-3.0) == pytest.approx(
        -1.651534474075389627, abs=1e-10)


def test_kirchhoff_zero_is_exact(matrix_model):
    assert matrix_model.kirchhoff(0.0) == 0.0


def test_kirchhoff_matches_simpson(matrix_model, fracture_model):
    for model in (matrix_model, fracture_model):
        for psi in (-0.7, -2.3, -4.0):
            ref = -simpson(lambda x: model.rel_conductivity(psi=x), psi, 0.0)
            assert model.kirchhoff(psi) == pytest.approx(ref, abs=1e-10)


def test_kirchhoff_strictly_increasing(matrix_model):
    psis = np.linspace(-30.0, 8.0, 400)
    u = matrix_model.kirchhoff(psis)
    assert np.all(np.diff(u) > 0.0)


def test_kirchhoff_table_monotone(matrix_model, fracture_model):
    for model in (matrix_model, fracture_model):
        t = model.kirchhoff_table
        assert t.resolution == 4096
        assert t.psi_range == (-50.0, 10.0)
        assert np.all(np.diff(t.psi) > 0.0)
        assert np.all(np.diff(t.values) > 0.0)
        # anchored values reproduce the transform after shifting
        i = int(np.searchsorted(t.psi, 0.0))
        assert t.psi[i] == 0.0
        assert t.values[i] - t.anchor == 0.0


def test_kirchhoff_out_of_range(matrix_model):
    with pytest.raises(TableRangeError):
        matrix_model.kirchhoff(-60.0)
    with pytest.raises(TableRangeError):
        matrix_model.kirchhoff(11.0)
    with pytest.raises(TableRangeError):
        matrix_model.kirchhoff_inv(matrix_model.kirchhoff(-49.0) - 1.0)


def test_kirchhoff_inverse_round_trip_matrix(matrix_model):
    psis = np.linspace(-40.0, 5.0, 1000)
    back = matrix_model.kirchhoff_inv(matrix_model.kirchhoff(psis))
    assert np.max(np.abs(back - psis)) <= 1e-8


def test_kirchhoff_inverse_at_reference_point(matrix_model):
    u = matrix_model.kirchhoff(-3.0)
    assert matrix_model.kirchhoff_inv(u) == pytest.approx(-3.0, abs=1e-8)


def test_kirchhoff_inverse_residual_contract(matrix_model, fracture_model):
    # the inverse must reproduce the potential to 1e-9 even where the
    # transform is too flat for the head itself to be recoverable
    for model in (matrix_model, fracture_model):
        psis = np.linspace(-48.0, 8.0, 300)
        u = model.kirchhoff(psis)
        back = model.kirchhoff_inv(u)
        resid = np.abs(model.kirchhoff(back) - u)
        assert np.max(resid) <= 1e-9


def test_b_of_u_composition(matrix_model):
    u = matrix_model.kirchhoff(-3.0)
    assert matrix_model.b_of_u(u) == pytest.approx(
        matrix_model.saturation(-3.0), abs=1e-9)
    us = matrix_model.kirchhoff(np.array([-8.0, -2.0, -0.4, 1.5]))
    np.testing.assert_allclose(
        matrix_model.b_of_u(us),
        matrix_model.saturation(matrix_model.kirchhoff_inv(us)),
        rtol=0.0, atol=1e-12)


def test_b_of_u_lipschitz_bound(matrix_model):
    lo, hi = -20.0, -0.5
    rep = matrix_model.bounds_report((lo, hi))
    lip = rep.M_S / rep.m_K
    rng = np.random.default_rng(7)
    a = rng.uniform(lo, hi, 200)
    b = rng.uniform(lo, hi, 200)
    ua, ub = matrix_model.kirchhoff(a), matrix_model.kirchhoff(b)
    lhs = np.abs(matrix_model.b_of_u(ua) - matrix_model.b_of_u(ub))
    assert np.all(lhs <= lip * np.abs(ua - ub) * (1.0 + 1e-9) + 1e-12)


# -- energy density -----------------------------------------------------------


def test_energy_reference_values(matrix_model, fracture_model):
    assert matrix_model.energy_w(-3.0) == pytest.approx(
        0.45090919198486832998, abs=1e-10)
    assert fracture_model.energy_w(-3.0) == pytest.approx(
        1.1084138827822655935, abs=1e-10)


def test_energy_matches_simpson(matrix_model):
    for psi in (-1.2, -6.0):
        ref = -simpson(
            lambda x: matrix_model.d_saturation(x) * x, psi, 0.0)
        assert matrix_model.energy_w(psi) == pytest.approx(ref, abs=1e-10)


def test_energy_nonnegative(matrix_model):
    psis = np.linspace(-45.0, 9.0, 500)
    w = matrix_model.energy_w(psis)
    assert np.all(w >= 0.0)
    assert matrix_model.energy_w(0.0) == 0.0
    assert matrix_model.energy_w(5.0) == pytest.approx(0.0, abs=1e-12)


# -- bounds report ------------------------------------------------------------


def test_bounds_report_unsaturated_interval(matrix_model):
    rep = matrix_model.bounds_report((-3.0, -1.0))
    assert not rep.degenerate
    assert 0.0 < rep.m_S <= rep.M_S
    assert 0.0 < rep.m_K <= rep.M_K
    # dense scan brackets the known interior values
    assert rep.m_S <= matrix_model.d_saturation(-2.0) <= rep.M_S
    assert rep.m_K <= matrix_model.rel_conductivity(psi=-2.0) <= rep.M_K
    assert rep.M_psi is None


def test_bounds_report_linear_growth_constant(matrix_model):
    rep = matrix_model.bounds_report((-3.0, -1.0), source_bound=0.5,
                                     initial_bound=3.0)
    assert rep.M_psi == pytest.approx(max(3.0, 0.5 / rep.m_S), rel=1e-12)
    rep2 = matrix_model.bounds_report((-3.0, -1.0), source_bound=10.0,
                                      initial_bound=0.1)
    assert rep2.M_psi == pytest.approx(10.0 / rep2.m_S, rel=1e-12)


def test_bounds_report_degenerate_interval(matrix_model):
    rep = matrix_model.bounds_report((-1.0, 1.0), source_bound=1.0,
                                     initial_bound=1.0)
    assert rep.degenerate
    assert rep.m_S == 0.0
    assert rep.M_psi is None


# -- linear family ------------------------------------------------------------


def test_linear_model_closed_forms():
    lm = LinearModel(slope=0.25, intercept=0.5, conductivity=0.8)
    assert lm.saturation(-1.0) == 0.25
    assert lm.d_saturation(-3.7) == 0.25
    assert lm.rel_conductivity(psi=-2.0) == 0.8
    assert lm.rel_conductivity(0.3) == 0.8
    assert lm.kirchhoff(-2.0) == pytest.approx(-1.6, rel=1e-15)
    assert lm.kirchhoff_inv(-1.6) == pytest.approx(-2.0, rel=1e-15)
    assert lm.b_of_u(-1.6) == pytest.approx(0.0, abs=1e-15)
    assert lm.energy_w(-2.0) == pytest.approx(0.5 * 0.25 * 4.0, rel=1e-15)


def test_linear_model_validation():
    with pytest.raises(ValueError):
        LinearModel(slope=0.0)
    with pytest.raises(ValueError):
        LinearModel(conductivity=0.0)
    with pytest.raises(ValueError):
        LinearModel(conductivity=1.5)


def test_linear_model_bounds():
    lm = LinearModel(slope=0.5, conductivity=0.9)
    rep = lm.bounds_report((-2.0, 2.0), source_bound=1.0, initial_bound=0.5)
    assert rep.m_S == rep.M_S == 0.5
    assert rep.m_K == rep.M_K == 0.9
    assert not rep.degenerate
    assert rep.M_psi == pytest.approx(2.0, rel=1e-15)


# -- property-based checks ----------------------------------------------------


@given(psi=st.floats(min_value=-45.0, max_value=8.0))
@settings(max_examples=60, deadline=None)
def test_ranges_hold_everywhere(psi):
    model = _shared_matrix_model()
    s = model.saturation(psi)
    assert MATRIX_SOIL.residual_saturation <= s <= 1.0
    assert model.d_saturation(psi) >= 0.0
    assert 0.0 < model.rel_conductivity(psi=psi) <= 1.0


@given(a=st.floats(min_value=-45.0, max_value=8.0),
       b=st.floats(min_value=-45.0, max_value=8.0))
@settings(max_examples=40, deadline=None)
def test_monotonicity_pairs(a, b):
    model = _shared_matrix_model()
    lo, hi = min(a, b), max(a, b)
    assert model.saturation(lo) <= model.saturation(hi)
    if hi - lo > 1e-9:
        assert model.kirchhoff(lo) < model.kirchhoff(hi)


_MATRIX_SINGLETON = None


def _shared_matrix_model():
    # hypothesis cannot use the module fixture; build the table once
    global _MATRIX_SINGLETON
    if _MATRIX_SINGLETON is None:
        _MATRIX_SINGLETON = VanGenuchtenModel(MATRIX_SOIL)
    return _MATRIX_SINGLETON
