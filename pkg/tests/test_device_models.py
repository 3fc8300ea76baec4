#!/usr/bin/env python3
"""
Tests for the closed-form core device equations in both regimes.
"""

import sys
import os

# Add src directory to path
src_dir = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_dir)

import numpy as np
import pytest

from nbds_synth import device_models as dm
from nbds_synth.device_models import StrongInversionParams, SubthresholdParams
from nbds_synth.errors import OutOfRange, ValidationError


def test_defaults_and_validation():
    p = SubthresholdParams()
    assert (p.n_n, p.n_p, p.V_T, p.I_Sn, p.I_Sp, p.V_DD, p.V_b) == \
        (1.3, 1.2, 0.026, 1e-15, 1e-15, 3.3, 1.2)
    with pytest.raises(ValidationError):
        SubthresholdParams(V_b=4.0)
    with pytest.raises(ValidationError):
        SubthresholdParams(n_n=0.0)
    with pytest.raises(ValidationError):
        StrongInversionParams(V_b=0.9)


def test_beta_matched_and_mismatched():
    assert dm.beta_sub(SubthresholdParams()) == pytest.approx(1e-15, rel=1e-12)
    p = SubthresholdParams(I_Sn=4e-15, I_Sp=1e-15)
    expected = 2e-15 * np.exp(0.1 / 5.0 * np.log(4.0))
    assert dm.beta_sub(p) == pytest.approx(expected, rel=1e-12)


def test_output_zero_at_half_bias_and_monotone():
    p = SubthresholdParams()
    assert abs(dm.i_out_sub(p, p.V_b / 2)) < 1e-25
    volts = np.linspace(0.2, 1.0, 41)
    assert np.all(np.diff(dm.i_out_sub(p, volts)) > 0)


def test_lower_bound_matches_output_at_v_c_min():
    for p in (SubthresholdParams(), SubthresholdParams(V_b=1.5),
              SubthresholdParams(I_Sn=3e-15, I_Sp=1e-15, n_p=1.1)):
        assert dm.i_out_min(p) == pytest.approx(dm.i_out_sub(p, dm.v_c_min(p)), rel=1e-9)


def test_gamma_for_matched_slope_factors():
    p = SubthresholdParams(n_n=1.25, n_p=1.25)
    assert dm.gamma_sub(p) == pytest.approx(np.exp(8.0 / 7.5), rel=1e-12)


def test_voltage_window_ordering():
    p = SubthresholdParams()
    assert dm.v_c_min(p) < p.V_b / 2 < dm.v_c_max(p)
    assert dm.i_out_max(p) > 0 > dm.i_out_min(p)


def _random_subthreshold(rng):
    return SubthresholdParams(n_n=rng.uniform(1.1, 1.5), n_p=rng.uniform(1.1, 1.5),
                              I_Sn=rng.uniform(0.5e-15, 2e-15), I_Sp=rng.uniform(0.5e-15, 2e-15),
                              V_b=rng.uniform(0.8, 2.5))


def test_output_zero_at_half_bias_for_random_parameters():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = _random_subthreshold(rng)
        assert abs(dm.i_out_sub(p, p.V_b / 2)) < 1e-15
        assert dm.i_out_min(p) == pytest.approx(dm.i_out_sub(p, dm.v_c_min(p)), rel=1e-12)


def test_branch_product_is_independent_of_v_c():
    rng = np.random.default_rng(5)
    for p in (SubthresholdParams(), SubthresholdParams(I_Sn=3e-15, V_b=2.0)):
        V_C = rng.uniform(0.0, p.V_b, size=100)
        I_A, I_B = dm.branch_currents_sub(p, V_C)
        expected = dm.beta_sub(p) ** 2 * np.exp(p.V_b / p.log_scale)
        assert np.allclose(I_A * I_B, expected, rtol=1e-11, atol=0.0)


def test_window_bounds_for_matched_devices():
    p = SubthresholdParams(n_n=1.3, n_p=1.3)
    assert dm.v_c_min(p) == pytest.approx(8 / 3 * 0.026 + 1.2 / 3, abs=1e-12)
    assert dm.v_c_min(p) == pytest.approx(0.4693, abs=1e-4)
    assert dm.v_c_min_m4(p) == pytest.approx(8 * 0.026, abs=1e-12)
    assert dm.v_c_max(p) == pytest.approx(2.131, abs=1e-3)


def test_m2_leaves_saturation_before_m4_above_sixteen_v_t():
    base = SubthresholdParams(n_n=1.3, n_p=1.3)
    for V_b in np.linspace(16 * base.V_T * 1.01, 3.2, 25):
        p = base.with_bias(V_b)
        assert dm.v_c_min(p) > dm.v_c_min_m4(p)
    edge = base.with_bias(16 * base.V_T)
    assert dm.v_c_min(edge) == pytest.approx(dm.v_c_min_m4(edge), rel=1e-12)


def test_subthreshold_output_slope():
    p = SubthresholdParams()
    h = 1e-6
    for V_C in np.linspace(0.3, 0.9, 13):
        numeric = (dm.i_out_sub(p, V_C + h) - dm.i_out_sub(p, V_C - h)) / (2 * h)
        I_A, I_B = dm.branch_currents_sub(p, V_C)
        assert numeric == pytest.approx((I_A + I_B) / p.log_scale, rel=1e-6)


def test_strong_inversion_output_slope():
    p = StrongInversionParams()
    h = 1e-6
    beta = float(p.beta_si)
    for V_C in np.linspace(1.05, 2.25, 13):
        numeric = (dm.i_out_si(p, V_C + h) - dm.i_out_si(p, V_C - h)) / (2 * h)
        I_A, I_B = dm.branch_currents_si(p, V_C)
        analytic = 2 * (np.sqrt(p.k_n * I_B) + np.sqrt(p.k_p * I_A)) / (1 + beta)
        assert numeric == pytest.approx(analytic, rel=1e-6)


def test_v_initial_inverts_output():
    p = SubthresholdParams()
    for current in (-2e-9, -45e-12, 0.0, 1e-12, 3e-9):
        V_C = dm.v_initial(p, current)
        assert dm.i_out_sub(p, V_C) == pytest.approx(current, rel=1e-9, abs=1e-21)


def test_v_initial_inverts_output_across_ten_nanoamps():
    p = SubthresholdParams()
    currents = np.linspace(-10e-9, 10e-9, 1000)
    volts = dm.v_initial(p, currents)
    assert np.allclose(dm.i_out_sub(p, volts), currents, rtol=1e-9, atol=1e-21)


def test_v_initial_vectorizes():
    p = SubthresholdParams()
    currents = np.array([-1e-9, 0.0, 1e-9])
    volts = dm.v_initial(p, currents)
    assert volts.shape == (3,)
    assert np.allclose(dm.i_out_sub(p, volts), currents, rtol=1e-9, atol=1e-21)


def test_default_bias_does_not_cover_nanoamp_swings():
    # FHN swings to about -2 nA; at 1.2 V the lower bound is only tens of pA.
    p = SubthresholdParams(V_b=1.2)
    assert -1e-10 < dm.i_out_min(p) < 0


def test_min_bias_voltage():
    p = SubthresholdParams()
    v_b = dm.min_bias_voltage(p, 2e-9)
    assert v_b < p.V_DD
    assert dm.i_out_min(p.with_bias(v_b)) <= -2e-9
    assert dm.i_out_min(p.with_bias(v_b - 1e-3)) > -2e-9
    with pytest.raises(OutOfRange):
        dm.min_bias_voltage(p, 1.0)


def test_exponent_clamp_reported():
    p = SubthresholdParams()
    assert bool(dm.exponent_saturated(p, 20.0))
    assert not bool(dm.exponent_saturated(p, 0.6))
    I_A, I_B = dm.branch_currents_sub(p, 20.0)
    assert np.isfinite(I_B)


def test_array_parameters_broadcast():
    p = SubthresholdParams(n_n=np.array([1.2, 1.3, 1.4]))
    I_A, I_B = dm.branch_currents_sub(p, 0.6)
    assert I_A.shape == (3,) and I_B.shape == (3,)


def test_strong_inversion_output_is_linear():
    p = StrongInversionParams()
    assert dm.i_out_si(p, 2.0) == pytest.approx(1e-4 / 4 * 1.3 * 0.7, rel=1e-12)
    I_A, I_B = dm.branch_currents_si(p, p.V_b / 2)
    assert I_A == pytest.approx(I_B, rel=1e-12)
    lo, hi = dm.v_c_range_si(p)
    assert (lo, hi) == pytest.approx((1.0, 2.3))


def test_strong_inversion_device_off():
    p = StrongInversionParams()
    assert bool(dm.device_off_si(p, 0.5))
    assert not bool(dm.device_off_si(p, 1.65))
    I_A, I_B = dm.branch_currents_si(p, 0.5)
    assert I_B == 0.0 and I_A > 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
