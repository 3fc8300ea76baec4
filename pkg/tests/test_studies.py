#!/usr/bin/env python3
"""
Tests for the multi-run studies: divergence, Monte Carlo, bias sweep
and the dynamic-range report.
"""

import sys
import os
import logging

# Add src directory to path
src_dir = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_dir)

import numpy as np
import pytest

from nbds_synth import studies
from nbds_synth.device_models import SubthresholdParams
from nbds_synth.errors import ValidationError
from nbds_synth.library import builtin, builtin_hopf
from nbds_synth.metrics import oscillation_metrics
from nbds_synth.simlab import SimConfig, integrate_circuit, integrate_circuit_batch, integrate_math
from nbds_synth.synth import lower

HOPF_TAU = 0.065


def hopf_config(**kwargs):
    return SimConfig(dt=HOPF_TAU / 100, t_end=60 * HOPF_TAU, **kwargs)


def test_lorenz_diverges():
    tau_y = 13e-6
    cfg = SimConfig(dt=1.3e-6 / 50, t_end=40 * tau_y)
    t = studies.divergence_time(builtin("lorenz"), cfg, 1e-12)
    assert t is not None
    assert 0.0 < t < 30 * tau_y


def test_lorenz_diverges_from_a_femtoamp_offset():
    tau_y = 13e-6
    cfg = SimConfig(dt=1.3e-6 / 50, t_end=60 * tau_y)
    t = studies.divergence_time(builtin("lorenz"), cfg, 1e-15)
    assert t is not None
    assert 0.0 < t < 60 * tau_y


def test_fhn_does_not_diverge():
    cfg = SimConfig(dt=0.65 / 100, t_end=40.0)
    assert studies.divergence_time(builtin("fhn"), cfg, 1e-13) is None
    assert studies.divergence_time(builtin("fhn"), cfg, 0.0, state="w") is None


def test_perturbed_devices():
    device = SubthresholdParams()
    spread = studies.perturbed_devices(device, 0.02, 5, seed=11)
    for key in studies.PERTURBED_KEYS["subthreshold"]:
        assert getattr(spread, key).shape == (5,)
    assert spread.V_b == device.V_b
    again = studies.perturbed_devices(device, 0.02, 5, seed=11)
    assert np.array_equal(spread.n_n, again.n_n)
    with pytest.raises(ValidationError):
        studies.perturbed_devices(device, -0.1, 5, seed=1)
    with pytest.raises(ValidationError):
        studies.perturbed_devices(device, 0.1, 0, seed=1)


def test_monte_carlo_without_spread():
    hopf = builtin_hopf(init_outside=True)
    report = studies.monte_carlo(hopf, hopf_config(seed=5), sigma=0.0, runs=3)
    assert report.success_fraction == 1.0
    assert report.std_peak_to_peak == 0.0
    assert report.std_period == 0.0
    nominal = integrate_circuit(lower(hopf), hopf_config())
    p2p, period = oscillation_metrics(nominal, "x")
    for run in report.runs:
        assert (run.peak_to_peak, run.period) == (p2p, period)
    assert report.mean_peak_to_peak == pytest.approx(p2p, rel=1e-12)
    assert report.mean_period == pytest.approx(period, rel=1e-12)
    assert report.as_dict()["time_scale"] == 1.0


def test_monte_carlo_periods_use_the_math_clock():
    fhn = builtin("fhn-si")
    netlist = lower(fhn)
    cfg = SimConfig(dt=1.0 / 250, t_end=300.0, seed=3)
    report = studies.monte_carlo(fhn, cfg, sigma=0.0, runs=2, state="v", netlist=netlist)
    assert report.time_scale == pytest.approx(1.5)
    assert report.as_dict()["time_base"] == "math"
    _, circuit_period = oscillation_metrics(integrate_circuit(netlist, cfg), "v")
    assert report.mean_period == pytest.approx(1.5 * circuit_period, rel=1e-9)
    math = integrate_math(fhn, SimConfig(dt=1.5 / 250, t_end=450.0))
    _, math_period = oscillation_metrics(math, "v")
    assert report.mean_period == pytest.approx(math_period, rel=0.01)


def test_fhn_monte_carlo_keeps_oscillating():
    report = studies.monte_carlo(builtin("fhn"), SimConfig(dt=0.65 / 500, seed=1),
                                 sigma=0.02, runs=100, state="v")
    assert len(report.runs) == 100
    assert report.success_fraction >= 0.9
    assert report.mean_period == pytest.approx(24.6, rel=0.05)


def test_monte_carlo_is_reproducible():
    hopf = builtin_hopf(init_outside=True)
    first = studies.monte_carlo(hopf, hopf_config(seed=7), sigma=0.02, runs=4)
    second = studies.monte_carlo(hopf, hopf_config(seed=7), sigma=0.02, runs=4)
    assert first.as_dict() == second.as_dict()
    assert first.success_fraction == 1.0
    assert first.as_dict()["runs"] == 4
    assert first.std_period > 0.0


def test_failed_runs_do_not_oscillate():
    outcome = studies._outcome(2, None, "x")
    assert outcome == studies.RunResult(2, outcome.peak_to_peak, outcome.period, False)
    report = studies.MonteCarloReport("s", "x", 0.1, 1, [outcome])
    assert report.success_fraction == 0.0
    assert np.isnan(report.mean_period)


def test_bias_sweep():
    rows = studies.bias_sweep(builtin("synapse"), SimConfig(dt=5e-4, t_end=0.2), [1.2, 1.5])
    assert [row.V_b for row in rows] == [1.2, 1.5]
    for row in rows:
        assert row.nrmse < 1e-3
    assert rows[1].mean_branch_current > rows[0].mean_branch_current


def test_range_report_flags_fhn_at_default_bias(caplog):
    fhn = builtin("fhn")
    netlist = lower(fhn)
    cfg = SimConfig(dt=0.65 / 100, t_end=20.0, record_voltages=True)
    w = integrate_circuit_batch(netlist, cfg)[0]
    with caplog.at_level(logging.WARNING, logger="nbds_synth.studies"):
        rows = studies.range_report(netlist, w)
    v = next(row for row in rows if row.state == "v")
    assert not v.within
    assert v.i_min < v.bound_lo < 0 < v.bound_hi
    assert v.v_min < v.v_max
    assert any("leaves the output range" in r.getMessage() for r in caplog.records)


def test_range_report_needs_voltages():
    netlist = lower(builtin("synapse"))
    w = integrate_circuit(netlist, SimConfig(dt=5e-4, t_end=0.01))
    with pytest.raises(ValidationError):
        studies.range_report(netlist, w)


def test_output_bounds_follow_bias():
    low = studies.output_bounds(SubthresholdParams(V_b=1.2))
    high = studies.output_bounds(SubthresholdParams(V_b=1.6))
    assert high[0] < low[0] < 0
    lo, hi = studies.output_bounds(builtin("fhn-si").device)
    assert lo < 0 < hi


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
