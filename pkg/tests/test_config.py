#!/usr/bin/env python3
"""
Tests for unit-suffixed quantities, parameter files and device overrides.
"""

import sys
import os

# Add src directory to path
src_dir = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_dir)

import pytest

from nbds_synth.config import (CURRENT_UNITS, PARAMS_ENV_VAR, DeviceOverrides,
                               load_params_file, parse_quantity, resolve_params_path)
from nbds_synth.device_models import StrongInversionParams, SubthresholdParams
from nbds_synth.errors import ConfigError, ValidationError


def test_quantities_scale_exactly():
    assert parse_quantity("0.7nA") == 0.7e-9
    assert parse_quantity("26mV") == 0.026
    assert parse_quantity("100uA/V2") == 100e-6
    assert parse_quantity("1.2") == 1.2
    assert parse_quantity("-1.2nA", CURRENT_UNITS) == -1.2e-9


def test_quantity_rejects_foreign_unit():
    with pytest.raises(ValueError):
        parse_quantity("5ms", CURRENT_UNITS)
    with pytest.raises(ValueError):
        parse_quantity("nA")


def test_params_file(tmp_path):
    path = tmp_path / "corner.params"
    path.write_text("# slow corner\nn_n = 1.4\n\nI_Sn=2fA   # leakage\nV_b=1.3V\n")
    values = load_params_file(str(path))
    assert values == {"n_n": 1.4, "I_Sn": 2e-15, "V_b": 1.3}


def test_params_file_unknown_key_names_line(tmp_path):
    path = tmp_path / "typo.params"
    path.write_text("n_n=1.3\nV_bias=1.2\n")
    with pytest.raises(ConfigError) as info:
        load_params_file(str(path))
    assert ":2:" in str(info.value)
    assert "V_bias" in str(info.value)


def test_params_file_missing():
    with pytest.raises(ConfigError):
        load_params_file("/nonexistent/nbds.params")


def test_params_path_falls_back_to_environment(monkeypatch):
    monkeypatch.setenv(PARAMS_ENV_VAR, "/tmp/env.params")
    assert resolve_params_path("/tmp/flag.params") == "/tmp/flag.params"
    assert resolve_params_path(None) == "/tmp/env.params"
    monkeypatch.delenv(PARAMS_ENV_VAR)
    assert resolve_params_path(None) is None


def test_overrides_keep_builtin_bias_unless_set():
    device = SubthresholdParams(V_b=1.5)
    overrides = DeviceOverrides({"n_n": 1.4, "k_n": 50e-6})
    applied = overrides.apply(device)
    assert applied.n_n == 1.4
    assert applied.V_b == 1.5
    assert overrides.with_values(V_b=1.6).apply(device).V_b == 1.6


def test_overrides_pick_regime_fields():
    overrides = DeviceOverrides({"n_n": 1.4, "k_n": 50e-6})
    assert overrides.apply(StrongInversionParams()).k_n == 50e-6
    assert not DeviceOverrides()
    assert DeviceOverrides().apply(StrongInversionParams()) == StrongInversionParams()


def test_overrides_revalidate():
    with pytest.raises(ValidationError):
        DeviceOverrides({"V_b": 5.0}).apply(SubthresholdParams())


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
