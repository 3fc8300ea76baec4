"""
Experiment Module

This module provides the Experiment class that coordinates parsing,
synthesis, simulation and comparison for one system.
"""

import logging
import os
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

from . import nbds_core
from .config import DeviceOverrides
from .errors import NoOscillation, ValidationError
from .library import builtin, builtin_hopf, builtin_names, fhn_protocol, protocol_span
from .metrics import nrmse, oscillation_metrics
from .simlab import SimConfig, Waveform, integrate_circuit, integrate_math
from .studies import BiasRow, MonteCarloReport, RangeRow, bias_sweep, monte_carlo, range_report
from .synth import Netlist, lower
from .sysdsl import DynSystem, parse

logger = logging.getLogger(__name__)

MODES = ("math", "circuit")

DEFAULT_MAX_NRMSE = 1e-3


def load_system(selector: str, init_outside: bool = False) -> DynSystem:
    """
    Resolve a builtin name or a DSL file path to a system.

    Raises:
        ValidationError: If the selector is neither
        ParseError: If the file does not parse
    """
    if selector in builtin_names():
        if selector == "hopf":
            return builtin_hopf(init_outside=init_outside)
        return builtin(selector)
    if os.path.isfile(selector):
        with open(selector, "r", encoding="utf-8") as handle:
            return parse(handle.read())
    builtin(selector)  # raises with the list of builtins
    raise ValidationError(f"unknown system '{selector}'")


def _relative_error(value: Optional[float], reference: Optional[float]) -> Optional[float]:
    if value is None or reference is None or reference == 0:
        return None
    return abs(value - reference) / abs(reference) * 100.0


def _try_oscillation(w: Waveform, state: str):
    try:
        return oscillation_metrics(w, state)
    except NoOscillation:
        return None, None


@dataclass(frozen=True)
class StateComparison:
    state: str
    nrmse: float
    amplitude_error: Optional[float]
    period_error: Optional[float]


@dataclass
class ComparisonReport:
    """Circuit-versus-math figures for every state of one system."""

    system: str
    rescale: float
    max_nrmse: float
    states: List[StateComparison]

    @property
    def passed(self) -> bool:
        return all(s.nrmse <= self.max_nrmse for s in self.states)

    def as_dict(self) -> dict:
        return {
            "system": self.system,
            "rescale": self.rescale,
            "max_nrmse": self.max_nrmse,
            "passed": self.passed,
            "states": [{"state": s.state, "nrmse": s.nrmse,
                        "amplitude_error_pct": s.amplitude_error,
                        "period_error_pct": s.period_error} for s in self.states],
        }


class Experiment:
    """
    Main experiment class tying a system to its circuit and its runs.

    An Experiment owns one DynSystem (with device overrides applied), the
    simulation settings and the lazily synthesized netlist.
    """

    def __init__(self, system: DynSystem, overrides: Optional[DeviceOverrides] = None,
                 config: Optional[SimConfig] = None, capacitance: Optional[float] = None,
                 capacitance_scale: float = 1.0, expand_bmult: bool = False):
        """
        Initialize an experiment.

        Args:
            system: System to study
            overrides: Device parameters replacing the system's defaults
            config: Simulation settings (defaults derived from the system)
            capacitance: Fixed capacitor value; I_dc is then derived per state
            capacitance_scale: Multiply every capacitor after synthesis
            expand_bmult: Build strong-inversion multipliers from MULT cores
        """
        self.overrides = overrides or DeviceOverrides()
        if self.overrides:
            system = system.with_device(self.overrides.apply(system.device))
        self.system = system
        self.config = config or SimConfig()
        self.capacitance = capacitance
        self.capacitance_scale = capacitance_scale
        self.expand_bmult = expand_bmult
        self._netlist: Optional[Netlist] = None

    @classmethod
    def from_selector(cls, selector: str, overrides: Optional[DeviceOverrides] = None,
                      config: Optional[SimConfig] = None, init_outside: bool = False,
                      protocol: Optional[str] = None, **kwargs) -> "Experiment":
        """Build an experiment from a builtin name or DSL file, optionally protocol-driven."""
        system = load_system(selector, init_outside=init_outside)
        config = config or SimConfig()
        if protocol is not None:
            system = fhn_protocol(protocol, system)
            if config.t_end is None:
                config = replace(config, t_end=protocol_span(protocol, system))
        return cls(system, overrides, config, **kwargs)

    @property
    def netlist(self) -> Netlist:
        if self._netlist is None:
            self._netlist = self.synthesize()
        return self._netlist

    def synthesize(self) -> Netlist:
        """Lower the system with the configured mapping constant."""
        netlist = lower(self.system, self.config.mapping_constant,
                        capacitance=self.capacitance, expand_bmult=self.expand_bmult)
        if self.capacitance_scale != 1.0:
            logger.info("Scaling every capacitor by %g", self.capacitance_scale)
            netlist = netlist.with_capacitance_scale(self.capacitance_scale)
        self._netlist = netlist
        return netlist

    @property
    def rescale_factor(self) -> float:
        return nbds_core.time_rescale_factor(self.system.device, self.config.mapping_constant)

    def simulate(self, mode: str, rescale: bool = True) -> Waveform:
        """
        Run one integration.

        Args:
            mode: "math" or "circuit"
            rescale: Put circuit traces on the mathematical time axis

        Returns:
            The recorded waveform
        """
        if mode == "math":
            return integrate_math(self.system, self.config)
        if mode == "circuit":
            waveform = integrate_circuit(self.netlist, self.config)
            factor = self.rescale_factor
            return waveform.rescaled(factor) if rescale and factor != 1.0 else waveform
        raise ValidationError(f"unknown mode '{mode}' ({'|'.join(MODES)})")

    def compare(self, max_nrmse: float = DEFAULT_MAX_NRMSE, rescale: bool = True) -> ComparisonReport:
        """Integrate both ways and measure the circuit against the math reference."""
        reference = self.simulate("math")
        circuit = self.simulate("circuit", rescale=rescale)
        states = []
        for name in self.system.state_names:
            p2p_c, period_c = _try_oscillation(circuit, name)
            p2p_m, period_m = _try_oscillation(reference, name)
            states.append(StateComparison(name, nrmse(circuit, reference, name),
                                          _relative_error(p2p_c, p2p_m),
                                          _relative_error(period_c, period_m)))
        factor = self.rescale_factor if rescale else 1.0
        report = ComparisonReport(self.system.name, factor, max_nrmse, states)
        logger.info("Compared %s: %s", self.system.name, "pass" if report.passed else "fail")
        return report

    def monte_carlo(self, sigma: float, runs: int, state: Optional[str] = None) -> MonteCarloReport:
        if self.config.seed is None:
            raise ValidationError("Monte Carlo needs a seed")
        return monte_carlo(self.system, self.config, sigma, runs, state, self.netlist)

    def bias_sweep(self, v_b_values: Sequence[float]) -> List[BiasRow]:
        return bias_sweep(self.system, self.config, v_b_values)

    def range_report(self) -> List[RangeRow]:
        """Circuit run with voltages recorded, checked against the output range."""
        config = replace(self.config, record_voltages=True)
        waveform = integrate_circuit(self.netlist, config)
        return range_report(self.netlist, waveform)
