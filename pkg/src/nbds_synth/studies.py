"""
Studies Module

Multi-run analyses built on the simulation engine: sensitivity to initial
conditions, device-parameter Monte Carlo, bias-voltage sweeps and the
dynamic-range report of a circuit run.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from . import device_models as dm
from . import nbds_core
from .errors import NBDSError, ValidationError
from .metrics import nrmse, oscillation_metrics
from .simlab import SimConfig, Waveform, integrate_circuit_batch, integrate_math, \
    integrate_math_batch
from .synth import Netlist, lower
from .sysdsl import DynSystem

logger = logging.getLogger(__name__)

# Euclidean separation at which two runs count as diverged (A).
DIVERGENCE_THRESHOLD = 1e-9

PERTURBED_KEYS = {
    nbds_core.SUBTHRESHOLD: ("n_n", "n_p", "I_Sn", "I_Sp"),
    nbds_core.STRONG_INVERSION: ("k_n", "k_p", "V_th"),
}


def divergence_time(sys: DynSystem, cfg: SimConfig, perturbation: float,
                    state: Optional[str] = None,
                    threshold: float = DIVERGENCE_THRESHOLD) -> Optional[float]:
    """
    First time two runs, started `perturbation` apart on one state, separate
    by more than `threshold` (Euclidean over all states).

    Args:
        sys: System to integrate
        cfg: Integration settings
        perturbation: Offset added to the perturbed state's initial value (A)
        state: Perturbed state, the first one by default

    Returns:
        Divergence time in seconds, or None if the runs stay together up to t_end
    """
    state = state or sys.state_names[0]
    index = sys.state_names.index(state)
    y0 = np.array([s.init for s in sys.states])[:, None].repeat(2, axis=1)
    y0[index, 1] += perturbation
    base, moved = integrate_math_batch(sys, cfg, y0)
    separation = np.linalg.norm(moved.traces - base.traces, axis=1)
    beyond = np.flatnonzero(separation > threshold)
    if len(beyond) == 0:
        return None
    return float(base.times[beyond[0]])


@dataclass(frozen=True)
class RunResult:
    index: int
    peak_to_peak: float
    period: float
    oscillated: bool


@dataclass
class MonteCarloReport:
    """
    Per-run outcomes of a Monte Carlo study plus their summary statistics.

    Periods are on the mathematical time axis: circuit periods multiplied by
    `time_scale`, the nominal design's circuit-to-math factor.
    """

    system: str
    state: str
    sigma: float
    seed: Optional[int]
    runs: List[RunResult]
    time_scale: float = 1.0

    def _values(self, attr: str) -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.runs if r.oscillated])

    def _mean(self, attr: str) -> float:
        values = self._values(attr)
        return float(np.mean(values)) if len(values) else float("nan")

    def _std(self, attr: str) -> float:
        values = self._values(attr)
        if not len(values):
            return float("nan")
        return float(np.std(values)) if np.ptp(values) else 0.0

    @property
    def success_fraction(self) -> float:
        return sum(r.oscillated for r in self.runs) / len(self.runs)

    @property
    def mean_peak_to_peak(self) -> float:
        return self._mean("peak_to_peak")

    @property
    def std_peak_to_peak(self) -> float:
        return self._std("peak_to_peak")

    @property
    def mean_period(self) -> float:
        return self._mean("period")

    @property
    def std_period(self) -> float:
        return self._std("period")

    def as_dict(self) -> dict:
        return {
            "system": self.system, "state": self.state, "sigma": self.sigma, "seed": self.seed,
            "runs": len(self.runs), "success_fraction": self.success_fraction,
            "mean_peak_to_peak": self.mean_peak_to_peak, "std_peak_to_peak": self.std_peak_to_peak,
            "mean_period": self.mean_period, "std_period": self.std_period,
            "time_scale": self.time_scale, "time_base": "math",
        }


def perturbed_devices(device, sigma: float, runs: int, seed: Optional[int]):
    """
    One device record whose perturbed parameters are arrays of shape (runs,).

    Each parameter gets an independent lognormal factor exp(N(0, sigma)).
    """
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    rng = np.random.default_rng(seed)
    keys = PERTURBED_KEYS[device.regime]
    factors = np.exp(rng.normal(0.0, sigma, size=(len(keys), runs)))
    return replace(device, **{key: getattr(device, key) * factors[i]
                              for i, key in enumerate(keys)})


def _run_slice(device, r: int):
    keys = PERTURBED_KEYS[device.regime]
    return replace(device, **{key: float(getattr(device, key)[r]) for key in keys})


def _outcome(index: int, w: Optional[Waveform], state: str) -> RunResult:
    if w is None:
        return RunResult(index, float("nan"), float("nan"), False)
    try:
        p2p, period = oscillation_metrics(w, state)
    except NBDSError:
        return RunResult(index, float("nan"), float("nan"), False)
    return RunResult(index, p2p, period, True)


def monte_carlo(sys: DynSystem, cfg: SimConfig, sigma: float, runs: int,
                state: Optional[str] = None, netlist: Optional[Netlist] = None) -> MonteCarloReport:
    """
    Device-parameter Monte Carlo of a synthesized circuit.

    Capacitors and bias currents stay at their nominal values; only the core
    devices are perturbed. All runs advance together; if the batch fails the
    runs are repeated one by one and each failure counts as a run that did not
    oscillate. Waveforms are put on the mathematical time axis with the
    nominal device's rescale factor before the period is measured.

    Args:
        sys: System to synthesize
        cfg: Integration settings; cfg.seed makes the study reproducible
        sigma: Standard deviation of the log of each parameter factor
        runs: Number of runs
        state: State whose oscillation is measured (first state by default)
        netlist: Pre-lowered netlist of `sys`

    Returns:
        MonteCarloReport keyed by run index
    """
    state = state or sys.state_names[0]
    netlist = netlist or lower(sys, cfg.mapping_constant)
    devices = perturbed_devices(netlist.device, sigma, runs, cfg.seed)
    logger.info("Monte Carlo on %s: %d runs, sigma=%g, seed=%s", sys.name, runs, sigma, cfg.seed)
    try:
        if sigma == 0.0:
            # Every run is the nominal circuit.
            waveforms = integrate_circuit_batch(netlist, cfg) * runs
        else:
            waveforms = integrate_circuit_batch(netlist, cfg, devices)
    except NBDSError as exc:
        logger.info("Batch run failed (%s); repeating runs individually", exc)
        waveforms = []
        for r in range(runs):
            try:
                waveforms.append(integrate_circuit_batch(netlist, cfg, _run_slice(devices, r))[0])
            except NBDSError as run_exc:
                logger.info("Run %d failed: %s", r, run_exc)
                waveforms.append(None)
    factor = nbds_core.time_rescale_factor(netlist.device, cfg.mapping_constant)
    if factor != 1.0:
        waveforms = [w.rescaled(factor) if w is not None else None for w in waveforms]
    results = [_outcome(r, w, state) for r, w in enumerate(waveforms)]
    return MonteCarloReport(sys.name, state, sigma, cfg.seed, results, factor)


@dataclass(frozen=True)
class BiasRow:
    V_b: float
    nrmse: float
    mean_branch_current: float


def bias_sweep(sys: DynSystem, cfg: SimConfig, v_b_values: Sequence[float]) -> List[BiasRow]:
    """
    Re-synthesize a system at several bias voltages.

    The output currents do not depend on V_b; the standing branch current
    I_A + I_B grows with it.

    Returns:
        One row per voltage: worst per-state NRMSE against the math run and the
        mean branch current over all cores and samples
    """
    reference = integrate_math(sys, cfg)
    cfg = replace(cfg, record_voltages=True)
    rows = []
    for v_b in v_b_values:
        device = sys.device.with_bias(float(v_b))
        netlist = lower(sys.with_device(device), cfg.mapping_constant)
        circuit = integrate_circuit_batch(netlist, cfg)[0]
        factor = nbds_core.time_rescale_factor(device, cfg.mapping_constant)
        if factor != 1.0:
            circuit = circuit.rescaled(factor)
        worst = max(nrmse(circuit, reference, name) for name in sys.state_names)
        I_A, I_B = nbds_core.branch_currents(device, circuit.voltages)
        rows.append(BiasRow(float(v_b), worst, float(np.mean(I_A + I_B))))
        logger.info("V_b=%.3f V: nrmse=%.3e", v_b, worst)
    return rows


@dataclass(frozen=True)
class RangeRow:
    state: str
    i_min: float
    i_max: float
    v_min: float
    v_max: float
    bound_lo: float
    bound_hi: float

    @property
    def within(self) -> bool:
        return self.bound_lo <= self.i_min and self.i_max <= self.bound_hi


def output_bounds(device):
    """Representable output current interval of a core."""
    if device.regime == nbds_core.SUBTHRESHOLD:
        return float(dm.i_out_min(device)), float(dm.i_out_max(device))
    lo, hi = dm.v_c_range_si(device)
    return float(dm.i_out_si(device, lo)), float(dm.i_out_si(device, hi))


def range_report(netlist: Netlist, waveform: Waveform) -> List[RangeRow]:
    """
    Compare a circuit run against the core's output dynamic range.

    Raises:
        ValidationError: If the waveform carries no capacitor voltages
    """
    if waveform.voltages is None:
        raise ValidationError("range report needs recorded capacitor voltages")
    bound_lo, bound_hi = output_bounds(netlist.device)
    rows = []
    for name in netlist.state_names:
        current, volts = waveform.trace(name), waveform.voltage(name)
        row = RangeRow(name, float(np.min(current)), float(np.max(current)),
                       float(np.min(volts)), float(np.max(volts)), bound_lo, bound_hi)
        if not row.within:
            logger.warning("%s leaves the output range [%.3e, %.3e] A", name, bound_lo, bound_hi)
        rows.append(row)
    return rows
