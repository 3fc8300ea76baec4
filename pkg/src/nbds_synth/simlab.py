"""
Simulation Lab Module

Fixed-step integration of the mathematical system and of the synthesized
circuit, plus the waveform container both produce.

The engine advances a state matrix of shape (states, runs). A single run is
the one-column case; Monte Carlo and divergence studies put many runs side by
side and share every step.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import nbds_core
from .errors import NonFiniteError, ValidationError
from .nbds_core import CoreState
from .synth import Netlist, eval_netlist
from .sysdsl import DynSystem, compile_expr
from .tl_blocks import BilateralSignal

logger = logging.getLogger(__name__)

RK4 = "RK4"
EULER = "Euler"
INTEGRATORS = (RK4, EULER)

# Defaults relative to the system's time constants.
DEFAULT_STEPS_PER_TAU = 2000
DEFAULT_SPAN_TAUS = 40

CSV_FORMAT = "%.16e"


@dataclass(frozen=True)
class SimConfig:
    """
    Integration settings.

    Attributes:
        dt: Step (s); None means τ_min/2000
        t_end: Horizon (s); None means 40·τ_max
        integrator: "RK4" or "Euler"
        record_stride: Record every n-th step
        clipping: Hold V_C inside [V_Cmin, V_Cmax]
        seed: Random seed for Monte Carlo runs
        record_voltages: Also record capacitor voltages (circuit runs)
        mapping_constant: Strong-inversion C/I_dc preset used when lowering
    """

    dt: Optional[float] = None
    t_end: Optional[float] = None
    integrator: str = RK4
    record_stride: int = 1
    clipping: bool = False
    seed: Optional[int] = None
    record_voltages: bool = False
    mapping_constant: str = nbds_core.MAPPING_PAPER

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if self.t_end is not None and not self.t_end > 0:
            raise ValidationError(f"t_end must be positive, got {self.t_end!r}")
        if self.dt is not None and self.t_end is not None and self.t_end < self.dt:
            raise ValidationError("t_end must be at least one step")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"unknown integrator '{self.integrator}' (RK4|Euler)")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError("record_stride must be a positive integer")
        if self.mapping_constant not in nbds_core.MAPPING_CONSTANTS:
            raise ValidationError(f"unknown mapping constant '{self.mapping_constant}'")

    def resolved(self, tau_min: float, tau_max: float) -> "SimConfig":
        """Fill in the defaults from a system's time constants."""
        dt = self.dt if self.dt is not None else tau_min / DEFAULT_STEPS_PER_TAU
        t_end = self.t_end if self.t_end is not None else DEFAULT_SPAN_TAUS * tau_max
        return replace(self, dt=dt, t_end=t_end)


@dataclass
class Waveform:
    """
    Recorded traces of one run.

    Attributes:
        times: Sample times (s), strictly increasing
        names: State names, one column each
        traces: Currents (A), shape (samples, states)
        sat: Per-sample saturation flag
        voltages: Capacitor voltages, same shape as traces, when recorded
    """

    times: np.ndarray
    names: Tuple[str, ...]
    traces: np.ndarray
    sat: np.ndarray
    voltages: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.traces = np.asarray(self.traces, dtype=float).reshape(len(self.times), -1)
        self.sat = np.asarray(self.sat, dtype=bool)
        self.names = tuple(self.names)
        if self.traces.shape[1] != len(self.names) or len(self.sat) != len(self.times):
            raise ValidationError("waveform columns and samples must line up")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValidationError("waveform times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def trace(self, name: str) -> np.ndarray:
        try:
            return self.traces[:, self.names.index(name)]
        except ValueError:
            raise ValidationError(f"waveform has no state '{name}'") from None

    def voltage(self, name: str) -> np.ndarray:
        if self.voltages is None:
            raise ValidationError("capacitor voltages were not recorded")
        return self.voltages[:, self.names.index(name)]

    def projection(self, a: str, b: str) -> "Waveform":
        """Two-column view, e.g. the x-y plane of a three-state system."""
        return Waveform(self.times, (a, b), np.column_stack([self.trace(a), self.trace(b)]),
                        self.sat)

    def rescaled(self, factor: float) -> "Waveform":
        """Same samples on a time axis multiplied by `factor`."""
        return Waveform(self.times * factor, self.names, self.traces, self.sat, self.voltages)

    def resampled(self, times: np.ndarray) -> "Waveform":
        """Linear interpolation of every trace onto another time grid."""
        traces = np.column_stack([np.interp(times, self.times, self.traces[:, i])
                                  for i in range(len(self.names))])
        sat = np.interp(times, self.times, self.sat.astype(float)) > 0
        return Waveform(times, self.names, traces, sat)

    def tail(self, fraction: float) -> "Waveform":
        start = int(len(self.times) * (1.0 - fraction))
        voltages = None if self.voltages is None else self.voltages[start:]
        return Waveform(self.times[start:], self.names, self.traces[start:], self.sat[start:],
                        voltages)

    def write_csv(self, path: str):
        """Write `t,<states>,sat` rows with 17 significant digits."""
        table = np.column_stack([self.times, self.traces, self.sat.astype(int)])
        fmt = [CSV_FORMAT] * (1 + len(self.names)) + ["%d"]
        header = ",".join(("t",) + self.names + ("sat",))
        np.savetxt(path, table, fmt=fmt, delimiter=",", header=header, comments="")

    @classmethod
    def read_csv(cls, path: str) -> "Waveform":
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip().split(",")
        if len(header) < 3 or header[0] != "t" or header[-1] != "sat":
            raise ValidationError(f"{path}: not a waveform CSV (header {','.join(header)})")
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(table[:, 0], tuple(header[1:-1]), table[:, 1:-1], table[:, -1] != 0)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class _RunLog:
    """Log each recurring numerical condition once per run."""

    def __init__(self, label: str):
        self.label = label
        self.logged = set()

    def once(self, key: str, message: str, *args):
        if key not in self.logged:
            self.logged.add(key)
            logger.warning("%s: " + message, self.label, *args)


def _rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler_step(f, t, y, dt):
    return y + dt * f(t, y)


STEPPERS = {RK4: _rk4_step, EULER: _euler_step}


def _advance(deriv: Callable, y0: np.ndarray, cfg: SimConfig, names: Sequence[str],
             observe: Callable, project: Optional[Callable] = None):
    """
    Fixed-step loop shared by both integrations.

    Args:
        deriv: f(t, y) -> dy/dt for y of shape (states, runs)
        y0: Initial state matrix
        cfg: Resolved configuration
        names: State names for error reports
        observe: g(t, y) -> tuple of per-sample records
        project: Optional map applied to y after each step (clipping)

    Returns:
        (times, list of stacked records)
    """
    step = STEPPERS[cfg.integrator]
    dt = cfg.dt
    n_steps = max(int(round(cfg.t_end / dt)), 1)
    stride = int(cfg.record_stride)
    times = []
    records = []
    y = y0
    for k in range(n_steps + 1):
        t = k * dt
        if not np.all(np.isfinite(y)):
            bad = int(np.argwhere(~np.isfinite(y))[0][0])
            raise NonFiniteError(t, names[bad])
        if k % stride == 0:
            times.append(t)
            records.append(observe(t, y))
        if k == n_steps:
            break
        y = step(deriv, t, y, dt)
        if project is not None:
            y = project(y)
    stacked = [np.stack(column) for column in zip(*records)]
    return np.asarray(times), stacked


def _columns(values) -> np.ndarray:
    """Stack per-state values (scalars or run arrays) into a (states, runs) matrix."""
    return np.stack(np.broadcast_arrays(*values)).reshape(len(values), -1)


def _split_runs(times, names, currents, sat, voltages=None) -> List[Waveform]:
    runs = currents.shape[-1]
    return [Waveform(times, names, currents[:, :, r], sat[:, r],
                     None if voltages is None else voltages[:, :, r])
            for r in range(runs)]


def _math_setup(sys: DynSystem):
    funcs = [compile_expr(sys.equations[name]) for name in sys.state_names]
    taus = np.array([s.tau for s in sys.states])[:, None]
    names = sys.state_names

    def deriv(t, y):
        state = dict(zip(names, y))
        inputs = sys.input_values_at(t)
        return np.broadcast_to(_columns([f(state, inputs) for f in funcs]), y.shape) / taus

    return deriv


def integrate_math_batch(sys: DynSystem, cfg: SimConfig, y0: np.ndarray) -> List[Waveform]:
    """Integrate τ_i·ẋ_i = F_i from every column of y0 (states × runs)."""
    cfg = cfg.resolved(sys.tau_min, sys.tau_max)
    deriv = _math_setup(sys)
    y0 = np.asarray(y0, dtype=float).reshape(len(sys.states), -1)

    def observe(t, y):
        return y.copy(), np.zeros(y.shape[1], dtype=bool)

    times, (currents, sat) = _advance(deriv, y0, cfg, sys.state_names, observe)
    return _split_runs(times, tuple(sys.state_names), currents, sat)


def integrate_math(sys: DynSystem, cfg: SimConfig) -> Waveform:
    """
    Reference integration of the mathematical system.

    Drives are sampled at every stage time (t, t+dt/2, t+dt for RK4).

    Raises:
        NonFiniteError: With the time and state where the solution blew up
    """
    y0 = np.array([s.init for s in sys.states])[:, None]
    logger.info("Integrating %s (math)", sys.name)
    return integrate_math_batch(sys, cfg, y0)[0]


class CircuitModel:
    """
    Device-level model of a netlist: read_out -> eval_netlist -> compute_icin
    -> core_derivative for every core at once.
    """

    def __init__(self, netlist: Netlist, cfg: SimConfig, device=None):
        self.netlist = netlist
        self.device = device if device is not None else netlist.device
        self.regime = netlist.regime
        self.names = netlist.state_names
        self.C = np.array([c.mapping.C for c in netlist.cores])[:, None]
        self.I_dc = np.array([c.mapping.I_dc for c in netlist.cores])[:, None]
        self.clipping = cfg.clipping
        self.log = _RunLog(netlist.system)
        lo, hi = nbds_core.voltage_bounds(self.device)
        self.bounds = (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
        self.pinned = None

    def initial_voltages(self) -> np.ndarray:
        volts = [nbds_core.init_core(self.device, c.init).V_C for c in self.netlist.cores]
        return _columns(volts).reshape(len(self.names), -1)

    def deriv(self, t, V):
        I_A, I_B = nbds_core.branch_currents(self.device, V)
        readouts = {name: BilateralSignal(I_B[i], I_A[i]) for i, name in enumerate(self.names)}
        inputs = {p.name: p.drive.value_at(t) for p in self.netlist.inputs}
        F = eval_netlist(self.netlist, readouts, inputs)
        rails = BilateralSignal(_columns([F[name].pos for name in self.names]),
                                _columns([F[name].neg for name in self.names]))
        icin = nbds_core.compute_icin(rails, I_A, I_B, self.I_dc, self.regime)
        state = CoreState(V)
        dV = nbds_core.core_derivative(state, icin, self.C,
                                       self.bounds if self.clipping else None)
        if self.clipping and np.any(state.saturation_flag):
            self.pinned = state.saturation_flag
        return dV

    def project(self, V):
        lo, hi = self.bounds
        clipped = np.clip(V, lo, hi)
        if np.any(clipped != V):
            self.log.once("clip", "capacitor voltage clipped at the dynamic-range bounds")
        return clipped

    def observe(self, t, V):
        readout = nbds_core.read_out(CoreState(V), self.device, self.regime)
        flags = np.asarray(readout.saturated)
        if np.any(flags):
            key = "clamp" if self.regime == nbds_core.SUBTHRESHOLD else "off"
            self.log.once(key, "branch current left its model range (%s)",
                          "exponent clamped" if key == "clamp" else "device off")
        sat = np.any(np.broadcast_to(flags, V.shape), axis=0)
        if self.pinned is not None:
            sat = sat | np.any(np.broadcast_to(self.pinned, V.shape), axis=0)
            self.pinned = None
        return np.broadcast_to(readout.I_out, V.shape).copy(), sat, V.copy()


def integrate_circuit_batch(netlist: Netlist, cfg: SimConfig, device=None) -> List[Waveform]:
    """
    Integrate the circuit for one device record whose parameters may be arrays
    of shape (runs,); returns one waveform per run.
    """
    cfg = cfg.resolved(min(c.mapping.tau for c in netlist.cores),
                       max(c.mapping.tau for c in netlist.cores))
    model = CircuitModel(netlist, cfg, device)
    V0 = model.initial_voltages()
    project = model.project if cfg.clipping else None
    times, (currents, sat, volts) = _advance(model.deriv, V0, cfg, model.names,
                                             model.observe, project)
    voltages = volts if cfg.record_voltages else None
    return _split_runs(times, tuple(model.names), currents, sat, voltages)


def integrate_circuit(netlist: Netlist, cfg: SimConfig) -> Waveform:
    """
    Device-level integration of a synthesized netlist.

    The state is the vector of capacitor voltages; the recorded traces are
    the cores' output currents in circuit time.

    Raises:
        DenominatorUnderflow: If a core leaves its operating region
        NonFiniteError: With the time and state where the solution blew up
    """
    logger.info("Integrating %s (circuit, %s)", netlist.system, netlist.regime)
    return integrate_circuit_batch(netlist, cfg)[0]
