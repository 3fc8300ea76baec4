"""
NBDS Core Module

The per-state main core: capacitor-voltage state, the mapping of a target time
constant onto (C, I_dc), the F -> I_Cin stage and preset initialization, for
both operating regimes.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from . import device_models as dm
from .errors import DenominatorUnderflow, OutOfRange, ValidationError
from .tl_blocks import UNIT_ROOT_SCALE, BilateralSignal, ScaleCurrent, root_square

logger = logging.getLogger(__name__)

SUBTHRESHOLD = "subthreshold"
STRONG_INVERSION = "strong_inversion"
REGIMES = (SUBTHRESHOLD, STRONG_INVERSION)

MAPPING_PAPER = "paper"
MAPPING_DERIVED = "derived"
MAPPING_CONSTANTS = (MAPPING_PAPER, MAPPING_DERIVED)

# Three decades below the femtoampere leakage scale.
DENOMINATOR_FLOOR = 1e-18

BISECTION_TOL = 1e-9

DeviceParams = Union[dm.SubthresholdParams, dm.StrongInversionParams]


def _ratio(device: DeviceParams, mapping_constant: str):
    """C/I_dc per second of target time constant."""
    if device.regime == SUBTHRESHOLD:
        return 1.0 / device.log_scale
    if mapping_constant not in MAPPING_CONSTANTS:
        raise ValidationError(f"unknown mapping constant '{mapping_constant}'")
    beta = device.beta_si
    denom = 2.0 + beta if mapping_constant == MAPPING_PAPER else 1.0 + beta
    return 2.0 * np.sqrt(device.k_n) / denom


def solve_capacitor(tau: float, I_dc: float, device: DeviceParams,
                    mapping_constant: str = MAPPING_PAPER) -> float:
    """
    Capacitance realizing time constant `tau` with scaling current `I_dc`.

    Args:
        tau: Target time constant (s)
        I_dc: Scaling current (A)
        device: Core parameters; selects the regime
        mapping_constant: Strong inversion only, "paper" or "derived"

    Returns:
        C in farads
    """
    if not (tau > 0 and I_dc > 0):
        raise ValidationError("tau and I_dc must be positive")
    return float(tau * _ratio(device, mapping_constant) * I_dc)


def solve_bias_current(tau: float, C: float, device: DeviceParams,
                       mapping_constant: str = MAPPING_PAPER) -> float:
    """Scaling current I_dc that realizes `tau` on a fixed capacitor `C`."""
    if not (tau > 0 and C > 0):
        raise ValidationError("tau and C must be positive")
    return float(C / (tau * _ratio(device, mapping_constant)))


def time_rescale_factor(device: DeviceParams, mapping_constant: str = MAPPING_PAPER) -> float:
    """
    Factor mapping circuit time onto mathematical time.

    With the "paper" strong-inversion preset the circuit runs (2+β)/(1+β) times
    faster than the target system; every other mapping is exact.
    """
    if device.regime == SUBTHRESHOLD or mapping_constant == MAPPING_DERIVED:
        return 1.0
    beta = float(device.beta_si)
    return (2.0 + beta) / (1.0 + beta)


@dataclass(frozen=True)
class CoreMapping:
    """Electrical realization of one state variable."""

    regime: str
    tau: float
    C: float
    I_dc: float
    device: DeviceParams
    mapping_constant: str = MAPPING_PAPER

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValidationError(f"unknown regime '{self.regime}'")
        if self.regime != self.device.regime:
            raise ValidationError(f"{self.regime} core given {self.device.regime} parameters")

    @classmethod
    def for_time_constant(cls, tau: float, I_dc: float, device: DeviceParams,
                          mapping_constant: str = MAPPING_PAPER) -> "CoreMapping":
        C = solve_capacitor(tau, I_dc, device, mapping_constant)
        return cls(device.regime, tau, C, I_dc, device, mapping_constant)


@dataclass
class CoreState:
    """Capacitor voltage of one core; saturation_flag marks an engaged clamp."""

    V_C: Union[float, np.ndarray]
    saturation_flag: Union[bool, np.ndarray] = field(default=False)


class CoreReadout(NamedTuple):
    I_A: Union[float, np.ndarray]
    I_B: Union[float, np.ndarray]
    I_out: Union[float, np.ndarray]
    rails: BilateralSignal
    saturated: Union[bool, np.ndarray]


def branch_currents(device: DeviceParams, V_C):
    if device.regime == SUBTHRESHOLD:
        return dm.branch_currents_sub(device, V_C)
    return dm.branch_currents_si(device, V_C)


def voltage_bounds(device: DeviceParams):
    """Clipping window [V_Cmin, V_Cmax] of the core."""
    if device.regime == SUBTHRESHOLD:
        return dm.v_c_min(device), dm.v_c_max(device)
    return dm.v_c_range_si(device)


def compute_icin(F_rails: BilateralSignal, I_A, I_B, I_dc: float, regime: str):
    """
    Capacitor current that makes the core integrate τ·İ_out = F.

    Subthreshold: F·I_dc/(I_A+I_B), built by a PMOS (F⁺) and an NMOS (F⁻)
    multiplier. Strong inversion: F·I_dc/(√I_A+√I_B) with the roots taken by two
    root square blocks.

    Raises:
        DenominatorUnderflow: If the denominator falls below 1e-18 A
    """
    if regime == SUBTHRESHOLD:
        denominator = I_A + I_B
    else:
        unit = ScaleCurrent(UNIT_ROOT_SCALE)
        denominator = root_square(I_A, unit) + root_square(I_B, unit)
    if np.any(denominator < DENOMINATOR_FLOOR):
        raise DenominatorUnderflow(
            f"I_Cin denominator {np.min(denominator):.3e} below {DENOMINATOR_FLOOR:.0e} A")
    icin_pos = F_rails.pos * I_dc / denominator
    icin_neg = F_rails.neg * I_dc / denominator
    return icin_pos - icin_neg


def core_derivative(state: CoreState, I_Cin, C: float, bounds=None):
    """
    dV_C/dt = I_Cin/C.

    With clipping `bounds` = (V_Cmin, V_Cmax), a voltage sitting on a bound with
    the current pushing outward is held (derivative 0) and flagged.
    """
    dv = I_Cin / C
    if bounds is None:
        return dv
    lo, hi = bounds
    pinned = ((state.V_C >= hi) & (dv > 0)) | ((state.V_C <= lo) & (dv < 0))
    state.saturation_flag = np.logical_or(state.saturation_flag, pinned)
    return np.where(pinned, 0.0, dv)


def _init_si(device: dm.StrongInversionParams, I_out_init: float):
    lo, hi = dm.v_c_range_si(device)
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    i_lo, i_hi = dm.i_out_si(device, lo), dm.i_out_si(device, hi)
    if np.any(I_out_init < i_lo) or np.any(I_out_init > i_hi):
        raise OutOfRange(f"I_out_init {I_out_init:.3e} A outside "
                         f"[{np.max(i_lo):.3e}, {np.min(i_hi):.3e}] A")
    # Fixed iteration count so array-valued devices bisect in lockstep; run on
    # to float resolution, well past the 1 nV tolerance.
    steps = max(int(np.ceil(np.log2(np.max(hi - lo) / BISECTION_TOL))) + 1, 60)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = dm.i_out_si(device, mid) < I_out_init
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    V_C = 0.5 * (lo + hi)
    return V_C if np.ndim(V_C) else float(V_C)


def init_core(device: DeviceParams, I_out_init: float) -> CoreState:
    """
    Preset the capacitor so the core starts at I_out_init.

    Raises:
        OutOfRange: If the current is not representable in the regime
    """
    if device.regime == SUBTHRESHOLD:
        if not np.isfinite(I_out_init):
            raise OutOfRange(f"I_out_init {I_out_init!r} is not finite")
        V_C = dm.v_initial(device, I_out_init)
        if np.any(dm.exponent_saturated(device, V_C)):
            raise OutOfRange(f"I_out_init {I_out_init:.3e} A exceeds the exponential range")
        return CoreState(V_C)
    return CoreState(_init_si(device, I_out_init))


def read_out(state: CoreState, device: DeviceParams, regime: str = None) -> CoreReadout:
    """Branch currents, output current and the (I_B, I_A) rail pair of a core."""
    regime = regime or device.regime
    V_C = state.V_C
    if regime == SUBTHRESHOLD:
        I_A, I_B = dm.branch_currents_sub(device, V_C)
        saturated = dm.exponent_saturated(device, V_C)
    else:
        I_A, I_B = dm.branch_currents_si(device, V_C)
        saturated = dm.device_off_si(device, V_C)
    return CoreReadout(I_A, I_B, I_B - I_A, BilateralSignal(I_B, I_A), saturated)
