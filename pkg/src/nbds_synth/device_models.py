"""
Device Models Module

Closed-form branch currents, dynamic-range bounds and initialization formulas
for the NBDS main core, in subthreshold (exponential) and strong-inversion
(square-law) operation.

Every function is written with numpy ufuncs so the parameter records may hold
either scalars or equally shaped arrays; the Monte Carlo harness relies on the
array form to advance many perturbed circuits in one sweep.
"""

import logging
from dataclasses import dataclass, replace
from typing import ClassVar, Tuple

import numpy as np

from .errors import OutOfRange, ValidationError

logger = logging.getLogger(__name__)

# Exponent arguments are clamped here before exponentiation.
EXP_CLAMP = 200.0


def _require(condition, message: str):
    if not np.all(condition):
        raise ValidationError(message)


def _clamped_exp(x):
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))


@dataclass(frozen=True)
class SubthresholdParams:
    """
    Process and bias constants of a subthreshold (log-domain) core.

    Attributes:
        n_n: NMOS subthreshold slope factor
        n_p: PMOS subthreshold slope factor
        V_T: Thermal voltage (V)
        I_Sn: NMOS leakage scale with W/L folded in (A)
        I_Sp: PMOS leakage scale (A)
        V_DD: Supply voltage (V)
        V_b: Core bias voltage (V)
    """

    regime: ClassVar[str] = "subthreshold"

    n_n: float = 1.3
    n_p: float = 1.2
    V_T: float = 0.026
    I_Sn: float = 1e-15
    I_Sp: float = 1e-15
    V_DD: float = 3.3
    V_b: float = 1.2

    def __post_init__(self):
        _require(np.greater(self.n_n, 0) & np.greater(self.n_p, 0),
                 "slope factors n_n and n_p must be positive")
        _require(np.greater(self.V_T, 0), "thermal voltage V_T must be positive")
        _require(np.greater(self.I_Sn, 0) & np.greater(self.I_Sp, 0),
                 "leakage scales I_Sn and I_Sp must be positive")
        _require(np.greater(self.V_b, 0) & np.less(self.V_b, self.V_DD),
                 "bias voltage must satisfy 0 < V_b < V_DD")

    @property
    def alpha(self):
        return self.n_p / self.n_n

    @property
    def slope_sum(self):
        return self.n_n + self.n_p

    @property
    def log_scale(self):
        """(n_n + n_p)·V_T, the voltage that multiplies I_out by e."""
        return (self.n_n + self.n_p) * self.V_T

    def with_bias(self, V_b: float) -> "SubthresholdParams":
        return replace(self, V_b=V_b)


@dataclass(frozen=True)
class StrongInversionParams:
    """
    Square-law constants of a strong-inversion core.

    Attributes:
        k_n: NMOS gain ½·μ_n·C_ox·(W/L) (A/V²)
        k_p: PMOS gain (A/V²)
        V_th: Threshold voltage (V)
        V_DD: Supply voltage (V)
        V_b: Core bias voltage (V)
    """

    regime: ClassVar[str] = "strong_inversion"

    k_n: float = 100e-6
    k_p: float = 100e-6
    V_th: float = 0.5
    V_DD: float = 3.3
    V_b: float = 3.3

    def __post_init__(self):
        _require(np.greater(self.k_n, 0) & np.greater(self.k_p, 0),
                 "square-law gains k_n and k_p must be positive")
        _require(np.greater(self.V_th, 0), "threshold voltage must be positive")
        _require(np.greater(self.V_b, 2 * np.asarray(self.V_th)),
                 "bias voltage must exceed 2·V_th")

    @property
    def beta_si(self):
        return np.sqrt(self.k_n / self.k_p)

    def with_bias(self, V_b: float) -> "StrongInversionParams":
        return replace(self, V_b=V_b)


# ---------------------------------------------------------------------------
# Subthreshold core
# ---------------------------------------------------------------------------

def beta_sub(p: SubthresholdParams):
    """
    Effective leakage current β of the core.

    β = √(I_Sn·I_Sp)·exp((n_n−n_p)/(2(n_n+n_p))·ln(I_Sn/I_Sp)); reduces to I_Sn
    for matched leakage scales.
    """
    exponent = (p.n_n - p.n_p) / (2.0 * p.slope_sum) * np.log(p.I_Sn / p.I_Sp)
    return np.sqrt(p.I_Sn * p.I_Sp) * np.exp(exponent)


def _branch_exponents(p: SubthresholdParams, V_C):
    U = p.log_scale
    return (p.V_b - V_C) / U, V_C / U


def branch_currents_sub(p: SubthresholdParams, V_C) -> Tuple:
    """
    Branch currents of the subthreshold core at capacitor voltage V_C.

    Args:
        p: Device parameters
        V_C: Capacitor voltage (V)

    Returns:
        (I_A, I_B), both strictly positive. Exponents beyond ±EXP_CLAMP are
        clamped; `exponent_saturated` reports when that happened.
    """
    beta = beta_sub(p)
    arg_a, arg_b = _branch_exponents(p, V_C)
    return beta * _clamped_exp(arg_a), beta * _clamped_exp(arg_b)


def exponent_saturated(p: SubthresholdParams, V_C):
    """True where a branch exponent hit the overflow clamp."""
    arg_a, arg_b = _branch_exponents(p, V_C)
    return (np.abs(arg_a) > EXP_CLAMP) | (np.abs(arg_b) > EXP_CLAMP)


def i_out_sub(p: SubthresholdParams, V_C):
    """Output current I_B − I_A; zero at V_C = V_b/2 and increasing in V_C."""
    I_A, I_B = branch_currents_sub(p, V_C)
    return I_B - I_A


def _ln_leakage_ratio(p: SubthresholdParams):
    return np.log(p.I_Sp / p.I_Sn)


def v_c_min(p: SubthresholdParams):
    """Lowest V_C that keeps M2 saturated."""
    alpha = p.alpha
    return ((1.0 + alpha) / 3.0 * 4.0 * p.V_T
            + (2.0 - alpha) / 3.0 * p.V_b
            + p.n_p * p.V_T * _ln_leakage_ratio(p))


def v_c_min_m4(p: SubthresholdParams):
    """Lowest V_C that keeps M4 saturated."""
    alpha = p.alpha
    return (1.0 + alpha) / alpha * 4.0 * p.V_T + p.n_n * p.V_T * _ln_leakage_ratio(p)


def v_c_max(p: SubthresholdParams):
    """Highest V_C before the upper stack leaves saturation."""
    return (p.slope_sum / (3.0 * p.n_p) * (p.V_DD - 4.0 * p.V_T)
            + p.n_n * p.V_T * _ln_leakage_ratio(p))


def gamma_sub(p: SubthresholdParams):
    """Prefactor γ of the lower output bound, with V_T kept in the exponent."""
    offset = (1.0 + p.alpha) / 3.0 * 4.0 * p.V_T + p.n_p * p.V_T * _ln_leakage_ratio(p)
    return np.exp(offset / p.log_scale)


def i_out_min(p: SubthresholdParams):
    """
    Lower (negative) bound of the output dynamic range.

    β[γ·exp((2−α)V_b/(3(n_n+n_p)V_T)) − exp((1+α)V_b/(3(n_n+n_p)V_T))/γ],
    identical to i_out_sub(p, v_c_min(p)).
    """
    alpha = p.alpha
    U3 = 3.0 * p.log_scale
    gamma = gamma_sub(p)
    return beta_sub(p) * (gamma * np.exp((2.0 - alpha) * p.V_b / U3)
                          - np.exp((1.0 + alpha) * p.V_b / U3) / gamma)


def i_out_max(p: SubthresholdParams):
    """Upper bound of the output dynamic range, reached at v_c_max."""
    return i_out_sub(p, v_c_max(p))


def v_initial(p: SubthresholdParams, I_out_init):
    """
    Capacitor voltage that presets the core output to I_out_init.

    Solves β(ζ − E/ζ) = I_out_init for ζ = exp(V_C/U), E = exp(V_b/U), taking
    the positive root. The root is evaluated in the cancellation-free form for
    negative currents.
    """
    beta = beta_sub(p)
    U = p.log_scale
    ratio = np.asarray(I_out_init, dtype=float) / beta
    two_root_e = 2.0 * np.exp(p.V_b / (2.0 * U))
    radical = np.hypot(ratio, two_root_e)
    # Positive root of ζ² − ratio·ζ − E = 0; for ratio < 0 use ζ = 2E/(radical − ratio).
    zeta = np.where(ratio >= 0,
                    0.5 * (ratio + radical),
                    0.5 * two_root_e * two_root_e / (radical - ratio))
    V_C = U * np.log(zeta)
    return V_C if np.ndim(V_C) else float(V_C)


def min_bias_voltage(p: SubthresholdParams, i_negative: float, tol: float = 1e-6) -> float:
    """
    Smallest bias voltage whose lower output bound covers -|i_negative|.

    Args:
        p: Device parameters (V_b is ignored)
        i_negative: Most negative output current the system must reach
        tol: Bisection tolerance on V_b (V)

    Raises:
        OutOfRange: If even V_b just below V_DD cannot cover the range
    """
    target = -abs(i_negative)
    lo = 16.0 * p.V_T
    hi = p.V_DD * (1.0 - 1e-9)

    def covers(V_b):
        return i_out_min(p.with_bias(V_b)) <= target

    if not covers(hi):
        raise OutOfRange(f"no bias below V_DD={p.V_DD} V reaches {target:.3e} A")
    if covers(lo):
        return float(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if covers(mid):
            hi = mid
        else:
            lo = mid
    logger.info("Minimum bias voltage for %.3e A is %.6f V", target, hi)
    return float(hi)


# ---------------------------------------------------------------------------
# Strong-inversion core
# ---------------------------------------------------------------------------

def _overdrives_si(p: StrongInversionParams, V_C):
    return p.V_b - V_C - 2.0 * p.V_th, V_C - 2.0 * p.V_th


def branch_currents_si(p: StrongInversionParams, V_C) -> Tuple:
    """
    Square-law branch currents of the strong-inversion core.

    I_A = k_n·(max(0, V_b−V_C−2V_th)/(1+β_si))², I_B = k_n·(max(0, V_C−2V_th)/(1+β_si))².
    """
    od_a, od_b = _overdrives_si(p, V_C)
    denom = 1.0 + p.beta_si
    I_A = p.k_n * (np.maximum(od_a, 0.0) / denom) ** 2
    I_B = p.k_n * (np.maximum(od_b, 0.0) / denom) ** 2
    return I_A, I_B


def device_off_si(p: StrongInversionParams, V_C):
    """True where either overdrive was clamped to zero."""
    od_a, od_b = _overdrives_si(p, V_C)
    return (od_a <= 0.0) | (od_b <= 0.0)


def i_out_si(p: StrongInversionParams, V_C):
    I_A, I_B = branch_currents_si(p, V_C)
    return I_B - I_A


def v_c_range_si(p: StrongInversionParams) -> Tuple[float, float]:
    """Capacitor voltages over which both branches conduct."""
    return 2.0 * p.V_th, p.V_b - 2.0 * p.V_th
