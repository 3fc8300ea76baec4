"""
TL Blocks Module

Ideal behavioral models of the translinear computation blocks the compiler
targets. Signals are currents; a bilateral signal travels as two non-negative
rails whose difference is its value.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

# Scale binding used by the strong-inversion I_Cin stage: 2·√(I·0.25 A) = √I.
UNIT_ROOT_SCALE = 0.25


@dataclass(frozen=True)
class BilateralSignal:
    """
    A current carried as a pair of non-negative rails.

    The representation is not canonical: both rails may be large at once, as
    with the core's (I_B, I_A) outputs.
    """

    pos: Union[float, np.ndarray]
    neg: Union[float, np.ndarray]

    def value(self):
        return self.pos - self.neg

    def swapped(self) -> "BilateralSignal":
        return BilateralSignal(self.neg, self.pos)


@dataclass(frozen=True)
class ScaleCurrent:
    """Strictly positive constant current that restores current dimensions."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValidationError(f"scale current must be positive, got {self.value!r}")


def mult_type1(I1, I2, I3: ScaleCurrent):
    """Single-sided multiplier I1·I2/I3 (PMULT and NMULT alike)."""
    return I1 * I2 / I3.value


def squarer_type1(I_in, I_X: ScaleCurrent):
    return I_in * I_in / I_X.value


def squarer_type2(x: BilateralSignal, I_X: ScaleCurrent):
    """
    Square of a bilateral input, (A−B)²/I_X.

    Built rail-wise as A²/I_X + B²/I_X − 2AB/I_X; the result is single-sided.
    With large, nearly equal rails the difference of the two branches can round
    a few ulps below zero, so the output is clamped at 0. The clamp never
    exceeds rounding of the rail-wise sum, about 1e-16·(A+B)²/I_X.
    """
    scale = I_X.value
    summed = (x.pos * x.pos + x.neg * x.neg) / scale
    cross = 2.0 * x.pos * x.neg / scale
    return np.maximum(summed - cross, 0.0)


def mult_type2(c, x: BilateralSignal, I_X: ScaleCurrent) -> BilateralSignal:
    """Single-sided C times bilateral (A−B): rails (A·C/I_X, B·C/I_X)."""
    scale = I_X.value
    return BilateralSignal(x.pos * c / scale, x.neg * c / scale)


def mult_type3(x: BilateralSignal, y: BilateralSignal, I_dc: ScaleCurrent) -> BilateralSignal:
    """Four-quadrant product: rails ((AC+BD)/I_dc, (AD+BC)/I_dc)."""
    scale = I_dc.value
    return BilateralSignal((x.pos * y.pos + x.neg * y.neg) / scale,
                           (x.pos * y.neg + x.neg * y.pos) / scale)


def splitter(v) -> BilateralSignal:
    """Separate a signed current into its minimal positive and negative rails."""
    return BilateralSignal(np.maximum(v, 0.0), np.maximum(np.negative(v), 0.0))


def root_square(I_in, I_b: ScaleCurrent):
    """Strong-inversion root square block, 2·√(I_in·I_b)."""
    return 2.0 * np.sqrt(I_in * I_b.value)


def mult_core(I_in, I_b: ScaleCurrent):
    """Strong-inversion MULT core, (I_in + I_b/2)²/I_b."""
    shifted = I_in + 0.5 * I_b.value
    return shifted * shifted / I_b.value


def bilateral_mult_si(x: BilateralSignal, y: BilateralSignal, I_b: ScaleCurrent) -> BilateralSignal:
    """
    Strong-inversion bilateral multiplier.

    Four MULT cores fed with X±Y± sums; their linear and constant terms cancel
    pairwise, leaving rails 2(X⁺Y⁺+X⁻Y⁻)/I_b and 2(X⁻Y⁺+X⁺Y⁻)/I_b. The value is
    2·X·Y/I_b, so value-preserving products bind I_b to twice the scale.
    """
    scale = I_b.value
    return BilateralSignal(2.0 * (x.pos * y.pos + x.neg * y.neg) / scale,
                           2.0 * (x.neg * y.pos + x.pos * y.neg) / scale)


def bilateral_mult_from_cores(x: BilateralSignal, y: BilateralSignal, I_b: ScaleCurrent):
    """Value of the bilateral multiplier assembled literally from four MULT cores."""
    return (mult_core(x.pos + y.pos, I_b) + mult_core(x.neg + y.neg, I_b)
            - mult_core(x.neg + y.pos, I_b) - mult_core(x.pos + y.neg, I_b))
