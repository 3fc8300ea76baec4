"""
Errors Module

Exception types shared by the compiler, the circuit models and the simulator.
"""

from typing import Optional


class NBDSError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(NBDSError):
    """A parameter record or system description violates an invariant."""


class ParseError(NBDSError):
    """Syntax error in a system description."""

    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"line {line}, col {col}: {message}")


class ConfigError(NBDSError):
    """Malformed or unknown entry in a parameter file."""


class LoweringError(NBDSError):
    """An expression needs a block the target regime does not provide."""


class OutOfRange(NBDSError):
    """A requested current lies outside the core's representable range."""


class DenominatorUnderflow(NBDSError):
    """The I_Cin denominator collapsed; the core left its operating region."""


class NonFiniteError(NBDSError):
    """Integration produced NaN or infinity."""

    def __init__(self, t: float, state: Optional[str] = None):
        self.t = t
        self.state = state
        where = f" in state '{state}'" if state else ""
        super().__init__(f"non-finite value{where} at t={t:.6g} s")


class NoOscillation(NBDSError):
    """A trace does not contain enough cycles to measure a period."""
