"""
NBDS Synthesis

A synthesis compiler and behavioral simulator for nonlinear bilateral
dynamical systems: ODE systems over currents are lowered onto log-domain
(subthreshold) or strong-inversion translinear circuits, simulated at
device-equation level and checked against direct integration.
"""

__version__ = "0.1.0"

from .experiment import Experiment
from .library import builtin, builtin_names
from .simlab import SimConfig, Waveform
from .synth import Netlist, lower
from .sysdsl import DynSystem, parse

__all__ = ["Experiment", "SimConfig", "Waveform", "Netlist", "DynSystem",
           "builtin", "builtin_names", "lower", "parse"]
