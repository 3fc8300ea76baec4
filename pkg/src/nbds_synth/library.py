"""
Library Module

The built-in case studies (FitzHugh-Nagumo, Lorenz, subcritical Hopf, the
first-order synapse and three-neuron networks, strong-inversion FHN) and the
FHN stimulus protocols.

Time constants are written out directly; each equals (n_n+n_p)·V_T·C/I_dc at
the default device and the capacitance listed in its docstring.
"""

import logging
from collections import OrderedDict
from typing import Callable, Dict, List, Tuple

from .device_models import StrongInversionParams, SubthresholdParams
from .errors import ValidationError
from .sysdsl import (Add, ConstCurrent, DriveSpec, DynSystem, Expr, InputDecl, InputRef,
                     Mul, Square, StateDecl, StateRef)

logger = logging.getLogger(__name__)

NANO = 1e-9
MICRO = 1e-6

# Staggered neuron initial values for the network builtins, in nA.
NETWORK_INITS = ((-1.2, -0.6), (-0.9, -0.4), (-0.6, -0.2))
NETWORK_DRIVE = 0.6e-9
SYNAPSE_TAU = 0.05
SYNAPSE_IDC = 1.04e-9
COUPLING = 0.01

TOPOLOGIES = ("a", "b", "c")


# (I_b, I_c, I_d, I_x) per current scale.
FHN_CONSTANTS = {
    NANO: (3e-9, 0.7e-9, 0.8e-9, 1e-9),
    MICRO: (3e-6, 0.7e-6, 0.8e-6, 1e-6),
}


def _fhn_equations(v: str, w: str, drive: str, unit: float) -> Tuple[Expr, Expr]:
    """F_v = v − v³/(I_b·I_x) − w + I_ext, F_w = v + I_c − I_d·w/I_x."""
    V, W = StateRef(v), StateRef(w)
    I_b, I_c, I_d, I_x = FHN_CONSTANTS[unit]
    f_v = V - Mul(Square(V, I_x), V, I_b) - W + InputRef(drive)
    f_w = V + ConstCurrent(I_c) - Mul(ConstCurrent(I_d), W, I_x)
    return f_v, f_w


def builtin_fhn() -> DynSystem:
    """FitzHugh-Nagumo neuron, 1 V ⟺ 1 nA; C = 800 pF, V_b = 1.2 V."""
    f_v, f_w = _fhn_equations("v", "w", "I_ext", NANO)
    return DynSystem(
        name="fhn",
        states=(StateDecl("v", 0.65, 80e-12, -1.2e-9),
                StateDecl("w", 8.125, 6.4e-12, -0.6e-9)),
        inputs=(InputDecl("I_ext", DriveSpec.constant(0.6e-9)),),
        equations={"v": f_v, "w": f_w},
        regime="subthreshold",
        device=SubthresholdParams(V_b=1.2),
    )


def builtin_lorenz() -> DynSystem:
    """Lorenz attractor with σ = 10, ρ = 28, β = 8/3; C = 400 pF, V_b = 1.5 V."""
    x, y, z = StateRef("x"), StateRef("y"), StateRef("z")
    I_x = 1e-9
    equations = {
        "x": y - x,
        "y": Mul(x, ConstCurrent(28e-9) - z, I_x) - y,
        "z": Mul(x, y, I_x) - Mul(ConstCurrent(8e-9 / 3), z, I_x),
    }
    return DynSystem(
        name="lorenz",
        states=(StateDecl("x", 1.3e-6, 20e-9, 1e-9),
                StateDecl("y", 13e-6, 2e-9, 1e-9),
                StateDecl("z", 13e-6, 2e-9, 1e-9)),
        inputs=(),
        equations=equations,
        regime="subthreshold",
        device=SubthresholdParams(V_b=1.5),
    )


def builtin_hopf(init_outside: bool = False) -> DynSystem:
    """
    Subcritical Hopf oscillator, μ = −0.5; C = 500 pF, V_b = 1.2 V.

    The origin is stable, the limit cycle at r = √0.5·I_x unstable and the one
    at r = I_x stable. The default initial point lies inside the unstable
    cycle (damped response); `init_outside` starts beyond it (oscillation).
    """
    x, y = StateRef("x"), StateRef("y")
    I_x = 1e-9
    radius = Add(Square(x, I_x), Square(y, I_x))
    shifted = radius - ConstCurrent(0.5e-9)
    shrink = ConstCurrent(1e-9) - Square(x, I_x) - Square(y, I_x)
    equations = {
        "x": -y + Mul(Mul(x, shifted, I_x), shrink, I_x),
        "y": x + Mul(Mul(y, shifted, I_x), shrink, I_x),
    }
    x0 = 0.9e-9 if init_outside else 0.5e-9
    return DynSystem(
        name="hopf",
        states=(StateDecl("x", 0.065, 0.5e-9, x0),
                StateDecl("y", 0.065, 0.5e-9, 0.0)),
        inputs=(),
        equations=equations,
        regime="subthreshold",
        device=SubthresholdParams(V_b=1.2),
    )


def builtin_synapse() -> DynSystem:
    """First-order low-pass synapse τ·ẋ = −x + I, τ = 50 ms; C = 800 pF."""
    return DynSystem(
        name="synapse",
        states=(StateDecl("x", SYNAPSE_TAU, SYNAPSE_IDC, 0.0),),
        inputs=(InputDecl("I", DriveSpec.step(0.0, 1e-9)),),
        equations={"x": InputRef("I") - StateRef("x")},
        regime="subthreshold",
        device=SubthresholdParams(V_b=1.2),
    )


def _edge_sign(topology: str, pre: int, post: int) -> int:
    if topology == "a":
        return 1
    if topology == "c":
        return -1
    return 1 if {pre, post} == {1, 2} else -1


def builtin_network(topology: str, coupling: float = COUPLING) -> DynSystem:
    """
    Three FHN neurons coupled through first-order synapses.

    Every directed pair (i, j) gets a synapse s<i><j> low-pass filtering v_i;
    neuron j adds ±coupling·s<i><j> to its F_v.

    The system has 12 states: two per neuron (v<j>, w<j>) and one per directed
    synapse (s12, s13, s21, s23, s31, s32). Counting a neuron as a single
    state and sharing one synapse per presynaptic neuron would give 9; here
    each postsynaptic target keeps its own filtered copy.

    Args:
        topology: "a" all excitatory, "b" 1↔2 excitatory with every link to
            or from neuron 3 inhibitory, "c" all inhibitory
        coupling: Connection strength (0 decouples the neurons)
    """
    if topology not in TOPOLOGIES:
        raise ValidationError(f"unknown network topology '{topology}' (a|b|c)")
    if coupling < 0:
        raise ValidationError("coupling strength is a magnitude; signs come from the topology")
    neurons = (1, 2, 3)
    edges = [(i, j) for i in neurons for j in neurons if i != j]
    states: List[StateDecl] = []
    inputs: List[InputDecl] = []
    equations: Dict[str, Expr] = {}
    weight = ConstCurrent(coupling * NANO)

    for j in neurons:
        v, w, drive = f"v{j}", f"w{j}", f"I_ext{j}"
        v0, w0 = NETWORK_INITS[j - 1]
        states.append(StateDecl(v, 0.65, 80e-12, v0 * NANO))
        states.append(StateDecl(w, 8.125, 6.4e-12, w0 * NANO))
        inputs.append(InputDecl(drive, DriveSpec.constant(NETWORK_DRIVE)))
        f_v, f_w = _fhn_equations(v, w, drive, NANO)
        for i, post in edges:
            if post != j:
                continue
            term = Mul(weight, StateRef(f"s{i}{j}"), NANO)
            f_v = f_v + term if _edge_sign(topology, i, j) > 0 else f_v - term
        equations[v], equations[w] = f_v, f_w

    for i, j in edges:
        name = f"s{i}{j}"
        states.append(StateDecl(name, SYNAPSE_TAU, SYNAPSE_IDC, 0.0))
        equations[name] = StateRef(f"v{i}") - StateRef(name)

    return DynSystem(
        name=f"network_{topology}",
        states=tuple(states),
        inputs=tuple(inputs),
        equations=equations,
        regime="subthreshold",
        device=SubthresholdParams(V_b=1.2),
    )


def builtin_fhn_si() -> DynSystem:
    """
    FitzHugh-Nagumo on strong-inversion cores, 1 V ⟺ 1 µA.

    C = 800 pF with I_dc_v = 80 nA and the (2+β) mapping constant gives
    τ_v = 1.5 s.
    """
    f_v, f_w = _fhn_equations("v", "w", "I_ext", MICRO)
    return DynSystem(
        name="fhn_si",
        states=(StateDecl("v", 1.5, 80e-9, -1.2e-6),
                StateDecl("w", 18.75, 6.4e-9, -0.6e-6)),
        inputs=(InputDecl("I_ext", DriveSpec.constant(0.6e-6)),),
        equations={"v": f_v, "w": f_w},
        regime="strong_inversion",
        device=StrongInversionParams(),
    )


# ---------------------------------------------------------------------------
# Stimulus protocols
# ---------------------------------------------------------------------------

PROTOCOLS = ("graded", "block", "rebound", "accommodation", "tonic")

# Suggested run length per protocol, in units of τ_v.
PROTOCOL_SPANS = {"graded": 200.0, "block": 400.0, "rebound": 100.0,
                  "accommodation": 550.0, "tonic": 100.0}

_EDGE = 0.05


def _pulse_train(tau: float, starts, width: float, amplitudes) -> DriveSpec:
    points = [(0.0, 0.0)]
    for start, amplitude in zip(starts, amplitudes):
        t0, t1 = start * tau, (start + width) * tau
        points += [(t0, 0.0), (t0 + _EDGE * tau, amplitude),
                   (t1, amplitude), (t1 + _EDGE * tau, 0.0)]
    return DriveSpec.pwl(points)


def protocol_drive(name: str, tau_v: float, unit: float = NANO) -> DriveSpec:
    """Input current of an FHN stimulus protocol for a neuron with time constant tau_v."""
    if name == "graded":
        return _pulse_train(tau_v, (20.0, 80.0, 140.0), 5.0,
                            (0.1 * unit, 0.3 * unit, 1.0 * unit))
    if name == "block":
        return DriveSpec.ramp(2.0 * unit / (400.0 * tau_v))
    if name == "rebound":
        return DriveSpec.pulse(10.0 * tau_v, 10.0 * tau_v, -1.0 * unit)
    if name == "accommodation":
        level = 0.3 * unit
        return DriveSpec.pwl([(0.0, 0.0), (300.0 * tau_v, level), (350.0 * tau_v, level),
                              (400.0 * tau_v, 0.0), (450.0 * tau_v, 0.0),
                              ((450.0 + _EDGE) * tau_v, level)])
    if name == "tonic":
        return DriveSpec.constant(0.6 * unit)
    raise ValidationError(f"unknown protocol '{name}' ({'|'.join(PROTOCOLS)})")


def fhn_protocol(name: str, base: DynSystem = None) -> DynSystem:
    """
    FHN neuron driven by one of the stimulus protocols.

    Args:
        name: graded, block, rebound, accommodation or tonic
        base: FHN system to drive (builtin_fhn by default; builtin_fhn_si works
            too and is driven in µA)

    Returns:
        The system with its I_ext drive replaced; the rebound protocol starts
        from rest with no background drive
    """
    base = base or builtin_fhn()
    if "I_ext" not in base.input_names or "v" not in base.state_names:
        raise ValidationError(f"system '{base.name}' is not an FHN neuron")
    unit = MICRO if base.regime == "strong_inversion" else NANO
    logger.info("Applying '%s' protocol to %s", name, base.name)
    return base.with_drive("I_ext", protocol_drive(name, base.state("v").tau, unit))


def protocol_span(name: str, sys: DynSystem) -> float:
    """Suggested t_end for a protocol run."""
    if name not in PROTOCOL_SPANS:
        raise ValidationError(f"unknown protocol '{name}' ({'|'.join(PROTOCOLS)})")
    return PROTOCOL_SPANS[name] * sys.state("v").tau


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_REGISTRY: "OrderedDict[str, Tuple[Callable[[], DynSystem], str]]" = OrderedDict([
    ("fhn", (builtin_fhn, "FitzHugh-Nagumo neuron, subthreshold, 80 pA / 6.4 pA bias")),
    ("lorenz", (builtin_lorenz, "Lorenz attractor, sigma=10 rho=28 beta=8/3, 400 pF")),
    ("hopf", (builtin_hopf, "subcritical Hopf oscillator, mu=-0.5, bistable")),
    ("synapse", (builtin_synapse, "first-order low-pass synapse, tau=50 ms")),
    ("network-a", (lambda: builtin_network("a"), "3 FHN neurons, all-excitatory synapses")),
    ("network-b", (lambda: builtin_network("b"), "3 FHN neurons, 1<->2 excitatory, 3 inhibitory")),
    ("network-c", (lambda: builtin_network("c"), "3 FHN neurons, all-inhibitory synapses")),
    ("fhn-si", (builtin_fhn_si, "FitzHugh-Nagumo neuron, strong inversion, uA scaling")),
])


def builtin_names() -> List[str]:
    return list(_REGISTRY)


def provenance(name: str) -> str:
    return _lookup(name)[1]


def builtin(name: str) -> DynSystem:
    """Instantiate a builtin system by its registry name."""
    return _lookup(name)[0]()


def _lookup(name: str):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValidationError(
            f"unknown system '{name}' (builtins: {', '.join(_REGISTRY)})") from None
