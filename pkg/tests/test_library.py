#!/usr/bin/env python3
"""
Tests for the built-in case studies and the FHN stimulus protocols.
"""

import sys
import os
from dataclasses import replace

# Add src directory to path
src_dir = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_dir)

import pytest

from nbds_synth import library
from nbds_synth.errors import ValidationError
from nbds_synth.metrics import phase_offsets
from nbds_synth.simlab import SimConfig, integrate_math
from nbds_synth.sysdsl import Mul, Square, eval_expr, parse, walk

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')


def scales(system):
    found = set()
    for expr in system.equations.values():
        for node in walk(expr):
            if isinstance(node, (Mul, Square)):
                found.add(node.scale)
    return found


def test_registry_order_and_provenance():
    assert library.builtin_names() == ["fhn", "lorenz", "hopf", "synapse", "network-a",
                                       "network-b", "network-c", "fhn-si"]
    for name in library.builtin_names():
        assert library.provenance(name)
        assert library.builtin(name).states
    with pytest.raises(ValidationError):
        library.builtin("van-der-pol")


def test_fhn_constants():
    fhn = library.builtin_fhn()
    assert [(s.tau, s.I_dc, s.init) for s in fhn.states] == \
        [(0.65, 80e-12, -1.2e-9), (8.125, 6.4e-12, -0.6e-9)]
    assert fhn.device.V_b == 1.2
    assert scales(fhn) == {1e-9, 3e-9}
    # F_v at v = 1 nA, w = 0, I = 0: 1 − 1/3 nA
    values = {"v": 1e-9, "w": 0.0}
    assert eval_expr(fhn.equations["v"], values, {"I_ext": 0.0}) == pytest.approx(2e-9 / 3)
    assert eval_expr(fhn.equations["w"], values, {}) == pytest.approx(1.7e-9)


def test_lorenz_constants():
    lorenz = library.builtin_lorenz()
    assert [s.tau for s in lorenz.states] == [1.3e-6, 13e-6, 13e-6]
    assert lorenz.device.V_b == 1.5
    values = {"x": 1e-9, "y": 2e-9, "z": 3e-9}
    assert eval_expr(lorenz.equations["y"], values, {}) == pytest.approx(23e-9)
    assert eval_expr(lorenz.equations["z"], values, {}) == pytest.approx(2e-9 - 8e-9)


def test_hopf_cycles():
    hopf = library.builtin_hopf()
    assert hopf.state("x").init == 0.5e-9
    assert library.builtin_hopf(init_outside=True).state("x").init == 0.9e-9
    # Radial factor vanishes on both cycles and changes sign between them.
    for r, sign in ((0.5, -1), (0.9, 1), (1.1, -1)):
        f_x = eval_expr(hopf.equations["x"], {"x": r * 1e-9, "y": 0.0}, {})
        assert f_x * sign > 0
    for r in (0.5 ** 0.5, 1.0):
        f_x = eval_expr(hopf.equations["x"], {"x": r * 1e-9, "y": 0.0}, {})
        assert abs(f_x) < 1e-24


def test_shipped_hopf_description():
    with open(os.path.join(DATA_DIR, "bistable_hopf.nbds"), encoding="utf-8") as handle:
        parsed = parse(handle.read())
    assert parsed == replace(library.builtin_hopf(init_outside=True), name="hopf_outside")


def test_synapse():
    syn = library.builtin_synapse()
    assert syn.state("x").tau == 0.05
    assert syn.input_values_at(0.0) == {"I": 1e-9}


def test_network_topologies():
    for topology, signs in (("a", {"+"}), ("c", {"-"}), ("b", {"+", "-"})):
        net = library.builtin_network(topology)
        assert net.name == f"network_{topology}"
        assert len(net.states) == 12
        assert net.state_names[:6] == ["v1", "w1", "v2", "w2", "v3", "w3"]
        assert net.state("s12").tau == 0.05
        base = {name: 0.0 for name in net.state_names}
        inputs = {f"I_ext{j}": 0.0 for j in (1, 2, 3)}
        seen = set()
        for i, j in ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)):
            values = dict(base, **{f"s{i}{j}": 1e-9})
            f_v = eval_expr(net.equations[f"v{j}"], values, inputs)
            assert abs(f_v) == pytest.approx(0.01e-9)
            seen.add("+" if f_v > 0 else "-")
            if topology == "b":
                assert (f_v > 0) == ({i, j} == {1, 2})
        assert seen == signs


def test_network_validation():
    with pytest.raises(ValidationError):
        library.builtin_network("d")
    with pytest.raises(ValidationError):
        library.builtin_network("a", coupling=-0.01)
    decoupled = library.builtin_network("a", coupling=0.0)
    values = {name: 1e-9 if name.startswith("s") else 0.0 for name in decoupled.state_names}
    assert eval_expr(decoupled.equations["v1"], values, {"I_ext1": 0.0}) == 0.0


def test_excitatory_network_synchronizes():
    net = library.builtin_network("a")
    w = integrate_math(net, SimConfig(dt=0.65 / 100, t_end=400.0, record_stride=10))
    offsets = phase_offsets(w, ("v1", "v2", "v3"))
    assert all(degrees < 15.0 for degrees in offsets.values()), offsets


def test_inhibitory_network_splays():
    # The staggered start resolves into a three-phase rhythm only after ~60 periods.
    net = library.builtin_network("c")
    w = integrate_math(net, SimConfig(dt=0.65 / 100, t_end=1600.0, record_stride=10))
    offsets = phase_offsets(w, ("v1", "v2", "v3"))
    assert all(100.0 <= degrees <= 140.0 for degrees in offsets.values()), offsets


def test_fhn_strong_inversion():
    fhn_si = library.builtin_fhn_si()
    assert fhn_si.regime == "strong_inversion"
    assert [s.tau for s in fhn_si.states] == [1.5, 18.75]
    assert scales(fhn_si) == {1e-6, 3e-6}


def test_protocols():
    tau = 0.65
    graded = library.fhn_protocol("graded")
    drive = graded.inputs[0].drive
    assert drive.value_at(22 * tau) == pytest.approx(0.1e-9)
    assert drive.value_at(82 * tau) == pytest.approx(0.3e-9)
    assert drive.value_at(142 * tau) == pytest.approx(1e-9)
    assert drive.value_at(50 * tau) == 0.0

    block = library.fhn_protocol("block").inputs[0].drive
    assert block.value_at(400 * tau) == pytest.approx(2e-9)

    rebound = library.fhn_protocol("rebound").inputs[0].drive
    assert rebound.value_at(15 * tau) == pytest.approx(-1e-9)
    assert rebound.value_at(25 * tau) == 0.0

    accommodation = library.fhn_protocol("accommodation").inputs[0].drive
    assert accommodation.value_at(300 * tau) == pytest.approx(0.3e-9)
    assert accommodation.value_at(420 * tau) == 0.0
    assert accommodation.value_at(451 * tau) == pytest.approx(0.3e-9)

    assert library.fhn_protocol("tonic").inputs[0].drive.value_at(0.0) == pytest.approx(0.6e-9)
    assert library.protocol_span("rebound", graded) == pytest.approx(65.0)


def test_protocol_errors():
    with pytest.raises(ValidationError):
        library.fhn_protocol("bursting")
    with pytest.raises(ValidationError):
        library.fhn_protocol("tonic", library.builtin_lorenz())


def test_protocol_on_strong_inversion_uses_microamps():
    drive = library.fhn_protocol("tonic", library.builtin_fhn_si()).inputs[0].drive
    assert drive.value_at(0.0) == pytest.approx(0.6e-6)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
