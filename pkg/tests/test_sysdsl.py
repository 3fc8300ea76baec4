#!/usr/bin/env python3
"""
Tests for the system description language: parsing, validation,
evaluation and pretty-printing.
"""

import sys
import os

# Add src directory to path
src_dir = os.path.join(os.path.dirname(__file__), '..', 'src')
sys.path.insert(0, src_dir)

import numpy as np
import pytest

from nbds_synth.device_models import SubthresholdParams
from nbds_synth.errors import ParseError, ValidationError
from nbds_synth.library import builtin, builtin_names
from nbds_synth.sysdsl import (Add, ConstCurrent, DivByConst, DriveSpec, DynSystem, InputRef,
                               Mul, Neg, Square, StateDecl, StateRef, Sub, compile_expr,
                               eval_expr, parse, render)

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')

SYNAPSE_TEXT = """
# first-order synapse
system syn
state x tau=50ms idc=1.04nA init=0nA
input I step 0s 1nA
eq x = I - x
"""


def test_parse_minimal_system():
    sys_ = parse(SYNAPSE_TEXT)
    assert sys_.name == "syn"
    assert sys_.regime == "subthreshold"
    assert sys_.state("x") == StateDecl("x", 0.05, 1.04e-9, 0.0)
    assert sys_.equations["x"] == Sub(InputRef("I"), StateRef("x"))
    assert sys_.inputs[0].drive == DriveSpec.step(0.0, 1e-9)


def test_parse_products_and_squares():
    text = ("system s\nstate v tau=1s idc=1nA\ninput u constant 0.5nA\n"
            "eq v = v - sq(v / 1nA) * v / 3nA + 0.7nA * u / 1nA + v / 2nA\n")
    expr = parse(text).equations["v"]
    expected = Add(Add(Sub(StateRef("v"), Mul(Square(StateRef("v"), 1e-9), StateRef("v"), 3e-9)),
                       Mul(ConstCurrent(0.7e-9), InputRef("u"), 1e-9)),
                   DivByConst(StateRef("v"), 2e-9))
    assert expr == expected


def test_product_without_scale_is_rejected():
    text = "system s\nstate v tau=1s idc=1nA\neq v = v * v\n"
    with pytest.raises(ValidationError, match="scale current"):
        parse(text)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as info:
        parse("")
    assert (info.value.line, info.value.col) == (1, 1)
    with pytest.raises(ParseError) as info:
        parse("system s\nstate v tau=1s idc=1nA\neq v = v + $\n")
    assert info.value.line == 3
    assert info.value.col == 12
    with pytest.raises(ParseError):
        parse("state v tau=1s idc=1nA\neq v = v\n")
    with pytest.raises(ParseError):
        parse("system s\nstate v tau=1nA idc=1nA\neq v = v\n")


def test_validation_errors():
    with pytest.raises(ValidationError, match="unresolved"):
        parse("system s\nstate v tau=1s idc=1nA\neq v = q\n")
    with pytest.raises(ValidationError, match="no equation"):
        parse("system s\nstate v tau=1s idc=1nA\nstate w tau=1s idc=1nA\neq v = w\n")
    with pytest.raises(ValidationError):
        parse("system s\nstate v tau=1s idc=1nA\neq v = v\neq v = -v\n")
    with pytest.raises(ValidationError):
        DynSystem("s", (StateDecl("v", 0.0, 1e-9, 0.0),), (), {"v": StateRef("v")})
    with pytest.raises(ValidationError):
        DynSystem("s", (StateDecl("v", 1.0, 1e-9, 0.0),), (), {"v": Mul(StateRef("v"),
                                                                         StateRef("v"), 0.0)})


def test_device_line_and_regime():
    text = ("system s\nregime strong_inversion\ndevice k_n=50uA/V2 V_th=0.4V\n"
            "state v tau=1s idc=1uA\neq v = -v\n")
    sys_ = parse(text)
    assert sys_.regime == "strong_inversion"
    assert sys_.device.k_n == 50e-6
    assert sys_.device.V_th == 0.4
    with pytest.raises(ParseError):
        parse("system s\ndevice k_n=1\nstate v tau=1s idc=1nA\neq v = v\n")


def test_eval_expr_and_compiled_closure_agree():
    e = Sub(Mul(Square(StateRef("v"), 1e-9), StateRef("v"), 3e-9), Neg(InputRef("u")))
    states, inputs = {"v": 1.5e-9}, {"u": 0.2e-9}
    expected = 1.5e-9 ** 3 / (1e-9 * 3e-9) + 0.2e-9
    assert eval_expr(e, states, inputs) == pytest.approx(expected, rel=1e-12)
    assert compile_expr(e)(states, inputs) == eval_expr(e, states, inputs)
    arrays = {"v": np.array([1e-9, -1e-9])}
    assert np.allclose(eval_expr(e, arrays, inputs), [1e-9 / 3 + 0.2e-9, -1e-9 / 3 + 0.2e-9],
                       rtol=1e-12, atol=0.0)


def test_drives():
    assert DriveSpec.pulse(1.0, 0.5, 2e-9).value_at(1.0) == 2e-9
    assert DriveSpec.pulse(1.0, 0.5, 2e-9).value_at(1.5) == 0.0
    assert DriveSpec.step(1.0, 1e-9).value_at(0.999) == 0.0
    assert DriveSpec.ramp(1e-9).value_at(2.0) == pytest.approx(2e-9)
    pwl = DriveSpec.pwl([(0.0, 0.0), (2.0, 1e-9)])
    assert pwl.value_at(1.0) == pytest.approx(0.5e-9)
    assert pwl.value_at(5.0) == pytest.approx(1e-9)
    with pytest.raises(ValidationError):
        DriveSpec.pwl([(1.0, 0.0), (1.0, 1e-9)])
    with pytest.raises(ValidationError):
        DriveSpec("sine")


def test_render_parse_identity_for_every_builtin():
    for name in builtin_names():
        system = builtin(name)
        assert parse(render(system)) == system, name


def test_render_keeps_drives_and_device():
    system = builtin("synapse").with_drive("I", DriveSpec.pwl([(0.0, 0.0), (0.1, -1e-9)]))
    system = system.with_device(SubthresholdParams(V_b=1.4, n_n=1.35))
    text = render(system)
    assert "device" in text
    assert parse(text) == system


def test_shipped_fhn_description_matches_builtin():
    with open(os.path.join(DATA_DIR, "fhn.nbds"), encoding="utf-8") as handle:
        assert parse(handle.read()) == builtin("fhn")


def test_system_helpers():
    fhn = builtin("fhn")
    assert fhn.tau_min == 0.65 and fhn.tau_max == 8.125
    moved = fhn.with_inits(v=0.0)
    assert moved.state("v").init == 0.0 and moved.state("w").init == -0.6e-9
    with pytest.raises(ValidationError):
        fhn.with_inits(q=1.0)
    with pytest.raises(ValidationError):
        fhn.with_drive("I_missing", DriveSpec.constant(0.0))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
