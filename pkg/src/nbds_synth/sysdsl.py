"""
System DSL Module

Intermediate representation of bilateral dynamical systems, a line-oriented
parser for it, the inverse pretty-printer and reference evaluation of the
right-hand sides.

    system fhn
    regime subthreshold
    state v tau=0.65s idc=80pA init=-1.2nA
    input I_ext constant 0.6nA
    eq v = v - sq(v / 1nA) * v / 3nA - w + I_ext
"""

import re
import logging
from dataclasses import dataclass, fields, replace
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from . import config
from .device_models import StrongInversionParams, SubthresholdParams
from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

REGIMES = ("subthreshold", "strong_inversion")
DRIVE_KINDS = ("constant", "step", "pulse", "ramp", "pwl")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Base class of right-hand-side expression nodes."""

    def __add__(self, other: "Expr") -> "Expr":
        return Add(self, other)

    def __sub__(self, other: "Expr") -> "Expr":
        return Sub(self, other)

    def __neg__(self) -> "Expr":
        return Neg(self)

    def children(self) -> Tuple["Expr", ...]:
        return ()


@dataclass(frozen=True)
class StateRef(Expr):
    name: str


@dataclass(frozen=True)
class InputRef(Expr):
    name: str


@dataclass(frozen=True)
class ConstCurrent(Expr):
    value: float


@dataclass(frozen=True)
class Neg(Expr):
    x: Expr

    def children(self):
        return (self.x,)


@dataclass(frozen=True)
class Add(Expr):
    l: Expr
    r: Expr

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Sub(Expr):
    l: Expr
    r: Expr

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Mul(Expr):
    """l·r/scale."""

    l: Expr
    r: Expr
    scale: float

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Square(Expr):
    """x²/scale."""

    x: Expr
    scale: float

    def children(self):
        return (self.x,)


@dataclass(frozen=True)
class DivByConst(Expr):
    """x/scale."""

    x: Expr
    scale: float

    def children(self):
        return (self.x,)


def walk(e: Expr):
    """Yield every node of the tree, parents before children."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def eval_expr(e: Expr, state_values: Mapping[str, float], input_values: Mapping[str, float]):
    """
    Reference real-valued evaluation of an expression.

    Works elementwise when the mapped values are numpy arrays.
    """
    if isinstance(e, StateRef):
        return state_values[e.name]
    if isinstance(e, InputRef):
        return input_values[e.name]
    if isinstance(e, ConstCurrent):
        return e.value
    if isinstance(e, Neg):
        return -eval_expr(e.x, state_values, input_values)
    if isinstance(e, Add):
        return eval_expr(e.l, state_values, input_values) + eval_expr(e.r, state_values, input_values)
    if isinstance(e, Sub):
        return eval_expr(e.l, state_values, input_values) - eval_expr(e.r, state_values, input_values)
    if isinstance(e, Mul):
        return (eval_expr(e.l, state_values, input_values)
                * eval_expr(e.r, state_values, input_values) / e.scale)
    if isinstance(e, Square):
        x = eval_expr(e.x, state_values, input_values)
        return x * x / e.scale
    if isinstance(e, DivByConst):
        return eval_expr(e.x, state_values, input_values) / e.scale
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e: Expr) -> Callable[[Mapping, Mapping], object]:
    """Turn an expression into a closure f(state_values, input_values)."""
    if isinstance(e, StateRef):
        name = e.name
        return lambda s, i: s[name]
    if isinstance(e, InputRef):
        name = e.name
        return lambda s, i: i[name]
    if isinstance(e, ConstCurrent):
        value = e.value
        return lambda s, i: value
    if isinstance(e, Neg):
        fx = compile_expr(e.x)
        return lambda s, i: -fx(s, i)
    if isinstance(e, (Add, Sub)):
        fl, fr = compile_expr(e.l), compile_expr(e.r)
        if isinstance(e, Add):
            return lambda s, i: fl(s, i) + fr(s, i)
        return lambda s, i: fl(s, i) - fr(s, i)
    if isinstance(e, Mul):
        fl, fr, scale = compile_expr(e.l), compile_expr(e.r), e.scale
        return lambda s, i: fl(s, i) * fr(s, i) / scale
    if isinstance(e, Square):
        fx, scale = compile_expr(e.x), e.scale

        def square(s, i):
            x = fx(s, i)
            return x * x / scale
        return square
    if isinstance(e, DivByConst):
        fx, scale = compile_expr(e.x), e.scale
        return lambda s, i: fx(s, i) / scale
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Drives and systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriveSpec:
    """
    Time course of an external input current.

    kinds: constant(amplitude), step(t0, amplitude), pulse(t0, width,
    amplitude), ramp(rate) and pwl(points) with linear interpolation held
    constant beyond the end points.
    """

    kind: str
    amplitude: float = 0.0
    t0: float = 0.0
    width: float = 0.0
    rate: float = 0.0
    points: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise ValidationError(f"unknown drive kind '{self.kind}'")
        if self.t0 < 0 or self.width < 0:
            raise ValidationError("drive times must be non-negative")
        if self.kind == "pwl":
            times = [t for t, _ in self.points]
            if not times:
                raise ValidationError("pwl drive needs at least one point")
            if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
                raise ValidationError("pwl times must be non-negative and strictly increasing")

    @classmethod
    def constant(cls, amplitude: float) -> "DriveSpec":
        return cls("constant", amplitude=amplitude)

    @classmethod
    def step(cls, t0: float, amplitude: float) -> "DriveSpec":
        return cls("step", amplitude=amplitude, t0=t0)

    @classmethod
    def pulse(cls, t0: float, width: float, amplitude: float) -> "DriveSpec":
        return cls("pulse", amplitude=amplitude, t0=t0, width=width)

    @classmethod
    def ramp(cls, rate: float) -> "DriveSpec":
        return cls("ramp", rate=rate)

    @classmethod
    def pwl(cls, points) -> "DriveSpec":
        return cls("pwl", points=tuple((float(t), float(a)) for t, a in points))

    def value_at(self, t: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "step":
            return self.amplitude if t >= self.t0 else 0.0
        if self.kind == "pulse":
            return self.amplitude if self.t0 <= t < self.t0 + self.width else 0.0
        if self.kind == "ramp":
            return self.rate * t
        times, values = zip(*self.points)
        return float(np.interp(t, times, values))


@dataclass(frozen=True)
class StateDecl:
    name: str
    tau: float
    I_dc: float
    init: float


@dataclass(frozen=True)
class InputDecl:
    name: str
    drive: DriveSpec


@dataclass(frozen=True)
class DynSystem:
    """
    A validated system τ_i·ẋ_i = F_i(x, u) over currents.

    Attributes:
        name: System identifier
        states: Ordered state declarations
        inputs: External inputs with their drives
        equations: State name -> right-hand side F
        regime: "subthreshold" or "strong_inversion"
        device: Core parameters the system is meant to run on
    """

    name: str
    states: Tuple[StateDecl, ...]
    inputs: Tuple[InputDecl, ...]
    equations: Dict[str, Expr]
    regime: str = "subthreshold"
    device: object = None

    def __post_init__(self):
        if self.device is None:
            default = SubthresholdParams() if self.regime == "subthreshold" else StrongInversionParams()
            object.__setattr__(self, "device", default)
        validate(self)

    @property
    def state_names(self) -> List[str]:
        return [s.name for s in self.states]

    @property
    def input_names(self) -> List[str]:
        return [i.name for i in self.inputs]

    @property
    def tau_min(self) -> float:
        return min(s.tau for s in self.states)

    @property
    def tau_max(self) -> float:
        return max(s.tau for s in self.states)

    def state(self, name: str) -> StateDecl:
        for s in self.states:
            if s.name == name:
                return s
        raise KeyError(name)

    def input_values_at(self, t: float) -> Dict[str, float]:
        return {i.name: i.drive.value_at(t) for i in self.inputs}

    def with_drive(self, name: str, drive: DriveSpec) -> "DynSystem":
        if name not in self.input_names:
            raise ValidationError(f"system '{self.name}' has no input '{name}'")
        inputs = tuple(InputDecl(i.name, drive if i.name == name else i.drive) for i in self.inputs)
        return replace(self, inputs=inputs)

    def with_inits(self, **inits: float) -> "DynSystem":
        unknown = set(inits) - set(self.state_names)
        if unknown:
            raise ValidationError(f"unknown states: {', '.join(sorted(unknown))}")
        states = tuple(replace(s, init=inits.get(s.name, s.init)) for s in self.states)
        return replace(self, states=states)

    def with_device(self, device) -> "DynSystem":
        return replace(self, device=device)


def validate(sys: DynSystem):
    """Check the structural invariants of a system; raise ValidationError."""
    if sys.regime not in REGIMES:
        raise ValidationError(f"unknown regime '{sys.regime}'")
    if sys.device.regime != sys.regime:
        raise ValidationError(f"{sys.regime} system given {sys.device.regime} device parameters")
    if not sys.states:
        raise ValidationError("system declares no states")
    names = sys.state_names
    if len(set(names)) != len(names):
        raise ValidationError("duplicate state name")
    inputs = sys.input_names
    if len(set(inputs)) != len(inputs) or set(inputs) & set(names):
        raise ValidationError("duplicate input name")
    for s in sys.states:
        if not (s.tau > 0 and s.I_dc > 0):
            raise ValidationError(f"state '{s.name}': tau and idc must be positive")
    missing = [n for n in names if n not in sys.equations]
    if missing:
        raise ValidationError(f"no equation for state(s): {', '.join(missing)}")
    extra = [n for n in sys.equations if n not in names]
    if extra:
        raise ValidationError(f"equation for undeclared state(s): {', '.join(extra)}")
    for target, expr in sys.equations.items():
        for node in walk(expr):
            if isinstance(node, StateRef) and node.name not in names:
                raise ValidationError(f"eq {target}: unresolved state '{node.name}'")
            if isinstance(node, InputRef) and node.name not in inputs:
                raise ValidationError(f"eq {target}: unresolved input '{node.name}'")
            if isinstance(node, (Mul, Square, DivByConst)) and not node.scale > 0:
                raise ValidationError(f"eq {target}: nonpositive scale current {node.scale!r}")
            if isinstance(node, ConstCurrent) and not node.value >= 0:
                raise ValidationError(f"eq {target}: constant currents are single-sided, got "
                                      f"{node.value!r}; write the sign as '-'")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[A-Za-z]*)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/()=])
""", re.VERBOSE)

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


@dataclass
class _Token:
    kind: str
    text: str
    col: int


def _tokenize(text: str, line: int, offset: int) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError(line, offset + pos + 1, f"unexpected character {text[pos]!r}")
        kind = match.lastgroup
        if kind != "space":
            tokens.append(_Token(kind, match.group(), offset + pos + 1))
        pos = match.end()
    tokens.append(_Token("end", "", offset + len(text) + 1))
    return tokens


class _ExprParser:
    """Recursive-descent parser for one right-hand side."""

    def __init__(self, tokens: List[_Token], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message: str, token: Optional[_Token] = None) -> ParseError:
        token = token or self.peek()
        return ParseError(self.line, token.col, message)

    def expect_op(self, op: str):
        token = self.take()
        if token.kind != "op" or token.text != op:
            raise self.error(f"expected '{op}'", token)

    def parse(self) -> Expr:
        expr = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected '{self.peek().text}'")
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take()
            if op.text == "*":
                rhs = self.factor()
                nxt = self.peek()
                if nxt.kind != "op" or nxt.text != "/":
                    raise ValidationError(
                        f"line {self.line}, col {op.col}: product requires a scale current "
                        f"('* <factor> / <const>')")
                self.take()
                node = Mul(node, rhs, self.const())
            else:
                node = DivByConst(node, self.const())
        return node

    def factor(self) -> Expr:
        token = self.peek()
        if token.kind == "op" and token.text == "-":
            self.take()
            return Neg(self.factor())
        if token.kind == "op" and token.text == "(":
            self.take()
            inner = self.expr()
            self.expect_op(")")
            return inner
        if token.kind == "ident" and token.text == "sq" and self._next_is_paren():
            self.take()
            self.take()
            inner = self.expr()
            self.expect_op(")")
            if not isinstance(inner, DivByConst):
                raise ValidationError(f"line {self.line}, col {token.col}: "
                                      f"sq() requires '<expr> / <scale current>'")
            return Square(inner.x, inner.scale)
        if token.kind == "ident":
            self.take()
            return _NameRef(token.text)
        if token.kind == "number":
            return ConstCurrent(self.const())
        raise self.error(f"unexpected '{token.text or 'end of line'}'")

    def _next_is_paren(self) -> bool:
        nxt = self.tokens[self.pos + 1]
        return nxt.kind == "op" and nxt.text == "("

    def const(self) -> float:
        token = self.take()
        if token.kind != "number":
            raise self.error("expected a current constant such as 1nA", token)
        return _quantity(token.text, config.CURRENT_UNITS, self.line, token.col, "current")


@dataclass(frozen=True)
class _NameRef(Expr):
    """Identifier whose kind (state or input) is resolved after parsing."""

    name: str


def _quantity(text: str, units: Dict[str, int], line: int, col: int, what: str) -> float:
    try:
        number, suffix = config.split_quantity(text)
    except ValueError:
        raise ParseError(line, col, f"malformed number {text!r}")
    if suffix not in units:
        raise ParseError(line, col, f"{text!r} needs a {what} unit ({'|'.join(units)})")
    return config.scale_decimal(number, units[suffix])


def _resolve(e: Expr, states: set, inputs: set) -> Expr:
    if isinstance(e, _NameRef):
        if e.name in states:
            return StateRef(e.name)
        if e.name in inputs:
            return InputRef(e.name)
        raise ValidationError(f"unresolved name '{e.name}'")
    if isinstance(e, Neg):
        return Neg(_resolve(e.x, states, inputs))
    if isinstance(e, (Add, Sub)):
        return type(e)(_resolve(e.l, states, inputs), _resolve(e.r, states, inputs))
    if isinstance(e, Mul):
        return Mul(_resolve(e.l, states, inputs), _resolve(e.r, states, inputs), e.scale)
    if isinstance(e, (Square, DivByConst)):
        return type(e)(_resolve(e.x, states, inputs), e.scale)
    return e


_TIME = config.TIME_UNITS
_CURRENT = config.CURRENT_UNITS
_RATE = {f"{unit}/s": exp for unit, exp in config.CURRENT_UNITS.items()}


def _parse_drive(args: List[str], line: int) -> DriveSpec:
    if not args:
        raise ParseError(line, 1, "input needs a drive kind")
    kind, rest = args[0], args[1:]
    expected = {"constant": 1, "step": 2, "pulse": 3, "ramp": 1}
    if kind not in DRIVE_KINDS:
        raise ParseError(line, 1, f"unknown drive kind '{kind}' ({'|'.join(DRIVE_KINDS)})")
    if kind != "pwl" and len(rest) != expected[kind]:
        raise ParseError(line, 1, f"{kind} drive takes {expected[kind]} argument(s)")
    if kind == "constant":
        return DriveSpec.constant(_quantity(rest[0], _CURRENT, line, 1, "current"))
    if kind == "step":
        return DriveSpec.step(_quantity(rest[0], _TIME, line, 1, "time"),
                              _quantity(rest[1], _CURRENT, line, 1, "current"))
    if kind == "pulse":
        return DriveSpec.pulse(_quantity(rest[0], _TIME, line, 1, "time"),
                               _quantity(rest[1], _TIME, line, 1, "time"),
                               _quantity(rest[2], _CURRENT, line, 1, "current"))
    if kind == "ramp":
        return DriveSpec.ramp(_quantity(rest[0], _RATE, line, 1, "rate"))
    points = []
    for item in rest:
        if ":" not in item:
            raise ParseError(line, 1, f"pwl point {item!r} must be <time>:<current>")
        t_text, a_text = item.split(":", 1)
        points.append((_quantity(t_text, _TIME, line, 1, "time"),
                       _quantity(a_text, _CURRENT, line, 1, "current")))
    return DriveSpec.pwl(points)


def _parse_device(regime: str, assignments: List[Tuple[str, float]], line: int):
    record = SubthresholdParams if regime == "subthreshold" else StrongInversionParams
    allowed = {f.name for f in fields(record)}
    values = {}
    for key, value in assignments:
        if key not in allowed:
            raise ParseError(line, 1, f"unknown {regime} device parameter '{key}'")
        values[key] = value
    return record(**values)


def parse(source: str) -> DynSystem:
    """
    Parse a system description.

    Args:
        source: Text in the line-oriented DSL (see docs/dsl.md)

    Returns:
        A validated DynSystem with every quantity in SI units

    Raises:
        ParseError: On syntax errors, with line and column
        ValidationError: On unresolved names, bad scales or missing equations
    """
    name = None
    regime = "subthreshold"
    device_lines: List[Tuple[int, List[Tuple[str, float]]]] = []
    states: List[StateDecl] = []
    inputs: List[InputDecl] = []
    raw_equations: List[Tuple[int, str, Expr]] = []

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        words = line.split()
        keyword = words[0]
        if keyword == "system":
            if len(words) != 2 or not _IDENT_RE.match(words[1]):
                raise ParseError(lineno, 1, "expected 'system <ident>'")
            name = words[1]
        elif keyword == "regime":
            if len(words) != 2 or words[1] not in REGIMES:
                raise ParseError(lineno, 1, f"expected 'regime {'|'.join(REGIMES)}'")
            regime = words[1]
        elif keyword == "device":
            assignments = []
            for item in words[1:]:
                key, _, value = item.partition("=")
                try:
                    assignments.append((key, config.parse_quantity(value)))
                except ValueError as exc:
                    raise ParseError(lineno, 1, str(exc))
            device_lines.append((lineno, assignments))
        elif keyword == "state":
            states.append(_parse_state(words, lineno))
        elif keyword == "input":
            if len(words) < 3 or not _IDENT_RE.match(words[1]):
                raise ParseError(lineno, 1, "expected 'input <ident> <kind> <args...>'")
            inputs.append(InputDecl(words[1], _parse_drive(words[2:], lineno)))
        elif keyword == "eq":
            match = re.match(r"^\s*eq\s+([A-Za-z_][A-Za-z_0-9]*)\s*=(.*)$", line)
            if not match:
                raise ParseError(lineno, 1, "expected 'eq <ident> = <expr>'")
            offset = match.start(2)
            tokens = _tokenize(match.group(2), lineno, offset)
            raw_equations.append((lineno, match.group(1), _ExprParser(tokens, lineno).parse()))
        else:
            raise ParseError(lineno, 1, f"unknown statement '{keyword}'")

    if name is None:
        raise ParseError(1, 1, "empty system description" if not source.strip()
                         else "missing 'system <ident>' line")

    state_names = {s.name for s in states}
    input_names = {i.name for i in inputs}
    equations: Dict[str, Expr] = {}
    for lineno, target, expr in raw_equations:
        if target in equations:
            raise ValidationError(f"line {lineno}: second equation for '{target}'")
        try:
            equations[target] = _resolve(expr, state_names, input_names)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None

    assignments = [a for _, items in device_lines for a in items]
    device = _parse_device(regime, assignments, device_lines[0][0] if device_lines else 1)
    system = DynSystem(name, tuple(states), tuple(inputs), equations, regime, device)
    logger.info("Parsed system '%s' with %d states", name, len(states))
    return system


def _parse_state(words: List[str], line: int) -> StateDecl:
    if len(words) < 2 or not _IDENT_RE.match(words[1]):
        raise ParseError(line, 1, "expected 'state <ident> tau=... idc=... init=...'")
    values = {}
    units = {"tau": (_TIME, "time"), "idc": (_CURRENT, "current"), "init": (_CURRENT, "current")}
    for item in words[2:]:
        key, sep, text = item.partition("=")
        if not sep or key not in units:
            raise ParseError(line, 1, f"unexpected state attribute {item!r}")
        table, what = units[key]
        values[key] = _quantity(text, table, line, 1, what)
    missing = [k for k in ("tau", "idc") if k not in values]
    if missing:
        raise ParseError(line, 1, f"state '{words[1]}' lacks {', '.join(missing)}")
    return StateDecl(words[1], values["tau"], values["idc"], values.get("init", 0.0))


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

def _amps(value: float) -> str:
    return f"{value!r}A"


def _is_factor(e: Expr) -> bool:
    return isinstance(e, (StateRef, InputRef, ConstCurrent, Neg, Square))


def _render(e: Expr, level: int) -> str:
    """level 0: expression, 1: term, 2: factor."""
    if isinstance(e, (StateRef, InputRef)):
        return e.name
    if isinstance(e, ConstCurrent):
        return _amps(e.value)
    if isinstance(e, Neg):
        return "-" + _render(e.x, 2)
    if isinstance(e, Square):
        return f"sq({_render(e.x, 1)} / {_amps(e.scale)})"
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        text = f"{_render(e.l, 0)} {op} {_render(e.r, 1)}"
        return text if level == 0 else f"({text})"
    if isinstance(e, Mul):
        text = f"{_render(e.l, 1)} * {_render(e.r, 2)} / {_amps(e.scale)}"
        return text if level <= 1 else f"({text})"
    if isinstance(e, DivByConst):
        text = f"{_render(e.x, 1)} / {_amps(e.scale)}"
        return text if level <= 1 else f"({text})"
    raise TypeError(f"not an expression node: {e!r}")


def render_expr(e: Expr) -> str:
    return _render(e, 0)


def _render_drive(drive: DriveSpec) -> str:
    if drive.kind == "constant":
        return f"constant {_amps(drive.amplitude)}"
    if drive.kind == "step":
        return f"step {drive.t0!r}s {_amps(drive.amplitude)}"
    if drive.kind == "pulse":
        return f"pulse {drive.t0!r}s {drive.width!r}s {_amps(drive.amplitude)}"
    if drive.kind == "ramp":
        return f"ramp {drive.rate!r}A/s"
    return "pwl " + " ".join(f"{t!r}s:{_amps(a)}" for t, a in drive.points)


def render(sys: DynSystem) -> str:
    """Inverse of `parse`: parse(render(sys)) == sys."""
    lines = [f"system {sys.name}", f"regime {sys.regime}"]
    default = type(sys.device)()
    changed = [f"{f.name}={getattr(sys.device, f.name)!r}" for f in fields(sys.device)
               if getattr(sys.device, f.name) != getattr(default, f.name)]
    if changed:
        lines.append("device " + " ".join(changed))
    for s in sys.states:
        lines.append(f"state {s.name} tau={s.tau!r}s idc={_amps(s.I_dc)} init={_amps(s.init)}")
    for i in sys.inputs:
        lines.append(f"input {i.name} {_render_drive(i.drive)}")
    for s in sys.states:
        lines.append(f"eq {s.name} = {render_expr(sys.equations[s.name])}")
    return "\n".join(lines) + "\n"
