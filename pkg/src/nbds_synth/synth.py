"""
Synthesis Module

Lowers a DynSystem onto a netlist of NBDS cores, translinear blocks,
splitters, KCL junctions and current mirrors; evaluates the netlist's F rails
from core readouts; serializes netlists as deterministic JSON.

Node ids:
    core/<state>   core outputs (pos rail I_B, neg rail I_A) and I_Cin sink
    in/<input>     raw signed external current, read only by its SPLIT block
    c<k>           constant current source
    b<k>           block
    j<k>           KCL junction (addition and subtraction are rail rewiring)
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

from . import nbds_core
from . import tl_blocks as tl
from .device_models import StrongInversionParams, SubthresholdParams
from .errors import LoweringError
from .nbds_core import CoreMapping
from .sysdsl import (Add, ConstCurrent, DivByConst, DriveSpec, DynSystem, Expr, InputRef,
                     Mul, Neg, Square, StateRef, Sub)

logger = logging.getLogger(__name__)

SCHEMA = "nbds-netlist/1"

SINGLE = "single_sided"
BILATERAL = "bilateral"

BLOCK_KINDS = ("MULT1P", "MULT1N", "SQ1", "SQ2", "MULT2", "MULT3", "SPLIT",
               "ROOTSQ", "MULTCORE", "BMULT", "MIRROR")

# Order of the one-line census.
SUMMARY_ORDER = ("SQ1", "SQ2", "MULT3", "MULT2", "MULT1P", "MULT1N", "BMULT", "MULTCORE",
                 "ROOTSQ", "SPLIT", "MIRROR")

REGIME_MENUS = {
    nbds_core.SUBTHRESHOLD: frozenset({"MULT1P", "MULT1N", "SQ1", "SQ2", "MULT2", "MULT3",
                                       "SPLIT", "MIRROR"}),
    nbds_core.STRONG_INVERSION: frozenset({"ROOTSQ", "MULTCORE", "BMULT", "SPLIT", "MIRROR"}),
}

# Ports of each block kind, in evaluation argument order.
BLOCK_PORTS = {
    "MULT1P": ("a", "b"), "MULT1N": ("a", "b"), "SQ1": ("in",), "SQ2": ("in",),
    "MULT2": ("c", "x"), "MULT3": ("x", "y"), "SPLIT": ("in",), "ROOTSQ": ("in",),
    "MULTCORE": ("in",), "BMULT": ("x", "y"), "MIRROR": ("in",),
}

# Reference current DivByConst multiplies against: x/s = x·(1 A)/s.
UNIT_REFERENCE = 1.0

# Blocks that live inside the core's I_Cin stage; compute_icin evaluates them.
CORE_LOCAL_KINDS = frozenset({"ROOTSQ"})


# ---------------------------------------------------------------------------
# Sign classes
# ---------------------------------------------------------------------------

def classify(e: Expr) -> Dict[Expr, str]:
    """
    Bottom-up sign class of every node of an expression.

    Constants and squares are single-sided; states, inputs and any sum,
    difference or negation are bilateral; a product is single-sided only when
    both factors are; a division by a constant keeps its operand's class.
    """
    classes: Dict[Expr, str] = {}

    def visit(node: Expr) -> str:
        if node in classes:
            return classes[node]
        if isinstance(node, ConstCurrent):
            cls = SINGLE
        elif isinstance(node, (StateRef, InputRef, Neg, Add, Sub)):
            for child in node.children():
                visit(child)
            cls = BILATERAL
        elif isinstance(node, Mul):
            left, right = visit(node.l), visit(node.r)
            cls = SINGLE if left == right == SINGLE else BILATERAL
        elif isinstance(node, Square):
            visit(node.x)
            cls = SINGLE
        elif isinstance(node, DivByConst):
            cls = visit(node.x)
        else:
            raise LoweringError(f"cannot classify {type(node).__name__} node")
        classes[node] = cls
        return cls

    visit(e)
    return classes


def sign_class(e: Expr) -> str:
    return classify(e)[e]


# ---------------------------------------------------------------------------
# Netlist types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoreSpec:
    name: str
    mapping: CoreMapping
    init: float


@dataclass(frozen=True)
class InputPort:
    id: str
    name: str
    drive: DriveSpec


@dataclass(frozen=True)
class Source:
    id: str
    value: float


@dataclass(frozen=True)
class Block:
    id: str
    kind: str
    scales: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Junction:
    id: str


@dataclass(frozen=True)
class Net:
    """One rail connection: src.src_rail -> dst.dst_port.dst_rail."""

    src: str
    src_rail: str
    dst: str
    dst_port: str
    dst_rail: str


@dataclass(frozen=True)
class Netlist:
    """
    Lowered system.

    `order` lists blocks and junctions in creation order, which is a
    topological order of the rail graph.
    """

    system: str
    regime: str
    cores: Tuple[CoreSpec, ...]
    inputs: Tuple[InputPort, ...]
    sources: Tuple[Source, ...]
    blocks: Tuple[Block, ...]
    junctions: Tuple[Junction, ...]
    nets: Tuple[Net, ...]
    order: Tuple[str, ...]
    _program: list = field(default=None, init=False, repr=False, compare=False)

    @property
    def state_names(self) -> List[str]:
        return [c.name for c in self.cores]

    @property
    def device(self):
        return self.cores[0].mapping.device

    def core(self, name: str) -> CoreSpec:
        for c in self.cores:
            if c.name == name:
                return c
        raise KeyError(name)

    def census(self) -> Counter:
        """Block count per kind, plus the number of cores."""
        counts = Counter(b.kind for b in self.blocks)
        counts["cores"] = len(self.cores)
        return counts

    def summary(self) -> str:
        counts = self.census()
        parts = [f"cores={counts['cores']}"]
        parts += [f"{kind.lower()}={counts[kind]}" for kind in SUMMARY_ORDER if counts[kind]]
        return " ".join(parts)

    def with_device(self, device) -> "Netlist":
        """Same structure and capacitors, cores built from different device parameters."""
        cores = tuple(replace(c, mapping=replace(c.mapping, device=device)) for c in self.cores)
        return replace(self, cores=cores)

    def with_capacitance_scale(self, factor: float) -> "Netlist":
        """Every capacitor multiplied by `factor` (a deliberate mis-mapping)."""
        cores = tuple(replace(c, mapping=replace(c.mapping, C=c.mapping.C * factor))
                      for c in self.cores)
        return replace(self, cores=cores)


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------

@dataclass
class _Signal:
    node: str
    cls: str
    uses: int = 0

    @property
    def rails(self) -> Tuple[str, ...]:
        return ("pos",) if self.cls == SINGLE else ("pos", "neg")


class _Lowerer:
    """Stateful builder behind `lower`; one instance per call."""

    def __init__(self, sys: DynSystem, expand_bmult: bool):
        self.sys = sys
        self.regime = sys.regime
        self.menu = REGIME_MENUS[sys.regime]
        self.expand_bmult = expand_bmult
        self.blocks: List[Block] = []
        self.junctions: List[Junction] = []
        self.sources: List[Source] = []
        self.nets: List[Net] = []
        self.order: List[str] = []
        self.memo: Dict[Expr, _Signal] = {}
        self.const_signals: Dict[float, _Signal] = {}
        self.ground: Optional[_Signal] = None
        self.cores = {name: _Signal(f"core/{name}", BILATERAL) for name in sys.state_names}

    # -- node creation -----------------------------------------------------

    def _block(self, kind: str, *scales: float) -> str:
        if kind not in self.menu:
            raise LoweringError(f"{kind} is not available in the {self.regime} block menu")
        block_id = f"b{len(self.blocks)}"
        self.blocks.append(Block(block_id, kind, tuple(float(s) for s in scales)))
        self.order.append(block_id)
        return block_id

    def _junction(self) -> str:
        junction_id = f"j{len(self.junctions)}"
        self.junctions.append(Junction(junction_id))
        self.order.append(junction_id)
        return junction_id

    def _source(self, value: float) -> _Signal:
        value = float(value)
        if value not in self.const_signals:
            source_id = f"c{len(self.sources)}"
            self.sources.append(Source(source_id, value))
            self.const_signals[value] = _Signal(source_id, SINGLE)
        return self.const_signals[value]

    def _ground(self) -> _Signal:
        # Zero source feeding the unused neg rail of a single-sided operand.
        if self.ground is None:
            self.ground = self._source(0.0)
        return self.ground

    # -- fan-out -----------------------------------------------------------

    def _acquire(self, sig: _Signal) -> _Signal:
        """
        Claim one copy of a signal for a new consumer.

        The first consumer reads the signal itself; each further consumer gets
        its own MIRROR copy.
        """
        sig.uses += 1
        if sig.uses == 1:
            return sig
        mirror = self._block("MIRROR")
        for rail in sig.rails:
            self.nets.append(Net(sig.node, rail, mirror, "in", rail))
        return _Signal(mirror, sig.cls, uses=1)

    def _wire(self, sig: _Signal, dst: str, port: str, want: str):
        """Connect an acquired signal to a block port of class `want`."""
        if want == SINGLE:
            if sig.cls != SINGLE:
                raise LoweringError(f"bilateral signal {sig.node} on single-sided port {dst}.{port}")
            self.nets.append(Net(sig.node, "pos", dst, port, "pos"))
            return
        self.nets.append(Net(sig.node, "pos", dst, port, "pos"))
        if sig.cls == SINGLE:
            ground = self._ground()
            self.nets.append(Net(ground.node, "pos", dst, port, "neg"))
        else:
            self.nets.append(Net(sig.node, "neg", dst, port, "neg"))

    def _wire_signed(self, sig: _Signal, dst: str, port: str, sign: int):
        """KCL connection of a term into a junction, swapping rails when subtracted."""
        for rail in sig.rails:
            target = rail if sign > 0 else ("neg" if rail == "pos" else "pos")
            self.nets.append(Net(sig.node, rail, dst, port, target))

    # -- expressions -------------------------------------------------------

    def lower(self, e: Expr) -> _Signal:
        if e in self.memo:
            return self.memo[e]
        if isinstance(e, StateRef):
            sig = self.cores[e.name]
        elif isinstance(e, ConstCurrent):
            sig = self._source(e.value)
        elif isinstance(e, InputRef):
            sig = self._split(e.name)
        elif isinstance(e, (Neg, Add, Sub)):
            sig = self._sum(e)
        elif isinstance(e, Mul):
            sig = self._product(self.lower(e.l), self.lower(e.r), e.scale)
        elif isinstance(e, Square):
            sig = self._square(self.lower(e.x), e.scale)
        elif isinstance(e, DivByConst):
            sig = self._product(self.lower(e.x), self._source(UNIT_REFERENCE), e.scale,
                                single_kind="MULT1N")
        else:
            raise LoweringError(f"no block realizes a {type(e).__name__} node")
        self.memo[e] = sig
        return sig

    def _split(self, name: str) -> _Signal:
        block = self._block("SPLIT")
        self.nets.append(Net(f"in/{name}", "val", block, "in", "val"))
        return _Signal(block, BILATERAL)

    def _sum(self, e: Expr) -> _Signal:
        terms: List[Tuple[int, Expr]] = []

        def flatten(node: Expr, sign: int):
            if isinstance(node, Add):
                flatten(node.l, sign)
                flatten(node.r, sign)
            elif isinstance(node, Sub):
                flatten(node.l, sign)
                flatten(node.r, -sign)
            elif isinstance(node, Neg):
                flatten(node.x, -sign)
            else:
                terms.append((sign, node))

        flatten(e, 1)
        signals = [(sign, self._acquire(self.lower(term))) for sign, term in terms]
        junction = self._junction()
        for sign, sig in signals:
            self._wire_signed(sig, junction, "in", sign)
        return _Signal(junction, BILATERAL)

    def _product(self, left: _Signal, right: _Signal, scale: float,
                 single_kind: str = "MULT1P") -> _Signal:
        if self.regime == nbds_core.STRONG_INVERSION:
            return self._bmult(left, right, scale)
        if left.cls == SINGLE and right.cls == SINGLE:
            a, b = self._acquire(left), self._acquire(right)
            block = self._block(single_kind, scale)
            self._wire(a, block, "a", SINGLE)
            self._wire(b, block, "b", SINGLE)
            return _Signal(block, SINGLE)
        if left.cls == SINGLE or right.cls == SINGLE:
            c, x = (left, right) if left.cls == SINGLE else (right, left)
            c, x = self._acquire(c), self._acquire(x)
            block = self._block("MULT2", scale)
            self._wire(c, block, "c", SINGLE)
            self._wire(x, block, "x", BILATERAL)
            return _Signal(block, BILATERAL)
        x, y = self._acquire(left), self._acquire(right)
        block = self._block("MULT3", scale)
        self._wire(x, block, "x", BILATERAL)
        self._wire(y, block, "y", BILATERAL)
        return _Signal(block, BILATERAL)

    def _square(self, x: _Signal, scale: float) -> _Signal:
        if self.regime == nbds_core.STRONG_INVERSION:
            return self._bmult(x, x, scale)
        x = self._acquire(x)
        if x.cls == SINGLE:
            block = self._block("SQ1", scale)
            self._wire(x, block, "in", SINGLE)
        else:
            block = self._block("SQ2", scale)
            self._wire(x, block, "in", BILATERAL)
        return _Signal(block, SINGLE)

    def _bmult(self, left: _Signal, right: _Signal, scale: float) -> _Signal:
        # The bilateral multiplier computes 2·X·Y/I_b; binding I_b = 2·scale
        # makes it value-preserving.
        x, y = self._acquire(left), self._acquire(right)
        bias = 2.0 * scale
        if not self.expand_bmult:
            block = self._block("BMULT", bias)
            self._wire(x, block, "x", BILATERAL)
            self._wire(y, block, "y", BILATERAL)
            return _Signal(block, BILATERAL)
        return self._bmult_from_cores(x, y, bias)

    def _bmult_from_cores(self, x: _Signal, y: _Signal, bias: float) -> _Signal:
        """Four MULTCORE blocks on X±Y± sums, combined at one output junction."""
        pairs = (("pos", "pos", 1), ("neg", "neg", 1), ("neg", "pos", -1), ("pos", "neg", -1))
        cores = []
        for x_rail, y_rail, sign in pairs:
            sum_node = self._junction()
            for sig, rail in ((x, x_rail), (y, y_rail)):
                if sig.cls == SINGLE and rail == "neg":
                    continue
                self.nets.append(Net(sig.node, rail, sum_node, "in", "pos"))
            block = self._block("MULTCORE", bias)
            self.nets.append(Net(sum_node, "pos", block, "in", "pos"))
            cores.append((block, sign))
        out = self._junction()
        for block, sign in cores:
            self.nets.append(Net(block, "pos", out, "in", "pos" if sign > 0 else "neg"))
        return _Signal(out, BILATERAL)

    # -- cores -------------------------------------------------------------

    def attach_equation(self, name: str, e: Expr):
        sig = self._acquire(self.lower(e))
        for rail in sig.rails:
            self.nets.append(Net(sig.node, rail, f"core/{name}", "icin", rail))

    def attach_root_squares(self, name: str):
        for rail in ("neg", "pos"):
            block = self._block("ROOTSQ", tl.UNIT_ROOT_SCALE)
            self.nets.append(Net(f"core/{name}", rail, block, "in", "pos"))
            self.nets.append(Net(block, "pos", f"core/{name}", "den", rail))


def lower(sys: DynSystem, mapping_constant: str = nbds_core.MAPPING_PAPER,
          capacitance: Optional[float] = None, expand_bmult: bool = False) -> Netlist:
    """
    Compile a system into a netlist.

    Args:
        sys: Validated system; its device record parameterizes every core
        mapping_constant: Strong-inversion C/I_dc preset, "paper" or "derived"
        capacitance: Fix every capacitor to this value and derive I_dc from
            it instead of using the declared I_dc
        expand_bmult: Strong inversion only; spell each bilateral multiplier
            out as four MULTCORE blocks

    Returns:
        The netlist, identical for identical arguments

    Raises:
        LoweringError: If a node needs a block missing from the regime's menu
    """
    builder = _Lowerer(sys, expand_bmult)
    cores = []
    for state in sys.states:
        if capacitance is None:
            mapping = CoreMapping.for_time_constant(state.tau, state.I_dc, sys.device,
                                                    mapping_constant)
        else:
            I_dc = nbds_core.solve_bias_current(state.tau, capacitance, sys.device,
                                                mapping_constant)
            mapping = CoreMapping(sys.regime, state.tau, float(capacitance), I_dc,
                                  sys.device, mapping_constant)
        cores.append(CoreSpec(state.name, mapping, state.init))
        if sys.regime == nbds_core.STRONG_INVERSION:
            builder.attach_root_squares(state.name)

    for state in sys.states:
        builder.attach_equation(state.name, sys.equations[state.name])

    netlist = Netlist(
        system=sys.name,
        regime=sys.regime,
        cores=tuple(cores),
        inputs=tuple(InputPort(f"in/{i.name}", i.name, i.drive) for i in sys.inputs),
        sources=tuple(builder.sources),
        blocks=tuple(builder.blocks),
        junctions=tuple(builder.junctions),
        nets=tuple(builder.nets),
        order=tuple(builder.order),
    )
    logger.info("Lowered '%s': %s", sys.name, netlist.summary())
    return netlist


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _block_step(block: Block, inputs: Dict[Tuple[str, str], str]) -> Callable[[dict], None]:
    """Closure evaluating one block from the value table."""
    out_pos, out_neg = f"{block.id}.pos", f"{block.id}.neg"
    scale = tl.ScaleCurrent(block.scales[0]) if block.scales else None

    def rail(port, name):
        return inputs.get((port, name))

    def bilateral(values, port):
        return tl.BilateralSignal(values[rail(port, "pos")], values[rail(port, "neg")])

    kind = block.kind
    if kind == "SPLIT":
        src = rail("in", "val")

        def step(values):
            out = tl.splitter(values[src])
            values[out_pos], values[out_neg] = out.pos, out.neg
    elif kind == "MIRROR":
        pos_src, neg_src = rail("in", "pos"), rail("in", "neg")

        def step(values):
            values[out_pos] = values[pos_src]
            if neg_src is not None:
                values[out_neg] = values[neg_src]
    elif kind in ("MULT1P", "MULT1N"):
        a, b = rail("a", "pos"), rail("b", "pos")

        def step(values):
            values[out_pos] = tl.mult_type1(values[a], values[b], scale)
    elif kind == "SQ1":
        src = rail("in", "pos")

        def step(values):
            values[out_pos] = tl.squarer_type1(values[src], scale)
    elif kind == "SQ2":
        def step(values):
            values[out_pos] = tl.squarer_type2(bilateral(values, "in"), scale)
    elif kind == "MULT2":
        c = rail("c", "pos")

        def step(values):
            out = tl.mult_type2(values[c], bilateral(values, "x"), scale)
            values[out_pos], values[out_neg] = out.pos, out.neg
    elif kind in ("MULT3", "BMULT"):
        func = tl.mult_type3 if kind == "MULT3" else tl.bilateral_mult_si

        def step(values):
            out = func(bilateral(values, "x"), bilateral(values, "y"), scale)
            values[out_pos], values[out_neg] = out.pos, out.neg
    elif kind == "MULTCORE":
        src = rail("in", "pos")

        def step(values):
            values[out_pos] = tl.mult_core(values[src], scale)
    else:
        raise LoweringError(f"cannot evaluate block kind {kind}")
    return step


def _sum_step(key_pos: str, key_neg: str, pos_srcs: List[str], neg_srcs: List[str]):
    def step(values):
        values[key_pos] = sum((values[k] for k in pos_srcs), 0.0)
        values[key_neg] = sum((values[k] for k in neg_srcs), 0.0)
    return step


def _compile(n: Netlist) -> list:
    blocks = {b.id: b for b in n.blocks}
    block_inputs: Dict[str, Dict[Tuple[str, str], str]] = {}
    sums: Dict[str, Dict[str, List[str]]] = {}
    for net in n.nets:
        key = f"{net.src}.{net.src_rail}"
        if net.dst.startswith("j") or (net.dst.startswith("core/") and net.dst_port == "icin"):
            sums.setdefault(net.dst, {"pos": [], "neg": []})[net.dst_rail].append(key)
        elif net.dst in blocks:
            if net.dst_port not in BLOCK_PORTS[blocks[net.dst].kind]:
                raise LoweringError(f"{blocks[net.dst].kind} block {net.dst} has no port "
                                    f"'{net.dst_port}'")
            ports = block_inputs.setdefault(net.dst, {})
            slot = (net.dst_port, net.dst_rail)
            if slot in ports:
                raise LoweringError(f"{net.dst}.{net.dst_port}.{net.dst_rail} driven twice")
            ports[slot] = key

    steps = []
    for node in n.order:
        if node.startswith("j"):
            rails = sums.get(node, {"pos": [], "neg": []})
            steps.append(_sum_step(f"{node}.pos", f"{node}.neg", rails["pos"], rails["neg"]))
            continue
        block = blocks[node]
        if block.kind in CORE_LOCAL_KINDS:
            continue
        steps.append(_block_step(block, block_inputs.get(node, {})))

    outputs = []
    for core in n.cores:
        rails = sums.get(f"core/{core.name}", {"pos": [], "neg": []})
        outputs.append((core.name, rails["pos"], rails["neg"]))
    return [steps, outputs]


def eval_netlist(n: Netlist, core_readouts: Dict[str, tl.BilateralSignal],
                 input_values: Dict[str, float]) -> Dict[str, tl.BilateralSignal]:
    """
    One topological sweep from core rails and inputs to every core's F rails.

    Args:
        n: Netlist
        core_readouts: State name -> (I_B, I_A) rails, scalars or arrays
        input_values: Input name -> signed current

    Returns:
        State name -> F rails arriving at the core's I_Cin stage
    """
    if n._program is None:
        object.__setattr__(n, "_program", _compile(n))
    steps, outputs = n._program

    values = {}
    for source in n.sources:
        values[f"{source.id}.pos"] = source.value
    for port in n.inputs:
        values[f"{port.id}.val"] = input_values[port.name]
    for name, rails in core_readouts.items():
        values[f"core/{name}.pos"] = rails.pos
        values[f"core/{name}.neg"] = rails.neg

    for step in steps:
        step(values)

    return {name: tl.BilateralSignal(sum((values[k] for k in pos), 0.0),
                                     sum((values[k] for k in neg), 0.0))
            for name, pos, neg in outputs}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _device_doc(device) -> dict:
    fields = ("n_n", "n_p", "V_T", "I_Sn", "I_Sp", "V_DD", "V_b") \
        if device.regime == nbds_core.SUBTHRESHOLD else ("k_n", "k_p", "V_th", "V_DD", "V_b")
    return {name: float(getattr(device, name)) for name in fields}


def _drive_doc(drive: DriveSpec) -> dict:
    doc = {"kind": drive.kind}
    if drive.kind in ("constant", "step", "pulse"):
        doc["amplitude"] = drive.amplitude
    if drive.kind in ("step", "pulse"):
        doc["t0"] = drive.t0
    if drive.kind == "pulse":
        doc["width"] = drive.width
    if drive.kind == "ramp":
        doc["rate"] = drive.rate
    if drive.kind == "pwl":
        doc["points"] = [[t, a] for t, a in drive.points]
    return doc


def emit(n: Netlist) -> str:
    """Deterministic JSON text of a netlist (schema nbds-netlist/1)."""
    doc = {
        "schema": SCHEMA,
        "system": n.system,
        "regime": n.regime,
        "mapping_constant": n.cores[0].mapping.mapping_constant,
        "device": _device_doc(n.device),
        "cores": [{"name": c.name, "tau": c.mapping.tau, "C": c.mapping.C,
                   "idc": c.mapping.I_dc, "init": c.init} for c in n.cores],
        "inputs": [{"id": p.id, "name": p.name, "drive": _drive_doc(p.drive)} for p in n.inputs],
        "sources": [{"id": s.id, "value": s.value} for s in n.sources],
        "blocks": [{"id": b.id, "kind": b.kind, "scales": list(b.scales)} for b in n.blocks],
        "junctions": [j.id for j in n.junctions],
        "nets": [[net.src, net.src_rail, net.dst, net.dst_port, net.dst_rail] for net in n.nets],
        "order": list(n.order),
    }
    return json.dumps(doc, indent=1) + "\n"


def load(text: str) -> Netlist:
    """
    Rebuild a netlist from `emit` output.

    Raises:
        LoweringError: On a foreign schema or malformed document
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LoweringError(f"netlist is not valid JSON: {exc}") from exc
    if doc.get("schema") != SCHEMA:
        raise LoweringError(f"unsupported netlist schema {doc.get('schema')!r}")
    try:
        record = SubthresholdParams if doc["regime"] == nbds_core.SUBTHRESHOLD \
            else StrongInversionParams
        device = record(**doc["device"])
        cores = tuple(
            CoreSpec(c["name"], CoreMapping(doc["regime"], c["tau"], c["C"], c["idc"], device,
                                            doc["mapping_constant"]), c["init"])
            for c in doc["cores"])
        inputs = []
        for p in doc["inputs"]:
            d = dict(p["drive"])
            if "points" in d:
                d["points"] = tuple(tuple(pt) for pt in d["points"])
            inputs.append(InputPort(p["id"], p["name"], DriveSpec(**d)))
        return Netlist(
            system=doc["system"],
            regime=doc["regime"],
            cores=cores,
            inputs=tuple(inputs),
            sources=tuple(Source(s["id"], s["value"]) for s in doc["sources"]),
            blocks=tuple(Block(b["id"], b["kind"], tuple(b["scales"])) for b in doc["blocks"]),
            junctions=tuple(Junction(j) for j in doc["junctions"]),
            nets=tuple(Net(*net) for net in doc["nets"]),
            order=tuple(doc["order"]),
        )
    except (KeyError, TypeError) as exc:
        raise LoweringError(f"malformed netlist document: {exc}") from exc
