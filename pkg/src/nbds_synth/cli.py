"""
CLI Module

Command-line interface for the NBDS synthesis compiler and simulator.
"""

import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, List, Optional

from . import __version__
from .config import (CAPACITANCE_UNITS, TIME_UNITS, VOLTAGE_UNITS, DeviceOverrides,
                     parse_quantity)
from .errors import (ConfigError, DenominatorUnderflow, LoweringError, NBDSError,
                     NonFiniteError, OutOfRange, ParseError, ValidationError)
from .experiment import DEFAULT_MAX_NRMSE, MODES, Experiment
from .library import PROTOCOLS, builtin, builtin_names, provenance
from .metrics import detect_spikes
from .nbds_core import MAPPING_CONSTANTS, MAPPING_PAPER
from .simlab import INTEGRATORS, RK4, SimConfig, Waveform
from .synth import emit
from .sysdsl import render

# Configure logging
logging.basicConfig(
    level=logging.WARNING,
    format='%(levelname)s: %(message)s'
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

USAGE_ERRORS = (ValidationError, ParseError, ConfigError, LoweringError, OutOfRange)
NUMERICAL_ERRORS = (NonFiniteError, DenominatorUnderflow)

FORMATS = ("text", "json")


def _quantity(units: Dict[str, int], label: str) -> Callable[[str], float]:
    """argparse type accepting a number with an optional unit suffix."""
    def convert(text: str) -> float:
        return parse_quantity(text, units)
    convert.__name__ = label
    return convert


def _check_output(path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
        raise ValidationError(f"output directory {directory} is not writable")
    return path


def _fmt(value: Optional[float], spec: str = ".3e") -> str:
    return "-" if value is None else format(value, spec)


class CLI:
    """Command-line interface for NBDS synthesis and simulation."""

    def __init__(self):
        self.parser = self.build_parser()
        self.commands = {
            "list": self.cmd_list,
            "show": self.cmd_show,
            "synth": self.cmd_synth,
            "sim": self.cmd_sim,
            "compare": self.cmd_compare,
            "mc": self.cmd_mc,
            "bias": self.cmd_bias,
            "range": self.cmd_range,
        }

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--params", help="device parameter file (fallback: $NBDS_PARAMS)")
        common.add_argument("--verbose", "-v", action="store_true", help="log progress")
        common.add_argument("--format", choices=FORMATS, default="text", help="report format")

        system = argparse.ArgumentParser(add_help=False)
        system.add_argument("--system", required=True, help="builtin name or DSL file")
        system.add_argument("--mapping", choices=MAPPING_CONSTANTS, default=MAPPING_PAPER,
                            help="strong-inversion C/I_dc preset")
        system.add_argument("--capacitance", type=_quantity(CAPACITANCE_UNITS, "capacitance"),
                            help="fix every capacitor and derive I_dc")
        system.add_argument("--init-outside", action="store_true",
                            help="hopf: start outside the unstable limit cycle")
        system.add_argument("--protocol", choices=PROTOCOLS, help="FHN stimulus protocol")

        run = argparse.ArgumentParser(add_help=False)
        run.add_argument("--dt", type=_quantity(TIME_UNITS, "time"), help="step (s)")
        run.add_argument("--t-end", type=_quantity(TIME_UNITS, "time"), help="horizon (s)")
        run.add_argument("--integrator", choices=INTEGRATORS, default=RK4)
        run.add_argument("--stride", type=int, default=1, help="record every n-th step")
        run.add_argument("--clipping", action="store_true",
                         help="hold capacitor voltages inside the dynamic range")
        run.add_argument("--rescale", choices=("auto", "none"), default="auto",
                         help="map circuit time onto mathematical time")

        parser = argparse.ArgumentParser(
            prog="nbds", description="Synthesize and simulate bilateral dynamical systems.")
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        sub = parser.add_subparsers(dest="command", required=True)

        sub.add_parser("list", parents=[common], help="list builtin systems")

        show = sub.add_parser("show", parents=[common], help="print a builtin as DSL text")
        show.add_argument("name")

        synth = sub.add_parser("synth", parents=[common, system], help="write a netlist")
        synth.add_argument("--out", help="netlist path (default <system>.netlist.json)")
        synth.add_argument("--expand-bmult", action="store_true",
                           help="strong inversion: build multipliers from MULT cores")

        sim = sub.add_parser("sim", parents=[common, system, run], help="write a waveform CSV")
        sim.add_argument("--mode", choices=MODES, default="math")
        sim.add_argument("--out", help="CSV path (default <system>_<mode>.csv)")
        sim.add_argument("--projections", metavar="PREFIX",
                         help="three-state systems: also write pairwise projections")

        compare = sub.add_parser("compare", parents=[common, system, run],
                                 help="circuit versus math")
        compare.add_argument("--max-nrmse", type=float, default=DEFAULT_MAX_NRMSE)
        compare.add_argument("--capacitance-scale", type=float, default=1.0,
                             help="multiply every capacitor (deliberate mis-mapping)")

        mc = sub.add_parser("mc", parents=[common, system, run], help="device Monte Carlo")
        mc.add_argument("--seed", type=int, help="random seed (required)")
        mc.add_argument("--sigma", type=float, default=0.02, help="lognormal sigma")
        mc.add_argument("--runs", type=int, default=100)
        mc.add_argument("--state", help="measured state (default: first)")

        bias = sub.add_parser("bias", parents=[common, system, run], help="bias-voltage sweep")
        bias.add_argument("--vb", type=_quantity(VOLTAGE_UNITS, "voltage"), action="append",
                          required=True, help="bias voltage, repeatable")

        sub.add_parser("range", parents=[common, system, run], help="dynamic-range report")
        return parser

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def experiment(self, args, **kwargs) -> Experiment:
        config = SimConfig(
            dt=getattr(args, "dt", None),
            t_end=getattr(args, "t_end", None),
            integrator=getattr(args, "integrator", RK4),
            record_stride=getattr(args, "stride", 1),
            clipping=getattr(args, "clipping", False),
            seed=getattr(args, "seed", None),
            mapping_constant=args.mapping,
        )
        overrides = DeviceOverrides.from_sources(args.params)
        return Experiment.from_selector(args.system, overrides, config,
                                        init_outside=args.init_outside, protocol=args.protocol,
                                        capacitance=args.capacitance, **kwargs)

    def emit_report(self, args, doc: dict, lines: List[str]):
        if args.format == "json":
            print(json.dumps(doc, indent=2))
        else:
            for line in lines:
                print(line)

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def cmd_list(self, args) -> int:
        for name in builtin_names():
            print(f"{name:<10} {provenance(name)}")
        return EXIT_OK

    def cmd_show(self, args) -> int:
        print(render(builtin(args.name)), end="")
        return EXIT_OK

    def cmd_synth(self, args) -> int:
        exp = self.experiment(args, expand_bmult=args.expand_bmult)
        netlist = exp.synthesize()
        path = _check_output(args.out or f"{exp.system.name}.netlist.json")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(emit(netlist))
        print(netlist.summary())
        logger.info("Netlist written to %s", path)
        return EXIT_OK

    def cmd_sim(self, args) -> int:
        exp = self.experiment(args)
        path = _check_output(args.out or f"{exp.system.name}_{args.mode}.csv")
        if args.projections:
            _check_output(args.projections)
            if len(exp.system.states) != 3:
                raise ValidationError("projections need a three-state system")
        waveform = exp.simulate(args.mode, rescale=args.rescale == "auto")
        waveform.write_csv(path)
        print(f"{path}: {len(waveform)} samples of {','.join(waveform.names)}")
        if args.projections:
            self.write_projections(waveform, args.projections)
        first = waveform.names[0]
        spikes = detect_spikes(waveform, first)
        print(f"{first}: {len(spikes)} upward crossings of 0 A")
        return EXIT_OK

    def write_projections(self, waveform: Waveform, prefix: str):
        a, b, c = waveform.names
        for x, y in ((a, b), (c, b), (c, a)):
            path = f"{prefix}_{x}_{y}.csv"
            waveform.projection(x, y).write_csv(path)
            print(f"{path}: {x}-{y} projection")

    def cmd_compare(self, args) -> int:
        exp = self.experiment(args, capacitance_scale=args.capacitance_scale)
        report = exp.compare(max_nrmse=args.max_nrmse, rescale=args.rescale == "auto")
        lines = [f"system {report.system}  rescale {report.rescale:.6g}  "
                 f"max-nrmse {report.max_nrmse:g}",
                 f"{'state':<8} {'nrmse':>10} {'amp err %':>10} {'period err %':>12}"]
        for s in report.states:
            lines.append(f"{s.state:<8} {s.nrmse:>10.3e} {_fmt(s.amplitude_error, '.3f'):>10} "
                         f"{_fmt(s.period_error, '.3f'):>12}")
        lines.append("PASS" if report.passed else "FAIL")
        self.emit_report(args, report.as_dict(), lines)
        return EXIT_OK if report.passed else EXIT_FAILED_CHECK

    def cmd_mc(self, args) -> int:
        if args.seed is None:
            raise ValidationError("--seed is required for a reproducible Monte Carlo run")
        exp = self.experiment(args)
        report = exp.monte_carlo(args.sigma, args.runs, args.state)
        lines = [
            f"system {report.system}  state {report.state}  runs {len(report.runs)}  "
            f"sigma {report.sigma:g}  seed {report.seed}",
            f"success {report.success_fraction * 100:.1f}%",
            f"peak-to-peak mean {report.mean_peak_to_peak:.6e} A  "
            f"std {report.std_peak_to_peak:.6e} A",
            f"period mean {report.mean_period:.6e} s  std {report.std_period:.6e} s  "
            f"(math time, x{report.time_scale:g})",
        ]
        self.emit_report(args, report.as_dict(), lines)
        return EXIT_OK

    def cmd_bias(self, args) -> int:
        exp = self.experiment(args)
        rows = exp.bias_sweep(args.vb)
        lines = [f"{'V_b (V)':>8} {'nrmse':>10} {'mean I_A+I_B (A)':>18}"]
        lines += [f"{r.V_b:>8.3f} {r.nrmse:>10.3e} {r.mean_branch_current:>18.6e}" for r in rows]
        doc = {"system": exp.system.name,
               "rows": [{"V_b": r.V_b, "nrmse": r.nrmse,
                         "mean_branch_current": r.mean_branch_current} for r in rows]}
        self.emit_report(args, doc, lines)
        return EXIT_OK

    def cmd_range(self, args) -> int:
        exp = self.experiment(args)
        rows = exp.range_report()
        lines = [f"{'state':<8} {'I_out min':>11} {'I_out max':>11} {'V_C min':>9} "
                 f"{'V_C max':>9} {'range':>25}"]
        for r in rows:
            lines.append(f"{r.state:<8} {r.i_min:>11.3e} {r.i_max:>11.3e} {r.v_min:>9.4f} "
                         f"{r.v_max:>9.4f} [{r.bound_lo:.3e}, {r.bound_hi:.3e}]"
                         f"{'' if r.within else '  OUT OF RANGE'}")
        doc = {"system": exp.system.name,
               "states": [{"state": r.state, "i_min": r.i_min, "i_max": r.i_max,
                           "v_min": r.v_min, "v_max": r.v_max, "bound_lo": r.bound_lo,
                           "bound_hi": r.bound_hi, "within": r.within} for r in rows]}
        self.emit_report(args, doc, lines)
        return EXIT_OK

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse arguments, dispatch, and map errors onto exit codes."""
        args = self.parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        try:
            return self.commands[args.command](args)
        except NUMERICAL_ERRORS as exc:
            print(f"Error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        except USAGE_ERRORS as exc:
            print(f"Error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except NBDSError as exc:
            print(f"Error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except OSError as exc:
            print(f"Error: {exc}", file=sys.stderr)
            return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the nbds command."""
    cli = CLI()
    return cli.run(argv)


if __name__ == "__main__":
    sys.exit(main())
