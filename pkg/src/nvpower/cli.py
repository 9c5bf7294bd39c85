"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""
import argparse
import io
import os
import sys

from . import _accel
from .concentrators import field_map_for
from .config import PRESETS, Config, override, parse_config, preset
from .core import Beam, magnetic_from_power, magnetic_unit
from .errors import ConfigError, DomainError, NumericalError
from .probe import optimize_probe
from .report import dumps, run_report
from .scaling import (SweepParameter, SweepSpec, alpha_ref_of, chain_sensitivity, exponent_csv,
                      sweep_csv, sweep_sensitivity, verify_length_exponents, verify_size_exponents)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load(args) -> Config:
    cfg = preset(args.preset) if args.preset else None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fp:
                text = fp.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text, cfg)
    if cfg is None:
        raise ConfigError("give --config or --preset")
    if args.set:
        cfg = override(cfg, args.set)
    if args.out:
        cfg = cfg.replace(**{"out.dir": args.out})
    return cfg


def _write(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(text)
    print(f"wrote {path}")


def _render(writer, *args):
    buf = io.StringIO()
    writer(*args, buf)
    return buf.getvalue()


def cmd_eval(cfg: Config, args):
    geom = cfg.geometry()
    res = chain_sensitivity(cfg.model(), geom, cfg.beam, cfg["probe.c1"], cfg["probe.c2"],
                            thickness=cfg["probe.t_fixed"] if cfg.beam is Beam.LOOP_AXIAL else None)
    b = magnetic_from_power(res, alpha_ref_of(geom))
    print(f"eta = {res.eta:.8e} {res.unit} (regime {res.regime.value}); "
          f"magnetic = {b:.8e} {magnetic_unit(res.kappa_prot)}")


def cmd_sweep(cfg: Config, args):
    loop = cfg.beam is Beam.LOOP_AXIAL
    powers = tuple(args.p_laser) if args.p_laser else (cfg["optics.p_laser"],)
    spec = SweepSpec(SweepParameter.LOOP_RADIUS if loop else SweepParameter.CPW_WIDTH,
                     cfg["sweep.min"], cfg["sweep.max"], cfg["sweep.points"], cfg.model(), cfg.beam,
                     powers, cfg["loop.z"] if loop else cfg["cpw.z"], cfg["cpw.l"],
                     cfg["probe.c1"], cfg["probe.c2"], mode=args.mode, grid=cfg.grid(),
                     wire_ratio=cfg["loop.wire_ratio"])
    _write(os.path.join(cfg["out.dir"], "sweep.csv"), _render(sweep_csv, sweep_sensitivity(spec)))


def cmd_optimize(cfg: Config, args):
    geom = cfg.geometry()
    kwargs = {} if cfg.beam is Beam.LOOP_AXIAL else {"include_returns": not args.no_returns}
    fmap = field_map_for(geom, cfg.grid(), **kwargs)
    kp = cfg.protocol.kappa_prot
    thickness = cfg["probe.t_fixed"] if cfg.beam is Beam.LOOP_AXIAL else None
    res = optimize_probe(fmap, kp, cfg["noise.kappa"], thickness=thickness)
    _write(os.path.join(cfg["out.dir"], "optimize_trace.csv"), _render(res.trace_csv))
    _write(os.path.join(cfg["out.dir"], "optimize.json"), dumps(res.as_record()))
    print(f"c1_opt = {res.c1_opt:g}, c2_opt = {res.c2_opt:g}, zeta = {res.zeta:.4f}")


def cmd_scaling(cfg: Config, args):
    geometry = args.geometry
    beam = Beam(args.beam or ("loop" if geometry == "loop" else "parallel"))
    base = cfg.model()
    size = verify_size_exponents(base, geometry, beam)
    _write(os.path.join(cfg["out.dir"], "exponents.csv"), _render(exponent_csv, size))
    if geometry == "cpw":
        length = verify_length_exponents(base, beam)
        _write(os.path.join(cfg["out.dir"], "exponents_L.csv"), _render(exponent_csv, length))
        size = size + length
    print(f"{sum(r.passed for r in size)}/{len(size)} exponent checks pass")


def cmd_report(cfg: Config, args):
    bundle = run_report(cfg)
    for path in bundle.write(cfg["out.dir"]):
        print(f"wrote {path}")


def cmd_export_map(cfg: Config, args):
    geom = cfg.geometry()
    kwargs = {"include_returns": args.returns} if cfg.beam is not Beam.LOOP_AXIAL else {}
    fmap = field_map_for(geom, cfg.grid(), **kwargs)
    _write(os.path.join(cfg["out.dir"], f"field_map_{fmap.kind}.csv"), _render(fmap.to_csv))


COMMANDS = {
    "eval": cmd_eval, "sweep": cmd_sweep, "optimize": cmd_optimize,
    "scaling": cmd_scaling, "report": cmd_report, "export-map": cmd_export_map,
}


def build_parser():
    parser = _Parser(prog="nvpower", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--config", help="configuration file (key = value lines)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameter set")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
    common.add_argument("--out", help="output directory (overrides out.dir)")
    common.add_argument("--threads", type=int, help="worker threads for compiled kernels")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("eval", parents=[common], help="sensitivity at the configured point")
    p = sub.add_parser("sweep", parents=[common], help="sensitivity versus concentrator size")
    p.add_argument("--mode", choices=("analytic", "field-map"), default="analytic")
    p.add_argument("--p-laser", type=float, action="append", help="laser power in W (repeatable)")
    p = sub.add_parser("optimize", parents=[common], help="probe-volume grid search")
    p.add_argument("--no-returns", action="store_true", help="CPW map without return conductors")
    p = sub.add_parser("scaling", parents=[common], help="exponent verification")
    p.add_argument("--geometry", choices=("cpw", "loop"), default="cpw")
    p.add_argument("--beam", choices=[b.value for b in Beam])
    sub.add_parser("report", parents=[common], help="full report bundle")
    p = sub.add_parser("export-map", parents=[common], help="field-to-power ratio map as CSV")
    p.add_argument("--returns", action="store_true", help="include CPW return conductors")
    return parser


def dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None:
            if args.threads < 1:
                raise _UsageError("--threads must be >= 1")
            _accel.set_threads(args.threads)
        cfg = _load(args)
        if (args.command == "scaling" and args.beam is not None
                and (args.geometry == "loop") != (args.beam == "loop")):
            raise _UsageError("loop geometry takes the loop beam, cpw a cpw beam")
        COMMANDS[args.command](cfg, args)
    except (_UsageError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
