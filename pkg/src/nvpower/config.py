"""Flat ``key = value`` configuration with unit suffixes and a built-in preset.

Suffixes are only understood here; everything handed to the numerical
modules is plain SI.
"""
import math
import re
from decimal import Decimal
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, Optional

from .core import (Beam, DetectorModel, NoiseModel, NVEnsemble, Protocol, ProtocolKind,
                   beta_from_protocol)
from .concentrators import CpwGeometry, GridSpec, LoopGeometry
from .errors import ConfigError, DomainError

# decimal exponent of each suffix; applied exactly so "10 um" is 1e-05, not 9.999...e-06
_SCALE = {
    "length": {"m": 0, "mm": -3, "um": -6, "nm": -9},
    "power": {"W": 0, "mW": -3, "uW": -6},
    "time": {"s": 0, "ms": -3, "us": -6, "ns": -9},
}


@dataclass(frozen=True)
class _Key:
    kind: str  # float, int, str, or an enum tag
    dim: Optional[str] = None
    default: object = None
    positive: bool = True
    choices: tuple = ()


_KEYS = {
    "protocol.kind": _Key("choice", choices=("slope", "variance")),
    "protocol.beta": _Key("float"),
    "protocol.cmax": _Key("float", positive=False),
    "protocol.tau": _Key("float", "time"),
    "noise.kappa": _Key("choice", choices=(0.0, 0.5)),
    "noise.xi": _Key("float", default=1.0),
    "nv.rho": _Key("float"),
    "nv.sigma": _Key("float"),
    "optics.p_laser": _Key("float", "power"),
    "optics.i_sat": _Key("float"),
    "optics.beam": _Key("choice", default="parallel", choices=("parallel", "perpendicular", "loop")),
    "cpw.w": _Key("float", "length"),
    "cpw.z": _Key("float", default=50.0),
    "cpw.l": _Key("float", "length", default=1e-3),
    "cpw.standoff": _Key("float", "length", default=0.0, positive=False),
    "loop.r": _Key("float", "length"),
    "loop.z": _Key("float", default=50.0),
    "loop.wire_ratio": _Key("float", default=0.2),
    "probe.c1": _Key("float", default=1.0),
    "probe.c2": _Key("float", default=1.0),
    "probe.t_fixed": _Key("float", "length"),
    "grid.nx": _Key("int", default=121),
    "grid.nz": _Key("int", default=121),
    "grid.extent": _Key("float", default=3.0),
    "sweep.min": _Key("float", "length", default=1e-7),
    "sweep.max": _Key("float", "length", default=1e-3),
    "sweep.points": _Key("int", default=81),
    "out.dir": _Key("str", default="out"),
}

REQUIRED = ("protocol.kind", "noise.kappa", "nv.rho", "nv.sigma", "optics.p_laser", "optics.i_sat")

PAPER_DEFAULTS = """\
# constants of the CPW/loop sensitivity curves; 1 W and w = 10 um is the headline point
protocol.kind = slope
protocol.beta = 1e4
noise.kappa = 0.5
noise.xi = 1
nv.rho = 8e23
nv.sigma = 1e5
optics.p_laser = 1 W
optics.i_sat = 1e9
optics.beam = parallel
cpw.w = 10 um
cpw.z = 50
cpw.l = 1 mm
loop.r = 10 um
loop.z = 50
probe.c1 = 1
probe.c2 = 1
sweep.min = 1e-7
sweep.max = 1e-3
sweep.points = 81
"""

PRESETS = {"paper_defaults": PAPER_DEFAULTS}

_NUMBER = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)$")


def _convert(key, spec: _Key, raw, lineno):
    where = f"line {lineno}: {key}" if lineno else key
    if spec.kind == "str":
        if not raw:
            raise ConfigError(f"{where}: empty value")
        return raw
    if spec.kind == "choice" and isinstance(spec.choices[0], str):
        if raw not in spec.choices:
            raise ConfigError(f"{where}: {raw!r} not one of {', '.join(spec.choices)}")
        return raw
    m = _NUMBER.match(raw)
    if not m:
        raise ConfigError(f"{where}: malformed value {raw!r}")
    number, suffix = m.groups()
    if spec.kind == "int":
        if suffix or not re.fullmatch(r"[-+]?\d+", number):
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        value = int(number)
    else:
        shift = 0
        if suffix:
            table = _SCALE.get(spec.dim, {})
            if suffix not in table:
                allowed = ", ".join(table) or "none"
                raise ConfigError(f"{where}: unit {suffix!r} not allowed (allowed: {allowed})")
            shift = table[suffix]
        value = float(Decimal(number).scaleb(shift))
    if spec.kind == "choice":
        if value not in spec.choices:
            raise ConfigError(f"{where}: {raw} not one of {', '.join(map(str, spec.choices))}")
        return value
    if not math.isfinite(value) or (value <= 0 if spec.positive else value < 0):
        raise ConfigError(f"{where}: value {raw!r} out of range")
    return value


@dataclass(frozen=True, eq=False)
class Config:
    """Validated SI values for every recognised key (absent optional keys hold None)."""
    values: MappingProxyType

    def __eq__(self, other):
        return isinstance(other, Config) and dict(self.values) == dict(other.values)

    def __hash__(self):
        return hash(tuple(sorted(self.values.items())))

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **updates):
        vals = dict(self.values)
        vals.update({k.replace("__", "."): v for k, v in updates.items()})
        return _validated(vals)

    # -- derived objects -----------------------------------------------------------------
    @property
    def beam(self) -> Beam:
        return Beam(self["optics.beam"])

    @property
    def protocol(self) -> Protocol:
        return Protocol(ProtocolKind(self["protocol.kind"]), self.beta)

    @property
    def beta(self):
        if self["protocol.beta"] is not None:
            return self["protocol.beta"]
        return beta_from_protocol(self["protocol.cmax"], self["protocol.tau"])

    def model(self, kind=None, p_laser=None) -> DetectorModel:
        kind = ProtocolKind(kind or self["protocol.kind"])
        return DetectorModel(Protocol(kind, self.beta),
                             NoiseModel(self["noise.kappa"], self["noise.xi"]),
                             NVEnsemble(self["nv.rho"], self["nv.sigma"]),
                             self["optics.p_laser"] if p_laser is None else p_laser,
                             self["optics.i_sat"])

    def cpw(self) -> CpwGeometry:
        if self["cpw.w"] is None:
            raise ConfigError("missing required key cpw.w")
        return CpwGeometry(self["cpw.w"], self["cpw.z"], self["cpw.l"], self["cpw.standoff"])

    def loop(self) -> LoopGeometry:
        if self["loop.r"] is None:
            raise ConfigError("missing required key loop.r")
        return LoopGeometry(self["loop.r"], self["loop.z"], self["loop.wire_ratio"])

    def geometry(self):
        return self.loop() if self.beam is Beam.LOOP_AXIAL else self.cpw()

    def grid(self) -> GridSpec:
        return GridSpec(self["grid.nx"], self["grid.nz"], self["grid.extent"])

    def to_text(self, skip=()) -> str:
        """Serialise set keys in sorted order; ``repr`` keeps floats exact."""
        lines = []
        for key in sorted(self.values):
            v = self.values[key]
            if v is None or key in skip:
                continue
            lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
        return "\n".join(lines) + "\n"


def _validated(vals: Dict[str, object]) -> Config:
    for key in REQUIRED:
        if vals.get(key) is None:
            raise ConfigError(f"missing required key {key}")
    if vals.get("protocol.beta") is None and (vals.get("protocol.cmax") is None
                                              or vals.get("protocol.tau") is None):
        raise ConfigError("missing required key protocol.beta (or protocol.cmax with protocol.tau)")
    beam = vals.get("optics.beam")
    need = "loop.r" if beam == "loop" else "cpw.w"
    if vals.get(need) is None:
        raise ConfigError(f"missing required key {need}")
    if vals["sweep.min"] >= vals["sweep.max"]:
        raise ConfigError("sweep.min must be below sweep.max")
    cfg = Config(MappingProxyType(dict(vals)))
    try:
        cfg.model()
        cfg.geometry()
        cfg.grid()
        if vals["sweep.points"] < 8:
            raise DomainError("sweep.points must be at least 8")
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def parse_entries(text, into=None):
    """Raw ``{key: value}`` from config text, validated per key but not as a whole."""
    vals = dict(into or {})
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        vals[key] = _convert(key, _KEYS[key], raw, lineno)
    return vals


def _defaults():
    return {k: s.default for k, s in _KEYS.items()}


def parse_config(text, base: Optional[Config] = None) -> Config:
    """Parse and validate; keys in ``text`` override ``base`` (or the defaults)."""
    start = dict(base.values) if base is not None else _defaults()
    return _validated(parse_entries(text, start))


def preset(name) -> Config:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})")
    return parse_config(PRESETS[name])


def override(cfg: Config, assignments) -> Config:
    """Apply ``key=value`` strings (command-line ``--set``) on top of ``cfg``."""
    text = "\n".join(a.replace("=", " = ", 1) for a in assignments)
    return parse_config(text, cfg)
