"""Size sweeps, exponent fits and the scaling-law bookkeeping.

``chain_sensitivity`` evaluates the full chain for one concentrator size:
field-to-power ratio, probe volume, beam cross-section, PL density and the
ensemble sensitivity.  Everything else here builds on it.
"""
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .concentrators import (CpwGeometry, GridSpec, LoopGeometry, cpw_alpha_ref, cpw_field_map,
                            loop_alpha_ref, loop_field_map)
from .core import (Beam, DetectorModel, NoiseModel, NVEnsemble, Optics, Protocol, ProtocolKind,
                   Regime, SensitivityResult, eta_ensemble, pl_density)
from .errors import DomainError, NumericalError
from .probe import ProbeRegionCpw, ProbeRegionLoop, avg_alpha_pow, region_volume

FIT_TOLERANCE = 0.05
WINDOW_DECADES = 1.0


class SweepParameter(enum.Enum):
    CPW_WIDTH = "cpw_width"
    LOOP_RADIUS = "loop_radius"


def _is_loop(geometry):
    return isinstance(geometry, LoopGeometry) or geometry == "loop"


def probe_geometry(geometry, beam, c1=1.0, c2=1.0, thickness=None, length_l=None):
    """Probe volume, beam cross-section and optical path for a concentrator.

    CPW parallel beam: A = c1*c2*w^2 along a probe of length L.
    CPW perpendicular beam (from the top): A = c1*w*L with L = w unless given.
    Loop (beam along the axis): A = pi*(c1*R)^2 through a thickness c2*R.
    """
    beam = Beam(beam)
    if isinstance(geometry, CpwGeometry):
        w = geometry.w
        if beam is Beam.PARALLEL_CPW:
            length = geometry.length_l if length_l is None else length_l
            area = c1 * c2 * w * w
        elif beam is Beam.PERPENDICULAR_CPW:
            length = w if length_l is None else length_l
            area = c1 * w * length
        else:
            raise DomainError("CPW needs a parallel or perpendicular beam")
        region = ProbeRegionCpw(c1, c2, w, length)
    elif isinstance(geometry, LoopGeometry):
        if beam is not Beam.LOOP_AXIAL:
            raise DomainError("loop needs the axial beam")
        r = c1 * geometry.r_loop
        area = math.pi * r * r
        if thickness is not None:
            region = ProbeRegionLoop(c1, None, geometry.r_loop, thickness=thickness)
        else:
            region = ProbeRegionLoop(c1, c2, geometry.r_loop)
    else:
        raise DomainError(f"unsupported geometry {geometry!r}")
    volume = region_volume(region)
    return region, volume, area, volume / area


def alpha_ref_of(geometry):
    return loop_alpha_ref(geometry) if _is_loop(geometry) else cpw_alpha_ref(geometry)


def chain_sensitivity(model: DetectorModel, geometry, beam, c1=1.0, c2=1.0, zeta=1.0,
                      avg=None, thickness=None, length_l=None, limit=None) -> SensitivityResult:
    """Ensemble power sensitivity of one concentrator size.

    ``avg`` overrides the analytic ``zeta * alpha_ref**kappa`` average (used in
    field-map mode).  ``limit`` picks an asymptotic PL law, see ``pl_density``.
    """
    region, volume, area, depth = probe_geometry(geometry, beam, c1, c2, thickness, length_l)
    optics = Optics(model.p_laser, model.i_sat, area, depth, beam)
    kp = model.protocol.kappa_prot
    if avg is None:
        avg = zeta * alpha_ref_of(geometry) ** kp
    else:
        zeta = avg / alpha_ref_of(geometry) ** kp
    rho = pl_density(model.ensemble, optics, limit)
    regime = optics.regime if limit is None else Regime(limit)
    return eta_ensemble(avg, model.protocol, model.noise, rho, volume, regime=regime, zeta=zeta)


# --- sweeps ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    parameter: SweepParameter
    lo: float
    hi: float
    points: int
    model: DetectorModel
    beam: Beam = Beam.PARALLEL_CPW
    p_lasers: Tuple[float, ...] = (1.0,)
    z_impedance: float = 50.0
    length_l: float = 1e-3
    c1: float = 1.0
    c2: float = 1.0
    zeta: float = 1.0
    mode: str = "analytic"
    grid: Optional[GridSpec] = None
    wire_ratio: float = 0.2
    include_returns: bool = False

    def __post_init__(self):
        object.__setattr__(self, "parameter", SweepParameter(self.parameter))
        object.__setattr__(self, "beam", Beam(self.beam))
        if not 0 < self.lo < self.hi:
            raise DomainError("sweep range needs 0 < min < max")
        if self.points < 8:
            raise DomainError("sweep needs at least 8 points")
        if self.mode not in ("analytic", "field-map"):
            raise DomainError(f"unknown sweep mode {self.mode!r}")
        loop = self.parameter is SweepParameter.LOOP_RADIUS
        if loop != (self.beam is Beam.LOOP_AXIAL):
            raise DomainError("loop sweeps use the axial beam, CPW sweeps a CPW beam")
        if not self.p_lasers or min(self.p_lasers) <= 0:
            raise DomainError("need at least one positive laser power")

    def abscissa(self):
        return np.logspace(math.log10(self.lo), math.log10(self.hi), self.points)

    def geometry(self, size):
        if self.parameter is SweepParameter.LOOP_RADIUS:
            return LoopGeometry(size, self.z_impedance, self.wire_ratio)
        return CpwGeometry(size, self.z_impedance, self.length_l)


@dataclass(frozen=True)
class SweepRow:
    param: float
    eta: float
    unit: str
    regime: Optional[Regime]
    p_laser: float
    saturation: float = math.nan
    error: Optional[str] = None


def _field_map_average(spec: SweepSpec, geom, kappa_prot):
    if spec.parameter is SweepParameter.LOOP_RADIUS:
        fmap = loop_field_map(geom, spec.grid or GridSpec(nx=61, nz=121))
        region = ProbeRegionLoop(spec.c1, spec.c2, geom.r_loop)
    else:
        fmap = cpw_field_map(geom, spec.grid or GridSpec(), include_returns=spec.include_returns)
        length = geom.length_l if spec.beam is Beam.PARALLEL_CPW else geom.w
        region = ProbeRegionCpw(spec.c1, spec.c2, geom.w, length)
    return avg_alpha_pow(fmap, region, kappa_prot)


def sweep_sensitivity(spec: SweepSpec) -> List[SweepRow]:
    """Sensitivity versus size for each laser power, ascending in (P_laser, size).

    Per-point failures are recorded in the row rather than raised.
    """
    kp = spec.model.protocol.kappa_prot
    unit = spec.model.protocol.unit
    sizes = spec.abscissa()
    averages = {}
    if spec.mode == "field-map":
        for s in sizes:
            try:
                averages[s] = _field_map_average(spec, spec.geometry(s), kp)
            except (DomainError, NumericalError) as exc:
                averages[s] = exc
    rows = []
    for p in sorted(spec.p_lasers):
        model = _with_power(spec.model, p)
        for s in sizes:
            avg = averages.get(s)
            try:
                if isinstance(avg, Exception):
                    raise avg
                geom = spec.geometry(s)
                res = chain_sensitivity(model, geom, spec.beam, spec.c1, spec.c2,
                                        zeta=spec.zeta, avg=avg)
                _, _, area, _ = probe_geometry(geom, spec.beam, spec.c1, spec.c2)
                rows.append(SweepRow(float(s), res.eta, unit, res.regime, p,
                                     area * model.i_sat / p))
            except (DomainError, NumericalError) as exc:
                rows.append(SweepRow(float(s), math.nan, unit, None, p, error=str(exc)))
    return rows


def _with_power(model: DetectorModel, p_laser) -> DetectorModel:
    return DetectorModel(model.protocol, model.noise, model.ensemble, p_laser, model.i_sat)


def sweep_csv(rows: Sequence[SweepRow], fp):
    fp.write("param_m,eta,unit,regime,p_laser_w\n")
    for r in rows:
        regime = r.regime.value if r.regime is not None else "error"
        fp.write(f"{r.param:.8e},{r.eta:.8e},{r.unit},{regime},{r.p_laser:.8e}\n")


# --- exponents ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    intercept: float
    max_residual: float
    window: Tuple[float, float]
    points: int


def fit_exponent(rows: Sequence[SweepRow], window) -> ExponentFit:
    """Least-squares slope of log(eta) against log(size) inside ``window``."""
    lo, hi = window
    sel = [r for r in rows if lo * (1 - 1e-12) <= r.param <= hi * (1 + 1e-12) and r.error is None]
    if len(sel) < 4:
        raise DomainError(f"need >= 4 points in window, got {len(sel)}")
    regimes = {r.regime for r in sel}
    if len(regimes) > 1:
        raise DomainError(f"mixed regimes in fit window: {sorted(g.value for g in regimes if g)}")
    x = np.log([r.param for r in sel])
    y = np.log([r.eta for r in sel])
    if not np.all(np.isfinite(y)):
        raise DomainError("non-positive sensitivity in fit window")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ExponentFit(float(slope), float(intercept), float(np.max(np.abs(resid))),
                       (sel[0].param, sel[-1].param), len(sel))


@dataclass(frozen=True)
class PredictedExponents:
    size_exp: Fraction
    l_exp: Optional[Fraction] = None
    symbol: str = "w"

    @property
    def w_exp(self):
        return self.size_exp if self.symbol == "w" else None

    @property
    def r_exp(self):
        return self.size_exp if self.symbol == "R" else None


def _fraction(x):
    return Fraction(x).limit_denominator(8) if isinstance(x, float) else Fraction(x)


def predicted_exponents(geometry, beam, regime, kappa_prot, kappa_noise) -> PredictedExponents:
    """Exact exponents of eta in the concentrator size (and L for the CPW).

    For the perpendicular CPW beam ``size_exp`` has L tied to w; ``l_exp``
    is the exponent in an independently varied L.
    """
    regime = Regime(regime)
    beam = Beam(beam)
    kp, kn = _fraction(kappa_prot), _fraction(kappa_noise)
    if kp not in (1, 2) or kn not in (0, Fraction(1, 2)):
        raise DomainError("kappa_prot must be 1 or 2 and kappa_noise 0 or 1/2")
    if regime is Regime.INTERMEDIATE:
        raise DomainError("no power law in the intermediate regime")
    a = (1 - kn) / kp
    sat = regime is Regime.SATURATED
    if _is_loop(geometry):
        if beam is not Beam.LOOP_AXIAL:
            raise DomainError("loop needs the axial beam")
        return PredictedExponents(2 - 6 * a if sat else 2 - 2 * a, None, "R")
    if beam is Beam.PARALLEL_CPW:
        return PredictedExponents(2 - 4 * a if sat else Fraction(2), -2 * a, "w")
    if beam is Beam.PERPENDICULAR_CPW:
        return PredictedExponents(2 - 6 * a if sat else 2 - 2 * a, -2 * a if sat else Fraction(0), "w")
    raise DomainError(f"unsupported geometry/beam combination {geometry!r}/{beam}")


def crossover_width(p_laser, i_sat, geometry="cpw", beam=Beam.PARALLEL_CPW, c1=1.0, c2=1.0):
    """Size at which the beam cross-section needs exactly P_laser to saturate."""
    beam = Beam(beam)
    target = p_laser / i_sat
    if _is_loop(geometry):
        return math.sqrt(target / math.pi) / c1
    if beam is Beam.PARALLEL_CPW:
        return math.sqrt(target / (c1 * c2))
    if beam is Beam.PERPENDICULAR_CPW:
        return math.sqrt(target / c1)
    raise DomainError("CPW needs a parallel or perpendicular beam")


def auto_windows(lo, hi, crossover, decades=WINDOW_DECADES):
    f = 10.0 ** decades
    return (lo, crossover / f), (crossover * f, hi)


@dataclass(frozen=True)
class ExponentRecord:
    geometry: str
    beam: str
    regime: str
    protocol: str
    kappa_noise: float
    variable: str
    predicted: Fraction
    fitted: float
    residual: float

    @property
    def passed(self):
        return abs(self.fitted - float(self.predicted)) <= FIT_TOLERANCE


def exponent_csv(records: Sequence[ExponentRecord], fp):
    fp.write("geometry,beam,regime,protocol,kappa_noise,predicted,fitted,residual,pass\n")
    for r in records:
        fp.write(f"{r.geometry},{r.beam},{r.regime},{r.protocol},{r.kappa_noise:g},"
                 f"{r.predicted},{r.fitted:.8e},{r.residual:.8e},{'pass' if r.passed else 'fail'}\n")


def _model(base: DetectorModel, kind: ProtocolKind, kappa_noise) -> DetectorModel:
    return DetectorModel(Protocol(kind, base.protocol.beta_prot),
                         NoiseModel(kappa_noise, base.noise.xi_noise),
                         base.ensemble, base.p_laser, base.i_sat)


def verify_size_exponents(base: DetectorModel, geometry="cpw", beam=Beam.PARALLEL_CPW,
                          decades=4.0, per_decade=10, length_l=1e-3,
                          z_impedance=50.0) -> List[ExponentRecord]:
    """Fit the size exponent in both regimes for every protocol and noise case."""
    beam = Beam(beam)
    loop = _is_loop(geometry)
    xc = crossover_width(base.p_laser, base.i_sat, "loop" if loop else "cpw", beam)
    lo, hi = xc * 10 ** -decades, xc * 10 ** decades
    records = []
    for kind in (ProtocolKind.SLOPE, ProtocolKind.VARIANCE):
        for kn in (0.5, 0.0):
            model = _model(base, kind, kn)
            spec = SweepSpec(SweepParameter.LOOP_RADIUS if loop else SweepParameter.CPW_WIDTH,
                             lo, hi, int(2 * decades * per_decade) + 1, model, beam,
                             (base.p_laser,), z_impedance, length_l)
            rows = sweep_sensitivity(spec)
            for regime, window in zip((Regime.SATURATED, Regime.LINEAR), auto_windows(lo, hi, xc)):
                fit = fit_exponent(rows, window)
                pred = predicted_exponents("loop" if loop else "cpw", beam, regime,
                                           model.protocol.kappa_prot, kn)
                records.append(ExponentRecord("loop" if loop else "cpw", beam.value, regime.value,
                                              kind.value, kn, "R" if loop else "w",
                                              pred.size_exp, fit.exponent, fit.max_residual))
    return records


def verify_length_exponents(base: DetectorModel, beam=Beam.PARALLEL_CPW, depth=2.0,
                            length_ratio=10.0, z_impedance=50.0) -> List[ExponentRecord]:
    """Two-point L exponent at a width ``depth`` decades inside each regime.

    The perpendicular beam decouples L from w here.
    """
    beam = Beam(beam)
    xc = crossover_width(base.p_laser, base.i_sat, "cpw", beam)
    records = []
    for kind in (ProtocolKind.SLOPE, ProtocolKind.VARIANCE):
        for kn in (0.5, 0.0):
            model = _model(base, kind, kn)
            for regime, w in ((Regime.SATURATED, xc * 10 ** -depth), (Regime.LINEAR, xc * 10 ** depth)):
                l1 = 1e-3 if beam is Beam.PARALLEL_CPW else w
                geom = CpwGeometry(w, z_impedance, l1)
                e1 = chain_sensitivity(model, geom, beam, length_l=l1)
                e2 = chain_sensitivity(model, geom, beam, length_l=l1 * length_ratio)
                if e1.regime is not regime or e2.regime is not regime:
                    raise NumericalError("length check left its regime")
                fitted = math.log(e2.eta / e1.eta) / math.log(length_ratio)
                pred = predicted_exponents("cpw", beam, regime, model.protocol.kappa_prot, kn)
                records.append(ExponentRecord("cpw", beam.value, regime.value, kind.value, kn,
                                              "L", pred.l_exp, fitted, 0.0))
    return records


def verify_tables(base: DetectorModel):
    """All Table I (CPW) and Table II (loop) cells; returns (size_records, length_records)."""
    size = []
    for beam in (Beam.PARALLEL_CPW, Beam.PERPENDICULAR_CPW):
        size += verify_size_exponents(base, "cpw", beam)
    size += verify_size_exponents(base, "loop", Beam.LOOP_AXIAL)
    length = []
    for beam in (Beam.PARALLEL_CPW, Beam.PERPENDICULAR_CPW):
        length += verify_length_exponents(base, beam)
    return size, length


# --- geometry comparison and fixed-thickness loop ---------------------------------------------

def cpw_loop_ratio(r_loop, length_l, kappa_prot, kappa_noise) -> float:
    """Order-of-magnitude eta_CPW / eta_loop at w ~ R in the saturated regime."""
    if not (r_loop > 0 and length_l > 0):
        raise DomainError("r_loop and length_l must be positive")
    return (r_loop / length_l) ** (2.0 * (1.0 - kappa_noise) / kappa_prot)


def full_chain_ratio(model: DetectorModel, size, length_l=1e-3, z_impedance=50.0, limit=None):
    """eta_CPW(parallel, w=size) / eta_loop(R=size) with unit c's and zeta."""
    cpw = chain_sensitivity(model, CpwGeometry(size, z_impedance, length_l), Beam.PARALLEL_CPW,
                            limit=limit)
    loop = chain_sensitivity(model, LoopGeometry(size, z_impedance), Beam.LOOP_AXIAL, limit=limit)
    return cpw.eta / loop.eta


def fixed_thickness_zeta(r_loop, thickness_t, kappa_prot) -> float:
    if not (r_loop > 0 and thickness_t > 0):
        raise DomainError("r_loop and thickness must be positive")
    return (r_loop / math.hypot(r_loop, thickness_t)) ** kappa_prot


def fixed_thickness_eta_scaling(r_loop, thickness_t, kappa_prot, kappa_noise, regime) -> float:
    """Proportional eta of a loop over a diamond of fixed thickness T (arbitrary units)."""
    if not (r_loop > 0 and thickness_t > 0):
        raise DomainError("r_loop and thickness must be positive")
    regime = Regime(regime)
    a = (1.0 - kappa_noise) / kappa_prot
    s = r_loop * r_loop + thickness_t * thickness_t
    if regime is Regime.SATURATED:
        return s * r_loop ** (-4.0 * a) * thickness_t ** (-2.0 * a)
    if regime is Regime.LINEAR:
        return s * thickness_t ** (-2.0 * a)
    raise DomainError("fixed-thickness scaling exists only for saturated and linear regimes")


def _log_slope(f, r, h=1e-5):
    return (math.log(f(r * math.exp(h))) - math.log(f(r * math.exp(-h)))) / (2.0 * h)


@dataclass(frozen=True)
class CurveShape:
    kind: str  # "minimum", "maximum", "increasing", "decreasing" or "mixed"
    plateau: Optional[str] = None  # "small-R", "large-R" or None
    stationary_r_over_t: Optional[float] = None
    small_r_slope: float = math.nan
    large_r_slope: float = math.nan

    def matches(self, kind, plateau=None):
        return self.kind == kind and (plateau is None or self.plateau == plateau)


def classify_fixed_thickness(kappa_prot, kappa_noise=0.5, regime=Regime.SATURATED,
                             r_over_t=(1e-4, 1e4), samples=801, flat=0.01) -> CurveShape:
    """Shape of the printed fixed-thickness eta(R), by numerical differentiation.

    Uses the local log-log slope; a stationary point is refined with brentq.
    """
    f = lambda r: fixed_thickness_eta_scaling(r, 1.0, kappa_prot, kappa_noise, regime)
    grid = np.logspace(math.log10(r_over_t[0]), math.log10(r_over_t[1]), samples)
    slopes = np.array([_log_slope(f, r) for r in grid])
    stationary, kind = None, None
    for i in range(samples - 1):
        if np.sign(slopes[i]) != np.sign(slopes[i + 1]) and slopes[i] != 0:
            stationary = brentq(lambda r: _log_slope(f, r), grid[i], grid[i + 1], xtol=1e-14)
            kind = "minimum" if slopes[i] < 0 else "maximum"
            break
    if kind is None:
        if np.all(slopes >= 0):
            kind = "increasing"
        elif np.all(slopes <= 0):
            kind = "decreasing"
        else:
            kind = "mixed"
    plateau = None
    if abs(slopes[0]) < flat:
        plateau = "small-R"
    elif abs(slopes[-1]) < flat:
        plateau = "large-R"
    return CurveShape(kind, plateau, stationary, float(slopes[0]), float(slopes[-1]))


# behaviour stated in words for the fixed-thickness loop, as (kind, plateau)
STATED_BEHAVIOUR = {
    ("variance", "saturated"): ("increasing", "small-R"),
    ("slope", "saturated"): ("minimum", None),
    ("variance", "linear"): ("increasing", None),
    ("slope", "linear"): ("increasing", None),
}


def fixed_thickness_report(kappa_noise=0.5):
    """Printed-formula behaviour next to the stated behaviour, with a mismatch flag."""
    out = []
    for (proto, regime), (kind, plateau) in STATED_BEHAVIOUR.items():
        kp = 1 if proto == "slope" else 2
        shape = classify_fixed_thickness(kp, kappa_noise, Regime(regime))
        out.append({
            "protocol": proto, "regime": regime, "kappa_noise": kappa_noise,
            "formula_shape": shape.kind, "formula_plateau": shape.plateau,
            "stationary_r_over_t": shape.stationary_r_over_t,
            "stated_shape": kind, "stated_plateau": plateau,
            "discrepancy": not shape.matches(kind, plateau),
        })
    return out
