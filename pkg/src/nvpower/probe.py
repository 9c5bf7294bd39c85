"""Probe-volume averages over field maps and the (c1, c2) grid search.

Averages use a node-centred midpoint rule: each node owns the dual cell
``[u - h/2, u + h/2]`` clipped to the map, and a region takes the overlap
of that cell.  Region faces that land on nodes therefore give the
trapezoid rule, faces on cell boundaries the plain midpoint rule.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .concentrators import FieldMap
from .core import fom_sat
from .errors import DomainError, GeometryError, ResolutionError

MIN_NODES = 16
MAX_MASKED_FRACTION = 0.2
PLATEAU_ETA_TOLERANCE = 0.01
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ProbeRegionCpw:
    """Box of width c1*w and height c2*w on the track, length L along it."""
    c1: float
    c2: float
    w: float
    length_l: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0 and self.w > 0 and self.length_l > 0):
            raise DomainError("CPW probe region needs positive c1, c2, w and L")


@dataclass(frozen=True)
class ProbeRegionLoop:
    """Coaxial cylinder of radius c1*R, thickness c2*R (or a fixed thickness)."""
    c1: float
    c2: Optional[float]
    r_loop: float
    thickness: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.c1 <= 1:
            raise DomainError("loop probe radius ratio c1 must lie in (0, 1]")
        if (self.c2 is None) == (self.thickness is None):
            raise DomainError("give exactly one of c2 and thickness")
        if not self.t > 0 or not self.r_loop > 0:
            raise DomainError("loop probe thickness and radius must be positive")

    @property
    def t(self):
        return self.thickness if self.thickness is not None else self.c2 * self.r_loop


def region_volume(region) -> float:
    if isinstance(region, ProbeRegionCpw):
        return region.c1 * region.c2 * region.w * region.w * region.length_l
    if isinstance(region, ProbeRegionLoop):
        r = region.c1 * region.r_loop
        return math.pi * r * r * region.t
    raise DomainError(f"unsupported region {region!r}")


def _linear_weights(nodes, lo, hi):
    h = nodes[1] - nodes[0]
    a = np.maximum(nodes - 0.5 * h, nodes[0])
    b = np.minimum(nodes + 0.5 * h, nodes[-1])
    return np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)


def _radial_weights(nodes, hi):
    h = nodes[1] - nodes[0]
    a = np.maximum(nodes - 0.5 * h, 0.0)
    b = np.minimum(np.minimum(nodes + 0.5 * h, nodes[-1]), hi)
    return np.where(b > a, 0.5 * (b * b - a * a), 0.0)


def _check_inside(nodes, lo, hi, what):
    span = nodes[-1] - nodes[0]
    if lo < nodes[0] - _EDGE_TOL * span or hi > nodes[-1] + _EDGE_TOL * span:
        raise GeometryError(f"probe region {what} [{lo:.3e}, {hi:.3e}] leaves the field map")


def _bounds(fmap: FieldMap, region):
    if fmap.kind == "cpw":
        if not isinstance(region, ProbeRegionCpw):
            raise DomainError("CPW map needs a ProbeRegionCpw")
        half = 0.5 * region.c1 * region.w
        z0 = fmap.z[0]
        return (-half, half), (z0, z0 + region.c2 * region.w)
    if not isinstance(region, ProbeRegionLoop):
        raise DomainError("loop map needs a ProbeRegionLoop")
    return (0.0, region.c1 * region.r_loop), (-0.5 * region.t, 0.5 * region.t)


def _axis_weights(fmap: FieldMap, ubounds, zbounds):
    _check_inside(fmap.u, ubounds[0], ubounds[1], "width")
    _check_inside(fmap.z, zbounds[0], zbounds[1], "height")
    if fmap.kind == "cpw":
        wu = _linear_weights(fmap.u, *ubounds)
    else:
        wu = _radial_weights(fmap.u, ubounds[1])
    wz = _linear_weights(fmap.z, *zbounds)
    return wu, wz


def _integrands(fmap: FieldMap, kappa_prot):
    keep = ~fmap.masked
    f = np.where(keep, fmap.alpha ** kappa_prot, 0.0)
    return np.ascontiguousarray(f), np.ascontiguousarray(keep.astype(np.float64))


def _reduce(sf, sm, wtot, nodes):
    """Turn raw sums into an average, or raise for unusable regions."""
    if nodes < MIN_NODES:
        raise ResolutionError(f"only {nodes} unmasked nodes in probe region (need {MIN_NODES})")
    if 1.0 - sm / wtot > MAX_MASKED_FRACTION:
        raise GeometryError("more than 20% of the probe region lies inside the conductor")
    return sf / sm


def avg_alpha_pow(fmap: FieldMap, region, kappa_prot) -> float:
    """Volume average of alpha**kappa_prot over unmasked nodes of the region."""
    wu, wz = _axis_weights(fmap, *_bounds(fmap, region))
    f, m = _integrands(fmap, kappa_prot)
    sf = kernels.region_sums(f, wu[None, :], wz[None, :])[0, 0]
    sm = kernels.region_sums(m, wu[None, :], wz[None, :])[0, 0]
    nodes = int(np.count_nonzero((wu[:, None] > 0) & (wz[None, :] > 0) & ~fmap.masked))
    return _reduce(sf, sm, wu.sum() * wz.sum(), nodes)


def zeta_of_region(fmap: FieldMap, region, kappa_prot, alpha_ref=None) -> float:
    ref = fmap.alpha_ref if alpha_ref is None else alpha_ref
    return avg_alpha_pow(fmap, region, kappa_prot) / ref ** kappa_prot


@dataclass(frozen=True)
class TraceEntry:
    c1: float
    c2: float
    fom: float
    zeta: float
    volume: float
    avg_alpha_pow: float = math.nan


@dataclass(frozen=True)
class OptimizationResult:
    c1_opt: float
    c2_opt: float
    zeta: float
    fom: float
    volume: float
    avg_alpha_pow: float
    kappa_prot: int
    kappa_noise: float
    search_trace: List[TraceEntry] = field(repr=False)
    c1_plateau: Tuple[float, float] = (math.nan, math.nan)
    c2_plateau: Tuple[float, float] = (math.nan, math.nan)
    skipped: int = 0

    def trace_csv(self, fp):
        fp.write("c1,c2,fom,zeta,volume\n")
        for e in self.search_trace:
            fp.write(f"{e.c1:.8e},{e.c2:.8e},{e.fom:.8e},{e.zeta:.8e},{e.volume:.8e}\n")

    def as_record(self):
        return {
            "c1_opt": self.c1_opt, "c2_opt": self.c2_opt, "zeta": self.zeta,
            "fom": self.fom, "volume_m3": self.volume, "avg_alpha_pow": self.avg_alpha_pow,
            "kappa_prot": self.kappa_prot, "kappa_noise": self.kappa_noise,
            "c1_plateau": list(self.c1_plateau), "c2_plateau": list(self.c2_plateau),
            "candidates": len(self.search_trace), "skipped": self.skipped,
        }


def default_search_values(kind="cpw"):
    """0.05 steps up to 3.0; loop radii stop below the loop itself."""
    values = np.round(np.arange(1, 61) * 0.05, 10)
    if kind == "loop":
        return values[values < 1.0], values
    return values, values


def _make_region(fmap: FieldMap, c1, c2, length_l, thickness):
    if fmap.kind == "cpw":
        return ProbeRegionCpw(c1, c2, fmap.scale, length_l)
    if thickness is not None:
        return ProbeRegionLoop(c1, None, fmap.scale, thickness=thickness)
    return ProbeRegionLoop(c1, c2, fmap.scale)


def _plateau(values, foms, best, kappa_prot):
    floor = best * (1.0 + PLATEAU_ETA_TOLERANCE) ** (-kappa_prot / 2.0)
    inside = [v for v, f in zip(values, foms) if f >= floor]
    return (min(inside), max(inside)) if inside else (math.nan, math.nan)


def optimize_probe(fmap: FieldMap, kappa_prot, kappa_noise,
                   search_grid: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                   length_l=None, thickness=None) -> OptimizationResult:
    """Exhaustive search of FoM_sat over a (c1, c2) grid.

    Candidates that leave the map, are under-resolved or mostly masked are
    skipped.  Ties go to the smaller volume, then smaller c1, then c2.
    ``thickness`` (loop only) fixes the probe thickness; c2 is then ignored.
    """
    if search_grid is None:
        search_grid = default_search_values(fmap.kind)
    c1s = np.array(sorted(set(float(c) for c in search_grid[0])))
    c2s = np.array(sorted(set(float(c) for c in search_grid[1])))
    if thickness is not None:
        c2s = np.array([thickness / fmap.scale])
    if c1s.size == 0 or c2s.size == 0:
        raise DomainError("empty search grid")
    if fmap.kind == "cpw" and length_l is None:
        length_l = fmap.geometry.length_l if fmap.geometry is not None else 1.0

    regions = {}
    rows_u, rows_z = {}, {}
    for c1 in c1s:
        for c2 in c2s:
            try:
                region = _make_region(fmap, c1, c2, length_l, thickness)
                ub, zb = _bounds(fmap, region)
                wu, wz = _axis_weights(fmap, ub, zb)
            except (DomainError, GeometryError):
                continue
            regions[(c1, c2)] = region
            rows_u[c1] = wu
            rows_z[c2] = wz
    if not regions:
        raise GeometryError("no search candidate fits the field map")

    u_keys = sorted(rows_u)
    z_keys = sorted(rows_z)
    wu_all = np.array([rows_u[k] for k in u_keys])
    wz_all = np.array([rows_z[k] for k in z_keys])
    f, m = _integrands(fmap, kappa_prot)
    sf = kernels.region_sums(f, wu_all, wz_all)
    sm = kernels.region_sums(m, wu_all, wz_all)
    ucount = (wu_all > 0).astype(np.int64)
    zcount = (wz_all > 0).astype(np.int64)
    keep = (~fmap.masked).astype(np.int64)
    nodes = ucount @ keep @ zcount.T

    trace = []
    skipped = 0
    for i, c1 in enumerate(u_keys):
        for j, c2 in enumerate(z_keys):
            region = regions.get((c1, c2))
            if region is None:
                continue
            try:
                avg = _reduce(sf[i, j], sm[i, j], wu_all[i].sum() * wz_all[j].sum(), int(nodes[i, j]))
            except (ResolutionError, GeometryError):
                skipped += 1
                continue
            vol = region_volume(region)
            trace.append(TraceEntry(c1, c2, fom_sat(avg, vol, kappa_noise),
                                    avg / fmap.alpha_ref ** kappa_prot, vol, avg))
    if not trace:
        raise GeometryError("every search candidate was rejected")

    best = max(trace, key=lambda e: (e.fom, -e.volume, -e.c1, -e.c2))
    along_c2 = [e for e in trace if e.c1 == best.c1]
    along_c1 = [e for e in trace if e.c2 == best.c2]
    return OptimizationResult(
        c1_opt=best.c1, c2_opt=best.c2, zeta=best.zeta, fom=best.fom, volume=best.volume,
        avg_alpha_pow=best.avg_alpha_pow,
        kappa_prot=kappa_prot, kappa_noise=kappa_noise, search_trace=trace,
        c1_plateau=_plateau([e.c1 for e in along_c1], [e.fom for e in along_c1], best.fom, kappa_prot),
        c2_plateau=_plateau([e.c2 for e in along_c2], [e.fom for e in along_c2], best.fom, kappa_prot),
        skipped=skipped,
    )
