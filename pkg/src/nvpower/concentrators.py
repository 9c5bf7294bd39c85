"""Field-to-power ratio of the RF concentrators.

The CPW is modelled as a thin strip carrying a uniform sheet current and the
loop as a circular filament, both magnetostatic.  Maps are computed per
square-root watt, so every value is an ``alpha`` in T/W^0.5.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import MU0
from .errors import DomainError, ResolutionError

MAX_SPACING_FRACTION = 1.0 / 8.0
RETURN_GAP_RATIO = 0.5
RETURN_WIDTH_RATIO = 1.0


class Component(enum.Enum):
    IN_PLANE_X = "in_plane_x"
    AXIAL_Z = "axial_z"


@dataclass(frozen=True)
class CpwGeometry:
    w: float
    z_impedance: float = 50.0
    length_l: float = 1e-3
    standoff: float = 0.0

    def __post_init__(self):
        if not (self.w > 0 and self.z_impedance > 0 and self.length_l > 0):
            raise DomainError("CPW width, impedance and length must be positive")
        if not self.standoff >= 0:
            raise DomainError("standoff must be >= 0")

    def scaled(self, k):
        return CpwGeometry(self.w * k, self.z_impedance, self.length_l * k, self.standoff * k)


@dataclass(frozen=True)
class LoopGeometry:
    r_loop: float
    z_impedance: float = 50.0
    wire_ratio: float = 0.2

    def __post_init__(self):
        if not (self.r_loop > 0 and self.z_impedance > 0):
            raise DomainError("loop radius and impedance must be positive")
        if not 0 < self.wire_ratio < 1:
            raise DomainError("wire_ratio must lie in (0, 1)")

    def scaled(self, k):
        return LoopGeometry(self.r_loop * k, self.z_impedance, self.wire_ratio)


@dataclass(frozen=True)
class GridSpec:
    """Node counts and the lateral span of the map in units of w (or R).

    CPW maps cover ``x`` in ``+-extent*w/2`` and ``z`` from the standoff up
    ``extent*w``.  Loop maps cover ``rho`` in ``[0, extent*R/2]`` and ``z``
    in ``+-extent*R/2``.  Node 0 sits on the boundary, so x=0 (CPW, odd nx)
    and rho=0 (loop) are nodes.
    """
    nx: int = 121
    nz: int = 121
    extent: float = 3.0

    def __post_init__(self):
        if self.nx < 16 or self.nz < 16:
            raise DomainError("grid needs at least 16 nodes per axis")
        if not self.extent >= 2:
            raise DomainError("grid extent must be >= 2")

    @classmethod
    def with_spacing(cls, extent, step, radial=False):
        """Grid with node spacing ``step`` (in units of w or R) on both axes."""
        nx = int(round((extent / 2 if radial else extent) / step)) + 1
        nz = int(round(extent / step)) + 1
        return cls(nx=nx, nz=nz, extent=extent)

    def refined(self, factor=2):
        return GridSpec(nx=(self.nx - 1) * factor + 1, nz=(self.nz - 1) * factor + 1,
                        extent=self.extent)


@dataclass(frozen=True, eq=False)
class FieldMap:
    kind: str  # "cpw" or "loop"
    u: np.ndarray  # x (cpw) or rho (loop), shape (nu,)
    z: np.ndarray
    alpha: np.ndarray  # shape (nu, nz)
    masked: np.ndarray  # bool, shape (nu, nz)
    component: Component
    scale: float  # w or R
    alpha_ref: float
    geometry: object = field(repr=False, default=None)

    def __post_init__(self):
        for arr in (self.u, self.z, self.alpha, self.masked):
            arr.setflags(write=False)

    @property
    def spacing(self):
        return float(self.u[1] - self.u[0]), float(self.z[1] - self.z[0])

    @property
    def axis_names(self):
        return ("x", "z") if self.kind == "cpw" else ("rho", "z")

    def to_csv(self, fp):
        """Write ``x,z,alpha,masked`` (or ``rho,...``) rows in row-major order."""
        a, b = self.axis_names
        fp.write(f"{a},{b},alpha,masked\n")
        for i, ui in enumerate(self.u):
            for j, zj in enumerate(self.z):
                fp.write(f"{ui:.8e},{zj:.8e},{self.alpha[i, j]:.8e},{int(self.masked[i, j])}\n")


def cpw_alpha_ref(geom: CpwGeometry) -> float:
    return MU0 / (2.0 * geom.w * math.sqrt(geom.z_impedance))


def loop_alpha_ref(geom: LoopGeometry) -> float:
    return MU0 / (geom.r_loop * math.sqrt(geom.z_impedance))


def cpw_current(geom: CpwGeometry, p_rf=1.0) -> float:
    return math.sqrt(p_rf / geom.z_impedance)


def loop_current(geom: LoopGeometry, p_rf=1.0) -> float:
    # shorted line doubles the current
    return 2.0 * math.sqrt(p_rf / geom.z_impedance)


def _check_spacing(h, scale):
    if h > MAX_SPACING_FRACTION * scale * (1 + 1e-12):
        raise ResolutionError(f"node spacing {h:.3e} m exceeds 1/8 of {scale:.3e} m")


def strip_bx(geom: CpwGeometry, x, z, current, include_returns=False):
    """Signed Bx of the track (and optionally the two return strips) at grid points."""
    x, z = kernels.as_grid_args(x, z)
    w = geom.w
    bx = kernels.strip_bx(x, z, 0.0, w, current)
    if include_returns:
        wg = RETURN_WIDTH_RATIO * w
        offset = 0.5 * w + RETURN_GAP_RATIO * w + 0.5 * wg
        for c in (-offset, offset):
            bx = bx + kernels.strip_bx(x, z, c, wg, -0.5 * current)
    return bx


def cpw_field_map(geom: CpwGeometry, grid: GridSpec = GridSpec(), include_returns=False,
                  p_rf=1.0) -> FieldMap:
    w = geom.w
    half = 0.5 * grid.extent * w
    x = np.linspace(-half, half, grid.nx)
    z = geom.standoff + np.linspace(0.0, grid.extent * w, grid.nz)
    _check_spacing(x[1] - x[0], w)
    _check_spacing(z[1] - z[0], w)
    bx = strip_bx(geom, x, z, cpw_current(geom, p_rf), include_returns)
    alpha = np.abs(bx) / math.sqrt(p_rf)
    return FieldMap("cpw", x, z, alpha, np.zeros(alpha.shape, dtype=bool),
                    Component.IN_PLANE_X, w, cpw_alpha_ref(geom), geom)


def loop_onaxis_bz(geom: LoopGeometry, z, i_rf):
    r = geom.r_loop
    return MU0 * i_rf * r * r / (2.0 * (np.asarray(z, dtype=float) ** 2 + r * r) ** 1.5)


def loop_bz(geom: LoopGeometry, rho, z, current):
    rho, z = kernels.as_grid_args(rho, z)
    return kernels.loop_bz(rho, z, geom.r_loop, current)


def loop_field_map(geom: LoopGeometry, grid: GridSpec = GridSpec(nx=61, nz=121),
                   p_rf=1.0) -> FieldMap:
    r = geom.r_loop
    rho = np.linspace(0.0, 0.5 * grid.extent * r, grid.nx)
    z = np.linspace(-0.5 * grid.extent * r, 0.5 * grid.extent * r, grid.nz)
    _check_spacing(rho[1] - rho[0], r)
    _check_spacing(z[1] - z[0], r)
    tube = 0.5 * geom.wire_ratio * r
    masked = np.hypot(rho[:, None] - r, z[None, :]) < tube
    bz = loop_bz(geom, rho, z, loop_current(geom, p_rf))
    alpha = np.where(masked, 0.0, np.abs(bz)) / math.sqrt(p_rf)
    return FieldMap("loop", rho, z, alpha, masked, Component.AXIAL_Z, r,
                    loop_alpha_ref(geom), geom)


def field_map_for(geom, grid: Optional[GridSpec] = None, **kwargs) -> FieldMap:
    if isinstance(geom, CpwGeometry):
        return cpw_field_map(geom, grid or GridSpec(), **kwargs)
    if isinstance(geom, LoopGeometry):
        return loop_field_map(geom, grid or GridSpec(nx=61, nz=121), **kwargs)
    raise DomainError(f"unsupported geometry {geom!r}")
