"""Hot numeric kernels: strip field, loop field, region quadrature sums.

Each kernel has a numba implementation (``*_nb``) and a numpy implementation
(``*_np``).  The public name is bound to one of them at import time, see
:mod:`nvpower._accel`.  Every output element is computed by a fixed serial
loop, so results do not depend on the numba thread count.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit, prange

MU0 = 4e-7 * math.pi

AGM_TOL = 1e-15
AGM_MAXITER = 64


# --- thin current sheet (CPW track) -------------------------------------------------

EDGE_REL = 1e-9


def strip_bx_np(x, z, centre, width, current):
    """In-plane field Bx of a thin sheet in the z=0 plane, current along +y.

    The sheet spans ``centre +- width/2``.  Returns an array of shape
    ``(len(x), len(z))``.
    """
    dx = np.asarray(x, dtype=np.float64)[:, None] - centre
    zz = np.asarray(z, dtype=np.float64)[None, :]
    k = MU0 * current / (2.0 * math.pi * width)
    q = 0.25 * width * width
    d = dx * dx + zz * zz - q
    # on the surface the field jumps at the strip edges; take the midpoint there
    edge = (zz == 0.0) & (np.abs(d) <= EDGE_REL * q)
    return k * np.where(edge, 0.5 * math.pi, np.arctan2(width * zz, d))


@njit(parallel=True)
def strip_bx_nb(x, z, centre, width, current):
    nx = x.shape[0]
    nz = z.shape[0]
    out = np.empty((nx, nz))
    k = MU0 * current / (2.0 * math.pi * width)
    q = 0.25 * width * width
    for i in prange(nx):
        dx = x[i] - centre
        for j in range(nz):
            zj = z[j]
            d = dx * dx + zj * zj - q
            if zj == 0.0 and abs(d) <= EDGE_REL * q:
                out[i, j] = k * 0.5 * math.pi
            else:
                out[i, j] = k * math.atan2(width * zj, d)
    return out


# --- circular filament (loop antenna) ------------------------------------------------

def ellipke_np(m):
    """Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean."""
    m = np.asarray(m, dtype=np.float64)
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    c = np.sqrt(m)
    s = 0.5 * c * c
    p = 1.0
    for _ in range(AGM_MAXITER):
        if not np.any(np.abs(c) > AGM_TOL * a):
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        s = s + p * c * c
        p *= 2.0
    kk = 0.5 * math.pi / a
    return kk, kk * (1.0 - s)


@njit
def ellipke_scalar(m):
    a = 1.0
    b = math.sqrt(1.0 - m)
    c = math.sqrt(m)
    s = 0.5 * c * c
    p = 1.0
    for _ in range(AGM_MAXITER):
        if abs(c) <= AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        s += p * c * c
        p *= 2.0
    kk = 0.5 * math.pi / a
    return kk, kk * (1.0 - s)


def loop_bz_np(rho, z, radius, current):
    """Axial field of a circular filament of given radius in the z=0 plane.

    Returns shape ``(len(rho), len(z))``.  Points on the filament give inf.
    """
    rr = np.asarray(rho, dtype=np.float64)[:, None]
    zz = np.asarray(z, dtype=np.float64)[None, :]
    plus = (radius + rr) ** 2 + zz * zz
    minus = (radius - rr) ** 2 + zz * zz
    m = 4.0 * radius * rr / plus
    m = np.minimum(m, 1.0)
    kk, ee = ellipke_np(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        bz = MU0 * current / (2.0 * math.pi * np.sqrt(plus)) * (
            kk + (radius * radius - rr * rr - zz * zz) / minus * ee)
    return bz


@njit(parallel=True)
def loop_bz_nb(rho, z, radius, current):
    nr = rho.shape[0]
    nz = z.shape[0]
    out = np.empty((nr, nz))
    pref = MU0 * current / (2.0 * math.pi)
    for i in prange(nr):
        r = rho[i]
        for j in range(nz):
            zj = z[j]
            plus = (radius + r) ** 2 + zj * zj
            minus = (radius - r) ** 2 + zj * zj
            if minus == 0.0:
                out[i, j] = math.inf
                continue
            m = min(4.0 * radius * r / plus, 1.0)
            kk, ee = ellipke_scalar(m)
            out[i, j] = pref / math.sqrt(plus) * (
                kk + (radius * radius - r * r - zj * zj) / minus * ee)
    return out


# --- separable region quadrature -----------------------------------------------------

def region_sums_np(f, wx, wz):
    """S[i, j] = sum_ab wx[i, a] f[a, b] wz[j, b]."""
    tz = (f[None, :, :] * wz[:, None, :]).sum(axis=2)
    return (wx[:, None, :] * tz[None, :, :]).sum(axis=2)


@njit(parallel=True)
def region_sums_nb(f, wx, wz):
    na, nb = f.shape
    ni = wx.shape[0]
    nj = wz.shape[0]
    tz = np.zeros((nj, na))
    for j in prange(nj):
        for a in range(na):
            acc = 0.0
            for b in range(nb):
                acc += f[a, b] * wz[j, b]
            tz[j, a] = acc
    out = np.zeros((ni, nj))
    for i in prange(ni):
        for j in range(nj):
            acc = 0.0
            for a in range(na):
                acc += wx[i, a] * tz[j, a]
            out[i, j] = acc
    return out


if USE_NUMBA:
    strip_bx = strip_bx_nb
    loop_bz = loop_bz_nb
    region_sums = region_sums_nb
else:
    strip_bx = strip_bx_np
    loop_bz = loop_bz_np
    region_sums = region_sums_np


def as_grid_args(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.float64) for a in arrays)
