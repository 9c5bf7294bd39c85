"""Brute-force field references, independent of the closed forms in ``kernels``.

The strip is integrated as a sheet of infinite line filaments with adaptive
Gauss-Kronrod quadrature; the loop is summed directly from Biot-Savart over
many short segments.
"""
import math

import numpy as np
from scipy.integrate import quad

from ._accel import USE_NUMBA, njit, prange

MU0 = 4e-7 * math.pi
LOOP_SEGMENTS = 1_000_000


def strip_bx_filaments(x, z, width, current, centre=0.0):
    """Bx at one point from line filaments spread uniformly over the strip."""
    lo, hi = centre - 0.5 * width, centre + 0.5 * width
    k = MU0 * current / (2.0 * math.pi * width)
    f = lambda xp: z / ((x - xp) ** 2 + z * z)
    brk = [x] if lo < x < hi else None
    val, _ = quad(f, lo, hi, points=brk, epsabs=0.0, epsrel=1e-13, limit=400)
    return k * val


def _segment_sum_np(rho, z, radius, current, n):
    phi = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
    c = np.cos(phi)
    s = np.sin(phi)
    d2 = (rho - radius * c) ** 2 + (radius * s) ** 2 + z * z
    total = np.sum((radius - rho * c) / (d2 * np.sqrt(d2)))
    return MU0 * current / (4.0 * math.pi) * radius * (2.0 * math.pi / n) * total


@njit(parallel=True)
def _segment_sum_nb(rho, z, radius, current, n):
    dphi = 2.0 * math.pi / n
    chunks = 64
    per = (n + chunks - 1) // chunks
    partial = np.zeros(chunks)
    for k in prange(chunks):
        acc = 0.0
        for i in range(k * per, min(n, (k + 1) * per)):
            phi = (i + 0.5) * dphi
            c = math.cos(phi)
            s = math.sin(phi)
            d2 = (rho - radius * c) ** 2 + (radius * s) ** 2 + z * z
            acc += (radius - rho * c) / (d2 * math.sqrt(d2))
        partial[k] = acc
    return MU0 * current / (4.0 * math.pi) * radius * dphi * partial.sum()


def loop_bz_segments(rho, z, radius, current, n=LOOP_SEGMENTS):
    """Bz at one point from an ``n``-segment Biot-Savart sum around the loop."""
    fn = _segment_sum_nb if USE_NUMBA else _segment_sum_np
    return float(fn(float(rho), float(z), float(radius), float(current), int(n)))
