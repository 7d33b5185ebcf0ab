# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the numpy reference kernels (see _ref.py).

Same arithmetic, same corner/offset ordering; built with -ffp-contract=off
so results track the fallback to the last few ulps.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, sqrt

cnp.import_array()

DEF GRID = 16


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def slice_grid(double[:, :, ::1] grid, double[:, ::1] guidance):
    cdef Py_ssize_t h = guidance.shape[0]
    cdef Py_ssize_t w = guidance.shape[1]
    out_arr = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double sx = (GRID - 1.0) / (w - 1.0) if w > 1 else 0.0
    cdef double sy = (GRID - 1.0) / (h - 1.0) if h > 1 else 0.0
    cdef Py_ssize_t x, y, i0, i1, j0, j1, k0, k1
    cdef double gx, gy, gz, fx, fy, fz, acc
    cdef double wx0, wx1, wy0, wy1, wz0, wz1

    with nogil:
        for y in range(h):
            gy = y * sy
            j0 = _clampi(<Py_ssize_t>floor(gy), 0, GRID - 1)
            j1 = j0 + 1 if j0 + 1 < GRID else GRID - 1
            fy = gy - j0
            wy0 = 1.0 - fy
            wy1 = fy
            for x in range(w):
                gx = x * sx
                i0 = _clampi(<Py_ssize_t>floor(gx), 0, GRID - 1)
                i1 = i0 + 1 if i0 + 1 < GRID else GRID - 1
                fx = gx - i0
                wx0 = 1.0 - fx
                wx1 = fx
                gz = guidance[y, x]
                if gz < 0.0:
                    gz = 0.0
                elif gz > 1.0:
                    gz = 1.0
                gz = gz * (GRID - 1)
                k0 = _clampi(<Py_ssize_t>floor(gz), 0, GRID - 1)
                k1 = k0 + 1 if k0 + 1 < GRID else GRID - 1
                fz = gz - k0
                wz0 = 1.0 - fz
                wz1 = fz
                # corner order matches the fallback: (di, dj, dk) lexicographic
                acc = (wx0 * wy0 * wz0) * grid[i0, j0, k0]
                acc += (wx0 * wy0 * wz1) * grid[i0, j0, k1]
                acc += (wx0 * wy1 * wz0) * grid[i0, j1, k0]
                acc += (wx0 * wy1 * wz1) * grid[i0, j1, k1]
                acc += (wx1 * wy0 * wz0) * grid[i1, j0, k0]
                acc += (wx1 * wy0 * wz1) * grid[i1, j0, k1]
                acc += (wx1 * wy1 * wz0) * grid[i1, j1, k0]
                acc += (wx1 * wy1 * wz1) * grid[i1, j1, k1]
                out[y, x] = acc
    return out_arr


def slice_adjoint(double[:, ::1] cotangent, double[:, ::1] guidance):
    cdef Py_ssize_t h = guidance.shape[0]
    cdef Py_ssize_t w = guidance.shape[1]
    if cotangent.shape[0] != h or cotangent.shape[1] != w:
        raise ValueError("cotangent geometry must match guidance")
    grad_arr = np.zeros((GRID, GRID, GRID), dtype=np.float64)
    cdef double[:, :, ::1] grad = grad_arr
    cdef double sx = (GRID - 1.0) / (w - 1.0) if w > 1 else 0.0
    cdef double sy = (GRID - 1.0) / (h - 1.0) if h > 1 else 0.0
    cdef Py_ssize_t x, y, i0, i1, j0, j1, k0, k1
    cdef double gx, gy, gz, fx, fy, fz, ct
    cdef double wx0, wx1, wy0, wy1, wz0, wz1

    with nogil:
        for y in range(h):
            gy = y * sy
            j0 = _clampi(<Py_ssize_t>floor(gy), 0, GRID - 1)
            j1 = j0 + 1 if j0 + 1 < GRID else GRID - 1
            fy = gy - j0
            wy0 = 1.0 - fy
            wy1 = fy
            for x in range(w):
                gx = x * sx
                i0 = _clampi(<Py_ssize_t>floor(gx), 0, GRID - 1)
                i1 = i0 + 1 if i0 + 1 < GRID else GRID - 1
                fx = gx - i0
                wx0 = 1.0 - fx
                wx1 = fx
                gz = guidance[y, x]
                if gz < 0.0:
                    gz = 0.0
                elif gz > 1.0:
                    gz = 1.0
                gz = gz * (GRID - 1)
                k0 = _clampi(<Py_ssize_t>floor(gz), 0, GRID - 1)
                k1 = k0 + 1 if k0 + 1 < GRID else GRID - 1
                fz = gz - k0
                wz0 = 1.0 - fz
                wz1 = fz
                ct = cotangent[y, x]
                grad[i0, j0, k0] += (wx0 * wy0 * wz0) * ct
                grad[i0, j0, k1] += (wx0 * wy0 * wz1) * ct
                grad[i0, j1, k0] += (wx0 * wy1 * wz0) * ct
                grad[i0, j1, k1] += (wx0 * wy1 * wz1) * ct
                grad[i1, j0, k0] += (wx1 * wy0 * wz0) * ct
                grad[i1, j0, k1] += (wx1 * wy0 * wz1) * ct
                grad[i1, j1, k0] += (wx1 * wy1 * wz0) * ct
                grad[i1, j1, k1] += (wx1 * wy1 * wz1) * ct
    return grad_arr


def jbf_denoise(double[:, :, ::1] planes, double[:, :, ::1] var_planes,
                double[:, ::1] gain, int radius, double c0, double bypass_below):
    cdef Py_ssize_t c = planes.shape[0]
    cdef Py_ssize_t h = planes.shape[1]
    cdef Py_ssize_t w = planes.shape[2]
    out_arr = np.empty((c, h, w), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double sigma_s = radius / 2.0
    cdef double two_ss = 2.0 * sigma_s * sigma_s
    cdef Py_ssize_t side = 2 * radius + 1
    cdef Py_ssize_t ci, y, x, oy, ox, yy, xx
    cdef double center, noise_scale, inv2s2, num, den, wgt, d, sr, v, pv

    # the spatial weight only depends on the offset; one exp per table entry
    ws_arr = np.empty((side, side), dtype=np.float64)
    cdef double[:, ::1] ws = ws_arr
    for oy in range(-radius, radius + 1):
        for ox in range(-radius, radius + 1):
            ws[oy + radius, ox + radius] = exp(-(oy * oy + ox * ox) / two_ss)

    with nogil:
        for ci in range(c):
            for y in range(h):
                for x in range(w):
                    center = planes[ci, y, x]
                    v = var_planes[ci, y, x]
                    noise_scale = gain[y, x] * sqrt(v)
                    if noise_scale < bypass_below:
                        out[ci, y, x] = center
                        continue
                    sr = c0 * noise_scale
                    inv2s2 = 1.0 / (2.0 * sr * sr)
                    num = 0.0
                    den = 0.0
                    # offset order matches the fallback: oy outer, ox inner
                    for oy in range(-radius, radius + 1):
                        yy = y + oy
                        if yy < 0:
                            yy = 0
                        elif yy >= h:
                            yy = h - 1
                        for ox in range(-radius, radius + 1):
                            xx = x + ox
                            if xx < 0:
                                xx = 0
                            elif xx >= w:
                                xx = w - 1
                            pv = planes[ci, yy, xx]
                            d = pv - center
                            wgt = ws[oy + radius, ox + radius] * exp(-(d * d) * inv2s2)
                            num += wgt * pv
                            den += wgt
                    out[ci, y, x] = num / den
    return out_arr
