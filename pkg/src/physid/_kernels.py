"""Numba force kernels: tight sequential loops over edges, bending pairs and
faces.  Sequential accumulation keeps results deterministic; these are the
single implementation behind the softbody force fields (validated against
finite-difference energy gradients in the test suite).
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def spring_kernel(positions, edges, rest_lengths, stiffness):
    n = positions.shape[0]
    out = np.zeros((n, 3))
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        dx = positions[j, 0] - positions[i, 0]
        dy = positions[j, 1] - positions[i, 1]
        dz = positions[j, 2] - positions[i, 2]
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        if length <= 1e-12:
            continue
        c = stiffness * (length - rest_lengths[k]) / length
        fx = c * dx
        fy = c * dy
        fz = c * dz
        out[i, 0] += fx
        out[i, 1] += fy
        out[i, 2] += fz
        out[j, 0] -= fx
        out[j, 1] -= fy
        out[j, 2] -= fz
    return out


@nb.njit(cache=True)
def bending_kernel(positions, bend_edge, bend_opposite, rest_angle, stiffness):
    n = positions.shape[0]
    out = np.zeros((n, 3))
    for k in range(bend_edge.shape[0]):
        i0 = bend_edge[k, 0]
        i1 = bend_edge[k, 1]
        ia = bend_opposite[k, 0]
        ib = bend_opposite[k, 1]

        ex = positions[i1, 0] - positions[i0, 0]
        ey = positions[i1, 1] - positions[i0, 1]
        ez = positions[i1, 2] - positions[i0, 2]
        ax = positions[ia, 0] - positions[i0, 0]
        ay = positions[ia, 1] - positions[i0, 1]
        az = positions[ia, 2] - positions[i0, 2]
        bx = positions[ib, 0] - positions[i0, 0]
        by = positions[ib, 1] - positions[i0, 1]
        bz = positions[ib, 2] - positions[i0, 2]

        # n1 = e x a, n2 = b x e
        n1x = ey * az - ez * ay
        n1y = ez * ax - ex * az
        n1z = ex * ay - ey * ax
        n2x = by * ez - bz * ey
        n2y = bz * ex - bx * ez
        n2z = bx * ey - by * ex

        e2 = ex * ex + ey * ey + ez * ez
        n1_sq = n1x * n1x + n1y * n1y + n1z * n1z
        n2_sq = n2x * n2x + n2y * n2y + n2z * n2z
        if e2 <= 0.0 or n1_sq < 4e-24 or n2_sq < 4e-24:
            continue
        e_norm = math.sqrt(e2)

        denom = math.sqrt(n1_sq * n2_sq)
        cos_t = (n1x * n2x + n1y * n2y + n1z * n2z) / denom
        cx = n1y * n2z - n1z * n2y
        cy = n1z * n2x - n1x * n2z
        cz = n1x * n2y - n1y * n2x
        sin_t = (cx * ex + cy * ey + cz * ez) / (denom * e_norm)
        theta = math.atan2(sin_t, cos_t)
        moment = -stiffness * (theta - rest_angle[k])

        ca = -e_norm / n1_sq
        cb = -e_norm / n2_sq
        gax = ca * n1x
        gay = ca * n1y
        gaz = ca * n1z
        gbx = cb * n2x
        gby = cb * n2y
        gbz = cb * n2z

        inv_e2 = 1.0 / e2
        # projections of the flaps onto the shared edge
        c_a0 = ((ax - ex) * ex + (ay - ey) * ey + (az - ez) * ez) * inv_e2
        c_b0 = ((bx - ex) * ex + (by - ey) * ey + (bz - ez) * ez) * inv_e2
        c_a1 = (-ax * ex - ay * ey - az * ez) * inv_e2
        c_b1 = (-bx * ex - by * ey - bz * ez) * inv_e2

        g0x = c_a0 * gax + c_b0 * gbx
        g0y = c_a0 * gay + c_b0 * gby
        g0z = c_a0 * gaz + c_b0 * gbz
        g1x = c_a1 * gax + c_b1 * gbx
        g1y = c_a1 * gay + c_b1 * gby
        g1z = c_a1 * gaz + c_b1 * gbz

        out[i0, 0] += moment * g0x
        out[i0, 1] += moment * g0y
        out[i0, 2] += moment * g0z
        out[i1, 0] += moment * g1x
        out[i1, 1] += moment * g1y
        out[i1, 2] += moment * g1z
        out[ia, 0] += moment * gax
        out[ia, 1] += moment * gay
        out[ia, 2] += moment * gaz
        out[ib, 0] += moment * gbx
        out[ib, 1] += moment * gby
        out[ib, 2] += moment * gbz
    return out


@nb.njit(cache=True)
def volume_kernel(positions, faces, rest_volume, scaled_stiffness):
    n = positions.shape[0]
    out = np.zeros((n, 3))
    m = faces.shape[0]
    crosses = np.empty((m, 3))
    volume = 0.0
    for k in range(m):
        i0 = faces[k, 0]
        i1 = faces[k, 1]
        i2 = faces[k, 2]
        d1x = positions[i1, 0] - positions[i0, 0]
        d1y = positions[i1, 1] - positions[i0, 1]
        d1z = positions[i1, 2] - positions[i0, 2]
        d2x = positions[i2, 0] - positions[i0, 0]
        d2y = positions[i2, 1] - positions[i0, 1]
        d2z = positions[i2, 2] - positions[i0, 2]
        cx = d1y * d2z - d1z * d2y
        cy = d1z * d2x - d1x * d2z
        cz = d1x * d2y - d1y * d2x
        crosses[k, 0] = cx
        crosses[k, 1] = cy
        crosses[k, 2] = cz
        volume += (positions[i0, 0] * cx + positions[i0, 1] * cy
                   + positions[i0, 2] * cz) / 6.0
    pressure = scaled_stiffness * (rest_volume - volume) / rest_volume
    scale = pressure / 6.0
    for k in range(m):
        fx = scale * crosses[k, 0]
        fy = scale * crosses[k, 1]
        fz = scale * crosses[k, 2]
        for c in range(3):
            idx = faces[k, c]
            out[idx, 0] += fx
            out[idx, 1] += fy
            out[idx, 2] += fz
    return out
