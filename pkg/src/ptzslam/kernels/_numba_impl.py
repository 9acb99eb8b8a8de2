"""Numba-compiled loop versions of the hot geometry kernels.

Same contracts as kernels._numpy_impl; formulas are kept textually in sync
so both backends agree to floating-point noise.
"""

import math

import numpy as np
from numba import njit

DEG = np.pi / 180.0
DEPTH_EPS = 1e-9


@njit(cache=True)
def project_rays(pan, tilt, focal, cx, cy, theta, phi):
    n = theta.shape[0]
    out = np.empty((n, 2), dtype=np.float64)
    valid = np.empty(n, dtype=np.bool_)
    cp = math.cos(pan * DEG)
    sp = math.sin(pan * DEG)
    ct = math.cos(tilt * DEG)
    st = math.sin(tilt * DEG)
    for i in range(n):
        th = theta[i] * DEG
        ph = phi[i] * DEG
        sth = math.sin(th)
        cth = math.cos(th)
        sph = math.sin(ph)
        cph = math.cos(ph)
        ux = sth * cph
        uy = -sph
        uz = cth * cph
        vx = cp * ux - sp * uz
        vy = st * sp * ux + ct * uy + st * cp * uz
        vz = ct * sp * ux - st * uy + ct * cp * uz
        if vz > DEPTH_EPS:
            valid[i] = True
            out[i, 0] = focal * vx / vz + cx
            out[i, 1] = focal * vy / vz + cy
        else:
            valid[i] = False
            out[i, 0] = np.nan
            out[i, 1] = np.nan
    return out, valid


@njit(cache=True)
def back_project_pixels(pan, tilt, focal, cx, cy, xs, ys):
    n = xs.shape[0]
    out = np.empty((n, 2), dtype=np.float64)
    valid = np.empty(n, dtype=np.bool_)
    cp = math.cos(pan * DEG)
    sp = math.sin(pan * DEG)
    ct = math.cos(tilt * DEG)
    st = math.sin(tilt * DEG)
    for i in range(n):
        dx = (xs[i] - cx) / focal
        dy = (ys[i] - cy) / focal
        wx = cp * dx + st * sp * dy + ct * sp
        wy = ct * dy - st
        wz = -sp * dx + st * cp * dy + ct * cp
        if wz > DEPTH_EPS:
            valid[i] = True
            out[i, 0] = math.atan2(wx, wz) / DEG
            out[i, 1] = math.atan2(-wy, math.sqrt(wx * wx + wz * wz)) / DEG
        else:
            valid[i] = False
            out[i, 0] = np.nan
            out[i, 1] = np.nan
    return out, valid


@njit(cache=True)
def projection_jacobians(pan, tilt, focal, theta, phi):
    n = theta.shape[0]
    jac = np.empty((n, 2, 5), dtype=np.float64)
    valid = np.empty(n, dtype=np.bool_)
    cp = math.cos(pan * DEG)
    sp = math.sin(pan * DEG)
    ct = math.cos(tilt * DEG)
    st = math.sin(tilt * DEG)
    for i in range(n):
        th = theta[i] * DEG
        ph = phi[i] * DEG
        sth = math.sin(th)
        cth = math.cos(th)
        sph = math.sin(ph)
        cph = math.cos(ph)
        ux = sth * cph
        uy = -sph
        uz = cth * cph

        vx = cp * ux - sp * uz
        vy = st * sp * ux + ct * uy + st * cp * uz
        vz = ct * sp * ux - st * uy + ct * cp * uz
        if vz <= DEPTH_EPS:
            valid[i] = False
            for r in range(2):
                for c in range(5):
                    jac[i, r, c] = np.nan
            continue
        valid[i] = True

        dpan_x = -sp * ux - cp * uz
        dpan_y = st * cp * ux - st * sp * uz
        dpan_z = ct * cp * ux - ct * sp * uz
        dtlt_x = 0.0
        dtlt_y = ct * sp * ux - st * uy + ct * cp * uz
        dtlt_z = -st * sp * ux - ct * uy - st * cp * uz

        dth_ux = cth * cph
        dth_uz = -sth * cph
        dth_x = cp * dth_ux - sp * dth_uz
        dth_y = st * sp * dth_ux + st * cp * dth_uz
        dth_z = ct * sp * dth_ux + ct * cp * dth_uz

        dph_ux = -sth * sph
        dph_uy = -cph
        dph_uz = -cth * sph
        dph_x = cp * dph_ux - sp * dph_uz
        dph_y = st * sp * dph_ux + ct * dph_uy + st * cp * dph_uz
        dph_z = ct * sp * dph_ux - st * dph_uy + ct * cp * dph_uz

        inv_z = 1.0 / vz
        fx_z = focal * inv_z

        jac[i, 0, 0] = fx_z * (dpan_x - vx * inv_z * dpan_z) * DEG
        jac[i, 1, 0] = fx_z * (dpan_y - vy * inv_z * dpan_z) * DEG
        jac[i, 0, 1] = fx_z * (dtlt_x - vx * inv_z * dtlt_z) * DEG
        jac[i, 1, 1] = fx_z * (dtlt_y - vy * inv_z * dtlt_z) * DEG
        jac[i, 0, 2] = vx * inv_z
        jac[i, 1, 2] = vy * inv_z
        jac[i, 0, 3] = fx_z * (dth_x - vx * inv_z * dth_z) * DEG
        jac[i, 1, 3] = fx_z * (dth_y - vy * inv_z * dth_z) * DEG
        jac[i, 0, 4] = fx_z * (dph_x - vx * inv_z * dph_z) * DEG
        jac[i, 1, 4] = fx_z * (dph_y - vy * inv_z * dph_z) * DEG
    return jac, valid


@njit(cache=True)
def tree_leaf_indices(split_dim, threshold, left, right, descriptors):
    n = descriptors.shape[0]
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while split_dim[node] >= 0:
            if descriptors[i, split_dim[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        idx[i] = node
    return idx
