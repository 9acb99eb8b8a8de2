"""Vectorized numpy implementations of the hot geometry kernels.

All angles are degrees at the interface; conversion to radians happens
only inside the trigonometric evaluation.  The composed pan-tilt rotation
(camera frame <- tripod frame) is

    R = Q_phi(tilt) @ Q_theta(pan)
      = [[ cp,       0,   -sp     ],
         [ st*sp,    ct,   st*cp  ],
         [ ct*sp,   -st,   ct*cp  ]]

with cp = cos(pan), sp = sin(pan), ct = cos(tilt), st = sin(tilt), chosen
so that the ray (theta, phi) = (pan, tilt) maps to the optical axis and
projection / back-projection are exact mutual inverses.
"""

import numpy as np

DEG = np.pi / 180.0
DEPTH_EPS = 1e-9


def _rotation_terms(pan_deg, tilt_deg):
    p = pan_deg * DEG
    t = tilt_deg * DEG
    return np.cos(p), np.sin(p), np.cos(t), np.sin(t)


def project_rays(pan, tilt, focal, cx, cy, theta, phi):
    """Project rays (theta, phi) [deg] into the image at the given pose.

    Returns (pixels[N,2], valid[N]); pixels are NaN where the rotated ray
    has depth <= DEPTH_EPS.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    cp, sp, ct, st = _rotation_terms(pan, tilt)
    th = theta * DEG
    ph = phi * DEG
    sth, cth = np.sin(th), np.cos(th)
    sph, cph = np.sin(ph), np.cos(ph)
    # unit direction of the Z=1-plane ray parameterization
    ux = sth * cph
    uy = -sph
    uz = cth * cph
    vx = cp * ux - sp * uz
    vy = st * sp * ux + ct * uy + st * cp * uz
    vz = ct * sp * ux - st * uy + ct * cp * uz
    valid = vz > DEPTH_EPS
    safe_z = np.where(valid, vz, 1.0)
    px = np.where(valid, focal * vx / safe_z + cx, np.nan)
    py = np.where(valid, focal * vy / safe_z + cy, np.nan)
    return np.stack([px, py], axis=-1), valid


def back_project_pixels(pan, tilt, focal, cx, cy, xs, ys):
    """Back-project pixels to (theta, phi) rays [deg] at the given pose.

    Returns (rays[N,2], valid[N]); rays are NaN where the tripod-frame
    direction has depth <= DEPTH_EPS.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    cp, sp, ct, st = _rotation_terms(pan, tilt)
    dx = (xs - cx) / focal
    dy = (ys - cy) / focal
    # tripod direction = R^T @ [dx, dy, 1]
    wx = cp * dx + st * sp * dy + ct * sp
    wy = ct * dy - st
    wz = -sp * dx + st * cp * dy + ct * cp
    valid = wz > DEPTH_EPS
    theta = np.where(valid, np.arctan2(wx, np.where(valid, wz, 1.0)) / DEG, np.nan)
    hyp = np.sqrt(wx * wx + wz * wz)
    phi = np.where(valid, np.arctan2(-wy, hyp) / DEG, np.nan)
    return np.stack([theta, phi], axis=-1), valid


def projection_jacobians(pan, tilt, focal, theta, phi):
    """Analytic Jacobian of project_rays wrt [pan, tilt, focal, theta, phi].

    Returns (J[N,2,5], valid[N]).  Angle derivatives are per degree.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    n = theta.shape[0]
    cp, sp, ct, st = _rotation_terms(pan, tilt)
    th = theta * DEG
    ph = phi * DEG
    sth, cth = np.sin(th), np.cos(th)
    sph, cph = np.sin(ph), np.cos(ph)
    ux = sth * cph
    uy = -sph
    uz = cth * cph

    vx = cp * ux - sp * uz
    vy = st * sp * ux + ct * uy + st * cp * uz
    vz = ct * sp * ux - st * uy + ct * cp * uz
    valid = vz > DEPTH_EPS
    safe_z = np.where(valid, vz, 1.0)

    # dR/dpan @ u and dR/dtilt @ u (both per radian, scaled below)
    dpan_x = -sp * ux - cp * uz
    dpan_y = st * cp * ux - st * sp * uz
    dpan_z = ct * cp * ux - ct * sp * uz
    dtlt_x = np.zeros_like(ux)
    dtlt_y = ct * sp * ux - st * uy + ct * cp * uz
    dtlt_z = -st * sp * ux - ct * uy - st * cp * uz

    # R @ du/dtheta and R @ du/dphi
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

    inv_z = 1.0 / safe_z
    fx_z = focal * inv_z

    def _pix_grad(dvx, dvy, dvz):
        gx = fx_z * (dvx - vx * inv_z * dvz)
        gy = fx_z * (dvy - vy * inv_z * dvz)
        return gx, gy

    jac = np.empty((n, 2, 5), dtype=np.float64)
    gx, gy = _pix_grad(dpan_x, dpan_y, dpan_z)
    jac[:, 0, 0] = gx * DEG
    jac[:, 1, 0] = gy * DEG
    gx, gy = _pix_grad(dtlt_x, dtlt_y, dtlt_z)
    jac[:, 0, 1] = gx * DEG
    jac[:, 1, 1] = gy * DEG
    jac[:, 0, 2] = vx * inv_z
    jac[:, 1, 2] = vy * inv_z
    gx, gy = _pix_grad(dth_x, dth_y, dth_z)
    jac[:, 0, 3] = gx * DEG
    jac[:, 1, 3] = gy * DEG
    gx, gy = _pix_grad(dph_x, dph_y, dph_z)
    jac[:, 0, 4] = gx * DEG
    jac[:, 1, 4] = gy * DEG
    jac[~valid] = np.nan
    return jac, valid


def tree_leaf_indices(split_dim, threshold, left, right, descriptors):
    """Route descriptors through a flat-array tree; return leaf node indices.

    split_dim[i] == -1 marks a leaf.  Internal rule: x[dim] < thr -> left.
    """
    n = descriptors.shape[0]
    idx = np.zeros(n, dtype=np.int64)
    while True:
        dims = split_dim[idx]
        internal = dims >= 0
        if not internal.any():
            return idx
        rows = np.nonzero(internal)[0]
        d = dims[rows]
        vals = descriptors[rows, d]
        go_left = vals < threshold[idx[rows]]
        idx[rows] = np.where(go_left, left[idx[rows]], right[idx[rows]])
