"""Pose estimation from pixel-ray correspondences.

solve_two_point recovers (pan, tilt, focal) from two correspondences: the
angle between the two back-projected pixel directions is strictly decreasing
in the focal length, so f is found by bisection against the fixed angle
between the two rays; pan and tilt then follow in closed form by aligning
the first pixel's camera direction with its ray.  refine_pose polishes a
pose by damped Gauss-Newton on the reprojection error.  The RANSAC wrappers
draw all sample indices up front from a seeded Philox stream, so results
are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    Degenerate,
    Inconsistent,
    NoSolution,
    NotEnoughInliers,
    SingularNormalEquations,
)
from .ptz_camera import (
    DEG,
    CameraPose,
    ImageSize,
    Pixel,
    Ray,
    apply_homography,
    ray_direction,
)

F_MIN = 100.0
F_MAX = 20000.0
F_TOL = 1e-6


@dataclass(frozen=True)
class Correspondence:
    """A pixel and one or more candidate rays (several when forest-predicted)."""

    pixel: Pixel
    candidates: tuple[Ray, ...]

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise ValueError("correspondence needs at least one candidate ray")

    @staticmethod
    def single(pixel: Pixel, ray: Ray) -> "Correspondence":
        return Correspondence(pixel, (ray,))


@dataclass(frozen=True)
class RansacParams:
    max_iterations: int = 500
    inlier_threshold: float = 3.0
    min_inliers: int = 8
    confidence: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.inlier_threshold > 0):
            raise ValueError("inlier_threshold must be positive")
        if self.min_inliers < 2:
            raise ValueError("min_inliers must be >= 2")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError("confidence must be in (0, 1)")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _single_ray(c: Correspondence) -> Ray:
    if len(c.candidates) != 1:
        raise ValueError("expected a single-candidate correspondence")
    return c.candidates[0]


def _pixel_dir(pixel: Pixel, focal: float, size: ImageSize) -> np.ndarray:
    d = np.array([(pixel.x - size.cx) / focal, (pixel.y - size.cy) / focal, 1.0])
    return d / np.linalg.norm(d)


def _unit_angle(a: np.ndarray, b: np.ndarray) -> float:
    return math.acos(min(1.0, max(-1.0, float(np.dot(a, b)))))


def solve_two_point(
    c1: Correspondence,
    c2: Correspondence,
    size: ImageSize,
    f_min: float = F_MIN,
    f_max: float = F_MAX,
    f_tol: float = F_TOL,
    max_residual: float | None = 10.0 * F_TOL,
) -> CameraPose:
    """Minimal solver: (pan, tilt, focal) from two pixel-ray pairs.

    max_residual bounds the reprojection residual of the second
    correspondence (the configuration is overdetermined by one constraint);
    pass None to skip the check, as RANSAC does for noisy samples.

    Raises Degenerate on coincident pixels/rays, NoSolution when no focal in
    [f_min, f_max] matches the ray separation, Inconsistent when the
    residual check fails.
    """
    r1, r2 = _single_ray(c1), _single_ray(c2)
    p1, p2 = c1.pixel, c2.pixel
    if math.hypot(p1.x - p2.x, p1.y - p2.y) <= 1.0:
        raise Degenerate("pixels are closer than 1 px")
    u1 = ray_direction(r1.theta, r1.phi)
    u2 = ray_direction(r2.theta, r2.phi)
    gamma = _unit_angle(u1, u2)
    if gamma <= 0.01 * DEG:
        raise Degenerate("rays are separated by less than 0.01 degrees")

    def g(f: float) -> float:
        return _unit_angle(_pixel_dir(p1, f, size), _pixel_dir(p2, f, size)) - gamma

    g_lo, g_hi = g(f_min), g(f_max)
    if g_lo < 0.0 or g_hi > 0.0:
        raise NoSolution(
            f"no focal length in [{f_min}, {f_max}] matches the ray separation"
        )
    lo, hi = f_min, f_max
    while hi - lo > f_tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    focal = 0.5 * (lo + hi)

    # Align the first pixel direction a with its ray: need
    # R_y(pan) R_x(tilt) a = u1.  The elevation of R_x(t) a must equal phi1:
    # sin(t) a_z - cos(t) a_y = sin(phi1), solved as R sin(t + delta) = C.
    a = _pixel_dir(p1, focal, size)
    amp = math.hypot(a[1], a[2])
    target = math.sin(r1.phi * DEG)
    if amp < 1e-12 or abs(target) > amp:
        raise NoSolution("tilt equation has no real solution")
    delta = math.atan2(-a[1], a[2])
    base = math.asin(target / amp)
    best: CameraPose | None = None
    best_res = math.inf
    best_res2 = math.inf
    for t in (base - delta, math.pi - base - delta):
        tilt = math.atan2(math.sin(t), math.cos(t)) / DEG
        if not (-90.0 < tilt < 90.0):
            continue
        ct, st = math.cos(tilt * DEG), math.sin(tilt * DEG)
        vx = a[0]
        vz = st * a[1] + ct * a[2]
        if vz <= 0.0 and vx == 0.0:
            continue
        pan = r1.theta - math.atan2(vx, vz) / DEG
        pan = (pan + 180.0) % 360.0 - 180.0
        if pan == -180.0:
            pan = 180.0
        try:
            pose = CameraPose(pan, tilt, focal)
        except ValueError:
            continue
        pix, valid = kernels.project_rays(
            pose.pan, pose.tilt, pose.focal, size.cx, size.cy,
            np.array([r1.theta, r2.theta]), np.array([r1.phi, r2.phi]),
        )
        if not valid.all():
            continue
        res1 = math.hypot(pix[0, 0] - p1.x, pix[0, 1] - p1.y)
        res2 = math.hypot(pix[1, 0] - p2.x, pix[1, 1] - p2.y)
        if res1 + res2 < best_res:
            best_res = res1 + res2
            best = pose
            best_res2 = res2
    if best is None:
        raise NoSolution("no pan/tilt aligns the first correspondence")
    if max_residual is not None and best_res2 > max_residual:
        raise Inconsistent(
            f"second correspondence residual {best_res2:.3e} px exceeds {max_residual:.3e}"
        )
    return best


def _stack_single(corrs: Sequence[Correspondence]):
    px = np.array([[c.pixel.x, c.pixel.y] for c in corrs])
    th = np.array([_single_ray(c).theta for c in corrs])
    ph = np.array([_single_ray(c).phi for c in corrs])
    return px, th, ph


def _cost_and_normal(params, px, th, ph, size: ImageSize):
    """Residual cost plus Gauss-Newton normal terms; cost=inf if invalid."""
    pan, tilt, focal = params
    pix, valid = kernels.project_rays(pan, tilt, focal, size.cx, size.cy, th, ph)
    if focal <= 0 or not valid.all():
        return math.inf, None, None
    res = (px - pix).reshape(-1)
    jac, _ = kernels.projection_jacobians(pan, tilt, focal, th, ph)
    j = jac[:, :, :3].reshape(-1, 3)
    # residual = measured - predicted, so the GN step uses -J
    jtj = j.T @ j
    jtr = j.T @ res
    return float(res @ res), jtj, jtr


def refine_pose(
    initial: CameraPose,
    corrs: Sequence[Correspondence],
    size: ImageSize,
    max_iterations: int = 100,
    step_tol: float = 1e-10,
) -> CameraPose:
    """Damped Gauss-Newton minimizer of the summed squared reprojection error.

    Never returns a pose with higher cost than the initial one.  Raises
    SingularNormalEquations for fewer than 2 correspondences.
    """
    if len(corrs) < 2:
        raise SingularNormalEquations("refine_pose needs at least 2 correspondences")
    px, th, ph = _stack_single(corrs)
    params = np.array([initial.pan, initial.tilt, initial.focal])
    cost, jtj, jtr = _cost_and_normal(params, px, th, ph, size)
    if not math.isfinite(cost):
        raise SingularNormalEquations("initial pose does not project the correspondences")
    lam = 1e-3
    for _ in range(max_iterations):
        scale = np.diag(jtj) + 1e-12
        try:
            step = np.linalg.solve(jtj + lam * np.diag(scale), jtr)
        except np.linalg.LinAlgError as exc:
            raise SingularNormalEquations(str(exc)) from exc
        new_params = params + step
        new_cost, new_jtj, new_jtr = _cost_and_normal(new_params, px, th, ph, size)
        if new_cost < cost:
            params, cost, jtj, jtr = new_params, new_cost, new_jtj, new_jtr
            lam = max(lam * 0.1, 1e-12)
            if np.linalg.norm(step) < step_tol:
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    pan = (params[0] + 180.0) % 360.0 - 180.0
    if pan == -180.0:
        pan = 180.0
    return CameraPose(float(pan), float(params[1]), float(params[2]))


def _flatten_candidates(corrs: Sequence[Correspondence]):
    """Concatenate all candidate rays with per-correspondence offsets."""
    counts = np.array([len(c.candidates) for c in corrs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    th = np.empty(offsets[-1])
    ph = np.empty(offsets[-1])
    k = 0
    for c in corrs:
        for r in c.candidates:
            th[k] = r.theta
            ph[k] = r.phi
            k += 1
    px = np.array([[c.pixel.x, c.pixel.y] for c in corrs])
    return px, th, ph, counts, offsets


def _score_pose(pose, px, th, ph, counts, offsets, size):
    """Best-candidate residual per correspondence (inf when none project)."""
    pix, valid = kernels.project_rays(
        pose.pan, pose.tilt, pose.focal, size.cx, size.cy, th, ph
    )
    d = np.where(
        valid,
        np.hypot(pix[:, 0] - np.repeat(px[:, 0], counts), pix[:, 1] - np.repeat(px[:, 1], counts)),
        np.inf,
    )
    best = np.minimum.reduceat(d, offsets[:-1])
    best_idx = np.empty(len(counts), dtype=np.int64)
    for i in range(len(counts)):
        seg = d[offsets[i]:offsets[i + 1]]
        best_idx[i] = offsets[i] + int(np.argmin(seg))
    return best, best_idx


def ransac_pose(
    corrs: Sequence[Correspondence],
    size: ImageSize,
    params: RansacParams,
) -> tuple[CameraPose, np.ndarray]:
    """Robust pose estimation over multi-candidate correspondences.

    Hypotheses come from solve_two_point on 2-correspondence samples (one
    candidate drawn uniformly per side); scoring uses each correspondence's
    best candidate.  Returns the refined pose and the inlier mask of the
    winning hypothesis.
    """
    n = len(corrs)
    if n < 2:
        raise NotEnoughInliers(f"need at least 2 correspondences, got {n}")
    px, th, ph, counts, offsets = _flatten_candidates(corrs)
    rng = _rng(params.seed)
    draws = []
    for _ in range(params.max_iterations):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        ci = int(rng.integers(0, counts[i]))
        cj = int(rng.integers(0, counts[j]))
        draws.append((i, j, ci, cj))

    best_count = -1
    best_mask = None
    best_pose = None
    evaluated = 0
    for i, j, ci, cj in draws:
        evaluated += 1
        try:
            pose = solve_two_point(
                Correspondence.single(corrs[i].pixel, corrs[i].candidates[ci]),
                Correspondence.single(corrs[j].pixel, corrs[j].candidates[cj]),
                size,
                max_residual=None,
            )
        except (Degenerate, NoSolution):
            continue
        residuals, _ = _score_pose(pose, px, th, ph, counts, offsets, size)
        mask = residuals < params.inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask, best_pose = count, mask, pose
            w = count / n
            if 0.0 < w < 1.0:
                needed = math.log(1.0 - params.confidence) / math.log(1.0 - w * w)
                if evaluated >= needed:
                    break
            elif w >= 1.0:
                break
    if best_pose is None or best_count < params.min_inliers:
        raise NotEnoughInliers(
            f"best consensus {max(best_count, 0)} < min_inliers {params.min_inliers}"
        )
    _, best_idx = _score_pose(best_pose, px, th, ph, counts, offsets, size)
    inlier_corrs = [
        Correspondence.single(corrs[k].pixel, Ray(float(th[best_idx[k]]), float(ph[best_idx[k]])))
        for k in range(n)
        if best_mask[k]
    ]
    try:
        refined = refine_pose(best_pose, inlier_corrs, size)
    except SingularNormalEquations:
        refined = best_pose
    return refined, best_mask


def _normalize_points(pts: np.ndarray):
    centroid = pts.mean(axis=0)
    d = np.linalg.norm(pts - centroid, axis=1).mean()
    if d < 1e-12:
        raise Degenerate("all points coincide")
    s = math.sqrt(2.0) / d
    t = np.array([[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1.0]])
    return (pts - centroid) * s, t


def _dlt_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT estimate of H with H[2,2] = 1."""
    ns, ts = _normalize_points(src)
    nd, td = _normalize_points(dst)
    n = src.shape[0]
    a = np.zeros((2 * n, 9))
    a[0::2, 0] = ns[:, 0]
    a[0::2, 1] = ns[:, 1]
    a[0::2, 2] = 1.0
    a[0::2, 6] = -nd[:, 0] * ns[:, 0]
    a[0::2, 7] = -nd[:, 0] * ns[:, 1]
    a[0::2, 8] = -nd[:, 0]
    a[1::2, 3] = ns[:, 0]
    a[1::2, 4] = ns[:, 1]
    a[1::2, 5] = 1.0
    a[1::2, 6] = -nd[:, 1] * ns[:, 0]
    a[1::2, 7] = -nd[:, 1] * ns[:, 1]
    a[1::2, 8] = -nd[:, 1]
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-10 * max(sv[0], 1.0):
        raise Degenerate("DLT system is rank deficient (collinear points)")
    h = vt[-1].reshape(3, 3)
    h = np.linalg.inv(td) @ h @ ts
    if abs(h[2, 2]) < 1e-12:
        raise Degenerate("homography normalization element vanishes")
    return h / h[2, 2]


def _collinear_any3(pts: np.ndarray, tol: float = 1e-8) -> bool:
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                v1 = pts[j] - pts[i]
                v2 = pts[k] - pts[i]
                if abs(v1[0] * v2[1] - v1[1] * v2[0]) < tol * (1.0 + np.abs(v1).sum() + np.abs(v2).sum()):
                    return True
    return False


def ransac_homography(
    pairs: Sequence[tuple[Pixel, Pixel]],
    params: RansacParams,
) -> tuple[np.ndarray, np.ndarray]:
    """4-point DLT RANSAC with a symmetric-transfer inlier test.

    Degenerate (collinear) samples are skipped and resampled; Degenerate is
    raised only when no valid hypothesis can be formed at all.
    """
    n = len(pairs)
    if n < 4:
        raise NotEnoughInliers(f"need at least 4 pairs, got {n}")
    src = np.array([[p.x, p.y] for p, _ in pairs])
    dst = np.array([[q.x, q.y] for _, q in pairs])
    rng = _rng(params.seed)
    samples = [rng.choice(n, size=4, replace=False) for _ in range(params.max_iterations)]

    def _inliers(h: np.ndarray) -> np.ndarray:
        try:
            h_inv = np.linalg.inv(h)
        except np.linalg.LinAlgError:
            return np.zeros(n, dtype=bool)
        fwd, v1 = apply_homography(h, src[:, 0], src[:, 1])
        bwd, v2 = apply_homography(h_inv, dst[:, 0], dst[:, 1])
        ok = v1 & v2
        d1 = np.where(ok, np.linalg.norm(np.nan_to_num(fwd) - dst, axis=1), np.inf)
        d2 = np.where(ok, np.linalg.norm(np.nan_to_num(bwd) - src, axis=1), np.inf)
        return np.maximum(d1, d2) < params.inlier_threshold

    best_count = -1
    best_mask = None
    best_h = None
    evaluated = 0
    any_valid = False
    for sample in samples:
        evaluated += 1
        s, d = src[sample], dst[sample]
        if _collinear_any3(s) or _collinear_any3(d):
            continue
        try:
            h = _dlt_homography(s, d)
        except Degenerate:
            continue
        any_valid = True
        mask = _inliers(h)
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask, best_h = count, mask, h
            w = count / n
            if 0.0 < w < 1.0:
                needed = math.log(1.0 - params.confidence) / math.log(1.0 - w ** 4)
                if evaluated >= needed:
                    break
            elif w >= 1.0:
                break
    if not any_valid:
        raise Degenerate("every sampled 4-point set was collinear")
    if best_h is None or best_count < max(params.min_inliers, 4):
        raise NotEnoughInliers(
            f"best consensus {max(best_count, 0)} < required {max(params.min_inliers, 4)}"
        )
    idx = np.nonzero(best_mask)[0]
    try:
        h = _dlt_homography(src[idx], dst[idx])
        if int(_inliers(h).sum()) >= best_count:
            best_h = h
            best_mask = _inliers(h)
    except Degenerate:
        pass
    return best_h, best_mask
