"""Backend dispatch for the hot geometry kernels.

The numba-compiled kernels are the default.  Set PTZ_SLAM_BACKEND=numpy to
force the pure-numpy fallback (useful where numba is unavailable or for
benchmarking; see benchmarks/backend_bench.py), or PTZ_SLAM_BACKEND=numba
to fail loudly if numba cannot be imported.
"""

import os

from . import _numpy_impl

DEG = _numpy_impl.DEG
DEPTH_EPS = _numpy_impl.DEPTH_EPS

_requested = os.environ.get("PTZ_SLAM_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"PTZ_SLAM_BACKEND must be one of auto|numba|numpy, got {_requested!r}"
    )

if _requested == "numpy":
    BACKEND = "numpy"
    _impl = _numpy_impl
else:
    try:
        from . import _numba_impl

        BACKEND = "numba"
        _impl = _numba_impl
    except ImportError:
        if _requested == "numba":
            raise
        BACKEND = "numpy"
        _impl = _numpy_impl

project_rays = _impl.project_rays
back_project_pixels = _impl.back_project_pixels
projection_jacobians = _impl.projection_jacobians
tree_leaf_indices = _impl.tree_leaf_indices


def warmup():
    """Trigger JIT compilation of every kernel (no-op on the numpy backend)."""
    import numpy as np

    t = np.array([1.0, -2.0])
    project_rays(1.0, -2.0, 2000.0, 640.0, 360.0, t, t)
    back_project_pixels(1.0, -2.0, 2000.0, 640.0, 360.0, t + 640.0, t + 360.0)
    projection_jacobians(1.0, -2.0, 2000.0, t, t)
    tree_leaf_indices(
        np.array([0, -1, -1], dtype=np.int64),
        np.array([0.5, 0.0, 0.0]),
        np.array([1, -1, -1], dtype=np.int64),
        np.array([2, -1, -1], dtype=np.int64),
        np.zeros((2, 1)),
    )
