"""Exception types shared across the package."""


class PtzSlamError(Exception):
    """Base class for all estimation errors raised by this package."""


class BehindCamera(PtzSlamError):
    """A point or ray has non-positive depth in the camera frame."""


class Degenerate(PtzSlamError):
    """Input configuration admits no unique solution (coincident points, collinear sample, ...)."""


class NoSolution(PtzSlamError):
    """Root finding failed: no parameter value satisfies the constraint inside the bracket."""


class Inconsistent(PtzSlamError):
    """A minimal solution fits the first constraint but leaves a large residual on the second."""


class SingularNormalEquations(PtzSlamError):
    """Least-squares normal equations are rank deficient."""


class NotEnoughInliers(PtzSlamError):
    """RANSAC consensus is below the required inlier count."""


class TrackingLost(PtzSlamError):
    """A tracker step could not find enough matched inliers to update."""


class InitializationFailed(PtzSlamError):
    """The first frame does not provide enough observations to start tracking."""


class LengthMismatch(PtzSlamError):
    """Paired sequences have different lengths."""


class EmptyEvaluation(PtzSlamError):
    """No valid (visible) samples were available for a metric."""


class ConfigError(PtzSlamError):
    """A configuration file is malformed or inconsistent."""
