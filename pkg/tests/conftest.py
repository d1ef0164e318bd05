import numpy as np
import pytest

from pose6d import CameraIntrinsics


@pytest.fixture
def camera():
    return CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0)


def central_difference(f, x, h=1e-6):
    """Central finite-difference gradient/Jacobian of f at x.

    f maps a 1-D array to a scalar or array; the result has the shape of
    f(x) with a trailing axis over the components of x.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    out = np.empty(f0.shape + (x.size,))
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        out[..., j] = (np.asarray(f(xp), dtype=float)
                       - np.asarray(f(xm), dtype=float)) / (2.0 * h)
    return out


def relative_error(approx, exact):
    """Max elementwise error of approx vs exact, scaled by the magnitude
    of exact (floored at 1 so near-zero entries compare absolutely)."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = np.maximum(np.abs(exact), 1.0)
    return float(np.max(np.abs(approx - exact) / scale))
