import numpy as np

from .errors import ValidationError

DEFAULT_PINV_TOL = 1e-10


def pseudo_inverse(a, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values at or below ``tol`` times the largest one are treated as zero.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValidationError("cannot pseudo-invert a matrix with non-finite entries")
    if tol < 0:
        raise ValidationError(f"tol must be nonnegative, got {tol}")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(a.T.shape)
    keep = s > tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T
