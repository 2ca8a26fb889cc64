"""Centroid algebra: empirical centroids, imputation matrices and noise correction.

The noisy centroid is mapped back towards the clean one by right-multiplying
with a pseudo-inverse. Two correction matrices are offered:

``paper_M``
    ``M = sum_i pi_i sum_j T_ij K_{i->j}^T`` built from imputation matrices.
``direct_T``
    ``T`` itself, which is what the corruption model implies for the
    population centroids (``mu_noisy = mu_clean @ T``).

The two coincide for two classes with symmetric noise and in general differ
for c > 2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .linalg import DEFAULT_PINV_TOL, pseudo_inverse
from .noise import validate_priors, validate_transition

__all__ = [
    "CorrectionMode",
    "CorrectionMatrix",
    "imputation_matrix",
    "empirical_centroid",
    "compute_M",
    "correction_matrix",
    "correct_centroid",
    "pseudo_inverse",
]


class CorrectionMode(str, enum.Enum):
    PAPER_M = "paper_M"
    DIRECT_T = "direct_T"
    NONE = "none"


@dataclass(frozen=True)
class CorrectionMatrix:
    matrix: np.ndarray
    pinv: np.ndarray
    mode: CorrectionMode


def imputation_matrix(i: int, j: int, c: int) -> np.ndarray:
    """Identity with rows ``i`` and ``j`` swapped; maps ``e_i`` to ``e_j``."""
    if not (0 <= i < c and 0 <= j < c):
        raise IndexError(f"class indices ({i}, {j}) outside [0, {c})")
    K = np.eye(c)
    K[[i, j]] = K[[j, i]]
    return K


def empirical_centroid(ds: Dataset) -> np.ndarray:
    """``(1/n) sum_i x_i y_i^T`` as a d x c matrix."""
    return ds.features.T @ ds.labels.astype(np.float64) / ds.n


def compute_M(T, priors, tol: float = DEFAULT_PINV_TOL) -> CorrectionMatrix:
    T = validate_transition(T)
    c = T.shape[0]
    priors = validate_priors(priors, c)
    # K_{i->j}^T = K_{i->j} is the identity with rows i, j swapped, so each
    # term only touches the 2x2 block on {i, j} plus the shared identity.
    weight = priors[:, None] * T
    # row sums first: for T = I this reproduces sum(priors) bit for bit
    M = np.eye(c) * weight.sum(axis=1).sum()
    for i in range(c):
        for j in range(c):
            if i != j and weight[i, j]:
                w = weight[i, j]
                M[i, i] -= w
                M[j, j] -= w
                M[i, j] += w
                M[j, i] += w
    return CorrectionMatrix(M, pseudo_inverse(M, tol), CorrectionMode.PAPER_M)


def correction_matrix(mode, T, priors=None, tol: float = DEFAULT_PINV_TOL) -> CorrectionMatrix:
    mode = CorrectionMode(mode)
    T = validate_transition(T)
    if mode is CorrectionMode.PAPER_M:
        if priors is None:
            raise ValidationError("paper_M correction needs class priors")
        return compute_M(T, priors, tol)
    if mode is CorrectionMode.DIRECT_T:
        return CorrectionMatrix(T, pseudo_inverse(T, tol), mode)
    eye = np.eye(T.shape[0])
    return CorrectionMatrix(eye, eye, mode)


def correct_centroid(noisy, T, priors=None, mode=CorrectionMode.PAPER_M,
                     tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Estimate the clean centroid as ``noisy @ pinv(correction matrix)``."""
    noisy = np.asarray(noisy, dtype=np.float64)
    T = validate_transition(T)
    if noisy.ndim != 2 or noisy.shape[1] != T.shape[0]:
        raise ValidationError(f"centroid shape {noisy.shape} does not match {T.shape[0]} classes")
    mode = CorrectionMode(mode)
    if mode is CorrectionMode.NONE:
        return noisy.copy()
    return noisy @ correction_matrix(mode, T, priors, tol).pinv
