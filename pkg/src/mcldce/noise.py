"""Transition matrices, label corruption and class-prior recovery."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Provenance, check_seed, one_hot_matrix
from .errors import DegenerateSystemError, FormatError, ValidationError
from .linalg import pseudo_inverse

ROW_SUM_TOL = 1e-12


def validate_transition(T, c: int | None = None) -> np.ndarray:
    """Return ``T`` as a read-only float array after checking it is row-stochastic."""
    T = np.array(T, dtype=np.float64)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 2:
        raise ValidationError(f"transition matrix must be square with c >= 2, got shape {T.shape}")
    if c is not None and T.shape[0] != c:
        raise ValidationError(f"transition matrix is {T.shape[0]}x{T.shape[0]} but there are {c} classes")
    if not np.isfinite(T).all() or (T < 0).any() or (T > 1).any():
        raise ValidationError("transition matrix entries must lie in [0, 1]")
    if np.abs(T.sum(axis=1) - 1.0).max() > ROW_SUM_TOL:
        raise ValidationError("transition matrix rows must sum to 1")
    T.setflags(write=False)
    return T


def validate_priors(priors, c: int | None = None) -> np.ndarray:
    p = np.array(priors, dtype=np.float64)
    if p.ndim != 1 or (c is not None and p.shape[0] != c):
        raise ValidationError(f"expected {c} class priors, got shape {p.shape}")
    if not np.isfinite(p).all() or (p < 0).any() or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ValidationError("class priors must be nonnegative and sum to 1")
    return p


def _check_rate(rate: float, upper: float) -> None:
    if not (np.isfinite(rate) and 0.0 <= rate < upper):
        raise ValidationError(f"noise rate must lie in [0, {upper}), got {rate}")


def symmetric_T(c: int, rate: float) -> np.ndarray:
    """Keep the label with probability ``1 - rate``, otherwise flip uniformly."""
    if c < 2:
        raise ValidationError(f"need c >= 2, got {c}")
    _check_rate(rate, 1.0)
    T = np.full((c, c), rate / (c - 1))
    np.fill_diagonal(T, 1.0 - rate)
    return validate_transition(T)


def pairflip_T(c: int, rate: float) -> np.ndarray:
    """Flip class i to class (i + 1) mod c with probability ``rate``.

    ``rate`` must stay below 0.5 so the true class remains the most likely label.
    """
    if c < 2:
        raise ValidationError(f"need c >= 2, got {c}")
    _check_rate(rate, 0.5)
    T = np.eye(c) * (1.0 - rate)
    idx = np.arange(c)
    T[idx, (idx + 1) % c] += rate
    return validate_transition(T)


class NoiseKind(str, enum.Enum):
    SYMMETRIC = "symmetric"
    PAIRFLIP = "pairflip"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind = NoiseKind.SYMMETRIC
    rate: float = 0.0
    matrix: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        check_seed(self.seed)
        if self.kind is NoiseKind.EXPLICIT:
            if self.matrix is None:
                raise ValidationError("explicit noise needs a transition matrix")
            object.__setattr__(self, "matrix", validate_transition(self.matrix))
        else:
            _check_rate(self.rate, 0.5 if self.kind is NoiseKind.PAIRFLIP else 1.0)

    def transition(self, c: int) -> np.ndarray:
        if self.kind is NoiseKind.SYMMETRIC:
            return symmetric_T(c, self.rate)
        if self.kind is NoiseKind.PAIRFLIP:
            return pairflip_T(c, self.rate)
        return validate_transition(self.matrix, c)


def inject_noise(ds: Dataset, T, seed: int) -> Dataset:
    """Corrupt every label independently according to its row of ``T``.

    Example ``k`` consumes the ``k``-th uniform of a Philox stream keyed by
    ``seed``, so any chunking of the work reproduces the serial result.
    """
    if ds.provenance is not Provenance.CLEAN:
        raise ValidationError("noise can only be injected into a clean dataset")
    T = validate_transition(T, ds.c)
    u = np.random.Generator(np.random.Philox(key=check_seed(seed))).random(ds.n)
    cdf = np.cumsum(T, axis=1)
    cdf /= cdf[:, -1:]
    clean = ds.classes
    noisy = (u[:, None] >= cdf[clean]).sum(axis=1)
    return ds.with_labels(one_hot_matrix(noisy, ds.c), Provenance.NOISY)


def noisy_label_frequencies(ds: Dataset) -> np.ndarray:
    return np.bincount(ds.classes, minlength=ds.c) / ds.n


def estimate_priors(T, freqs) -> np.ndarray:
    """Clean class priors from observed label frequencies.

    Solves ``freqs = T^T pi`` through the pseudo-inverse, then clips negative
    entries and renormalizes onto the simplex.
    """
    T = validate_transition(T)
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.shape != (T.shape[0],):
        raise ValidationError(f"expected {T.shape[0]} frequencies, got shape {freqs.shape}")
    pi = pseudo_inverse(T.T) @ freqs
    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if not total > 0:
        raise DegenerateSystemError("every recovered prior is nonpositive; cannot renormalize")
    return pi / total


def save_matrix_csv(a, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        for row in np.atleast_2d(a):
            w.writerow([repr(float(v)) for v in row])


def load_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r]
    try:
        a = np.array([[float(v) for v in r] for r in rows])
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
    if a.ndim != 2:
        raise FormatError(f"{path}: rows have unequal lengths")
    return a


def load_transition_csv(path, c: int | None = None) -> np.ndarray:
    return validate_transition(load_matrix_csv(path), c)
