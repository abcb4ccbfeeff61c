"""Feature-space rotation between cascade layers.

Fits a principal-component rotation on the training rows and replays it
on any later matrix. The retained-component count is drawn uniformly
from [ceil(d/2), d] so successive layers see diversified inputs.

The eigensolver is a cyclic Jacobi sweep over the sample covariance;
dimensionalities inside a cascade stay small, so robustness and
platform-independent determinism matter more than raw speed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = ["PcaTransform", "fit_pca", "transform", "sample_k", "jacobi_eigh"]

_JACOBI_TOL = 1e-12


def jacobi_eigh(a: np.ndarray, tol: float = _JACOBI_TOL, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    unordered. Sweeps stop once the off-diagonal norm falls below
    ``tol`` relative to the Frobenius norm of the input.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-8, rtol=1e-8):
        raise ValueError("matrix is not symmetric")
    d = a.shape[0]
    v = np.eye(d)
    scale = np.linalg.norm(a)
    if d == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= tol * scale / d:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = a[p, p], a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                for k in range(d):
                    if k == p or k == q:
                        continue
                    a[k, p] = a[p, k] = new_p[k]
                    a[k, q] = a[q, k] = new_q[k]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    return np.diag(a).copy(), v


@dataclass(frozen=True)
class PcaTransform:
    """Centering vector plus orthonormal component rows.

    Components are ordered by descending eigenvalue; each row's
    largest-magnitude entry is positive so the decomposition is unique.
    """

    mean: np.ndarray        # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    eigenvalues: np.ndarray  # (k,), non-increasing

    def __post_init__(self):
        for name in ("mean", "components", "eigenvalues"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        k, d = self.components.shape
        if not 1 <= k <= d:
            raise ValueError(f"retained count {k} outside 1..{d}")
        if self.mean.shape != (d,) or self.eigenvalues.shape != (k,):
            raise ValueError("inconsistent transform shapes")
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(k), atol=1e-8):
            raise ValueError("component rows are not orthonormal")
        if np.any(np.diff(self.eigenvalues) > 1e-10):
            raise ValueError("eigenvalues are not sorted non-increasing")
        if np.any(self.eigenvalues < -1e-10):
            raise ValueError("negative eigenvalue beyond tolerance")

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def fit_pca(X: np.ndarray, k: int) -> PcaTransform:
    """Fit a top-k principal-component rotation to the rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected a matrix, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise DataError(f"need at least 2 rows to fit a rotation, got {n}")
    if not 1 <= k <= d:
        raise DataError(f"retained count k={k} outside 1..{d}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = (centered.T @ centered) / (n - 1)
    eigenvalues, vectors = jacobi_eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")[:k]
    components = vectors[:, order].T.copy()
    # Fix signs: the largest-magnitude entry of each component is positive.
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return PcaTransform(mean, components, eigenvalues[order])


def transform(t: PcaTransform, X: np.ndarray) -> np.ndarray:
    """Center by the training mean and project onto the components."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != t.d:
        raise DataError(
            f"matrix has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"transform expects {t.d}"
        )
    return (X - t.mean) @ t.components.T


def sample_k(d: int, rng: np.random.Generator) -> int:
    """Draw the retained-component count uniformly from [ceil(d/2), d]."""
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    lo = -(-d // 2)
    return int(rng.integers(lo, d + 1))
