"""Affinity kernels and diffusion embeddings of distance matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import as_values


class EmbeddingError(RuntimeError):
    """Raised when the eigensolver fails or the kernel is degenerate."""


def initial_metric(data, axis: str = "rows", kind: str = "correlation") -> np.ndarray:
    """Symmetric zero-diagonal distance matrix between rows or columns.

    kind="correlation" uses 1 - Pearson correlation (range [0, 2]).
    Constant vectors have no defined correlation; they are placed at
    distance 2 from everything else, with a warning.
    """
    vals = as_values(data)
    if axis == "rows":
        vecs = vals
    elif axis == "cols":
        vecs = vals.T
    else:
        raise ValueError("axis must be 'rows' or 'cols'")
    m = vecs.shape[0]
    if m < 2:
        raise ValueError("need at least two vectors")

    if kind == "correlation":
        sd = vecs.std(axis=1)
        flat = np.flatnonzero(sd == 0)
        if flat.size:
            warnings.warn(
                f"{flat.size} constant vector(s) have undefined correlation; "
                "placing them at maximal distance",
                RuntimeWarning,
            )
        centered = vecs - vecs.mean(axis=1, keepdims=True)
        denom = np.where(sd == 0, 1.0, sd * vecs.shape[1])
        corr = (centered @ centered.T) / np.outer(denom, denom) * vecs.shape[1]
        corr = np.clip(corr, -1.0, 1.0)
        d = 1.0 - corr
        d[flat, :] = 2.0
        d[:, flat] = 2.0
    elif kind == "euclidean":
        d = cdist(vecs, vecs)
    else:
        raise ValueError("kind must be 'correlation' or 'euclidean'")

    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


def _check_distances(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.all(np.isfinite(d)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    if not np.allclose(d, d.T, atol=1e-8):
        raise ValueError("distance matrix must be symmetric")
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric kernel with unit diagonal and entries in (0, 1]."""

    matrix: np.ndarray
    bandwidth: float

    def __post_init__(self):
        k = np.asarray(self.matrix, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValueError("affinity matrix must be square")
        if np.any(k <= 0) or np.any(k > 1.0):
            raise ValueError("affinities must lie in (0, 1]")
        if not np.array_equal(k, k.T):
            raise ValueError("affinity matrix must be symmetric")
        if not np.all(np.diag(k) == 1.0):
            raise ValueError("affinity diagonal must be 1")
        object.__setattr__(self, "matrix", k)


def affinity_kernel(distances, sigma="median") -> AffinityMatrix:
    """Exponential kernel K = exp(-d / bandwidth).

    sigma="median" sets the bandwidth to the median positive distance,
    making the kernel invariant to rescaling of the input distances.
    A numeric sigma is used as-is for the bandwidth.  All-zero distance
    matrices have no usable scale and are rejected.
    """
    d = _check_distances(distances)
    if isinstance(sigma, str):
        if sigma != "median":
            raise ValueError("sigma must be a positive number or 'median'")
        positive = d[d > 0]
        if positive.size == 0:
            raise ValueError("all distances are zero; no kernel bandwidth exists")
        bandwidth = float(np.median(positive))
    else:
        bandwidth = float(sigma)
        if not bandwidth > 0:
            raise ValueError("sigma must be positive")
    k = np.exp(-d / bandwidth)
    k = np.maximum(k, 1e-300)  # keep affinities strictly positive under underflow
    np.fill_diagonal(k, 1.0)
    k = np.triu(k) + np.triu(k, 1).T
    return AffinityMatrix(k, bandwidth)


@dataclass(frozen=True)
class Embedding:
    """Diffusion coordinates: column k is lambda_k^t times the k-th eigenvector."""

    coordinates: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=np.float64)
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != lam.shape[0] or lam.size < 1:
            raise ValueError("coordinates and eigenvalues disagree")
        if np.any(np.diff(lam) > 1e-12):
            raise ValueError("eigenvalues must be non-increasing")
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "eigenvalues", lam)


def diffusion_embedding(affinity, n_components: int | None = None, t: float = 1.0) -> Embedding:
    """Embed points by the top non-trivial eigenvectors of the diffusion operator.

    The kernel is normalized symmetrically, A = D^-1/2 K D^-1/2, whose
    top eigenpair (eigenvalue 1) is trivial and dropped.  Eigenvectors
    are mapped back through D^-1/2, scaled by lambda^t, and sign-fixed
    so the entry of largest magnitude is positive.
    """
    k = affinity.matrix if isinstance(affinity, AffinityMatrix) else np.asarray(affinity)
    n = k.shape[0]
    if n < 2:
        raise ValueError("need at least two points to embed")
    if n_components is None:
        n_components = min(10, n - 1)
    if not 1 <= n_components <= n - 1:
        raise ValueError("n_components must be in [1, n-1]")

    rowsum = k.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(rowsum)
    a = k * np.outer(inv_sqrt, inv_sqrt)
    a = (a + a.T) / 2.0
    try:
        evals, evecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError(f"eigendecomposition failed: {exc}") from exc

    order = np.argsort(evals, kind="stable")[::-1]
    keep = order[1 : n_components + 1]  # drop the single trivial top eigenpair
    lam = evals[keep]
    phi = inv_sqrt[:, None] * evecs[:, keep]

    for j in range(phi.shape[1]):
        pivot = int(np.argmax(np.abs(phi[:, j])))
        if phi[pivot, j] < 0:
            phi[:, j] = -phi[:, j]

    if t < 0:
        raise ValueError("diffusion time must be non-negative")
    if t == int(t):
        scale = lam ** int(t)
    elif np.any(lam < 0):
        raise EmbeddingError("negative eigenvalues need an integer diffusion time")
    else:
        scale = lam**t
    coords = phi * scale
    return Embedding(coords, lam)
