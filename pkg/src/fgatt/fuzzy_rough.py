"""Gaussian kernel similarity and fuzzy-rough approximation operators.

The lower approximation of a fuzzy set ``d`` at a point ``x`` is
``inf_y max(1 - R(x, y), d(y))`` over a finite universe of samples; the upper
approximation is ``sup_y min(R(x, y), d(y))``.  ``R`` is a Gaussian kernel,
so it is reflexive, symmetric, and valued in [0, 1].  Fuzzy sets over a
universe of ``n`` samples are plain length-``n`` arrays of degrees; the
universe itself is an ``(n, d)`` array of feature vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError


@dataclass(frozen=True)
class Kernel:
    """Gaussian similarity kernel ``R(x, y) = exp(-||x - y||^2 / (2 sigma^2))``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0.0:
            raise ConfigError(f"kernel bandwidth must be a positive real, got {self.sigma}")


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise InputError(f"expected a 1-d feature vector, got shape {v.shape}")
    return v


def kernel_similarity(x, y, kernel: Kernel) -> float:
    """Similarity degree in [0, 1] between two feature vectors."""
    xv, yv = _as_vector(x), _as_vector(y)
    if xv.shape != yv.shape:
        raise InputError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    diff = xv - yv
    return float(np.exp(-np.dot(diff, diff) / (2.0 * kernel.sigma**2)))


def node_membership(target, y, kernel: Kernel) -> float:
    """Degree to which ``y`` belongs to the similarity class of ``target``."""
    return kernel_similarity(y, target, kernel)


def kernel_matrix(xs: np.ndarray, ys: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Pairwise similarities between the rows of ``xs`` (m, d) and ``ys`` (n, d)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    if xs.shape[1] != ys.shape[1]:
        raise InputError(f"dimension mismatch: {xs.shape} vs {ys.shape}")
    # Differences computed explicitly so that R(x, x) == 1 and symmetry hold
    # exactly, not merely to rounding.
    diff = xs[:, None, :] - ys[None, :, :]
    sq = np.einsum("mnd,mnd->mn", diff, diff)
    return np.exp(-sq / (2.0 * kernel.sigma**2))


def similarity_class(universe: np.ndarray, target, kernel: Kernel) -> np.ndarray:
    """Fuzzy set of memberships of every universe sample in ``target``'s kernel class."""
    u = _check_universe(universe)
    t = _as_vector(target)
    if t.shape[0] != u.shape[1]:
        raise InputError(f"dimension mismatch: sample has d={t.shape[0]}, universe d={u.shape[1]}")
    return kernel_matrix(u, t[None, :], kernel)[:, 0]


def _check_universe(universe) -> np.ndarray:
    u = np.asarray(universe, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[0] == 0:
        raise InputError(f"universe must be a nonempty (n, d) array, got shape {u.shape}")
    return u


def _check_membership(membership, n: int) -> np.ndarray:
    d = np.asarray(membership, dtype=np.float64)
    if d.shape != (n,):
        raise InputError(f"membership must have one degree per universe sample, got shape {d.shape}")
    if np.any(d < 0.0) or np.any(d > 1.0):
        raise InputError("membership degrees must lie in [0, 1]")
    return d


def fuzzy_lower_approx(x, membership, universe, kernel: Kernel) -> float:
    """``min_y max(1 - R(x, y), d(y))`` over the universe samples."""
    u = _check_universe(universe)
    d = _check_membership(membership, u.shape[0])
    r = kernel_matrix(_as_vector(x)[None, :], u, kernel)[0]
    return float(np.min(np.maximum(1.0 - r, d)))


def fuzzy_upper_approx(x, membership, universe, kernel: Kernel) -> float:
    """``max_y min(R(x, y), d(y))`` over the universe samples."""
    u = _check_universe(universe)
    d = _check_membership(membership, u.shape[0])
    r = kernel_matrix(_as_vector(x)[None, :], u, kernel)[0]
    return float(np.max(np.minimum(r, d)))


def lower_approx_matrix(features: np.ndarray, kernel: Kernel) -> np.ndarray:
    """All-pairs lower approximations over one sample set.

    Entry ``(i, j)`` is the lower approximation at ``features[i]`` of the
    similarity class of ``features[j]``, with the rows of ``features`` as the
    universe.  Shape (n, n).
    """
    f = _check_universe(features)
    r = kernel_matrix(f, f, kernel)
    # term[i, j, y] = max(1 - R(x_i, y), R(y, x_j)); minimise over y.
    return np.maximum((1.0 - r)[:, None, :], r.T[None, :, :]).min(axis=2)
