"""High-dimensional joint affinities: perplexity-calibrated Gaussian conditionals.

For each sample i a Gaussian bandwidth tau_i is found by binary search so that
the conditional neighbor distribution

    p(j|i) = exp(-||x_i - x_j||^2 / (2 tau_i^2)) / sum_l exp(-||x_i - x_l||^2 / (2 tau_i^2))

has 2^H(p(.|i)) equal to the requested perplexity.  The conditionals are then
symmetrized into the joint matrix p_ij = (p(i|j) + p(j|i)) / (2N).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidData

TAU_MIN = 1e-6
TAU_MAX = 1e6
ENTROPY_TOL = 1e-5
MAX_BISECTIONS = 64

# Tiny floor applied to joint probabilities so log(p/q) terms in the KL loss
# never hit exact zeros.  Small enough to leave the total sum at 1 within
# 1e-8 at test scale (N <= 50).
P_FLOOR = 1e-12


@dataclass
class ConditionalRow:
    """Calibrated conditional distribution for one sample."""

    tau: float
    probs: np.ndarray
    degenerate: bool = False


def standardize_features(x: np.ndarray) -> np.ndarray:
    """Per-feature zero-mean unit-variance rescaling (constant features left centered)."""
    x = np.asarray(x, dtype=float)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (x - mu) / sd


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Dense matrix of squared Euclidean distances with an exact zero diagonal."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidData(f"expected a 2-d matrix with at least 2 rows, got shape {x.shape}")
    if not np.isfinite(x).all():
        bad = int(np.nonzero(~np.isfinite(x).all(axis=1))[0][0])
        raise InvalidData(f"non-finite value in input row {bad}")
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_entropy_bits(probs: np.ndarray) -> float:
    nz = probs > 0
    return float(-(probs[nz] * np.log2(probs[nz])).sum())


def calibrate_row(
    dist_row: np.ndarray,
    i: int,
    perplexity: float,
    tol: float = ENTROPY_TOL,
    max_iter: int = MAX_BISECTIONS,
) -> ConditionalRow:
    """Binary-search the bandwidth tau_i for one row of squared distances.

    The search runs on tau in [1e-6, 1e6] until the log2-entropy of the row
    matches log2(perplexity) within ``tol`` or ``max_iter`` bisections pass.
    Entry i of the returned distribution is exactly zero.
    """
    dist_row = np.asarray(dist_row, dtype=float)
    n = dist_row.shape[0]
    if not 1.0 < perplexity <= n - 1:
        raise ConfigError(f"perplexity must lie in (1, N-1], got {perplexity} for N={n}")
    others = np.arange(n) != i
    d = dist_row[others]

    if d.max() == 0.0:
        warnings.warn(f"row {i}: all off-diagonal distances are zero; returning uniform row")
        probs = np.full(n, 1.0 / (n - 1))
        probs[i] = 0.0
        return ConditionalRow(tau=1.0, probs=probs, degenerate=True)

    # Shift by the nearest neighbor so the largest weight is exp(0); keeps the
    # normalized row identical while avoiding total underflow for small tau.
    d = d - d.min()
    target = np.log2(perplexity)
    lo, hi = TAU_MIN, TAU_MAX
    tau = 1.0
    p = None
    for _ in range(max_iter):
        tau = 0.5 * (lo + hi)
        w = np.exp(-d / (2.0 * tau * tau))
        p = w / w.sum()
        h = _row_entropy_bits(p)
        if abs(h - target) <= tol:
            break
        if h < target:
            lo = tau  # entropy grows with tau
        else:
            hi = tau
    probs = np.zeros(n)
    probs[others] = p
    return ConditionalRow(tau=float(tau), probs=probs)


def conditional_rows(
    dists: np.ndarray,
    perplexity: float,
    tol: float = ENTROPY_TOL,
    max_iter: int = MAX_BISECTIONS,
) -> list[ConditionalRow]:
    """Calibrate every row of a squared-distance matrix (rows are independent)."""
    return [calibrate_row(dists[i], i, perplexity, tol, max_iter) for i in range(dists.shape[0])]


def symmetrize(conditionals: list[ConditionalRow]) -> np.ndarray:
    """Joint matrix p_ij = (p(i|j) + p(j|i)) / (2N), floored at P_FLOOR off-diagonal.

    The floor is tiny and deliberately not renormalized; construction keeps the
    matrix exactly symmetric with a zero diagonal.
    """
    c = np.vstack([row.probs for row in conditionals])
    n = c.shape[0]
    p = (c + c.T) / (2.0 * n)
    off = ~np.eye(n, dtype=bool)
    p[off] = np.maximum(p[off], P_FLOOR)
    np.fill_diagonal(p, 0.0)
    return p


def joint_affinities(
    x: np.ndarray,
    perplexity: float,
    tol: float = ENTROPY_TOL,
    max_iter: int = MAX_BISECTIONS,
    standardize: bool = False,
) -> np.ndarray:
    """Full pipeline from raw data to the joint affinity matrix P."""
    if standardize:
        x = standardize_features(x)
    dists = pairwise_sq_dists(x)
    return symmetrize(conditional_rows(dists, perplexity, tol, max_iter))
