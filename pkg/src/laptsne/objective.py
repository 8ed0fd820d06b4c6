"""Loss and gradients: KL(P, Q) plus the Laplacian eigenvalue-sum regularizer.

The regularizer is Tr(V^T L_Y V) where L_Y is the symmetric normalized
Laplacian of the embedding-space kernel matrix (t-Student numerator T or a
constant-sigma Gaussian K, diagonal zeroed) and V holds the smallest-k
eigenvectors of L_Y frozen at the previous iterate.  Its gradient is assembled
from the per-entry partial

    dTr(V^T L V)/dq_mn = a_m + a_n - (VV^T)_mn d_m^{-1/2} d_n^{-1/2},
    a_m = (1/2) d_m^{-3/2} sum_j (VV^T)_mj q_mj d_j^{-1/2},

where d is the kernel degree vector; the two a-terms are the constant-row and
constant-column components, the third the dense direct component.  Chaining
through dq/dY gives 4(MY - C*Y) for the t-Student kernel (M the partial times
T*T elementwise, C its row sums) and (2/sigma^2)(MY - C*Y) for the Gaussian.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDegree, DimensionError

T_STUDENT = "tstudent"
GAUSSIAN = "gaussian"
KERNELS = (T_STUDENT, GAUSSIAN)

Q_FLOOR = 1e-12


@dataclass
class Embedding:
    """Low-dimensional coordinates plus optimizer state."""

    y: np.ndarray
    iteration: int = 0
    velocity: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape


@dataclass
class LossBreakdown:
    kl: float
    reg: float
    lam: float

    @property
    def total(self) -> float:
        return self.kl + self.lam * self.reg


@dataclass
class UDecomposition:
    """The three gradient components of the trace regularizer w.r.t. the kernel.

    ``u0`` is constant down each column, ``u1`` constant along each row and
    ``u2`` is dense symmetric.  ``combined`` is (u0+u1+u2) composed with the
    kernel chain factor (T*T for t-Student, K for Gaussian) and ``c`` holds its
    row sums (the column-broadcast vector).
    """

    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    combined: np.ndarray
    c: np.ndarray = field(repr=False)


def _coords(y) -> np.ndarray:
    return np.asarray(y.y if isinstance(y, Embedding) else y, dtype=float)


def _sq_dists(y: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", y, y)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def embedding_kernel(y, kind: str = T_STUDENT, sigma: float = 1.0) -> np.ndarray:
    """Pairwise similarity matrix in embedding space, diagonal zeroed."""
    y = _coords(y)
    if kind == T_STUDENT:
        w = 1.0 / (1.0 + _sq_dists(y))
    elif kind == GAUSSIAN:
        if sigma <= 0:
            raise ConfigError(f"gaussian kernel needs sigma > 0, got {sigma}")
        w = np.exp(-_sq_dists(y) / (2.0 * sigma * sigma))
    else:
        raise ConfigError(f"unknown kernel kind {kind!r}; expected one of {KERNELS}")
    np.fill_diagonal(w, 0.0)
    return w


def low_dim_q(y) -> np.ndarray:
    """t-Student similarities normalized over all ordered pairs (q_ii = 0)."""
    t = embedding_kernel(y, T_STUDENT)
    return t / t.sum()


def kl_loss(p: np.ndarray, q: np.ndarray) -> float:
    """sum_{i != j} p_ij log(p_ij / q_ij) with 0 log 0 := 0 and q floored at 1e-12."""
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: P {p.shape} vs Q {q.shape}")
    # p log p is exactly zero wherever p is zero, so no mask is needed.
    terms = p * (np.log(np.maximum(p, 1e-300)) - np.log(np.maximum(q, Q_FLOOR)))
    return float(terms.sum())


def kl_gradient(p: np.ndarray, q: np.ndarray, y) -> np.ndarray:
    """Standard t-SNE gradient: row i is 4 sum_j (p_ij - q_ij) t_ij (y_i - y_j)."""
    y = _coords(y)
    t = embedding_kernel(y, T_STUDENT)
    m = (p - q) * t
    rs = m.sum(axis=1)
    return 4.0 * (rs[:, None] * y - m @ y)


def _trace_pieces(w: np.ndarray, v: np.ndarray):
    """Degree vector, its -1/2 power and the row/column component vector a."""
    d = w.sum(axis=1)
    if d.min() <= 0.0:
        raise DegenerateDegree(f"kernel row {int(np.argmin(d))} has zero degree")
    s = d**-0.5
    tvs = w @ (v * s[:, None])
    h = np.einsum("ij,ij->i", v, tvs)  # h_m = sum_j (VV^T)_mj w_mj s_j
    a = 0.5 * h * d**-1.5
    return d, s, a


def build_u_decomposition(w: np.ndarray, v: np.ndarray, kind: str = T_STUDENT,
                          sigma: float = 1.0) -> UDecomposition:
    """Assemble the U components for kernel matrix ``w`` and frozen eigenbasis ``v``."""
    n = w.shape[0]
    _, s, a = _trace_pieces(w, v)
    u0 = np.broadcast_to(a[None, :], (n, n)).copy()
    u1 = np.broadcast_to(a[:, None], (n, n)).copy()
    vs = v * s[:, None]
    u2 = -(vs @ vs.T)
    total = u0 + u1 + u2
    if kind == T_STUDENT:
        combined = total * w * w
    elif kind == GAUSSIAN:
        combined = total * w
    else:
        raise ConfigError(f"unknown kernel kind {kind!r}; expected one of {KERNELS}")
    return UDecomposition(u0=u0, u1=u1, u2=u2, combined=combined, c=combined.sum(axis=1))


def reg_value(y, v: np.ndarray, kind: str = T_STUDENT, sigma: float = 1.0) -> float:
    """Tr(V^T L_Y V) for the normalized Laplacian of the embedding kernel."""
    w = embedding_kernel(y, kind, sigma)
    return trace_on_kernel(w, v)


def trace_on_kernel(w: np.ndarray, v: np.ndarray) -> float:
    """Tr(V^T L V) with L = I - D^{-1/2} W D^{-1/2} built from adjacency ``w``."""
    d = w.sum(axis=1)
    if d.min() <= 0.0:
        raise DegenerateDegree(f"kernel row {int(np.argmin(d))} has zero degree")
    s = d**-0.5
    lv = v - s[:, None] * (w @ (v * s[:, None]))
    return float(np.einsum("ij,ij->", v, lv))


def reg_gradient(y, v: np.ndarray, kind: str = T_STUDENT, sigma: float = 1.0) -> np.ndarray:
    """Gradient of Tr(V^T L_Y V) w.r.t. Y with V treated as constant."""
    y = _coords(y)
    w = embedding_kernel(y, kind, sigma)
    _, s, a = _trace_pieces(w, v)
    vs = v * s[:, None]
    total = a[:, None] + a[None, :] - vs @ vs.T
    if kind == T_STUDENT:
        m = total * w * w
        c = m.sum(axis=1)
        return 4.0 * (m @ y - c[:, None] * y)
    # Gaussian, constant sigma: canonical form is the symmetrized one,
    # (U + U^T) Y - Y * (C + C'), scaled by 1/sigma^2; with U symmetric it
    # reduces to (2/sigma^2)(UY - C*Y).  Both are evaluated and any
    # disagreement is reported rather than silently resolved.
    m = total * w
    c_row = m.sum(axis=1)
    c_col = m.sum(axis=0)
    sym = ((m + m.T) @ y - y * (c_row + c_col)[:, None]) / (sigma * sigma)
    plain = (2.0 / (sigma * sigma)) * (m @ y - c_row[:, None] * y)
    scale = max(float(np.abs(sym).max()), 1.0)
    if np.abs(sym - plain).max() > 1e-8 * scale:
        warnings.warn("gaussian trace gradient: symmetrized and plain forms disagree "
                      f"by {np.abs(sym - plain).max():.3e}")
    return sym


def loss(p: np.ndarray, y, v: np.ndarray, lam: float,
         kind: str = T_STUDENT, sigma: float = 1.0) -> LossBreakdown:
    """Full objective value at Y for a frozen eigenbasis V."""
    q = low_dim_q(y)
    kl = kl_loss(p, q)
    reg = reg_value(y, v, kind, sigma)
    return LossBreakdown(kl=kl, reg=reg, lam=lam)
