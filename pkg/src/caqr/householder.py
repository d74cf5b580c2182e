"""Householder QR kernels with flop instrumentation.

Variants: unblocked, blocked (compact WY/YT), recursive column splitting,
and structure-exploiting factorizations of stacked upper triangles and of
a triangle stacked on a rectangle.  The structured kernels touch only the
rows inside the known sparsity profile, which is where the flop savings
come from.

Sign convention: beta = -sign(x_1)*||x|| with sign(0) = +1, except that a
vector already of the form (a, 0, ..., 0) with a >= 0 keeps beta = a and
gets the identity reflector tau = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, as_matrix
from .counters import FlopCounter

EPS = float(np.finfo(np.float64).eps)

# shape tags
DENSE = "dense"
STACKED = "stacked-triangles"
TRI_ON_RECT = "triangle-on-rect"


@dataclass
class HouseholderFactor:
    """Implicit Q as reflectors: Q = H_0 H_1 ... H_{n-1}, H_j = I - tau_j v_j v_j^T.

    ``Y`` stores the reflector columns.  For the dense shape Y is m x n
    unit lower trapezoid (unit diagonal stored explicitly).  For
    stacked-triangles it is (q*n) x n with the sparsity of the stacked
    profile.  For triangle-on-rect only the dense r x n rectangle below
    the implicit identity top is stored.
    """

    Y: np.ndarray
    tau: np.ndarray
    shape_tag: str = DENSE
    q: int = 0            # stacked-triangles only
    rows_rect: int = 0    # triangle-on-rect only
    T: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Y.shape[1]

    @property
    def m(self) -> int:
        """Row count of the matrix the factor acts on."""
        if self.shape_tag == TRI_ON_RECT:
            return self.n + self.rows_rect
        return self.Y.shape[0]

    def reflector(self, j: int):
        """Row-index array and values of v_j (v_j[0] = 1 at the pivot row)."""
        if self.shape_tag == DENSE:
            idx = np.arange(j, self.Y.shape[0])
            return idx, self.Y[j:, j]
        if self.shape_tag == STACKED:
            n = self.n
            parts = [np.array([j])]
            parts += [np.arange(t * n, t * n + j + 1) for t in range(1, self.q)]
            idx = np.concatenate(parts)
            return idx, self.Y[idx, j]
        # triangle-on-rect: pivot row j, then the whole rectangle
        n = self.n
        idx = np.concatenate([np.array([j]), np.arange(n, n + self.rows_rect)])
        v = np.empty(idx.size)
        v[0] = 1.0
        v[1:] = self.Y[:, j]
        return idx, v

    def full_y(self) -> np.ndarray:
        """Materialize Y as a full m x n array (explicit identity top)."""
        if self.shape_tag == TRI_ON_RECT:
            out = np.zeros((self.m, self.n))
            out[:self.n, :self.n] = np.eye(self.n)
            out[self.n:, :] = self.Y
            return out
        return self.Y


def house_gen(x, counter: FlopCounter | None = None):
    """Reflector (v, tau, beta) with (I - tau v v^T) x = beta e_1 and v[0] = 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DimensionError("house_gen expects a nonempty vector")
    L = x.size
    v = np.zeros(L)
    v[0] = 1.0
    sigma = float(x[1:] @ x[1:]) if L > 1 else 0.0
    if counter is not None and L > 1:
        counter.add(2 * (L - 1))
    x0 = float(x[0])
    if sigma == 0.0:
        if x0 == 0.0:
            return v, 0.0, 0.0
        if x0 >= 0.0:
            return v, 0.0, x0
        return v, 2.0, -x0
    norm = float(np.sqrt(x0 * x0 + sigma))
    beta = -norm if x0 >= 0.0 else norm
    v0 = x0 - beta
    v[1:] = x[1:] / v0
    tau = (beta - x0) / beta
    if counter is not None:
        counter.add(2, divs=L)
    return v, float(tau), float(beta)


def _update_columns(sub: np.ndarray, v: np.ndarray, tau: float,
                    counter: FlopCounter | None) -> None:
    """sub := (I - tau v v^T) sub, in place, counting 4*len(v)*cols flops."""
    w = v @ sub
    w *= tau
    sub -= np.outer(v, w)
    if counter is not None:
        L, c = sub.shape
        counter.add((2 * L - 1) * c + c + 2 * L * c)


def qr_unblocked(A, counter: FlopCounter | None = None):
    """Householder QR, one column at a time.  Returns (factor, R)."""
    A = as_matrix(A).copy()
    m, n = A.shape
    if m < n:
        raise DimensionError(f"need m >= n, got {m} x {n}")
    Y = np.zeros((m, n))
    tau = np.zeros(n)
    for j in range(n):
        v, tj, beta = house_gen(A[j:, j], counter)
        Y[j:, j] = v
        tau[j] = tj
        A[j, j] = beta
        A[j + 1:, j] = 0.0
        if tj != 0.0 and j + 1 < n:
            _update_columns(A[j:, j + 1:], v, tj, counter)
    R = np.triu(A[:n, :n])
    return HouseholderFactor(Y, tau), R


def form_t(Y, tau, counter: FlopCounter | None = None) -> np.ndarray:
    """Upper-triangular T with I - Y T Y^T = H_0 ... H_{n-1}."""
    Y = np.asarray(Y)
    n = Y.shape[1]
    T = np.zeros((n, n))
    for j in range(n):
        T[j, j] = tau[j]
        if j and tau[j] != 0.0:
            z = Y[j:, :j].T @ Y[j:, j]
            z = T[:j, :j] @ z
            T[:j, j] = -tau[j] * z
            if counter is not None:
                L = Y.shape[0] - j
                counter.add_gemm(j, L)
                counter.add_gemm(j, j)
                counter.add(j)
    return T


def factor_t(factor: HouseholderFactor,
             counter: FlopCounter | None = None) -> np.ndarray:
    """T for any factor shape; cached on the factor when already present."""
    if factor.T is not None:
        return factor.T
    return form_t(factor.full_y(), factor.tau, counter)


def _apply_yt(C, Y, T, counter, transpose: bool) -> None:
    """C := (I - Y T Y^T)^(T?) C in place, via the aggregated representation."""
    W = Y.T @ C
    W = (T.T if transpose else T) @ W
    C -= Y @ W
    if counter is not None:
        m, k = C.shape
        n = Y.shape[1]
        counter.add_gemm(n, m, k)
        counter.add_gemm(n, n, k)
        counter.add_gemm(m, n, k)
        counter.add(m * k)


def qr_blocked(A, nb: int, counter: FlopCounter | None = None):
    """Blocked QR: panels of width nb, trailing update through each panel's T."""
    A = as_matrix(A).copy()
    m, n = A.shape
    if m < n:
        raise DimensionError(f"need m >= n, got {m} x {n}")
    if not 1 <= nb <= n:
        raise DimensionError(f"nb must be in [1, {n}], got {nb}")
    if nb == 1:
        return qr_unblocked(A, counter)
    Y = np.zeros((m, n))
    tau = np.zeros(n)
    for j0 in range(0, n, nb):
        j1 = min(j0 + nb, n)
        pf, pR = qr_unblocked(A[j0:, j0:j1], counter)
        Y[j0:, j0:j1] = pf.Y
        tau[j0:j1] = pf.tau
        A[j0:, j0:j1] = np.vstack([pR, np.zeros((m - j0 - (j1 - j0), j1 - j0))])
        if j1 < n:
            Tp = form_t(pf.Y, pf.tau, counter)
            _apply_yt(A[j0:, j1:], pf.Y, Tp, counter, transpose=True)
    R = np.triu(A[:n, :n])
    return HouseholderFactor(Y, tau), R


def qr_recursive(A, min_width: int = 4, counter: FlopCounter | None = None):
    """Recursive QR (halving column splits), merging T factors on the way up."""
    A = as_matrix(A).copy()
    m, n = A.shape
    if m < n:
        raise DimensionError(f"need m >= n, got {m} x {n}")
    if min_width < 1:
        raise DimensionError("min_width must be >= 1")

    def rec(block: np.ndarray):
        bn = block.shape[1]
        if bn <= min_width:
            f, r = qr_unblocked(block, counter)
            block[:] = np.vstack([r, np.zeros((block.shape[0] - bn, bn))])
            return f.Y, f.tau, form_t(f.Y, f.tau, counter)
        n1 = bn // 2
        Y1, tau1, T1 = rec(block[:, :n1])
        _apply_yt(block[:, n1:], Y1, T1, counter, transpose=True)
        Y2s, tau2, T2 = rec(block[n1:, n1:])
        bm = block.shape[0]
        Y = np.zeros((bm, bn))
        Y[:, :n1] = Y1
        Y[n1:, n1:] = Y2s
        T = np.zeros((bn, bn))
        T[:n1, :n1] = T1
        T[n1:, n1:] = T2
        cross = Y1[n1:, :].T @ Y2s
        T[:n1, n1:] = -T1 @ (cross @ T2)
        if counter is not None:
            counter.add_gemm(n1, bm - n1, bn - n1)
            counter.add_gemm(bn - n1, bn - n1, n1)
            counter.add_gemm(n1, n1, bn - n1)
            counter.add(n1 * (bn - n1))
        return Y, np.concatenate([tau1, tau2]), T

    Y, tau, T = rec(A)
    R = np.triu(A[:n, :n])
    return HouseholderFactor(Y, tau, T=T), R


def _check_upper_triangular(R, name="input"):
    R = as_matrix(R, name)
    if R.shape[0] != R.shape[1]:
        raise DimensionError(f"{name} must be square, got {R.shape}")
    if np.any(np.tril(R, -1) != 0.0):
        raise DimensionError(f"{name} is not upper triangular")
    return R


def qr_stacked_triangles(Rs, counter: FlopCounter | None = None):
    """QR of q stacked n x n upper triangles, touching only the sparsity profile.

    For q = 2 this costs (2/3) n^3 + O(n^2) flops instead of the dense
    (10/3) n^3.
    """
    if len(Rs) < 2:
        raise DimensionError("need at least two stacked triangles")
    q = len(Rs)
    Rs = [_check_upper_triangular(R, f"triangle {t}") for t, R in enumerate(Rs)]
    n = Rs[0].shape[0]
    for t, R in enumerate(Rs):
        if R.shape != (n, n):
            raise DimensionError(f"triangle {t} has shape {R.shape}, expected {(n, n)}")
    B = np.vstack(Rs)
    Y = np.zeros((q * n, n))
    tau = np.zeros(n)
    for j in range(n):
        parts = [np.array([j])]
        parts += [np.arange(t * n, t * n + j + 1) for t in range(1, q)]
        idx = np.concatenate(parts)
        v, tj, beta = house_gen(B[idx, j], counter)
        Y[idx, j] = v
        tau[j] = tj
        B[j, j] = beta
        B[idx[1:], j] = 0.0
        if tj != 0.0 and j + 1 < n:
            sub = B[np.ix_(idx, np.arange(j + 1, n))]
            _update_columns(sub, v, tj, counter)
            B[np.ix_(idx, np.arange(j + 1, n))] = sub
    R = np.triu(B[:n, :n])
    return HouseholderFactor(Y, tau, shape_tag=STACKED, q=q), R


def qr_triangle_on_rect(Rtri, B, counter: FlopCounter | None = None):
    """QR of [R; B] with R n x n upper triangular and B an r x n rectangle.

    The reflectors have an implicit identity top; only the r x n dense
    part is stored (the sequential-chain combine step).
    """
    Rtri = _check_upper_triangular(Rtri, "triangle")
    B = as_matrix(B, "rectangle")
    n = Rtri.shape[0]
    r = B.shape[0]
    if B.shape[1] != n:
        raise DimensionError(f"rectangle has {B.shape[1]} columns, triangle has {n}")
    Rw = Rtri.copy()
    Bw = B.copy()
    Y = np.zeros((r, n))
    tau = np.zeros(n)
    for j in range(n):
        x = np.empty(r + 1)
        x[0] = Rw[j, j]
        x[1:] = Bw[:, j]
        v, tj, beta = house_gen(x, counter)
        Y[:, j] = v[1:]
        tau[j] = tj
        Rw[j, j] = beta
        Bw[:, j] = 0.0
        if tj != 0.0 and j + 1 < n:
            top = Rw[j, j + 1:]
            sub = Bw[:, j + 1:]
            w = top + v[1:] @ sub
            w *= tj
            top -= w
            sub -= np.outer(v[1:], w)
            if counter is not None:
                c = n - 1 - j
                counter.add(2 * r * c + c + c + 2 * r * c)
    return HouseholderFactor(Y, tau, shape_tag=TRI_ON_RECT, rows_rect=r), Rw


def apply_qt_structured(factor: HouseholderFactor, T, C0, C1,
                        counter: FlopCounter | None = None):
    """Q^T [C0; C1] via the inner-product form: D = C0 + Y1^T C1,
    C0_hat = C0 - T^T D, C1_hat = C1 - Y1 T^T D.

    Works for the two structured shapes whose reflectors have an identity
    top: stacked-triangles with q = 2 (Y1 is the lower triangle fill) and
    triangle-on-rect (Y1 is the stored rectangle).
    """
    if factor.shape_tag == STACKED:
        if factor.q != 2:
            raise DimensionError("inner-product update needs exactly two stacked blocks")
        Y1 = factor.Y[factor.n:, :]
    elif factor.shape_tag == TRI_ON_RECT:
        Y1 = factor.Y
    else:
        raise DimensionError("factor has no identity-top structure")
    C0 = as_matrix(C0, "C0")
    C1 = as_matrix(C1, "C1")
    n = factor.n
    if C0.shape[0] != n:
        raise DimensionError(f"C0 must have {n} rows, got {C0.shape[0]}")
    if C1.shape[0] != Y1.shape[0]:
        raise DimensionError(f"C1 must have {Y1.shape[0]} rows, got {C1.shape[0]}")
    if C0.shape[1] != C1.shape[1]:
        raise DimensionError("C0 and C1 must have the same column count")
    D = C0 + Y1.T @ C1
    W = T.T @ D
    C0_hat = C0 - W
    C1_hat = C1 - Y1 @ W
    if counter is not None:
        k = C0.shape[1]
        r = Y1.shape[0]
        counter.add_gemm(n, r, k)
        counter.add(n * k)
        counter.add_gemm(n, n, k)
        counter.add(n * k)
        counter.add_gemm(r, n, k)
        counter.add(r * k)
    return C0_hat, C1_hat


def apply_q(factor: HouseholderFactor, C, transpose: bool = False,
            counter: FlopCounter | None = None) -> np.ndarray:
    """Q C (or Q^T C) by streaming the reflectors; C has factor.m rows."""
    C = as_matrix(C).copy()
    if C.shape[0] != factor.m:
        raise DimensionError(f"C has {C.shape[0]} rows, factor acts on {factor.m}")
    order = range(factor.n) if transpose else range(factor.n - 1, -1, -1)
    for j in order:
        if factor.tau[j] == 0.0:
            continue
        idx, v = factor.reflector(j)
        sub = C[idx]
        _update_columns(sub, v, factor.tau[j], counter)
        C[idx] = sub
    return C


def apply_qt(factor: HouseholderFactor, C,
             counter: FlopCounter | None = None) -> np.ndarray:
    return apply_q(factor, C, transpose=True, counter=counter)


def explicit_q(factor: HouseholderFactor, thin: bool = True) -> np.ndarray:
    m = factor.m
    k = factor.n if thin else m
    E = np.zeros((m, k))
    E[:k, :k] = np.eye(k)
    return apply_q(factor, E)
