"""Dense matrix utilities: validation, layouts, norms, seeded test matrices.

All matrices are 2-D float64 numpy arrays.  In memory they are plain
C-contiguous arrays; the on-disk MAT1 format (see ``caqr.matio``) is
column-major.  Random generation uses numpy's Philox counter-based
generator, so every seeded result is reproducible bit-for-bit across
platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Shape or size preconditions violated."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a float64 2-D array with finite entries."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def rng_for(seed: int) -> np.random.Generator:
    """Philox-based generator; the project-wide portable RNG."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class BlockRowLayout:
    """1-D block row partition: P blocks of m//P rows, last absorbs the rest."""

    m: int
    n: int
    P: int
    block_rows: tuple = field(default=())

    def __post_init__(self):
        if self.P < 1:
            raise DimensionError("P must be >= 1")
        base = self.m // self.P
        if base < self.n:
            raise DimensionError(
                f"block too short: floor({self.m}/{self.P}) = {base} < n = {self.n}"
            )
        rows = [base] * self.P
        rows[-1] += self.m - base * self.P
        object.__setattr__(self, "block_rows", tuple(rows))

    def row_offsets(self) -> list[int]:
        offs = [0]
        for r in self.block_rows:
            offs.append(offs[-1] + r)
        return offs


@dataclass(frozen=True)
class BlockCyclicLayout:
    """2-D block cyclic layout of b x b blocks over a Pr x Pc grid."""

    m: int
    n: int
    b: int
    Pr: int
    Pc: int

    def __post_init__(self):
        if self.Pr < 1 or self.Pc < 1 or self.b < 1:
            raise DimensionError("Pr, Pc and b must all be >= 1")
        if self.m % self.b or self.n % self.b:
            raise DimensionError(
                f"block size {self.b} must divide m={self.m} and n={self.n}"
            )

    @property
    def m_blocks(self) -> int:
        return self.m // self.b

    @property
    def n_blocks(self) -> int:
        return self.n // self.b

    def owner(self, i_blk: int, j_blk: int) -> tuple[int, int]:
        return (i_blk % self.Pr, j_blk % self.Pc)


def partition_block_rows(A: np.ndarray, P: int) -> list[np.ndarray]:
    """Split A into P row blocks (last absorbs the remainder rows).

    Concatenating the blocks in order reproduces A bitwise.
    """
    A = as_matrix(A)
    layout = BlockRowLayout(A.shape[0], A.shape[1], P)
    offs = layout.row_offsets()
    return [A[offs[i]:offs[i + 1]].copy() for i in range(P)]


def frobenius_norm(A) -> float:
    A = np.asarray(A, dtype=np.float64)
    return float(np.sqrt(np.sum(A * A)))


def two_norm_estimate(A, tol: float = 1e-6, max_iter: int = 5000) -> float:
    """2-norm via power iteration on A^T A, to relative tolerance ``tol``."""
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    v = rng_for(0x5EED).standard_normal(A.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            return 0.0
        v = w / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(lam))


@dataclass(frozen=True)
class CondSpec:
    """Recipe for a random test matrix with a prescribed 2-norm condition number."""

    m: int
    n: int
    kappa: float
    seed: int = 0
    profile: str = "geometric"  # or "linear"

    def __post_init__(self):
        if self.n > self.m:
            raise DimensionError(f"need m >= n, got m={self.m}, n={self.n}")
        if self.m < 1 or self.n < 1:
            raise DimensionError("dimensions must be positive")
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.profile not in ("geometric", "linear"):
            raise ValueError(f"unknown singular-value profile {self.profile!r}")


def singular_values(spec: CondSpec) -> np.ndarray:
    n, kappa = spec.n, spec.kappa
    if n == 1 or kappa == 1.0:
        return np.ones(n)
    t = np.arange(n) / (n - 1)
    if spec.profile == "geometric":
        return kappa ** (-t)
    return 1.0 - (1.0 - 1.0 / kappa) * t


def gen_cond_matrix(spec: CondSpec) -> np.ndarray:
    """Return U @ diag(sigma) @ V^T with sigma_1/sigma_n = kappa.

    U (m x n) and V (n x n) come from QR factorizations of seeded Gaussian
    matrices, so the result is deterministic for a fixed seed.
    """
    rng = rng_for(spec.seed)
    gu = rng.standard_normal((spec.m, spec.n))
    gv = rng.standard_normal((spec.n, spec.n))
    U, _ = np.linalg.qr(gu)
    V, _ = np.linalg.qr(gv)
    sigma = singular_values(spec)
    return as_matrix((U * sigma) @ V.T, "generated matrix")
