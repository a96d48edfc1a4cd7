"""Seeded, chunked sampling on spheres and Grassmannians.

Every draw is a pure function of ``(seed, stream, chunk index)``: sample ``i``
lives in chunk ``i // CHUNK`` and each chunk owns a Philox generator keyed by
those three integers. Chunks may therefore be produced on any thread, in any
order, and the concatenated output is always the same. Gaussian variates come
from numpy's ``Generator.standard_normal`` (ziggurat) and are normalized to
land on the sphere.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

CHUNK = 4096
_MASK64 = (1 << 64) - 1
_threads = 1


def set_threads(count: int) -> None:
    """Cap the worker count for chunked evaluation. Never changes results."""
    global _threads
    _threads = max(1, int(count))


def get_threads() -> int:
    return _threads


@dataclass(frozen=True)
class SeedSpec:
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def derive(self, label) -> "SeedSpec":
        """Sub-stream for a named operation or an integer index."""
        h = hashlib.blake2b(f"{self.stream}/{label}".encode(), digest_size=8)
        return SeedSpec(self.seed, int.from_bytes(h.digest(), "little"))

    def generator(self, chunk: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, self.stream, int(chunk)])
        return np.random.Generator(np.random.Philox(ss))

    def to_dict(self):
        return {"seed": self.seed, "stream": self.stream}


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    if seed is None:
        return SeedSpec()
    return SeedSpec(int(seed))


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal basis of an m-dimensional subspace, stored as columns."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] > b.shape[0] or b.shape[1] < 1:
            raise DomainError(f"frame basis must be n x m with 1 <= m <= n, got {b.shape}")
        if orthonormality_residual(b) > 1e-10:
            raise DomainError("frame basis is not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[1]

    def to_list(self):
        return self.basis.T.tolist()


def orthonormality_residual(basis) -> float:
    b = np.asarray(basis, dtype=float)
    return float(np.max(np.abs(b.T @ b - np.eye(b.shape[1]))))


def _sphere_chunk(n, size, seed, chunk):
    g = seed.generator(chunk).standard_normal((size, n))
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    # a zero Gaussian vector has probability zero; guard anyway
    norms[norms == 0] = 1.0
    return g / norms[:, None]


def _chunks(count):
    return [(c, min(CHUNK, count - c * CHUNK)) for c in range((count + CHUNK - 1) // CHUNK)]


def sample_sphere(n: int, count: int, seed) -> np.ndarray:
    """``count`` i.i.d. uniform points of S^{n-1}, shape (count, n)."""
    if n < 1:
        raise DomainError(f"sphere dimension must be >= 1, got n={n}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    seed = as_seed(seed)
    return np.concatenate([_sphere_chunk(n, size, seed, c) for c, size in _chunks(count)])


def sphere_map(fn: Callable[[np.ndarray], np.ndarray], n: int, count: int, seed,
               basis=None) -> np.ndarray:
    """Evaluate ``fn`` on uniform sphere points chunk by chunk.

    With ``basis`` (n x m), points are drawn on S^{m-1} and mapped into the
    subspace it spans. Only the per-sample outputs are kept, so memory is
    O(count) rather than O(count * n). Output order is index order.
    """
    seed = as_seed(seed)
    m = n if basis is None else basis.shape[1]
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")

    def work(item):
        c, size = item
        pts = _sphere_chunk(m, size, seed, c)
        if basis is not None:
            pts = pts @ basis.T
        return np.asarray(fn(pts), dtype=float)

    items = _chunks(count)
    if _threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(_threads) as pool:
            parts = list(pool.map(work, items))
    else:
        parts = [work(it) for it in items]
    return np.concatenate(parts)


def tree_sum(values) -> float:
    """Sum in fixed blocks of CHUNK, then pairwise over block sums."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    partial = [float(np.sum(v[i:i + CHUNK])) for i in range(0, v.size, CHUNK)]
    while len(partial) > 1:
        nxt = [partial[i] + partial[i + 1] for i in range(0, len(partial) - 1, 2)]
        if len(partial) % 2:
            nxt.append(partial[-1])
        partial = nxt
    return partial[0]


def _positive_qr(a):
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_grassmann(n: int, m: int, seed) -> SubspaceFrame:
    """Haar-random m-dimensional subspace of R^n.

    QR of an n x m Gaussian matrix with the diagonal of R made positive, which
    pins the Haar representative independently of the LAPACK backend.
    """
    if not 1 <= m <= n:
        raise DomainError(f"need 1 <= m <= n, got n={n}, m={m}")
    g = as_seed(seed).generator(0).standard_normal((n, m))
    return SubspaceFrame(_positive_qr(g))


def random_orthogonal(n: int, seed) -> np.ndarray:
    return sample_grassmann(n, n, seed).basis.copy()


def sphere_in_subspace(frame: SubspaceFrame, count: int, seed) -> np.ndarray:
    """Uniform points of S^{n-1} ∩ H for the subspace H spanned by ``frame``."""
    return sample_sphere(frame.m, count, seed) @ frame.basis.T


def complement_frame(xi) -> SubspaceFrame:
    """Deterministic orthonormal basis of xi^perp via a Householder reflector."""
    xi = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(xi)
    if xi.ndim != 1 or xi.size < 2 or norm == 0:
        raise DomainError("complement_frame needs a nonzero vector in R^n, n >= 2")
    xi = xi / norm
    s = -1.0 if xi[0] >= 0 else 1.0
    v = xi.copy()
    v[0] -= s
    h = np.eye(xi.size) - 2.0 * np.outer(v, v) / (v @ v)
    # h is symmetric, orthogonal and maps e_1 to +-xi; the remaining columns span xi^perp
    basis = h[:, 1:]
    # one Gram-Schmidt polish keeps the residual well under 1e-10 for any xi
    return SubspaceFrame(_positive_qr(basis - np.outer(xi, xi @ basis)))
