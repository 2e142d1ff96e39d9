"""Dense (and, where unavoidable, sparse) complex linear algebra helpers.

Every other module goes through these functions for partial traces,
partial transposes, norms and entropies.  Matrices are plain ``numpy``
arrays; bipartite operators use the standard Kronecker ordering where the
first factor is the slow index.

Large sparse operators (the witness checks on the completely depolarizing
family reach a few thousand dimensions) are handled by splitting a
Hermitian matrix into the connected components of its sparsity graph.
The split is exact: eigenvalues of a block diagonal matrix are the union
of the block eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

LOG_FLOOR = 1e-300
HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-9


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


@dataclass(frozen=True)
class BlockStructure:
    """Direct-sum decomposition of a space into consecutive blocks.

    Parameters
    ----------
    sizes : tuple of int
        Positive block dimensions in order.
    """

    sizes: tuple
    offsets: tuple = field(init=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("block sizes must be positive and nonempty")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist()))

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    @property
    def count(self) -> int:
        return len(self.sizes)

    def slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i + 1])

    def block_of(self, index: int) -> int:
        """Block label of a global basis index."""
        return int(np.searchsorted(self.offsets, index, side="right") - 1)

    def embed(self, i: int, m: np.ndarray) -> np.ndarray:
        """Place a block-i operator into the full space."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[self.slice(i), self.slice(i)] = m
        return out


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b``."""
    return np.kron(np.asarray(a), np.asarray(b))


def direct_sum(blocks) -> np.ndarray:
    """Block-diagonal embedding of (possibly rectangular) blocks."""
    blocks = [np.atleast_2d(np.asarray(b)) for b in blocks]
    if not blocks or any(b.size == 0 for b in blocks):
        raise ValueError("direct_sum needs nonempty blocks")
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    dtype = np.result_type(*blocks, np.complex128)
    out = np.zeros((rows, cols), dtype=dtype)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def _check_bipartite(m, dims):
    da, db = int(dims[0]), int(dims[1])
    if m.shape != (da * db, da * db):
        raise ValueError(f"expected a {da * db}x{da * db} matrix, got {m.shape}")
    return da, db


def partial_trace(m, dims, keep="A") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    m : array_like
        Square matrix on ``A ⊗ B``.
    dims : tuple of int
        ``(dA, dB)``.
    keep : {"A", "B"}
        Factor that survives.
    """
    m = np.asarray(m)
    da, db = _check_bipartite(m, dims)
    t = m.reshape(da, db, da, db)
    if keep in ("A", 0):
        return np.einsum("ibjb->ij", t)
    if keep in ("B", 1):
        return np.einsum("aiaj->ij", t)
    raise ValueError("keep must be 'A' or 'B'")


def partial_transpose(m, dims) -> np.ndarray:
    """Transpose the second tensor factor of a bipartite operator."""
    m = np.asarray(m)
    da, db = _check_bipartite(m, dims)
    return m.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(da * db, da * db)


def matrix_abs(m) -> np.ndarray:
    """Matrix absolute value ``sqrt(m† m)`` (cols x cols) via a thin SVD."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    _, s, vh = np.linalg.svd(m, full_matrices=False)
    return (vh.conj().T * s) @ vh


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def spectral_norm(m) -> float:
    """Largest singular value."""
    if sp.issparse(m):
        return float(sparse_spectral_norm(m))
    m = np.atleast_2d(np.asarray(m))
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    if sp.issparse(m):
        diff = abs(m - m.conj().T)
        scale = abs(m).max() if m.nnz else 0.0
        return (diff.max() if diff.nnz else 0.0) <= tol * (1.0 + scale)
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m - m.conj().T), initial=0.0)) <= tol * (1.0 + float(np.max(np.abs(m), initial=0.0)))


def _entropy_from_eigs(w) -> float:
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho) -> float:
    """Entropy ``-Tr ρ log2 ρ`` in bits.

    Raises
    ------
    InvalidStateError
        If ``rho`` is not Hermitian, not unit trace, or has an eigenvalue
        below ``-1e-9``.
    """
    rho = np.atleast_2d(np.asarray(rho))
    if not is_hermitian(rho, 1e-9):
        raise InvalidStateError("state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > STATE_TOL:
        raise InvalidStateError(f"state trace {np.trace(rho).real:.3g} differs from 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -STATE_TOL:
        raise InvalidStateError(f"negative eigenvalue {w[0]:.3g}")
    return _entropy_from_eigs(np.clip(w, 0.0, None))


def entropy_unchecked(rho) -> float:
    """Entropy without validation; for inner loops on states built by construction."""
    w = np.linalg.eigvalsh(rho)
    return _entropy_from_eigs(np.clip(w, 0.0, None))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def shannon_entropy(probs) -> float:
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def hermitian_components(m) -> list:
    """Index sets of the connected components of a Hermitian sparsity pattern."""
    a = sp.csr_matrix(m)
    pattern = (abs(a) + abs(a).T).tocsr()
    pattern.eliminate_zeros()
    n, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=n))[:-1]
    return np.split(order, splits)


def _component_eigvals(m) -> np.ndarray:
    a = sp.csr_matrix(m)
    vals = []
    for idx in hermitian_components(a):
        block = a[idx][:, idx].toarray()
        if not np.any(block.imag):
            block = block.real
        vals.append(np.linalg.eigvalsh(block))
    return np.concatenate(vals) if vals else np.zeros(0)


def min_eigenvalue(m) -> float:
    """Smallest eigenvalue of a Hermitian matrix (dense or scipy sparse).

    Raises
    ------
    ValueError
        If ``m`` is not Hermitian.
    """
    if not is_hermitian(m, 1e-10):
        raise ValueError("min_eigenvalue needs a Hermitian matrix")
    if sp.issparse(m):
        return float(np.min(_component_eigvals(m)))
    m = np.atleast_2d(np.asarray(m))
    return float(np.linalg.eigvalsh(m)[0])


def max_eigenvalue(m) -> float:
    """Largest eigenvalue of a Hermitian matrix (dense or scipy sparse)."""
    if sp.issparse(m):
        return float(np.max(_component_eigvals(m)))
    return float(np.linalg.eigvalsh(np.atleast_2d(np.asarray(m)))[-1])


def sparse_spectral_norm(m) -> float:
    a = sp.csr_matrix(m)
    if a.nnz == 0:
        return 0.0
    g = (a.conj().T @ a).tocsr()
    return float(np.sqrt(max(np.max(_component_eigvals(g)), 0.0)))


def is_feasibly_psd(m, tol: float = 1e-9) -> bool:
    """PSD up to ``tol * (1 + spectral_norm)``."""
    return min_eigenvalue(m) >= -tol * (1.0 + spectral_norm(m))


def sparse_matrix_abs(m) -> sp.csr_matrix:
    """``|m|`` for a sparse matrix, exact per column component.

    Columns are grouped by the components of ``m† m``; each group is
    handled by a dense thin SVD of the columns involved, so no
    eigenvalue square roots are taken.
    """
    a = sp.csr_matrix(m, dtype=complex)
    n = a.shape[1]
    g = (a.conj().T @ a).tocsr()
    g.eliminate_zeros()
    rows, cols, vals = [], [], []
    csc = a.tocsc()
    for idx in hermitian_components(g):
        sub = csc[:, idx]
        live = np.unique(sub.indices)
        if live.size == 0:
            continue
        block = matrix_abs(sub[live].toarray())
        r, c = np.nonzero(block)
        rows.append(idx[r])
        cols.append(idx[c])
        vals.append(block[r, c])
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def sparse_partial_trace_b(m, da: int, db: int) -> sp.csr_matrix:
    """``Tr_B`` of a sparse operator on ``A ⊗ B``."""
    c = sp.coo_matrix(m)
    keep = (c.row % db) == (c.col % db)
    return sp.csr_matrix((c.data[keep], (c.row[keep] // db, c.col[keep] // db)), shape=(da, da))


def sparse_partial_transpose(m, da: int, db: int) -> sp.csr_matrix:
    """Transpose of the ``B`` factor of a sparse operator on ``A ⊗ B``."""
    c = sp.coo_matrix(m)
    a1, b1 = np.divmod(c.row, db)
    a2, b2 = np.divmod(c.col, db)
    return sp.csr_matrix((c.data, (a1 * db + b2, a2 * db + b1)), shape=c.shape)
