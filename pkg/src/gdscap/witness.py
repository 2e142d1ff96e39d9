"""Witness-based upper bounds: the transposition bound and the β bound.

Nothing here solves a semidefinite program.  Upper bounds are certified by
explicit feasible points whose constraints are verified through
eigenvalues:

* transposition witness ``(y, Y)``: ``Y ± C^{T_B} ⪰ 0`` and
  ``Tr_B Y ⪯ y I`` give ``Q <= log2 y``;
* classical witness ``(Y, S)``: ``Y ± C^{T_B} ⪰ 0`` and
  ``I ⊗ S ± Y^{T_B} ⪰ 0`` give ``C <= log2 Tr S``.

Operators on ``A ⊗ B`` are kept as scipy sparse matrices in the global
product basis ``α·d_B + β`` so that direct sums of thousands of dimensions
stay cheap; eigenvalue checks split them into connected components.

The pure-state oracle gives lower estimates of ``||T∘N||_◇`` for
sandwich checks against the witnesses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .channel import KrausChannel
from .gds import GdsChannel, off_diagonal_choi, offdiag_partial_transpose
from .linalg import (
    is_hermitian,
    matrix_abs,
    max_eigenvalue,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    sparse_matrix_abs,
    sparse_partial_trace_b,
    sparse_partial_transpose,
    spectral_norm,
    trace_norm,
)

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class TranspositionWitness:
    y: float
    Y: object
    line: str = "theorem"
    details: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ClassicalWitness:
    Y: object
    S: np.ndarray


@dataclass(frozen=True)
class BoundCertificate:
    """A bound value with the slacks that prove it.

    ``residuals`` are minimum eigenvalues of the constraint matrices; the
    bound is valid when every one is ``>= -1e-9 (1 + scale)``.
    """

    kind: str
    value: float
    feasible: bool
    residuals: tuple
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        summary = {"y": self.payload["y"]} if "y" in self.payload else {"trace_S": self.payload.get("trace_S")}
        if "line" in self.payload:
            summary["line"] = self.payload["line"]
        return {
            "kind": self.kind,
            "value_bits": self.value,
            "feasible": self.feasible,
            "residuals": list(self.residuals),
            "witness_summary": summary,
        }


def _kraus(ch) -> KrausChannel:
    return ch.assembled if isinstance(ch, GdsChannel) else ch


def choi_sparse(ch) -> sp.csr_matrix:
    """Unnormalized Choi matrix as a sparse matrix."""
    k = _kraus(ch)
    v = sp.csr_matrix(np.transpose(k.stack, (0, 2, 1)).reshape(k.dim_env, -1))
    return (v.T @ v.conj()).tocsr()


def _sparse(m) -> sp.csr_matrix:
    return m.tocsr() if sp.issparse(m) else sp.csr_matrix(np.asarray(m, dtype=complex))


def _slack(m, tol) -> tuple:
    lam = min_eigenvalue(m)
    scale = 1.0 + spectral_norm(m)
    return lam, lam >= -tol * scale


def check_transposition_witness(ch, w: TranspositionWitness, tol: float = FEAS_TOL) -> BoundCertificate:
    """Verify ``Y ± C^{T_B} ⪰ 0`` and ``Tr_B Y ⪯ y I``; certify ``Q <= log2 y``."""
    k = _kraus(ch)
    da, db = k.dim_in, k.dim_out
    Y = _sparse(w.Y)
    if Y.shape != (da * db, da * db):
        raise ValueError(f"witness has shape {Y.shape}, channel needs {(da * db, da * db)}")
    ct = sparse_partial_transpose(choi_sparse(k), da, db)
    r_plus, ok_plus = _slack(Y + ct, tol)
    r_minus, ok_minus = _slack(Y - ct, tol)
    cap = w.y * sp.identity(da, format="csr") - sparse_partial_trace_b(Y, da, db)
    r_cap, ok_cap = _slack(cap, tol)
    feasible = ok_plus and ok_minus and ok_cap and w.y > 0
    value = math.log2(w.y) if w.y > 0 else float("nan")
    return BoundCertificate("Q_transposition", value, feasible, (r_plus, r_minus, r_cap),
                            {"y": w.y, "line": w.line})


def default_transposition_witness(ch) -> TranspositionWitness:
    """The always-feasible choice ``Y = |C^{T_B}|``, ``y = ||Tr_B Y||_∞``.

    It is exact for the completely depolarizing channel (``y = 1``) and the
    identity (``y = d``).
    """
    k = _kraus(ch)
    from .channel import choi

    ct = partial_transpose(choi(k), (k.dim_in, k.dim_out))
    Y = matrix_abs(ct)
    Y = (Y + Y.conj().T) / 2
    y = max_eigenvalue(partial_trace(Y, (k.dim_in, k.dim_out), keep="A"))
    return TranspositionWitness(float(y), Y, line="default")


def sector_indices(g: GdsChannel, a: int, b: int) -> np.ndarray:
    """Global indices of the sector ``A_a ⊗ B_b`` inside ``A ⊗ B``."""
    db = g.dim_out
    ra = np.arange(g.in_blocks.offsets[a], g.in_blocks.offsets[a + 1])
    rb = np.arange(g.out_blocks.offsets[b], g.out_blocks.offsets[b + 1])
    return (ra[:, None] * db + rb[None, :]).ravel()


def _embed(g: GdsChannel, m, rows: tuple, cols: tuple) -> sp.csr_matrix:
    """Place a local operator from sector ``cols`` to sector ``rows`` into ``A ⊗ B``."""
    n = g.dim_in * g.dim_out
    c = sp.coo_matrix(m)
    ri = sector_indices(g, *rows)
    ci = sector_indices(g, *cols)
    return sp.csr_matrix((c.data, (ri[c.row], ci[c.col])), shape=(n, n))


@dataclass(frozen=True)
class PairTerm:
    """Absolute values of one coherent block and their partial-trace norms."""

    i: int
    j: int
    abs_x: sp.csr_matrix  # |X_ij| on A_j ⊗ B_i
    abs_xh: sp.csr_matrix  # |X_ij†| on A_i ⊗ B_j
    n_ij: float
    n_ji: float
    trace_norm: float


def pair_term(g: GdsChannel, i: int, j: int) -> PairTerm:
    m = off_diagonal_choi(g, i, j)
    x = sp.csr_matrix(offdiag_partial_transpose(m))
    (ai, bi), (aj, bj) = m.dims_i, m.dims_j
    ax = sparse_matrix_abs(x)
    axh = sparse_matrix_abs(x.conj().T)
    n_ij = max_eigenvalue(sparse_partial_trace_b(ax, aj, bi)) if ax.nnz else 0.0
    n_ji = max_eigenvalue(sparse_partial_trace_b(axh, ai, bj)) if axh.nnz else 0.0
    tn = float(np.real(ax.diagonal().sum()))
    return PairTerm(i, j, ax, axh, float(n_ij), float(n_ji), tn)


def build_gds_transposition_witness(g: GdsChannel, sub_witnesses=None, aggregate: str = "per_row") -> TranspositionWitness:
    """Transposition witness of a GDS channel from witnesses of its blocks.

    ``Y = ⊕ Y_i + Σ_{i<j} (b/a)|X_ij| + (a/b)|X_ij†|`` with
    ``X_ij = C_{M_ij}^{T_B}``, ``a = sqrt(n_ij)``, ``b = sqrt(n_ji)`` and
    ``n_ij = ||Tr_B |X_ij| ||_∞``.  Each coherent pair adds
    ``sqrt(n_ij n_ji)`` to the partial-trace cap of both rows it touches.

    ``aggregate="per_row"`` gives ``y = max_i [y_i + Σ_{j≠i} sqrt(n_ij n_ji)]``;
    ``"uniform"`` gives the looser ``max_i y_i + n max_{i≠j} sqrt(n_ij n_ji)``,
    which for the completely depolarizing family is ``1 + n/sqrt(p)``.
    Both are feasible for the same ``Y``.  Pairs with one vanishing norm
    fall back to the trace-norm form (``a = b = 1``, cap ``||X_ij||_1``).
    """
    if aggregate not in ("per_row", "uniform"):
        raise ValueError("aggregate must be 'per_row' or 'uniform'")
    if sub_witnesses is None:
        sub_witnesses = [default_transposition_witness(s) for s in g.subchannels]
    if len(sub_witnesses) != g.n_blocks:
        raise ValueError("need one witness per block")
    if g.n_blocks == 1:
        return sub_witnesses[0]
    n_total = g.dim_in * g.dim_out
    Y = sp.csr_matrix((n_total, n_total), dtype=complex)
    for i, w in enumerate(sub_witnesses):
        Y = Y + _embed(g, _sparse(w.Y), (i, i), (i, i))
    extra = np.zeros(g.n_blocks)
    pair_max = 0.0
    line = "theorem"
    norms = {}
    for i in range(g.n_blocks):
        for j in range(i + 1, g.n_blocks):
            t = pair_term(g, i, j)
            norms[(i, j)] = (t.n_ij, t.n_ji)
            if t.n_ij == 0 and t.n_ji == 0:
                continue
            if t.n_ij == 0 or t.n_ji == 0:
                ca = cb = 1.0
                cost = t.trace_norm
                line = "trace-norm"
            else:
                a, b = math.sqrt(t.n_ij), math.sqrt(t.n_ji)
                ca, cb = b / a, a / b
                cost = math.sqrt(t.n_ij * t.n_ji)
            Y = Y + ca * _embed(g, t.abs_x, (j, i), (j, i)) + cb * _embed(g, t.abs_xh, (i, j), (i, j))
            extra[i] += cost
            extra[j] += cost
            pair_max = max(pair_max, cost)
    ys = np.array([w.y for w in sub_witnesses])
    if aggregate == "per_row":
        y = float(np.max(ys + extra))
    else:
        y = float(np.max(ys) + (g.n_blocks - 1) * pair_max)
    Y = ((Y + Y.conj().T) / 2).tocsr()
    return TranspositionWitness(y, Y, line=line, details={"pair_norms": norms, "row_extra": extra.tolist()})


def abs_splitting_check(m, a: float, b: float) -> float:
    """Slack of ``(b/a)|M| + (a/b)|M†| ∓ (M + M†) ⪰ 0``, minimized over both signs.

    A rectangular ``M`` is embedded as the off-diagonal block of a square
    matrix first.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.shape[0] != m.shape[1]:
        r, c = m.shape
        big = np.zeros((r + c, r + c), dtype=complex)
        big[:r, r:] = m
        m = big
    base = (b / a) * matrix_abs(m) + (a / b) * matrix_abs(m.conj().T)
    base = (base + base.conj().T) / 2
    h = m + m.conj().T
    return min(min_eigenvalue(base - h), min_eigenvalue(base + h))


def check_classical_witness(ch, w: ClassicalWitness, tol: float = FEAS_TOL) -> BoundCertificate:
    """Verify ``Y ± C^{T_B} ⪰ 0`` and ``I ⊗ S ± Y^{T_B} ⪰ 0``; certify ``C <= log2 Tr S``."""
    k = _kraus(ch)
    da, db = k.dim_in, k.dim_out
    Y = _sparse(w.Y)
    S = np.asarray(w.S, dtype=complex)
    if Y.shape != (da * db, da * db) or S.shape != (db, db):
        raise ValueError("witness dimensions do not match the channel")
    ct = sparse_partial_transpose(choi_sparse(k), da, db)
    yt = sparse_partial_transpose(Y, da, db)
    ids = sp.kron(sp.identity(da, format="csr"), sp.csr_matrix(S), format="csr")
    slacks = [_slack(Y + ct, tol), _slack(Y - ct, tol), _slack(ids + yt, tol), _slack(ids - yt, tol)]
    tr = float(np.trace(S).real)
    feasible = all(ok for _, ok in slacks) and tr > 0
    return BoundCertificate("C_beta", math.log2(tr) if tr > 0 else float("nan"), feasible,
                            tuple(r for r, _ in slacks), {"trace_S": tr})


def build_cdc_classical_witness(g: GdsChannel) -> ClassicalWitness:
    """``Y = Σ I⊗I/d_{B_i} + Σ_{i<j} (|X_ij| + |X_ij†|)`` and ``S = ⊕ I/d_{B_i}``."""
    from .cdc import _params_of

    _params_of(g)
    n_total = g.dim_in * g.dim_out
    Y = sp.csr_matrix((n_total, n_total), dtype=complex)
    for i, s in enumerate(g.subchannels):
        Y = Y + _embed(g, sp.identity(s.dim_in * s.dim_out, format="csr") / s.dim_out, (i, i), (i, i))
    for i in range(g.n_blocks):
        for j in range(i + 1, g.n_blocks):
            t = pair_term(g, i, j)
            Y = Y + _embed(g, t.abs_x, (j, i), (j, i)) + _embed(g, t.abs_xh, (i, j), (i, j))
    S = np.diag(np.concatenate([np.full(b, 1.0 / b) for b in g.out_blocks.sizes]))
    return ClassicalWitness(((Y + Y.conj().T) / 2).tocsr(), S)


# ------------------------------------------------------------------ oracle


def transpose_compose_choi(ch) -> np.ndarray:
    """Choi matrix of ``T ∘ ch``."""
    from .channel import choi

    k = _kraus(ch)
    return partial_transpose(choi(k), (k.dim_in, k.dim_out))


def diamond_norm_oracle(map_choi, dims, restarts: int = 64, seed: int = 0) -> float:
    """Lower estimate of the diamond norm of a Hermiticity-preserving map.

    For such maps the norm is attained on pure inputs ``|ψ> = vec(G)``, so
    it suffices to maximize ``||(K ⊗ I) J (K ⊗ I)†||_1 / ||K||_F^2`` over
    ``K = G^T``.  Restart 0 starts from the maximally entangled input, the
    others from ``default_rng(seed + r)``.
    """
    J = np.asarray(map_choi, dtype=complex)
    da, db = int(dims[0]), int(dims[1])
    if J.shape != (da * db, da * db):
        raise ValueError("Choi matrix does not match dims")
    if not is_hermitian(J, 1e-10):
        raise ValueError("the map is not Hermiticity preserving")
    eye_b = np.eye(db)

    def f(x):
        K = (x[: da * da] + 1j * x[da * da:]).reshape(da, da)
        nrm = np.sum(np.abs(K) ** 2)
        KB = np.kron(K, eye_b)
        H = KB @ J @ KB.conj().T
        H = (H + H.conj().T) / 2
        w, v = np.linalg.eigh(H)
        tn = np.sum(np.abs(w))
        sgn = (v * np.sign(w)) @ v.conj().T
        Q = J @ KB.conj().T @ sgn
        P = np.einsum("sbrb->sr", Q.reshape(da, db, da, db))
        dK = 2 * P.T
        g_re = dK.real / nrm - tn * 2 * K.real / nrm ** 2
        g_im = -dK.imag / nrm - tn * 2 * K.imag / nrm ** 2
        return -tn / nrm, -np.concatenate([g_re.ravel(), g_im.ravel()])

    best = 0.0
    for r in range(restarts):
        if r == 0:
            x0 = np.concatenate([np.eye(da).ravel() / math.sqrt(da), np.zeros(da * da)])
        else:
            x0 = np.random.default_rng(seed + r).normal(size=2 * da * da)
        res = minimize(f, x0, jac=True, method="L-BFGS-B", options={"maxiter": 500, "gtol": 1e-12})
        best = max(best, -float(res.fun))
    return best
