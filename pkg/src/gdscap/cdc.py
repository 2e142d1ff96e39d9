"""The completely depolarizing direct-sum family and its erasure companion.

Block ``i`` of the family takes ``A_i`` (dimension ``p^i``) to ``B_i``
(dimension ``p^(α-i)``) and forgets its input entirely.  All blocks share
the Kraus count ``d = p^α`` through

    E_k^(i) = |k mod d_{B_i}><floor(k / d_{B_i})| / sqrt(d_{B_i}),

and the coherences between blocks survive only partially.  That gives a
channel whose private and classical capacities equal ``log2(n+1)`` while
its quantum capacity sits between ``log2(n+1)/p^α`` and
``log2(1 + n/sqrt(p))``.
"""
from __future__ import annotations

import ast
import operator
import math
from dataclasses import dataclass

import numpy as np

from .channel import KrausChannel
from .gds import GdsChannel, build_gds, off_diagonal_choi, offdiag_partial_transpose
from .linalg import shannon_entropy, sparse_matrix_abs, sparse_partial_trace_b, spectral_norm

JOINT_GUARD = 4096


class GuardExceeded(ValueError):
    """The requested numeric evaluation is beyond desk scale."""


@dataclass(frozen=True)
class CdcParams:
    p: int
    n: int
    alpha: int | None = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ValueError("p must be an integer > 1")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        alpha = self.n if self.alpha is None else self.alpha
        if int(alpha) != alpha or alpha < self.n:
            raise ValueError("alpha must be an integer >= n")
        object.__setattr__(self, "alpha", int(alpha))

    @property
    def d(self) -> int:
        return self.p ** self.alpha

    @property
    def dims_a(self) -> tuple:
        return tuple(self.p ** i for i in range(self.n + 1))

    @property
    def dims_b(self) -> tuple:
        return tuple(self.p ** (self.alpha - i) for i in range(self.n + 1))


@dataclass(frozen=True)
class ErasureParams:
    lam: float
    dim: int

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("erasure probability must lie in [0, 1]")
        if self.dim < 1:
            raise ValueError("dimension must be positive")


def depolarizing_block(d_in: int, d_out: int, n_kraus: int | None = None) -> KrausChannel:
    """Completely depolarizing ``d_in -> d_out`` channel with ``d_in·d_out`` Kraus operators."""
    d = n_kraus or d_in * d_out
    if d != d_in * d_out:
        raise ValueError("this Kraus form needs exactly d_in * d_out operators")
    ops = np.zeros((d, d_out, d_in))
    for k in range(d):
        ops[k, k % d_out, k // d_out] = 1.0 / math.sqrt(d_out)
    return KrausChannel(d_in, d_out, tuple(ops), name=f"dep{d_in}->{d_out}")


def build_cdc(params: CdcParams) -> GdsChannel:
    subs = [depolarizing_block(a, b) for a, b in zip(params.dims_a, params.dims_b)]
    return build_gds(subs, name=f"CDC(p={params.p},n={params.n},alpha={params.alpha})")


def _params_of(g: GdsChannel) -> CdcParams:
    dims_a, dims_b = g.in_blocks.sizes, g.out_blocks.sizes
    if len(dims_a) < 2 or dims_a[1] < 2:
        raise ValueError("not a completely depolarizing direct sum")
    p, n = dims_a[1], len(dims_a) - 1
    alpha = round(math.log(dims_b[0], p))
    params = CdcParams(p, n, alpha)
    if params.dims_a != dims_a or params.dims_b != dims_b:
        raise ValueError("not a completely depolarizing direct sum")
    reference = build_cdc(params)
    for s, r in zip(g.subchannels, reference.subchannels):
        if not np.array_equal(s.stack, r.stack):
            raise ValueError("subchannel Kraus operators differ from the standard form")
    return params


def offdiag_trace_abs(g: GdsChannel, i: int, j: int) -> np.ndarray:
    """``Tr_B |C_{M_ij}^{T_B}|``, an operator on ``A_j``."""
    m = off_diagonal_choi(g, i, j)
    x = offdiag_partial_transpose(m)
    aj, bi = m.dims_j[0], m.dims_i[1]
    return sparse_partial_trace_b(sparse_matrix_abs(x), aj, bi).toarray()


def window_sets(db_i: int, db_j: int, da_i: int, r: int) -> list:
    """Index windows ``S_q^(r)`` for ``d_{B_i} > d_{B_j}``.

    With ``a_q = floor(((q+1) d_{B_i} - 1 - r) / d_{B_j})`` the windows are
    ``{0..a_0}, {a_0+1..a_1}, ...`` for ``q = 0..d_{A_i}-1``.  Two Kraus
    labels ``k = m d_{B_j} + r`` and ``k' = m' d_{B_j} + r`` share an input
    index of block ``i`` exactly when ``m`` and ``m'`` share a window.
    """
    sets, start = [], 0
    for q in range(da_i):
        a = ((q + 1) * db_i - 1 - r) // db_j
        sets.append(list(range(start, a + 1)))
        start = a + 1
    return sets


def combinatorial_offdiag_infnorm(db_i: int, db_j: int, da_i: int, da_j: int) -> float:
    """``||Tr_B |C_{M_ij}^{T_B}| ||_∞`` from counting arguments alone.

    If ``d_{B_i} < d_{B_j}``, ``|C^{T_B}|`` is diagonal on ``A_j ⊗ B_i``
    with entry ``sqrt(c(m, b) / (d_{B_i} d_{B_j}))``, where ``c(m, b)``
    counts Kraus labels with ``floor(k/d_{B_j}) = m`` and
    ``k mod d_{B_i} = b``.  Otherwise it is a sum of maximally entangled
    projectors over the windows ``S_q^(r)`` and the partial trace puts
    ``1/sqrt(d_{B_i} d_{B_j} |S|)`` on every ``m`` in a window.
    """
    d = da_i * db_i
    if da_j * db_j != d:
        raise ValueError("blocks must share the Kraus count")
    diag = np.zeros(da_j)
    if db_i < db_j:
        counts = np.zeros((da_j, db_i))
        for k in range(d):
            counts[k // db_j, k % db_i] += 1
        diag = np.sqrt(counts).sum(axis=1) / math.sqrt(db_i * db_j)
    else:
        for r in range(db_j):
            for window in window_sets(db_i, db_j, da_i, r):
                if window:
                    diag[window] += 1.0 / math.sqrt(db_i * db_j * len(window))
    return float(diag.max())


@dataclass(frozen=True)
class OffdiagNorm:
    i: int
    j: int
    numeric: float
    combinatorial: float

    @property
    def value(self) -> float:
        return self.numeric

    @property
    def agree(self) -> bool:
        return abs(self.numeric - self.combinatorial) <= 1e-10


def cdc_offdiag_infnorm(g: GdsChannel, i: int, j: int) -> OffdiagNorm:
    """``||Tr_B |C_{M_ij}^{T_B}| ||_∞`` numerically and by counting."""
    if i == j:
        raise ValueError("i == j: diagonal blocks have no coherent map")
    params = _params_of(g)
    numeric = spectral_norm(offdiag_trace_abs(g, i, j))
    da, db = params.dims_a, params.dims_b
    comb = combinatorial_offdiag_infnorm(db[i], db[j], da[i], da[j])
    return OffdiagNorm(i, j, numeric, comb)


def q_upper_closed_form(p: float, n: int) -> float:
    return math.log2(1 + n / math.sqrt(p))


def q1_lower_closed_form(p: float, n: int, alpha: int | None = None) -> float:
    return math.log2(n + 1) / p ** (n if alpha is None else alpha)


@dataclass(frozen=True)
class CdcBounds:
    params: CdcParams
    q1_lower: float
    q_upper: float
    pc_exact: float
    q_certificate: object = None
    c_certificate: object = None


CERTIFY_LIMIT = 4096


def cdc_bounds(params: CdcParams, certify: bool = True) -> CdcBounds:
    """Capacity sandwich ``log2(n+1)/p^α <= Q <= log2(1+n/sqrt p) < log2(n+1) = P = C``.

    With ``certify`` the upper bounds come with explicit witness
    certificates, as long as the largest bipartite sector stays within
    ``CERTIFY_LIMIT`` dimensions.
    """
    from .witness import (
        build_cdc_classical_witness,
        build_gds_transposition_witness,
        check_classical_witness,
        check_transposition_witness,
    )

    p, n = params.p, params.n
    qc = cc = None
    if certify and params.d ** 2 <= CERTIFY_LIMIT:
        g = build_cdc(params)
        qc = check_transposition_witness(g, build_gds_transposition_witness(g, aggregate="uniform"))
        cc = check_classical_witness(g, build_cdc_classical_witness(g))
    return CdcBounds(
        params,
        q1_lower_closed_form(p, n, params.alpha),
        q_upper_closed_form(p, n),
        math.log2(n + 1),
        qc,
        cc,
    )


# --------------------------------------------------------------- erasure


def build_erasure(params: ErasureParams) -> KrausChannel:
    """Erasure channel on ``dim`` levels; the flag state is the last basis vector."""
    d, lam = params.dim, params.lam
    embed = np.vstack([np.eye(d), np.zeros((1, d))])
    ops = [math.sqrt(1 - lam) * embed]
    for i in range(d):
        e = np.zeros((d + 1, d))
        e[d, i] = math.sqrt(lam)
        ops.append(e)
    return KrausChannel(d, d + 1, tuple(ops), name=f"erasure({lam:g})")


def erasure_capacity(lam: float, dim: int) -> float:
    return max((1 - 2 * lam) * math.log2(dim), 0.0)


def _spectrum_entropy(m) -> float:
    s = np.linalg.svd(m, compute_uv=False) ** 2
    s = s / s.sum()
    return shannon_entropy(s)


def joint_coherent_information(params: CdcParams, lam: float) -> float:
    """``I_c(ω_{AA'}, N ⊗ E_λ)`` with ``ω = ⊕ |Φ_i><Φ_i| / (n+1)``.

    ``Φ_i`` is the maximally entangled state of ``A_i`` with its mirror
    block in ``A'``; the erasure channel acts on the whole of ``A'``.
    Output and environment spectra are computed from the singular values
    of the stacked pure-state amplitudes, never forming the joint Kraus
    list.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    g = build_cdc(params)
    da = g.dim_in
    if da * (da + 1) > JOINT_GUARD:
        raise GuardExceeded(f"joint evaluation needs d_A(d_A+1) = {da * (da + 1)} > {JOINT_GUARD}")
    e = g.assembled.stack
    f = build_erasure(ErasureParams(lam, da)).stack
    weight = 1.0 / g.n_blocks
    amps = []
    for i in range(g.n_blocks):
        sl = g.in_blocks.slice(i)
        phi = np.zeros((da, da))
        phi[sl, sl] = np.eye(g.in_blocks.sizes[i]) / math.sqrt(g.in_blocks.sizes[i])
        t = math.sqrt(weight) * np.einsum("kbs,st,lct->bckl", e, phi, f)
        amps.append(t.reshape(e.shape[1] * f.shape[1], e.shape[0] * f.shape[0]))
    out = _spectrum_entropy(np.hstack(amps))
    env = _spectrum_entropy(np.vstack([a.conj() for a in amps]))
    return out - env


def superadditivity_max_lambda(params_or_pn) -> float | None:
    """Largest erasure probability for which superadditivity is certified.

    For ``λ >= 1/2`` the erasure channel has zero capacity, so the joint
    value ``(1-λ) log2(n+1)`` beats ``Q(N) + Q(E_λ)`` whenever it exceeds
    the certified ``log2(1 + n/sqrt p)``.  Returns ``None`` when that
    window is empty.
    """
    p, n = (params_or_pn.p, params_or_pn.n) if isinstance(params_or_pn, CdcParams) else params_or_pn
    lam = 1 - q_upper_closed_form(p, n) / math.log2(n + 1)
    if lam <= 0.5:
        return None
    return min(lam, 1.0)


def superadditivity_holds(p: float, n: int, lam: float) -> bool:
    """Strict certified inequality at a given ``λ``."""
    joint = (1 - lam) * math.log2(n + 1)
    return joint > q_upper_closed_form(p, n) + erasure_capacity(lam, _dim_a(p, n))


def _dim_a(p, n) -> int:
    return int(sum(p ** i for i in range(n + 1)))


# ------------------------------------------------------------- figure 1

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Pow: operator.pow,
    ast.FloorDiv: operator.floordiv,
}


def parse_p_rule(rule: str):
    """Turn an integer expression in ``n`` such as ``"n^4"`` into a function."""
    tree = ast.parse(rule.replace("^", "**"), mode="eval")

    def ev(node, n):
        if isinstance(node, ast.Expression):
            return ev(node.body, n)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name) and node.id == "n":
            return n
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left, n), ev(node.right, n))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand, n)
        raise ValueError(f"unsupported token in p rule {rule!r}")

    ev(tree, 1)
    return lambda n: ev(tree, n)


@dataclass(frozen=True)
class Fig1Row:
    n: int
    p: int
    q_upper_bits: float
    private_bits: float
    lambda_max: float


def fig1_data(p_rule, n_range) -> list:
    """Rows of the quantum-vs-private gap and the superadditivity window.

    ``p_rule`` is a callable or an expression string.  ``p = 1`` (as
    ``n^4`` gives at ``n = 1``) is allowed here: the closed forms still
    apply and the window is empty.
    """
    rule = parse_p_rule(p_rule) if isinstance(p_rule, str) else p_rule
    rows = []
    for n in n_range:
        p = rule(n)
        if int(p) != p or p < 1:
            raise ValueError(f"p rule gave {p} at n = {n}; need a positive integer")
        lam = superadditivity_max_lambda((p, n))
        rows.append(Fig1Row(n, int(p), q_upper_closed_form(p, n), math.log2(n + 1),
                            float("nan") if lam is None else lam))
    return rows


def fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def fig1_csv(rows) -> str:
    lines = ["n,p,q_upper_bits,private_bits,lambda_max"]
    for r in rows:
        lines.append(",".join([str(r.n), str(r.p), fmt(r.q_upper_bits), fmt(r.private_bits), fmt(r.lambda_max)]))
    return "\n".join(lines) + "\n"
