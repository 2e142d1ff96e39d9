"""Generalized direct sum (GDS) channels.

A GDS channel is assembled from an ordered list of subchannels that share
a Kraus count.  Its k-th Kraus operator is the direct sum of the
subchannels' k-th operators, so the assembled map sends an input block
``ρ_ij`` to ``Σ_k E_k^(i) ρ_ij E_k^(j)†``.  Diagonal blocks go through the
subchannels; off-diagonal blocks go through the coherent maps ``M_ij``,
which depend on the Kraus implementations and not only on the
subchannels as maps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import (
    ChannelVerdict,
    KrausChannel,
    apply,
    apply_complement,
    channel_from_dict,
    channel_to_dict,
    choi,
    complement,
    identity_channel,
    is_degradable,
    zero_pad,
)
from .linalg import BlockStructure, direct_sum, min_eigenvalue, partial_trace, spectral_norm


class KrausCountError(ValueError):
    """Subchannels with different Kraus counts cannot be summed directly."""


@dataclass(frozen=True)
class GdsChannel:
    """Direct sum of subchannels.

    Attributes
    ----------
    subchannels : tuple of KrausChannel
        Ordered blocks; index ``i`` is the block label used everywhere.
    in_blocks, out_blocks : BlockStructure
        Input dimensions ``d_{A_i}`` and output dimensions ``d_{B_i}``.
    assembled : KrausChannel
        The channel on the full spaces.
    """

    subchannels: tuple
    in_blocks: BlockStructure
    out_blocks: BlockStructure
    assembled: KrausChannel

    @property
    def n_blocks(self) -> int:
        return len(self.subchannels)

    @property
    def dim_in(self) -> int:
        return self.in_blocks.dim

    @property
    def dim_out(self) -> int:
        return self.out_blocks.dim


@dataclass(frozen=True)
class OffDiagonalMap:
    """Choi matrix of the coherent map ``M_ij`` between blocks ``i`` and ``j``.

    ``choi`` has rows indexed by ``A_i ⊗ B_i`` and columns by
    ``A_j ⊗ B_j``; for ``i != j`` it is rectangular in general.
    """

    i: int
    j: int
    choi: np.ndarray
    dims_i: tuple
    dims_j: tuple


def build_gds(subchannels, name: str = "") -> GdsChannel:
    """Assemble a GDS channel from subchannels with equal Kraus counts.

    Raises
    ------
    KrausCountError
        When the Kraus counts differ; pad explicitly with
        :func:`gdscap.channel.zero_pad` (this changes the coherent maps, so
        it is never done silently).
    """
    subs = tuple(subchannels)
    if not subs:
        raise ValueError("need at least one subchannel")
    counts = [s.dim_env for s in subs]
    if len(set(counts)) != 1:
        raise KrausCountError(
            f"subchannels have Kraus counts {counts}; zero-pad them to a common count "
            "(channel.zero_pad or the JSON 'pad' flag) before building"
        )
    ops = tuple(direct_sum([s.kraus[k] for s in subs]) for k in range(counts[0]))
    in_blocks = BlockStructure(tuple(s.dim_in for s in subs))
    out_blocks = BlockStructure(tuple(s.dim_out for s in subs))
    label = name or "⊕".join(s.name or "?" for s in subs)
    assembled = KrausChannel(in_blocks.dim, out_blocks.dim, ops, name=label)
    return GdsChannel(subs, in_blocks, out_blocks, assembled)


def pad_to_common(subchannels) -> list:
    count = max(s.dim_env for s in subchannels)
    return [zero_pad(s, count) for s in subchannels]


@dataclass(frozen=True)
class BlockCheck:
    ok: bool
    subchannels: tuple
    offending: tuple | None = None


def validate_block_structure(ch: KrausChannel, in_blocks: BlockStructure, out_blocks: BlockStructure) -> BlockCheck:
    """Check that every Kraus operator maps ``A_i`` into ``B_i`` only.

    On success the subchannel Kraus lists are extracted; on failure the
    first offending ``(k, i, j)`` with ``P_{B_j} E_k P_{A_i} != 0`` is
    reported.
    """
    if in_blocks.count != out_blocks.count:
        raise ValueError("input and output structures need the same number of blocks")
    if (in_blocks.dim, out_blocks.dim) != (ch.dim_in, ch.dim_out):
        raise ValueError("block structures do not match the channel dimensions")
    for k, e in enumerate(ch.kraus):
        for i in range(in_blocks.count):
            for j in range(out_blocks.count):
                if i != j and np.any(e[out_blocks.slice(j), in_blocks.slice(i)] != 0):
                    return BlockCheck(False, (), (k, i, j))
    subs = []
    for i in range(in_blocks.count):
        ops = tuple(e[out_blocks.slice(i), in_blocks.slice(i)] for e in ch.kraus)
        subs.append(KrausChannel(in_blocks.sizes[i], out_blocks.sizes[i], ops, name=f"{ch.name}[{i}]"))
    return BlockCheck(True, tuple(subs))


def diagonal_blocks(g: GdsChannel, rho) -> list:
    rho = np.asarray(rho)
    return [rho[g.in_blocks.slice(i), g.in_blocks.slice(i)] for i in range(g.n_blocks)]


def gds_complement_apply(g: GdsChannel, rho) -> np.ndarray:
    """Environment output ``Σ_i N_i^c(ρ_ii)``; off-diagonal blocks never reach it."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (g.dim_in, g.dim_in):
        raise ValueError(f"input must be {g.dim_in}x{g.dim_in}")
    return sum(apply_complement(s, b) for s, b in zip(g.subchannels, diagonal_blocks(g, rho)))


def apply_coherent(g: GdsChannel, i: int, j: int, x) -> np.ndarray:
    """``M_ij(X) = Σ_k E_k^(i) X E_k^(j)†`` for a ``d_{A_i} x d_{A_j}`` block."""
    ei, ej = g.subchannels[i].stack, g.subchannels[j].stack
    return np.einsum("kab,kcb->ac", ei @ np.asarray(x), ej.conj())


def off_diagonal_choi(g: GdsChannel, i: int, j: int) -> OffDiagonalMap:
    """Choi matrix ``Σ_{s,t} |s><t| ⊗ M_ij(|s><t|)``."""
    if i == j:
        raise ValueError("i == j: use the Choi matrix of the subchannel instead")
    if not (0 <= i < g.n_blocks and 0 <= j < g.n_blocks):
        raise IndexError("block index out of range")
    si, sj = g.subchannels[i], g.subchannels[j]
    vi = np.transpose(si.stack, (0, 2, 1)).reshape(si.dim_env, -1)
    vj = np.transpose(sj.stack, (0, 2, 1)).reshape(sj.dim_env, -1)
    c = vi.T @ vj.conj()
    return OffDiagonalMap(i, j, c, (si.dim_in, si.dim_out), (sj.dim_in, sj.dim_out))


def offdiag_partial_transpose(m: OffDiagonalMap) -> np.ndarray:
    """Partial transpose on the output factor of a rectangular Choi block.

    Rows ``A_i ⊗ B_i`` and columns ``A_j ⊗ B_j`` become rows
    ``A_i ⊗ B_j`` and columns ``A_j ⊗ B_i``.
    """
    (ai, bi), (aj, bj) = m.dims_i, m.dims_j
    t = m.choi.reshape(ai, bi, aj, bj).transpose(0, 3, 2, 1)
    return t.reshape(ai * bj, aj * bi)


def gds_is_degradable(g: GdsChannel) -> ChannelVerdict:
    """Blockwise degradability test.

    The GDS channel is degradable exactly when every subchannel is; the
    witness is the Choi matrix of ``W(R) = Σ_i W_i(R_ii)`` where ``W_i``
    degrades subchannel ``i`` and ``R_ii`` is the ``B_i`` block of the
    output.  The assembled witness is checked against the full channel
    before it is returned.
    """
    verdicts = [is_degradable(s) for s in g.subchannels]
    worst = max(v.residual for v in verdicts)
    if not all(v.holds for v in verdicts):
        return ChannelVerdict("degradable", False, worst, None)
    d_env = g.assembled.dim_env
    d_out = g.dim_out
    big = np.zeros((d_out * d_env, d_out * d_env), dtype=complex)
    full = big.reshape(d_out, d_env, d_out, d_env)
    for i, v in enumerate(verdicts):
        sl = g.out_blocks.slice(i)
        full[sl, :, sl, :] = v.witness.reshape(g.out_blocks.sizes[i], d_env, g.out_blocks.sizes[i], d_env)
    # W acts on the output space; its Choi must reproduce the complement on every input
    ch = g.assembled
    composed = _compose_choi(big, d_out, d_env, ch)
    target = _complement_choi(ch)
    lin = float(np.max(np.abs(composed - target)))
    psd = max(0.0, -min_eigenvalue((big + big.conj().T) / 2))
    tp = spectral_norm(partial_trace(big, (d_out, d_env), keep="A") - np.eye(d_out))
    residual = max(worst, lin, psd, tp)
    return ChannelVerdict("degradable", bool(residual <= 1e-7), float(residual), big)


def _compose_choi(w_choi, d_mid, d_out, ch: KrausChannel) -> np.ndarray:
    """Choi of ``W ∘ ch`` from the Choi of ``W`` (input ``d_mid``)."""
    w = w_choi.reshape(d_mid, d_out, d_mid, d_out)
    # W(|a><b|) = w[a, :, b, :]
    out = np.zeros((ch.dim_in, d_out, ch.dim_in, d_out), dtype=complex)
    for s in range(ch.dim_in):
        for t in range(ch.dim_in):
            e = np.zeros((ch.dim_in, ch.dim_in))
            e[s, t] = 1.0
            mid = apply(ch, e)
            out[s, :, t, :] = np.einsum("ab,aibj->ij", mid, w)
    return out.reshape(ch.dim_in * d_out, ch.dim_in * d_out)


def _complement_choi(ch: KrausChannel) -> np.ndarray:
    return choi(complement(ch))


# ------------------------------------------------------------- families


def platypus(mu) -> GdsChannel:
    """Two-block GDS whose first block prepares ``diag(mu)`` and second measures.

    Block 0 takes a 1-dimensional input to ``diag(mu)`` on ``d`` levels;
    block 1 takes ``d`` levels to the 1-dimensional output.  The assembled
    Kraus operators read ``√mu_k |k><0| + |d><k+1|``.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or abs(mu.sum() - 1) > 1e-12:
        raise ValueError("mu must be a probability vector")
    d = mu.size
    n0 = KrausChannel(1, d, tuple(np.sqrt(mu[k]) * np.eye(d)[:, [k]] for k in range(d)), name="prep")
    n1 = KrausChannel(d, 1, tuple(np.eye(d)[[k], :] for k in range(d)), name="meas")
    return build_gds([n0, n1], name="platypus")


def identity_sum(dims) -> GdsChannel:
    return build_gds([identity_channel(d) for d in dims])


# ----------------------------------------------------------------- JSON


def gds_to_dict(g: GdsChannel) -> dict:
    return {"subchannels": [channel_to_dict(s) for s in g.subchannels]}


def gds_from_dict(spec: dict, pad: bool = False) -> GdsChannel:
    if "subchannels" not in spec:
        raise ValueError("GDS spec: missing field 'subchannels'")
    subs = [channel_from_dict(s, f"subchannels[{i}]") for i, s in enumerate(spec["subchannels"])]
    if pad:
        subs = pad_to_common(subs)
    return build_gds(subs)


def load_gds(path, pad: bool = False) -> GdsChannel:
    return gds_from_dict(json.loads(Path(path).read_text()), pad=pad)


def dump_gds(g: GdsChannel, path) -> None:
    Path(path).write_text(json.dumps(gds_to_dict(g), indent=2))
