"""Quantum channels in Kraus form.

A channel is stored as an ordered tuple of Kraus operators.  The order is
part of the data: the complementary channel (and therefore every direct
sum built from the channel) depends on it, so nothing here reorders,
prunes or pads Kraus lists behind the caller's back.

Conventions
-----------
* Choi matrices are unnormalized with the input first,
  ``C = Σ_{s,t} |s><t| ⊗ N(|s><t|)``.
* The environment basis of the complement is indexed by Kraus label.
* Transfer (superoperator) matrices act on row-major ``vec(ρ)``, so
  ``vec(E ρ F†) = (E ⊗ conj(F)) vec(ρ)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linalg import (
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    spectral_norm,
)

TP_TOL = 1e-10
DEGRADE_TOL = 1e-7


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map given by Kraus operators.

    Parameters
    ----------
    dim_in, dim_out : int
        Input and output dimensions.
    kraus : tuple of ndarray
        ``dim_out x dim_in`` operators with ``Σ E†E = I``.
    name : str
        Free-form label.
    """

    dim_in: int
    dim_out: int
    kraus: tuple
    name: str = ""
    stack: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex).reshape(self.dim_out, self.dim_in) for k in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        stack = np.stack(ops)
        stack.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "stack", stack)
        res = self.tp_residual()
        if res > TP_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (residual {res:.3g})")

    @property
    def dim_env(self) -> int:
        return len(self.kraus)

    def tp_residual(self) -> float:
        s = np.einsum("kba,kbc->ac", self.stack.conj(), self.stack)
        return spectral_norm(s - np.eye(self.dim_in))

    def __call__(self, rho):
        return apply(self, rho)


@dataclass(frozen=True)
class ChannelVerdict:
    """Outcome of a structural predicate such as degradability."""

    predicate: str
    holds: bool
    residual: float
    witness: np.ndarray | None = None


def _check_input(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(f"input must be {ch.dim_in}x{ch.dim_in}, got {rho.shape}")
    return rho


def apply(ch: KrausChannel, rho) -> np.ndarray:
    """``Σ_k E_k ρ E_k†``."""
    rho = _check_input(ch, rho)
    k = ch.stack
    return np.einsum("kab,kcb->ac", k @ rho, k.conj())


def apply_complement(ch: KrausChannel, rho) -> np.ndarray:
    """Environment output ``[Tr(E_k ρ E_l†)]_{kl}`` without building a new channel."""
    rho = _check_input(ch, rho)
    k = ch.stack
    flat = k.reshape(ch.dim_env, -1)
    return (k @ rho).reshape(ch.dim_env, -1) @ flat.conj().T


def adjoint(ch: KrausChannel, x) -> np.ndarray:
    """Heisenberg-picture map ``Σ E_k† X E_k``."""
    k = ch.stack
    return np.einsum("kba,kbc->ac", k.conj(), np.asarray(x) @ k)


def adjoint_complement(ch: KrausChannel, y) -> np.ndarray:
    """Adjoint of the complementary channel, ``Σ_{k,l} Y_{lk} E_l† E_k``."""
    k = ch.stack
    return np.einsum("lk,lba,kbc->ac", np.asarray(y), k.conj(), k)


def complement(ch: KrausChannel) -> KrausChannel:
    """Complementary channel with Kraus operators ``F_b = Σ_k |k><b| E_k``."""
    ops = np.transpose(ch.stack, (1, 0, 2))
    return KrausChannel(ch.dim_in, ch.dim_env, tuple(ops), name=f"{ch.name}^c" if ch.name else "")


def choi(ch: KrausChannel) -> np.ndarray:
    """Unnormalized Choi matrix, input factor first."""
    v = np.transpose(ch.stack, (0, 2, 1)).reshape(ch.dim_env, -1).T
    return v @ v.conj().T


def transfer_matrix(ch: KrausChannel) -> np.ndarray:
    """Superoperator acting on row-major ``vec(ρ)``."""
    k = ch.stack
    return np.einsum("kab,kcd->acbd", k, k.conj()).reshape(ch.dim_out ** 2, ch.dim_in ** 2)


def choi_from_transfer(s: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    t = s.reshape(d_out, d_out, d_in, d_in)
    return t.transpose(2, 0, 3, 1).reshape(d_in * d_out, d_in * d_out)


def tensor(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Product channel, Kraus operators ``A_i ⊗ B_j`` with ``i`` outer."""
    ops = tuple(np.kron(x, y) for x in a.kraus for y in b.kraus)
    name = f"{a.name}⊗{b.name}" if a.name or b.name else ""
    return KrausChannel(a.dim_in * b.dim_in, a.dim_out * b.dim_out, ops, name=name)


def channel_equivalent(a: KrausChannel, b: KrausChannel, tol: float = 1e-10) -> bool:
    """Same map (Choi comparison), regardless of Kraus implementation."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        return False
    return float(np.max(np.abs(choi(a) - choi(b)))) <= tol


def zero_pad(ch: KrausChannel, count: int) -> KrausChannel:
    """Append zero Kraus operators up to ``count`` (same map, bigger environment)."""
    if count < ch.dim_env:
        raise ValueError("cannot pad to fewer Kraus operators")
    extra = tuple(np.zeros((ch.dim_out, ch.dim_in)) for _ in range(count - ch.dim_env))
    return KrausChannel(ch.dim_in, ch.dim_out, ch.kraus + extra, name=ch.name)


def degrading_map(source: KrausChannel, target: KrausChannel, predicate: str = "degradable") -> ChannelVerdict:
    """Search for a channel ``D`` with ``D ∘ source = target``.

    The constraint is linear in the transfer matrix of ``D``; the
    minimum-norm least-squares solution is taken on the range of
    ``source`` and completed on its orthogonal complement by the
    trace-preserving replacement ``X ↦ Tr(X) I/d``.  The candidate is
    accepted when the linear residual, the Choi positivity slack and the
    trace-preservation error are all within ``1e-7``.

    A failure is not a proof that no degrading map exists when the
    solution set is larger than a point.
    """
    if source.dim_in != target.dim_in:
        raise ValueError("source and target must share an input space")
    s_src = transfer_matrix(source)
    s_tgt = transfer_matrix(target)
    d_mid, d_out = source.dim_out, target.dim_out
    pinv = np.linalg.pinv(s_src, rcond=1e-10)
    s_d = s_tgt @ pinv
    proj = s_src @ pinv
    # the complement of the source range is sent to the maximally mixed state
    trace_row = np.eye(d_mid).ravel()
    fill = np.eye(d_out).ravel() / d_out
    s_d = s_d + np.outer(fill, trace_row @ (np.eye(d_mid ** 2) - proj))
    lin = float(np.linalg.norm(s_d @ s_src - s_tgt)) / (1.0 + float(np.linalg.norm(s_tgt)))
    j = choi_from_transfer(s_d, d_mid, d_out)
    herm = float(np.max(np.abs(j - j.conj().T)))
    j = (j + j.conj().T) / 2
    psd = max(0.0, -min_eigenvalue(j))
    tp = spectral_norm(partial_trace(j, (d_mid, d_out), keep="A") - np.eye(d_mid))
    residual = max(lin, herm, psd, tp)
    return ChannelVerdict(predicate, bool(residual <= DEGRADE_TOL), float(residual), j)


def is_degradable(ch: KrausChannel) -> ChannelVerdict:
    return degrading_map(ch, complement(ch), "degradable")


def is_antidegradable(ch: KrausChannel) -> ChannelVerdict:
    return degrading_map(complement(ch), ch, "antidegradable")


def is_ppt(ch: KrausChannel, tol: float = 1e-9) -> ChannelVerdict:
    """Positive partial transpose of the Choi matrix."""
    c = choi(ch)
    pt = partial_transpose(c, (ch.dim_in, ch.dim_out))
    lam = min_eigenvalue(pt)
    scale = 1.0 + spectral_norm(pt)
    return ChannelVerdict("ppt", bool(lam >= -tol * scale), max(0.0, -lam), None)


# ---------------------------------------------------------------- families

_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
}


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(d, d, (np.eye(d),), name=f"id{d}")


def amplitude_damping(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    return KrausChannel(2, 2, (k0, k1), name=f"AD({gamma:g})")


def pauli_flip(p: float, axis: str) -> KrausChannel:
    """``ρ ↦ (1-p) ρ + p σ ρ σ`` with ``σ`` the named Pauli matrix."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    ops = (np.sqrt(1 - p) * _PAULI["I"], np.sqrt(p) * _PAULI[axis])
    return KrausChannel(2, 2, ops, name=f"{axis}flip({p:g})")


def phase_flip(p: float) -> KrausChannel:
    return pauli_flip(p, "Z")


def bit_flip(p: float) -> KrausChannel:
    return pauli_flip(p, "X")


def dephasing(kraus_set: str = "E") -> KrausChannel:
    """Qubit completely dephasing channel in one of two implementations.

    ``"E"`` uses ``{I/√2, Z/√2}``, ``"F"`` uses ``{|0><0|, |1><1|}``;
    the ``"E-swapped"`` variant lists ``{Z/√2, I/√2}``.
    """
    e = (_PAULI["I"] / np.sqrt(2), _PAULI["Z"] / np.sqrt(2))
    ops = {
        "E": e,
        "E-swapped": e[::-1],
        "F": (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])),
    }[kraus_set]
    return KrausChannel(2, 2, ops, name=f"deph[{kraus_set}]")


def random_channel(d_in: int, d_out: int, n_kraus: int, rng) -> KrausChannel:
    """Random channel from a Haar-like isometry ``d_in -> d_out * n_kraus``."""
    if d_out * n_kraus < d_in:
        raise ValueError("environment too small for an isometry")
    g = rng.normal(size=(d_out * n_kraus, d_in)) + 1j * rng.normal(size=(d_out * n_kraus, d_in))
    q, _ = np.linalg.qr(g)
    ops = q.reshape(d_out, n_kraus, d_in).transpose(1, 0, 2)
    return KrausChannel(d_in, d_out, tuple(ops), name="random")


def random_state(d: int, rng, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# -------------------------------------------------------------------- JSON


def _matrix_to_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows, where: str) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: entries must be [re, im] pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{where}: expected a matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(ch: KrausChannel) -> dict:
    return {
        "name": ch.name,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [_matrix_to_json(k) for k in ch.kraus],
    }


def channel_from_dict(spec: dict, where: str = "channel") -> KrausChannel:
    for key in ("dim_in", "dim_out", "kraus"):
        if key not in spec:
            raise ValueError(f"{where}: missing field '{key}'")
    ops = []
    for idx, rows in enumerate(spec["kraus"]):
        m = _matrix_from_json(rows, f"{where}.kraus[{idx}]")
        if m.shape != (spec["dim_out"], spec["dim_in"]):
            raise ValueError(f"{where}.kraus[{idx}]: shape {m.shape} does not match dims")
        ops.append(m)
    return KrausChannel(int(spec["dim_in"]), int(spec["dim_out"]), tuple(ops), name=str(spec.get("name", "")))


def load_channel(path) -> KrausChannel:
    return channel_from_dict(json.loads(Path(path).read_text()))


def dump_channel(ch: KrausChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=2))
