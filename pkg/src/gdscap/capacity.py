"""Coherent, private and Holevo information, plus one-shot bounds for GDS channels.

The coherent information of a GDS channel is maximized on block diagonal
inputs ``ρ̃ = ⊕ p_i ρ_i`` (the block diagonal truncation of any input is
majorized by it, so the output entropy can only grow while the
environment is unchanged).  On such inputs

    I_c(ρ̃) = H(p) + Σ_i p_i I_c(ρ_i, N_i) - χ({p_i, ω_i}),   ω_i = N_i^c(ρ_i),

which is what :func:`maximize_coherent_information_gds` climbs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .channel import KrausChannel, adjoint, adjoint_complement, apply, apply_complement
from .gds import GdsChannel, build_gds
from .linalg import (
    InvalidStateError,
    direct_sum,
    entropy_unchecked,
    is_hermitian,
    shannon_entropy,
    trace_norm,
    von_neumann_entropy,
)

LN2 = np.log(2.0)


def _as_kraus(ch) -> KrausChannel:
    return ch.assembled if isinstance(ch, GdsChannel) else ch


def check_state(rho, dim: int | None = None, tol: float = 1e-9) -> np.ndarray:
    rho = np.atleast_2d(np.asarray(rho, dtype=complex))
    if dim is not None and rho.shape != (dim, dim):
        raise InvalidStateError(f"expected a {dim}x{dim} state, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise InvalidStateError("state is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidStateError("state does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise InvalidStateError("state is not positive semidefinite")
    return rho


@dataclass(frozen=True)
class Ensemble:
    """Probability-weighted states on a common space."""

    probs: tuple
    states: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) != len(self.states) or len(p) == 0:
            raise ValueError("probabilities and states must be nonempty and of equal length")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        dim = np.atleast_2d(np.asarray(self.states[0])).shape[0]
        states = tuple(check_state(s, dim) for s in self.states)
        object.__setattr__(self, "probs", tuple(p.tolist()))
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def average(self) -> np.ndarray:
        return sum(p * s for p, s in zip(self.probs, self.states))

    def push(self, ch) -> "Ensemble":
        ch = _as_kraus(ch)
        return Ensemble(self.probs, tuple(_hermitize(apply(ch, s)) for s in self.states))


def _hermitize(m):
    return (m + m.conj().T) / 2


@dataclass(frozen=True)
class BlockDiagState:
    """Block diagonal input ``⊕ p_i ρ_i``."""

    probs: tuple
    block_states: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if len(p) != len(self.block_states) or np.any(p < -1e-15) or abs(p.sum() - 1) > 1e-10:
            raise ValueError("block probabilities must form a distribution over the blocks")
        states = tuple(check_state(s) for s in self.block_states)
        object.__setattr__(self, "probs", tuple(np.clip(p, 0, None).tolist()))
        object.__setattr__(self, "block_states", states)

    def assemble(self) -> np.ndarray:
        return direct_sum([p * s for p, s in zip(self.probs, self.block_states)])


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    argument: object
    restarts_used: int
    converged: bool
    gradient_residual: float
    history: tuple = field(default=(), repr=False)


# ----------------------------------------------------------- information


def coherent_information(ch, rho) -> float:
    """``S(N(ρ)) - S(N^c(ρ))`` in bits."""
    ch = _as_kraus(ch)
    rho = check_state(rho, ch.dim_in)
    return von_neumann_entropy(_hermitize(apply(ch, rho))) - von_neumann_entropy(
        _hermitize(apply_complement(ch, rho))
    )


def holevo_chi(ensemble: Ensemble, ch=None) -> float:
    """Holevo information of an ensemble, optionally after a channel."""
    if ch is not None:
        ensemble = ensemble.push(ch)
    avg = _hermitize(ensemble.average())
    return von_neumann_entropy(avg) - sum(
        p * von_neumann_entropy(s) for p, s in zip(ensemble.probs, ensemble.states) if p > 0
    )


def private_information(ensemble: Ensemble, ch) -> float:
    """``I_c(ρ̄) - Σ p_i I_c(ρ_i)``."""
    ch = _as_kraus(ch)
    if ensemble.dim != ch.dim_in:
        raise ValueError("ensemble does not live on the channel input")
    avg = _hermitize(ensemble.average())
    return coherent_information(ch, avg) - sum(
        p * coherent_information(ch, s) for p, s in zip(ensemble.probs, ensemble.states) if p > 0
    )


def max_pairwise_distance(states) -> float:
    return max((trace_norm(a - b) for a, b in combinations(states, 2)), default=0.0)


def concavity_bounds(ensemble: Ensemble, prefactor: float = 0.5) -> tuple:
    """Lower and upper bounds on the Holevo information of an ensemble.

    The upper bound is ``H(p)/2 · max_{i,j} ||ω_i - ω_j||_1``.  The lower
    bound ``prefactor · Σ p_i ||ω_i - ω̄||_1^2`` is valid for
    ``prefactor <= 1/(2 ln 2)``; the default ``1/2`` is below that
    (Pinsker's inequality in bits).  Treat the lower bound as
    experimental when changing the prefactor.
    """
    states = ensemble.states
    avg = ensemble.average()
    upper = shannon_entropy(ensemble.probs) / 2 * max_pairwise_distance(states)
    lower = prefactor * sum(p * trace_norm(s - avg) ** 2 for p, s in zip(ensemble.probs, states))
    return lower, upper


# ----------------------------------------------------------- optimizer


def _log2_support(x) -> np.ndarray:
    w, v = np.linalg.eigh(_hermitize(x))
    lw = np.zeros_like(w)
    pos = w > 1e-15
    lw[pos] = np.log2(w[pos])
    return (v * lw) @ v.conj().T


class CoherentInformationObjective:
    """Coherent information of a GDS channel as a smooth function of real parameters.

    Parameters are, in order: one softmax logit per block, then the real
    and imaginary parts of a lower triangular ``L_i`` for every block with
    ``d_{A_i} > 1``; the block state is ``L L† / Tr(L L†)``.
    """

    def __init__(self, g: GdsChannel):
        self.g = g
        self.dims = g.in_blocks.sizes
        self.tril = [np.tril_indices(d) for d in self.dims]
        self.sizes = [len(t[0]) if d > 1 else 0 for t, d in zip(self.tril, self.dims)]
        self.n_params = g.n_blocks + 2 * sum(self.sizes)

    def unpack(self, x):
        x = np.asarray(x, dtype=float)
        nb = self.g.n_blocks
        z = x[:nb] - np.max(x[:nb])
        probs = np.exp(z) / np.sum(np.exp(z))
        ls, pos = [], nb
        for d, (r, c), m in zip(self.dims, self.tril, self.sizes):
            if d == 1:
                ls.append(np.ones((1, 1), dtype=complex))
                continue
            L = np.zeros((d, d), dtype=complex)
            L[r, c] = x[pos:pos + m] + 1j * x[pos + m:pos + 2 * m]
            pos += 2 * m
            ls.append(L)
        return probs, ls

    def state(self, x) -> BlockDiagState:
        probs, ls = self.unpack(x)
        rhos = []
        for L in ls:
            r = L @ L.conj().T
            rhos.append(_hermitize(r / np.trace(r).real))
        return BlockDiagState(tuple(probs), tuple(rhos))

    def initial_point(self, rng, maximally_mixed: bool = False) -> np.ndarray:
        if maximally_mixed:
            x = np.zeros(self.n_params)
            pos = self.g.n_blocks
            for d, (r, c), m in zip(self.dims, self.tril, self.sizes):
                if d > 1:
                    x[pos:pos + m] = (r == c).astype(float)
                    pos += 2 * m
            return x
        return rng.normal(size=self.n_params)

    def value_and_grad(self, x):
        probs, ls = self.unpack(x)
        subs = self.g.subchannels
        rhos, ts = [], []
        for L in ls:
            r = L @ L.conj().T
            t = np.trace(r).real
            rhos.append(r / t)
            ts.append(t)
        outs = [_hermitize(apply(s, r)) for s, r in zip(subs, rhos)]
        envs = [_hermitize(apply_complement(s, r)) for s, r in zip(subs, rhos)]
        omega = sum(p * e for p, e in zip(probs, envs))
        value = shannon_entropy(probs) + sum(
            p * entropy_unchecked(o) for p, o in zip(probs, outs) if p > 0
        ) - entropy_unchecked(omega)
        log_omega = _log2_support(omega)
        g_probs = np.zeros(len(probs))
        grads = []
        for i, (s, o) in enumerate(zip(subs, outs)):
            # derivative of the objective with respect to the unnormalized block p_i ρ_i
            log_out = _log2_support(probs[i] * o) if probs[i] > 0 else np.zeros_like(o)
            G = -adjoint(s, log_out) + adjoint_complement(s, log_omega)
            G = _hermitize(G)
            g_probs[i] = np.trace(G @ rhos[i]).real
            grads.append(G)
        grad = np.zeros(self.n_params)
        grad[: len(probs)] = probs * (g_probs - np.dot(probs, g_probs))
        pos = len(probs)
        for i, (L, (r, c), m) in enumerate(zip(ls, self.tril, self.sizes)):
            if m == 0:
                continue
            W = probs[i] * (grads[i] @ L - g_probs[i] * L) / ts[i]
            grad[pos:pos + m] = 2 * W.real[r, c]
            grad[pos + m:pos + 2 * m] = 2 * W.imag[r, c]
            pos += 2 * m
        return value, grad


def maximize_coherent_information_gds(
    g: GdsChannel, restarts: int = 32, tol: float = 1e-9, seed: int = 0, maxiter: int = 2000
) -> OptimizationResult:
    """Multi-restart L-BFGS ascent of the coherent information over block diagonal inputs.

    Restart ``r`` draws its starting point from ``default_rng(seed + r)``;
    restart 0 starts from the maximally mixed block-uniform input.  The
    reported value is recomputed on the assembled channel at the returned
    state, so it is a certified lower bound on ``Q¹``.
    """
    obj = CoherentInformationObjective(g)

    def neg(x):
        v, gr = obj.value_and_grad(x)
        return -v, -gr

    best = None
    history = []
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        x0 = obj.initial_point(rng, maximally_mixed=(r == 0))
        res = minimize(neg, x0, jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": tol * 1e-3, "gtol": 1e-10})
        history.append(-res.fun)
        if best is None or -res.fun > -best.fun:
            best = res
    state = obj.state(best.x)
    value = coherent_information(g.assembled, state.assemble())
    _, grad = obj.value_and_grad(best.x)
    return OptimizationResult(value, state, restarts, bool(best.success), float(np.linalg.norm(grad)), tuple(history))


def maximize_coherent_information(ch: KrausChannel, **kw) -> OptimizationResult:
    """Plain channel maximization, as a single-block GDS."""
    return maximize_coherent_information_gds(build_gds([ch]), **kw)


def block_decomposition_value(g: GdsChannel, state: BlockDiagState) -> float:
    """``H(p) + Σ p_i I_c(ρ_i, N_i) - χ({p_i, ω_i})`` evaluated term by term."""
    probs = state.probs
    ic = sum(p * coherent_information(s, r) for p, s, r in zip(probs, g.subchannels, state.block_states) if p > 0)
    omegas = [_hermitize(apply_complement(s, r)) for s, r in zip(g.subchannels, state.block_states)]
    return shannon_entropy(probs) + ic - holevo_chi(Ensemble(probs, tuple(omegas)))


# ------------------------------------------------------------ bounds


def _log2_sum_exp2(values) -> float:
    v = np.asarray(values, dtype=float)
    m = np.max(v)
    return float(m + np.log2(np.sum(2.0 ** (v - m))))


@dataclass(frozen=True)
class Q1LowerBound:
    bound: float
    trivial: float
    reported: float
    block_values: tuple
    max_distance: float


def q1_lower_bound_gds(g: GdsChannel, per_block_optima) -> Q1LowerBound:
    """Analytic lower bound on ``Q¹`` from per-block inputs.

    ``per_block_optima`` holds ``(ρ_i, value_i)`` pairs; the values are
    recomputed from ``ρ_i`` and must agree with the supplied ones.  The
    bound is ``log2 Σ 2^{v_i} - (log2(n+1)/2) max ||ω_i - ω_j||_1``; the
    trivial bound is ``max v_i`` and the reported value is the larger of
    the two, clamped at 0 (a pure input always gives ``I_c = 0``).
    """
    if len(per_block_optima) != g.n_blocks:
        raise ValueError("need one (state, value) pair per block")
    values, omegas = [], []
    for s, (rho, claimed) in zip(g.subchannels, per_block_optima):
        v = coherent_information(s, rho)
        if claimed is not None and abs(v - claimed) > 1e-6:
            raise ValueError(f"claimed block value {claimed} does not match recomputed {v}")
        values.append(v)
        omegas.append(_hermitize(apply_complement(s, rho)))
    dist = max_pairwise_distance(omegas)
    bound = _log2_sum_exp2(values) - np.log2(g.n_blocks) / 2 * dist
    trivial = max(values)
    return Q1LowerBound(float(bound), float(trivial), float(max(bound, trivial, 0.0)), tuple(values), float(dist))


@dataclass(frozen=True)
class Q1UpperBound:
    bound: float
    trivial: float


def q1_upper_bound_equal(g: GdsChannel, shared_q1: float, complement_outputs) -> Q1UpperBound:
    """Upper bound on ``Q¹`` when all subchannels share the one-shot value ``shared_q1``.

    ``complement_outputs`` are the environment states ``ω_i`` reached by
    the per-block optimal inputs; ``ω̄`` is their uniform mean.
    """
    omegas = [np.asarray(w) for w in complement_outputs]
    if len(omegas) != g.n_blocks:
        raise ValueError("need one environment state per block")
    mean = sum(omegas) / len(omegas)
    exps = [-trace_norm(w - mean) ** 2 / 2 for w in omegas]
    bound = shared_q1 + _log2_sum_exp2(exps)
    trivial = shared_q1 + np.log2(g.n_blocks)
    return Q1UpperBound(float(bound), float(trivial))


def _block_average(ensembles):
    return [e.average() for e in ensembles]


def _p1_value(probs, ip, omegas) -> float:
    keep = [k for k, p in enumerate(probs) if p > 0]
    chi = holevo_chi(Ensemble(tuple(probs[k] for k in keep), tuple(omegas[k] for k in keep)))
    return shannon_entropy(probs) + float(np.dot(probs, ip)) - chi


def p1_lower_bound_gds(g: GdsChannel, per_block_ensembles, probs=None, restarts: int = 8, seed: int = 0) -> float:
    """Lower bound on ``P¹`` from per-block ensembles.

    Evaluates ``H(p) + Σ p_i I_p(E_i, N_i) - χ({p_i, ω_i})`` with
    ``ω_i = N_i^c(ρ̄_i)`` at the given block distribution, or maximizes it
    over ``p`` when none is supplied.
    """
    ens = list(per_block_ensembles)
    if len(ens) != g.n_blocks:
        raise ValueError("need one ensemble per block")
    ip = np.array([private_information(e, s) for e, s in zip(ens, g.subchannels)])
    omegas = [_hermitize(apply_complement(s, a)) for s, a in zip(g.subchannels, _block_average(ens))]
    if probs is not None:
        return _p1_value(np.asarray(probs, dtype=float), ip, omegas)

    def neg(z):
        q = np.exp(z - z.max())
        return -_p1_value(q / q.sum(), ip, omegas)

    best = -neg(np.zeros(g.n_blocks))
    for r in range(restarts):
        z0 = np.random.default_rng(seed + r).normal(size=g.n_blocks) if r else np.log(2.0 ** ip)
        res = minimize(neg, z0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        best = max(best, -res.fun)
    return float(best)


def union_ensemble(g: GdsChannel, per_block_ensembles, probs) -> Ensemble:
    """The full-space ensemble ``{p_i q_ik, ρ_ik ⊕ 0}``."""
    ps, states = [], []
    for i, (pi, e) in enumerate(zip(probs, per_block_ensembles)):
        for q, s in zip(e.probs, e.states):
            ps.append(pi * q)
            states.append(g.in_blocks.embed(i, s))
    ps = np.asarray(ps)
    return Ensemble(tuple(ps / ps.sum()), tuple(states))


def c1_lower_bound_gds(g: GdsChannel, per_block_ensembles) -> float:
    """``log2 Σ 2^{χ_i}`` with ``χ_i`` the Holevo information of block ``i``."""
    chis = [holevo_chi(e, s) for e, s in zip(per_block_ensembles, g.subchannels)]
    return _log2_sum_exp2(chis)


def direct_sum_capacities(values, kind: str) -> float:
    """One-shot capacities of a plain direct sum from those of the summands."""
    kind = kind.upper()
    if kind in ("Q1", "P1"):
        return float(max(values))
    if kind == "C1":
        return _log2_sum_exp2(values)
    raise ValueError("kind must be Q1, P1 or C1")
