import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdscap.capacity import (
    BlockDiagState,
    CoherentInformationObjective,
    Ensemble,
    block_decomposition_value,
    c1_lower_bound_gds,
    coherent_information,
    concavity_bounds,
    direct_sum_capacities,
    holevo_chi,
    maximize_coherent_information,
    maximize_coherent_information_gds,
    p1_lower_bound_gds,
    private_information,
    q1_lower_bound_gds,
    q1_upper_bound_equal,
    union_ensemble,
)
from gdscap.cdc import CdcParams, build_cdc, depolarizing_block
from gdscap.channel import amplitude_damping, apply_complement, bit_flip, identity_channel, phase_flip, random_channel
from gdscap.gds import build_gds
from gdscap.linalg import InvalidStateError, binary_entropy, direct_sum
from oracles import coherent_info_loops, entropy_bits, random_density


def basis_state(d, k):
    e = np.zeros((d, d))
    e[k, k] = 1
    return e


def cdc_ensemble(g):
    return Ensemble(tuple([1 / g.n_blocks] * g.n_blocks),
                    tuple(g.in_blocks.embed(i, np.eye(d) / d) for i, d in enumerate(g.in_blocks.sizes)))


def test_ensemble_validation():
    with pytest.raises(ValueError):
        Ensemble((0.5, 0.6), (np.eye(2) / 2, np.eye(2) / 2))
    with pytest.raises(InvalidStateError):
        Ensemble((1.0,), (np.eye(2),))
    with pytest.raises(ValueError):
        BlockDiagState((0.5, 0.5), (np.eye(1),))


def test_coherent_information_examples(rng):
    assert coherent_information(identity_channel(3), np.eye(3) / 3) == pytest.approx(math.log2(3))
    dep = depolarizing_block(2, 2)
    rho = random_density(2, rng)
    assert coherent_information(dep, rho) == pytest.approx(-entropy_bits(rho), abs=1e-12)
    p = 0.2
    g = build_gds([phase_flip(p), bit_flip(p)])
    assert coherent_information(g, np.eye(4) / 4) == pytest.approx(2 - binary_entropy(p), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_coherent_information_matches_loops(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(3, 2, 3, rng)
    rho = random_density(3, rng)
    assert coherent_information(ch, rho) == pytest.approx(coherent_info_loops(ch.kraus, rho), abs=1e-10)


def test_block_decomposition_identity(rng):
    g = build_gds([random_channel(2, 2, 3, rng), random_channel(1, 2, 3, rng), random_channel(3, 2, 3, rng)])
    state = BlockDiagState((0.3, 0.2, 0.5), tuple(random_density(d, rng) for d in (2, 1, 3)))
    assert block_decomposition_value(g, state) == pytest.approx(coherent_information(g, state.assemble()), abs=1e-10)


def test_holevo_examples():
    orth = Ensemble((1 / 3,) * 3, tuple(basis_state(3, k) for k in range(3)))
    assert holevo_chi(orth) == pytest.approx(math.log2(3))
    same = Ensemble((0.4, 0.6), (np.eye(2) / 2, np.eye(2) / 2))
    assert holevo_chi(same) == pytest.approx(0, abs=1e-12)
    g = build_cdc(CdcParams(2, 2))
    ens = cdc_ensemble(g)
    outs = [g.out_blocks.embed(i, np.eye(d) / d) for i, d in enumerate(g.out_blocks.sizes)]
    brute = entropy_bits(sum(outs) / 3) - sum(entropy_bits(o) for o in outs) / 3
    assert holevo_chi(ens, g) == pytest.approx(brute, abs=1e-12) == pytest.approx(math.log2(3))


def test_private_information_examples(rng):
    for n in (1, 2):
        g = build_cdc(CdcParams(2, n))
        ens = cdc_ensemble(g)
        assert private_information(ens, g) == pytest.approx(math.log2(n + 1), abs=1e-12)
        assert private_information(ens, g) == pytest.approx(holevo_chi(ens, g), abs=1e-9)
    assert private_information(Ensemble((1.0,), (random_density(2, rng),)), amplitude_damping(0.2)) == pytest.approx(0, abs=1e-12)
    orth = Ensemble((0.5, 0.5), (basis_state(2, 0), basis_state(2, 1)))
    assert private_information(orth, identity_channel(2)) == pytest.approx(1)


def test_concavity_examples():
    orth = Ensemble((0.5, 0.5), (basis_state(2, 0), basis_state(2, 1)))
    lower, upper = concavity_bounds(orth)
    assert upper == pytest.approx(1) and holevo_chi(orth) == pytest.approx(1)
    assert lower <= 1 + 1e-12
    same = Ensemble((0.5, 0.5), (np.eye(2) / 2, np.eye(2) / 2))
    assert concavity_bounds(same) == pytest.approx((0, 0))
    mixed = Ensemble((0.5, 0.5), (basis_state(2, 0), np.eye(2) / 2))
    lower, upper = concavity_bounds(mixed)
    chi = entropy_bits(np.diag([0.75, 0.25])) - 0.5
    assert upper == pytest.approx(0.5)
    assert lower == pytest.approx(0.125)
    assert holevo_chi(mixed) == pytest.approx(chi)
    assert lower <= chi <= upper


def test_concavity_upper_bound_random(rng):
    for _ in range(1000):
        d, m = rng.integers(1, 7), rng.integers(1, 5)
        probs = rng.dirichlet(np.ones(m))
        ens = Ensemble(tuple(probs), tuple(random_density(d, rng) for _ in range(m)))
        chi = holevo_chi(ens)
        lower, upper = concavity_bounds(ens)
        assert chi >= -1e-12
        assert lower - 1e-9 <= chi <= upper + 1e-9


def test_gradient_matches_finite_differences(rng):
    g = build_gds([random_channel(2, 2, 3, rng), random_channel(3, 2, 3, rng), random_channel(1, 3, 3, rng)])
    obj = CoherentInformationObjective(g)
    for _ in range(20):
        x = rng.normal(size=obj.n_params)
        _, grad = obj.value_and_grad(x)
        h = 1e-5
        fd = np.array([(obj.value_and_grad(x + h * e)[0] - obj.value_and_grad(x - h * e)[0]) / (2 * h)
                       for e in np.eye(obj.n_params)])
        assert np.max(np.abs(fd - grad)) <= 1e-4 * max(1.0, np.max(np.abs(grad)))


def test_optimizer_examples():
    g = build_gds([phase_flip(0.2), bit_flip(0.2)])
    r = maximize_coherent_information_gds(g, restarts=4)
    assert r.value == pytest.approx(2 - binary_entropy(0.2), abs=1e-6)
    assert r.value == pytest.approx(1.278072, abs=1e-6)
    cdc = build_cdc(CdcParams(2, 1))
    v = maximize_coherent_information_gds(cdc, restarts=8).value
    assert 0.5 - 1e-9 <= v <= math.log2(1 + 1 / math.sqrt(2))
    ad = amplitude_damping(0.2)
    single = maximize_coherent_information(ad, restarts=4).value
    plain = max(coherent_information(ad, np.diag([1 - q, q])) for q in np.linspace(0, 1, 2001))
    assert single == pytest.approx(plain, abs=1e-6)


def test_optimizer_reproducible_and_recomputed(rng):
    g = build_gds([random_channel(2, 2, 2, rng), random_channel(2, 2, 2, rng)])
    a = maximize_coherent_information_gds(g, restarts=3, seed=5)
    b = maximize_coherent_information_gds(g, restarts=3, seed=5)
    assert a.value == b.value
    assert coherent_information(g, a.argument.assemble()) == pytest.approx(a.value, abs=1e-9)


def test_q1_lower_bound_examples():
    n = 2
    g = build_cdc(CdcParams(2, n))
    pure = [(basis_state(d, 0), 0.0) for d in g.in_blocks.sizes]
    lb = q1_lower_bound_gds(g, pure)
    assert lb.reported >= min(math.log2(n + 1) / d for d in g.out_blocks.sizes) - 1e-12
    assert lb.bound == pytest.approx(math.log2(n + 1) / 2 ** n)
    ad = amplitude_damping(0.2)
    rho = np.diag([0.6, 0.4])
    v = coherent_information(ad, rho)
    same = q1_lower_bound_gds(build_gds([ad, ad, ad]), [(rho, v)] * 3)
    assert same.bound == pytest.approx(math.log2(3) + v)
    # dephasing blocks with orthogonal environment outputs cancel exactly
    f = build_gds([depolarizing_block(1, 2), depolarizing_block(2, 1)])
    lb = q1_lower_bound_gds(f, [(np.eye(1), 0.0), (basis_state(2, 0), 0.0)])
    assert lb.reported >= 0


def test_q1_lower_bound_never_beats_optimizer():
    for params in (CdcParams(2, 1), CdcParams(2, 2), CdcParams(3, 1)):
        g = build_cdc(params)
        lb = q1_lower_bound_gds(g, [(basis_state(d, 0), 0.0) for d in g.in_blocks.sizes])
        opt = maximize_coherent_information_gds(g, restarts=4).value
        assert lb.reported <= opt + 1e-6


def test_q1_upper_bound_examples():
    g = build_gds([amplitude_damping(0.6)] * 2)
    w = np.diag([1.0, 0.0])
    assert q1_upper_bound_equal(g, 0.3, [w, w]).bound == pytest.approx(0.3 + 1)
    # two blocks at trace distance 1 from their mean
    w0, w1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    mean = (w0 + w1) / 2
    assert np.sum(np.abs(np.linalg.eigvalsh(w0 - mean))) == pytest.approx(1)
    ub = q1_upper_bound_equal(g, 0.3, [w0, w1])
    assert ub.bound == pytest.approx(0.3 + math.log2(2 * 2 ** -0.5)) == pytest.approx(0.8)
    assert ub.trivial == pytest.approx(1.3)
    triple = build_gds([amplitude_damping(x) for x in (0.6, 0.7, 0.8)])
    outs = [apply_complement(s, basis_state(2, 0)) for s in triple.subchannels]
    assert q1_upper_bound_equal(triple, 0.0, outs).bound == pytest.approx(math.log2(3))


def test_p1_and_c1_examples(rng):
    for n in (1, 2):
        g = build_cdc(CdcParams(2, n))
        ens = [Ensemble((1.0,), (np.eye(d) / d,)) for d in g.in_blocks.sizes]
        assert p1_lower_bound_gds(g, ens) == pytest.approx(math.log2(n + 1), abs=1e-9)
        assert c1_lower_bound_gds(g, ens) == pytest.approx(math.log2(n + 1))
    ch = random_channel(2, 2, 2, rng)
    e = Ensemble((0.5, 0.5), (random_density(2, rng), random_density(2, rng)))
    assert p1_lower_bound_gds(build_gds([ch]), [e]) == pytest.approx(private_information(e, ch), abs=1e-10)
    assert c1_lower_bound_gds(build_gds([ch]), [e]) == pytest.approx(holevo_chi(e, ch))
    idg = build_gds([identity_channel(2)] * 3)
    basis = Ensemble((0.5, 0.5), (basis_state(2, 0), basis_state(2, 1)))
    assert c1_lower_bound_gds(idg, [basis] * 3) == pytest.approx(math.log2(6))


def test_p1_identical_complements_attains_log_sum():
    # identical blocks: the Holevo term vanishes and the best p gives log2 sum 2^{I_p}
    ad = amplitude_damping(0.2)
    g = build_gds([ad, ad])
    e = Ensemble((0.5, 0.5), (basis_state(2, 0), basis_state(2, 1)))
    ip = private_information(e, ad)
    assert p1_lower_bound_gds(g, [e, e]) == pytest.approx(math.log2(2 * 2 ** ip), abs=1e-8)


def test_p1_matches_union_ensemble(rng):
    g = build_gds([random_channel(2, 2, 3, rng), random_channel(3, 3, 3, rng)])
    ens = [Ensemble((0.3, 0.7), (random_density(2, rng), random_density(2, rng))),
           Ensemble((1.0,), (random_density(3, rng),))]
    probs = (0.4, 0.6)
    assert p1_lower_bound_gds(g, ens, probs=probs) == pytest.approx(
        private_information(union_ensemble(g, ens, probs), g), abs=1e-10)


@pytest.mark.parametrize("values, kind, expected", [
    ([0.5, 0.9], "Q1", 0.9),
    ([1, 1], "C1", 2.0),
    ([0, math.log2(3)], "P1", math.log2(3)),
])
def test_direct_sum_capacities(values, kind, expected):
    assert direct_sum_capacities(values, kind) == pytest.approx(expected)


def test_block_diagonal_optimality_small(rng):
    for _ in range(50):
        dims = rng.integers(1, 4, size=rng.integers(2, 4))
        g = build_gds([random_channel(int(d), int(d), 2 * 3, rng) for d in dims])
        rho = random_density(g.dim_in, rng)
        trunc = direct_sum([rho[g.in_blocks.slice(i), g.in_blocks.slice(i)] for i in range(g.n_blocks)])
        assert coherent_information(g, rho) <= coherent_information(g, trunc) + 1e-9
