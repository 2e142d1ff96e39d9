import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdscap.capacity import coherent_information, maximize_coherent_information
from gdscap.cdc import (
    CdcParams,
    ErasureParams,
    GuardExceeded,
    build_cdc,
    build_erasure,
    cdc_bounds,
    cdc_offdiag_infnorm,
    combinatorial_offdiag_infnorm,
    erasure_capacity,
    fig1_csv,
    fig1_data,
    joint_coherent_information,
    parse_p_rule,
    superadditivity_holds,
    superadditivity_max_lambda,
    window_sets,
)
from gdscap.channel import apply
from gdscap.linalg import von_neumann_entropy
from oracles import random_density


def test_params_validation():
    assert CdcParams(2, 3).alpha == 3
    assert CdcParams(3, 2).dims_a == (1, 3, 9) and CdcParams(3, 2).dims_b == (9, 3, 1)
    assert CdcParams(2, 1, alpha=3).dims_b == (8, 4)
    for bad in [(1, 1), (2, 0), (2.5, 1)]:
        with pytest.raises(ValueError):
            CdcParams(*bad)
    with pytest.raises(ValueError):
        CdcParams(2, 2, alpha=1)


def test_build_cdc_blocks(rng):
    g = build_cdc(CdcParams(2, 1))
    np.testing.assert_allclose(apply(g.subchannels[0], [[1]]), np.eye(2) / 2)
    np.testing.assert_allclose(apply(g.subchannels[1], random_density(2, rng)), [[1]])
    assert all(s.dim_env == 2 for s in g.subchannels)
    big = build_cdc(CdcParams(3, 2, alpha=3))
    for s in big.subchannels:
        rho = random_density(s.dim_in, rng)
        np.testing.assert_allclose(apply(s, rho), np.eye(s.dim_out) / s.dim_out, atol=1e-14)


def test_blocks_have_zero_one_shot_capacity():
    g = build_cdc(CdcParams(2, 2))
    for s in g.subchannels:
        assert maximize_coherent_information(s, restarts=2).value <= 1e-9


@pytest.mark.parametrize("p, i, j, product", [(2, 0, 1, 0.5), (3, 0, 2, 1 / 9)])
def test_offdiag_products(p, i, j, product):
    g = build_cdc(CdcParams(p, 2))
    a, b = cdc_offdiag_infnorm(g, i, j), cdc_offdiag_infnorm(g, j, i)
    assert a.agree and b.agree
    assert a.value * b.value == pytest.approx(product, rel=1e-12)


def test_offdiag_rejects_diagonal_and_foreign():
    g = build_cdc(CdcParams(2, 1))
    with pytest.raises(ValueError):
        cdc_offdiag_infnorm(g, 1, 1)


def test_offdiag_grid_agreement():
    for p, n in itertools.product((2, 3), (1, 2, 3)):
        g = build_cdc(CdcParams(p, n))
        for i, j in itertools.permutations(range(n + 1), 2):
            r = cdc_offdiag_infnorm(g, i, j)
            assert abs(r.numeric - r.combinatorial) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(2, 12), st.integers(1, 4))
def test_window_sizes_non_divisible(db_i, db_j, da_i):
    if db_i <= db_j:
        db_i, db_j = db_j + db_i, db_j
    lo = db_i // db_j
    for r in range(db_j):
        sets = window_sets(db_i, db_j, da_i, r)
        assert all(lo <= len(s) <= lo + 1 for s in sets)
        flat = [m for s in sets for m in s]
        assert flat == list(range(len(flat)))


def test_combinatorial_norm_non_divisible_pair_matches_numeric():
    # a synthetic pair of completely depolarizing blocks sharing 6 Kraus labels
    from gdscap.cdc import depolarizing_block, offdiag_trace_abs
    from gdscap.gds import build_gds
    from gdscap.linalg import spectral_norm

    g = build_gds([depolarizing_block(2, 3), depolarizing_block(3, 2)])
    for i, j in [(0, 1), (1, 0)]:
        da, db = g.in_blocks.sizes, g.out_blocks.sizes
        comb = combinatorial_offdiag_infnorm(db[i], db[j], da[i], da[j])
        assert spectral_norm(offdiag_trace_abs(g, i, j)) == pytest.approx(comb, abs=1e-10)


@pytest.mark.parametrize("p, n, lower, upper, pc", [
    (4, 1, 0.25, math.log2(1.5), 1.0),
    (16, 3, math.log2(4) / 16 ** 3, math.log2(1.75), 2.0),
])
def test_cdc_bounds(p, n, lower, upper, pc):
    b = cdc_bounds(CdcParams(p, n))
    assert (b.q1_lower, b.q_upper, b.pc_exact) == pytest.approx((lower, upper, pc))
    assert b.q_upper < b.pc_exact
    if b.q_certificate is not None:
        assert b.q_certificate.feasible and b.q_certificate.value == pytest.approx(upper)
        assert b.c_certificate.feasible and b.c_certificate.value == pytest.approx(pc)


def test_quantum_bound_vanishes_for_large_p():
    qs = [cdc_bounds(CdcParams(p, 1), certify=False).q_upper for p in (4, 64, 1024, 2 ** 20)]
    assert all(a > b for a, b in zip(qs, qs[1:])) and qs[-1] < 2e-3
    assert cdc_bounds(CdcParams(2 ** 20, 1), certify=False).pc_exact == 1


def test_erasure_channel(rng):
    rho = random_density(3, rng)
    zero = build_erasure(ErasureParams(0.0, 3))
    out = apply(zero, rho)
    np.testing.assert_allclose(out[:3, :3], rho)
    assert out[3, 3] == 0
    full = apply(build_erasure(ErasureParams(1.0, 3)), rho)
    np.testing.assert_allclose(full, np.diag([0, 0, 0, 1]), atol=1e-15)
    assert erasure_capacity(0.25, 4) == pytest.approx(1.0)
    assert erasure_capacity(0.6, 4) == 0
    assert coherent_information(zero, np.eye(3) / 3) == pytest.approx(math.log2(3))
    with pytest.raises(ValueError):
        ErasureParams(1.5, 2)


@pytest.mark.parametrize("n, lam, expected", [(1, 0.5, 0.5), (2, 0.75, 0.25 * math.log2(3)), (2, 1.0, 0.0)])
def test_joint_values(n, lam, expected):
    assert joint_coherent_information(CdcParams(2, n), lam) == pytest.approx(expected, abs=1e-9)


def test_joint_guard():
    with pytest.raises(GuardExceeded):
        joint_coherent_information(CdcParams(2, 6), 0.5)


def test_max_lambda():
    lam = superadditivity_max_lambda(CdcParams(16, 1))
    assert lam == pytest.approx(1 - math.log2(1.25))
    assert superadditivity_max_lambda((2, 2)) is None
    # fixed n: the window grows with p
    lams = [superadditivity_max_lambda((p, 2)) for p in (16, 64, 256, 1024)]
    assert all(a < b for a, b in zip(lams, lams[1:]))
    # fixed p: the closed form shrinks as n grows; with p = n^4 it grows toward 1
    fixed = [superadditivity_max_lambda((4096, n)) for n in (1, 2, 4, 8)]
    assert all(a > b for a, b in zip(fixed, fixed[1:]))
    scaled = [superadditivity_max_lambda((n ** 4, n)) for n in (2, 4, 8, 16)]
    assert all(a < b for a, b in zip(scaled, scaled[1:])) and scaled[-1] > 0.9


def test_window_midpoint_certified():
    for p, n in itertools.product((16, 64, 256), (1, 2, 3)):
        lam_max = superadditivity_max_lambda((p, n))
        if lam_max is None or lam_max <= 0.5:
            continue
        assert superadditivity_holds(p, n, (0.5 + lam_max) / 2)
        assert not superadditivity_holds(p, n, min(1.0, lam_max + 1e-6))


def test_p_rule_parser():
    assert parse_p_rule("n^4")(3) == 81
    assert parse_p_rule("16")(5) == 16
    assert parse_p_rule("2*n + 1")(3) == 7
    with pytest.raises(ValueError):
        parse_p_rule("__import__('os')")


def test_fig1_tables():
    rows = fig1_data("n^4", range(1, 21))
    gaps = [r.private_bits - r.q_upper_bits for r in rows]
    assert all(a < b for a, b in zip(gaps, gaps[1:]))
    assert rows[0].private_bits == 1
    const = fig1_data("2", range(1, 11))
    q = [r.q_upper_bits for r in const]
    assert all(a < b for a, b in zip(q, q[1:]))
    np.testing.assert_allclose(q, [math.log2(1 + n / math.sqrt(2)) for n in range(1, 11)])
    text = fig1_csv(fig1_data("16", range(1, 3)))
    lines = text.split("\n")
    assert lines[0] == "n,p,q_upper_bits,private_bits,lambda_max"
    assert lines[1] == "1,16,0.321928094887,1,0.678071905113"
    assert text.endswith("\n") and "\r" not in text
    assert "nan" in fig1_csv(fig1_data("2", range(1, 2)))
