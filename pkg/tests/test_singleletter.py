import math

import numpy as np
import pytest

from gdscap.channel import amplitude_damping, apply_complement, identity_channel
from gdscap.gds import build_gds
from gdscap.singleletter import (
    check_single_letter,
    cross_check,
    hadamard_complement_example,
    random_correlation_matrix,
    single_letter_capacity,
)

KET0 = np.array([1.0, 0.0])


@pytest.fixture(scope="module")
def ad_triple():
    return build_gds([amplitude_damping(g) for g in (0.6, 0.7, 0.8)])


def test_ad_triple_with_candidate(ad_triple):
    v = check_single_letter(ad_triple, [KET0] * 3)
    assert v.qualifies and v.route == "all_antidegradable"
    assert v.match_residual == 0
    assert single_letter_capacity(v) == pytest.approx(math.log2(3))


def test_ad_triple_search_finds_matching_states(ad_triple):
    v = check_single_letter(ad_triple, restarts=4)
    assert v.qualifies and v.match_residual <= 1e-7


def test_reordered_copies_qualify():
    g = build_gds([amplitude_damping(0.7), amplitude_damping(0.6)])
    v = check_single_letter(g, [KET0, KET0])
    assert v.qualifies and v.capacity_bits == pytest.approx(1)


def test_identity_blocks_do_not_qualify():
    v = check_single_letter(build_gds([identity_channel(2), identity_channel(2)]), restarts=2)
    assert not v.qualifies and v.route == "none"
    with pytest.raises(ValueError, match="does not qualify"):
        single_letter_capacity(v)


def test_candidate_count_checked(ad_triple):
    with pytest.raises(ValueError):
        check_single_letter(ad_triple, [KET0, KET0])


def test_bad_candidates_do_not_hurt(ad_triple):
    good = check_single_letter(ad_triple, restarts=4)
    bad = check_single_letter(ad_triple, [np.array([0.0, 1.0])] * 3, restarts=4)
    assert bad.match_residual <= max(good.match_residual, 1e-7)


@pytest.mark.parametrize("blocks, cap", [(2, 1.0), (4, 2.0)])
def test_hadamard_family_capacity(blocks, cap, rng):
    mats = [random_correlation_matrix(3, rng) for _ in range(blocks)]
    g = hadamard_complement_example(blocks - 1, mats)
    for s, m in zip(g.subchannels, mats):
        rho = np.diag(rng.dirichlet(np.ones(3))) + 0j
        rho[0, 1] = rho[1, 0] = 0.05
        np.testing.assert_allclose(apply_complement(s, rho), m * rho, atol=1e-12)
    # the uniform superposition always lands on M ⊙ J / 3, which differs per block,
    # but basis states |0> give |0><0| for every block
    v = check_single_letter(g, [np.eye(3)[0]] * blocks)
    assert v.route == "all_ppt" and v.qualifies
    assert v.capacity_bits == pytest.approx(cap)


@pytest.mark.parametrize("kind", ["identity", "ones"])
def test_hadamard_special_cases(kind):
    m = np.eye(2) if kind == "identity" else np.ones((2, 2))
    g = hadamard_complement_example(1, [m, m])
    v = check_single_letter(g, [KET0, KET0])
    assert v.qualifies and v.route == "all_ppt"


def test_hadamard_validation(rng):
    with pytest.raises(ValueError):
        hadamard_complement_example(1, [np.eye(2)])
    with pytest.raises(ValueError):
        hadamard_complement_example(1, [np.eye(2), 2 * np.eye(2)])
    with pytest.raises(ValueError):
        hadamard_complement_example(1, [np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        hadamard_complement_example(1, [np.eye(2), np.array([[1, 2], [2, 1]])])


def test_cross_check(ad_triple):
    v = check_single_letter(ad_triple, [KET0] * 3)
    cc = cross_check(ad_triple, v, restarts=4)
    assert cc.optimizer >= cc.capacity - 1e-3
    assert cc.upper_bound == pytest.approx(cc.capacity, abs=1e-12)
