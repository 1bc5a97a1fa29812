import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shallow_sampler import adversary as adv
from shallow_sampler.bintree import build_tree, layer_partition, validate_forest_partition
from shallow_sampler.pmf import Pmf, total_variation
from shallow_sampler.targets import (
    BiasedSource,
    TargetKind,
    augmented_target_pmf,
    modp_weight_pmf,
    uniformity_defect,
)


def x_parity(k):
    return Pmf.from_dict({format(x, f"0{k}b") + str(bin(x).count("1") % 2): 2.0**-k for x in range(1 << k)})


def test_evaluate_and_json():
    f = adv.parity_chain(3)
    assert adv.evaluate(f, "101") == "1111"
    assert adv.evaluate(f, 0) == "0000"
    back = adv.LocalFunction.from_json(f.dumps())
    assert back == f
    with pytest.raises(ValueError):
        adv.evaluate(f, "10")


def test_rule_validation():
    with pytest.raises(ValueError):
        adv.OutputRule((0, 1), (0, 1))
    with pytest.raises(ValueError):
        adv.LocalFunction(2, 1, [adv.OutputRule((0, 1), (0, 1, 1, 0))])


def test_parity_chain_is_exact():
    for k in (2, 3, 5):
        f = adv.parity_chain(k)
        assert total_variation(adv.output_pmf(f), x_parity(k)) < 1e-15


def test_dependency_graph():
    g = adv.dependency_graph(adv.parity_chain(3))
    assert g.shape == (3, 4)
    assert g[0].tolist() == [True, True, False, False]
    assert g[2].tolist() == [False, False, True, True]


def test_parity_chain_blocks():
    f = adv.parity_chain(4)
    dec = adv.viola_block_decomposition(f)
    assert dec.s >= 1
    assert adv.verify_block_decomposition(dec) == []
    # the final bit reads input 3, so input 3 is never an x variable
    assert 3 not in dec.x_indices


def test_constant_function_has_no_blocks():
    dec = adv.viola_block_decomposition(adv.constant_function("0110", l=3))
    assert dec.s == 0
    assert dec.residual == frozenset({0, 1, 2})


def test_identity_blocks_never_fixed():
    dec = adv.viola_block_decomposition(adv.identity_function(4))
    assert dec.x_indices == (0, 1, 2)
    for y in ("0", "1"):
        assert not any(adv.block_is_y_fixed(dec, i, y) for i in range(dec.s))
    with pytest.raises(IndexError):
        adv.block_is_y_fixed(dec, 3, "0")


@pytest.mark.parametrize("seed", range(6))
def test_random_decompositions_verify(seed):
    rng = np.random.default_rng(seed)
    f = adv.random_local_function(8, 6, 2, rng)
    assert adv.verify_block_decomposition(adv.viola_block_decomposition(f)) == []


@pytest.mark.parametrize("seed", range(5))
def test_tree_forest_decomposition_valid(seed):
    tree = build_tree(7)
    tp = layer_partition(tree, 1)
    f = adv.random_local_function(14, 13, 2, np.random.default_rng(seed))
    dec, fp = adv.tree_forest_decomposition(f, tree, tp)
    ok, problems = validate_forest_partition(fp, tp)
    assert ok, problems
    assert adv.verify_block_decomposition(dec) == []


def test_block_is_minimal_examples():
    tree = build_tree(7)
    tp = layer_partition(tree, 1)
    f = adv.identity_function(13)
    _, fp = adv.tree_forest_decomposition(f, tree, tp)
    assert fp.s >= 1
    out_of = adv.tree_output_index(7)
    forest = fp.forests[1]
    bits = [0] * 13
    # all x set and every root path odd inside the forest: the sum is as small as it gets
    for kind, v in forest:
        if kind == "x":
            bits[out_of[(kind, v)]] = 1
    for t in tp.small_trees:
        if t.variables <= forest:
            bits[out_of[("d", t.root)]] = 1
    z = "".join(map(str, bits))
    parity_ok = all(
        sum(bits[out_of[("d", e)]] for e in adv.root_path(tree, t.root)) % 2 == 1
        for t in tp.small_trees if t.variables <= forest
    )
    if parity_ok:
        assert adv.block_is_minimal(z, fp, tp, 1, method="both")
    zero = "0" * 13
    assert adv.block_is_minimal(zero, fp, tp, 1, method="both") is False
    with pytest.raises(IndexError):
        adv.block_is_minimal(zero, fp, tp, 0)


def test_target_never_lands_in_ts():
    n = 5
    target = augmented_target_pmf(TargetKind.MAJMOD_PARITY, n, 3)
    f = adv.random_local_function(n + 2, n, 2, np.random.default_rng(1))
    cfg = adv.StatTestConfig.from_alpha("MAJMOD", f, 0.1, 3)
    assert adv.test_pass_probabilities(target, cfg)["TS"] == 0


def test_witnessed_gap_below_tvd():
    n = 5
    target = augmented_target_pmf(TargetKind.MAJMOD_PARITY, n, 3)
    for seed in range(5):
        f = adv.random_local_function(n + 2, n, 2, np.random.default_rng(seed))
        cfg = adv.StatTestConfig.from_alpha("MAJMOD", f, 0.1, 3)
        gap = adv.witnessed_gap(f, target, cfg)
        assert gap["witnessed_lower_bound"] <= gap["tvd"] + 1e-12


def test_membership_labels():
    f = adv.parity_chain(4)
    cfg = adv.StatTestConfig.from_alpha("MAJMOD", f, 0.1, 3)
    assert "T0" in adv.test_membership("00000", cfg)
    with pytest.raises(ValueError):
        adv.test_membership("000", cfg)


def test_mmp_sum_probability_small_case():
    # a = (1, 1), u = (1, 1), p = 3: enumerate by hand
    want = 0.0
    for x1 in (0, 1):
        for x2 in (0, 1):
            s = x1 + x2
            mm = 1 if s % 3 > 1.5 else 0
            want += 0.25 * ((mm ^ (s & 1)) == 0)
    assert adv.mmp_sum_probability(3, [1, 1], [1, 1], 0) == pytest.approx(want)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([3, 5, 7, 11]), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_mmp_bound_holds(p, t, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(1, p, size=t)
    u = rng.integers(0, 2, size=t)
    delta = uniformity_defect(modp_weight_pmf(t, p, a))
    bound = 0.5 - a.max() / (2 * p) - delta
    for b in (0, 1):
        assert adv.mmp_sum_probability(p, a, u, b) >= bound - 1e-12


def test_brute_force_full_locality():
    # with d = n_out inputs every distribution on 2 bits with dyadic weights is reachable
    target = Pmf.from_dict({"00": 0.25, "01": 0.25, "10": 0.5})
    res = adv.brute_force_min_tvd(2, 2, 2, target)
    assert res.min_tvd == pytest.approx(0)
    assert total_variation(adv.output_pmf(res.witness), target) == pytest.approx(0)
    with pytest.raises(ValueError):
        adv.brute_force_min_tvd(3, 2, 2, target)


def test_biased_stream():
    bits = adv.biased_input_stream(BiasedSource(0.25, 100_000), seed=3)
    assert bits.mean() == pytest.approx(0.25, abs=0.006)
    assert not adv.biased_input_stream(BiasedSource(0.5, 1000), seed=0).any()
    a = adv.biased_input_stream(BiasedSource(0.1, 50), seed=9)
    assert np.array_equal(a, adv.biased_input_stream(BiasedSource(0.1, 50), seed=9))
