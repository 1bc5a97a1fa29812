import itertools
import math

import numpy as np
import pytest

from shallow_sampler.bintree import build_tree
from shallow_sampler.pmf import Pmf, export_pmf, load_pmf, total_variation
from shallow_sampler.targets import (
    BiasedSource,
    TargetKind,
    augmented_target_pmf,
    bias_entropy,
    entropy_to_bias,
    majmod_xor_parity,
    mm_int,
    modp_envelope,
    modp_weight_pmf,
    pmmajmod,
    select_prime,
    uniformity_defect,
)


def test_mm_int():
    assert mm_int(3, 0) == 0
    assert mm_int(3, 2) == 1
    assert mm_int(5, 7) == 0
    assert mm_int(5, -1) == 1


def test_majmod_xor_parity():
    assert majmod_xor_parity(3, "11") == 1
    assert majmod_xor_parity(3, "000") == 0
    assert majmod_xor_parity(5, "10101") == 0
    with pytest.raises(ValueError):
        majmod_xor_parity(4, "1")


def test_pmmajmod_examples():
    tree = build_tree(4)
    assert pmmajmod(3, tree, (1, 1, 0), (1, 0, 1)) == 0
    for x in itertools.product((0, 1), repeat=3):
        assert pmmajmod(3, tree, x, (0, 0, 0)) == majmod_xor_parity(3, x)


def test_pmmajmod_sign_flip():
    # flipping d_1 negates the terms below edge e_1 (vertices 1 and 3)
    tree = build_tree(4)
    for x in itertools.product((0, 1), repeat=3):
        for d in itertools.product((0, 1), repeat=3):
            d2 = (1 - d[0],) + d[1:]
            s1 = _signed(tree, x, d)
            s2 = _signed(tree, x, d2)
            assert s1 - s2 == _signed_part(tree, x, d, {1, 3}) * 2


def _signed(tree, x, d):
    from shallow_sampler.bintree import path_sums

    h = path_sums(tree, d)
    return sum(xi * (1 - 2 * hi) for xi, hi in zip(x, h))


def _signed_part(tree, x, d, verts):
    from shallow_sampler.bintree import path_sums

    h = path_sums(tree, d)
    return sum(x[v - 1] * (1 - 2 * h[v - 1]) for v in verts)


def test_augmented_targets():
    mp = augmented_target_pmf(TargetKind.MAJMOD_PARITY, 3, 3)
    assert mp.as_dict() == pytest.approx({"000": 0.25, "011": 0.25, "101": 0.25, "111": 0.25})
    pm = augmented_target_pmf(TargetKind.PMMAJMOD, 3, 3)
    assert pm.bit_length == 5 and len(pm) == 16
    assert np.allclose(pm.probs, 1 / 16)


def test_total_variation():
    u = Pmf.uniform(3)
    even = Pmf.from_dict({f"{a}{b}{a ^ b}": 0.25 for a in (0, 1) for b in (0, 1)})
    assert total_variation(u, u) == 0
    assert total_variation(Pmf.point_mass("00"), Pmf.point_mass("11")) == 1
    assert total_variation(u, even) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        total_variation(u, Pmf.uniform(2))


def test_modp():
    pmf = modp_weight_pmf(9, 3)
    assert np.allclose(pmf, [170 / 512, 171 / 512, 171 / 512])
    assert uniformity_defect(pmf) == pytest.approx(1 / 768, abs=1e-15)
    assert uniformity_defect(pmf) <= modp_envelope(9, 3)
    assert np.allclose(modp_weight_pmf(1, 3), [0.5, 0.5, 0])
    assert np.allclose(modp_weight_pmf(5, 7, bias=0.5), np.eye(7)[0])


def test_modp_coefficients_against_enumeration():
    coeffs = [1, 2, 4, 3, 6]
    counts = np.zeros(7)
    for x in itertools.product((0, 1), repeat=5):
        counts[sum(a * b for a, b in zip(coeffs, x)) % 7] += 1
    assert np.allclose(modp_weight_pmf(5, 7, coeffs), counts / 32)


def test_entropy():
    assert bias_entropy(0) == 1
    assert bias_entropy(0.5) == 0
    assert bias_entropy(0.25) == pytest.approx(0.8112781, abs=1e-7)
    for h in np.linspace(0.01, 0.99, 25):
        assert bias_entropy(entropy_to_bias(h)) == pytest.approx(h, abs=1e-12)


def test_biased_source():
    src = BiasedSource(0.25, 3)
    w = src.input_weights()
    assert w.sum() == pytest.approx(1)
    assert w[0] == pytest.approx(0.75**3)
    with pytest.raises(ValueError):
        BiasedSource(0.6, 1)


def test_select_prime():
    assert select_prime(7, 0.45) == 3
    assert select_prime(1000, 0.5) == 31
    assert math.isclose(select_prime(2, 0.1), 3)


def test_pmf_roundtrip(tmp_path):
    pmf = Pmf.from_dict({"0": 0.5, "1": 0.5})
    export_pmf(pmf, tmp_path / "a.csv", "csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "bitstring,probability" and len(lines) == 3
    assert load_pmf(tmp_path / "a.csv") == pmf
    big = Pmf.from_dense(np.random.default_rng(0).random(1 << 16), 16)
    export_pmf(big, tmp_path / "b.json", "json")
    back = load_pmf(tmp_path / "b.json")
    assert np.array_equal(back.outcomes, big.outcomes) and np.array_equal(back.probs, big.probs)


def test_pmf_validation():
    with pytest.raises(ValueError):
        Pmf.from_dict({"0": 0.5, "1": 0.6})
    with pytest.raises(ValueError):
        Pmf.from_dict({"0": 1.5, "1": -0.5})
