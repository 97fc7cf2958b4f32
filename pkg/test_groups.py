#!/usr/bin/env python3
"""
測試有限群、餘循環、扭曲群代數與 Fourier 乘子
"""

import numpy as np
import pytest

from algebra import AlgebraElement
from channels import is_trace_channel, is_ucp
from errors import InvalidCocycle, InvalidGroup, InvalidLength, NotPositiveDefinite
from groups import (Cocycle, bicharacter_cocycle, canonical_trace, corpus_group, cyclic_group, dihedral_group,
                    direct_product, group_from_table, length_dirac, multiplier_adjoint_residual,
                    multiplier_channel, multiplier_contraction_check, positive_definite_function,
                    random_positive_definite, symmetric_group, twisted_group_algebra, validate_length,
                    word_length)


def test_group_tables():
    assert cyclic_group(4).order == 4
    assert symmetric_group(3).order == 6
    d4 = dihedral_group(4)
    assert d4.order == 8
    assert np.array_equal(d4.mult_table[d4.inverse, np.arange(8)], np.zeros(8, dtype=int))
    product = direct_product(cyclic_group(2), cyclic_group(3))
    assert product.order == 6

    with pytest.raises(InvalidGroup):
        group_from_table([[0, 1], [1, 1]])
    with pytest.raises(InvalidGroup):
        group_from_table([[0, 1, 2], [1, 0, 2], [2, 2, 0]])
    with pytest.raises(InvalidGroup):
        corpus_group("Q8")
    print("✅ 乘法表驗證正確")


def test_cocycles():
    group, cocycle = bicharacter_cocycle(2, 2)
    assert not cocycle.is_trivial
    bad = cocycle.values.copy()
    bad[1, 2] *= 1j
    with pytest.raises(InvalidCocycle):
        Cocycle(bad).validate(group)
    with pytest.raises(InvalidCocycle):
        Cocycle(2 * np.ones((4, 4))).validate(group)


def test_regular_representations_commute():
    """λ^σ_g 與 ρ^σ_h 互相交換"""
    for name in ("Z3", "S3", "Z2xZ2_twisted"):
        group, cocycle, _ = corpus_group(name)
        tga = twisted_group_algebra(group, cocycle)
        for g in range(group.order):
            for h in range(group.order):
                np.testing.assert_allclose(tga.left[g] @ tga.right[h], tga.right[h] @ tga.left[g], atol=1e-12)


def test_twisted_algebra_is_noncommutative():
    group, cocycle = bicharacter_cocycle(2, 2)
    tga = twisted_group_algebra(group, cocycle)
    a, b = tga.algebra.basis_element(1), tga.algebra.basis_element(2)
    assert np.max(np.abs((a @ b).coords - (b @ a).coords)) > 0.5
    tau = canonical_trace(tga)
    assert tau.is_tracial() and tau.is_faithful


def test_word_length():
    s3 = symmetric_group(3)
    length = word_length(s3, [1, 2])
    assert length[s3.identity] == 0
    assert set(length.tolist()) <= {0.0, 1.0, 2.0, 3.0}
    validate_length(s3, length)

    z4 = cyclic_group(4)
    np.testing.assert_allclose(word_length(z4, [1]), [0, 1, 2, 1])
    with pytest.raises(InvalidLength):
        validate_length(z4, [0, 1, 2, 3])          # l(g⁻¹) ≠ l(g)
    with pytest.raises(InvalidLength):
        validate_length(z4, [1, 1, 1, 1])
    with pytest.raises(InvalidLength):
        validate_length(z4, [0, 1, 5, 1])          # 次可加性
    with pytest.raises(InvalidLength):
        word_length(z4, [2])


def test_positive_definite_rejection():
    """Z/2 上 φ = (1, 1.5)：[[1, 1.5], [1.5, 1]] 的特徵值 −0.5"""
    z2 = cyclic_group(2)
    with pytest.raises(NotPositiveDefinite) as info:
        positive_definite_function(z2, [1.0, 1.5])
    assert info.value.eigenvalue == pytest.approx(-0.5)
    positive_definite_function(z2, [1.0, -1.0], normalized=True)
    with pytest.raises(NotPositiveDefinite):
        positive_definite_function(z2, [2.0, 1.0], normalized=True)
    print("✅ 非正定函數被拒絕")


def test_random_positive_definite():
    rng = np.random.default_rng(13)
    for name in ("Z3", "S3", "D4"):
        group, _, _ = corpus_group(name)
        values = random_positive_definite(group, rng, terms=3)
        positive_definite_function(group, values, normalized=True)


def test_multiplier_properties():
    rng = np.random.default_rng(17)
    for name in ("Z4", "S3", "Z2xZ2_twisted"):
        group, cocycle, generators = corpus_group(name)
        tga = twisted_group_algebra(group, cocycle)
        tau = canonical_trace(tga)
        values = random_positive_definite(group, rng)
        channel = multiplier_channel(tga, values)
        assert is_ucp(channel, tau) and is_trace_channel(channel, tau)
        assert multiplier_adjoint_residual(tga, values) < 1e-12

        triple = length_dirac(tga, word_length(group, generators))
        report = multiplier_contraction_check(tga, values, triple, samples=20, seed=1)
        assert report.violations == 0, report.max_ratio
    print("✅ 乘子為 UCP、跡通道且不增加 Lipschitz 常數")


def test_multiplier_action():
    tga = twisted_group_algebra(cyclic_group(3))
    channel = multiplier_channel(tga, [1.0, 0.25, 0.25])
    x = AlgebraElement(tga.algebra, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(channel(x).coords, [1.0, 0.5, 0.75])


if __name__ == "__main__":
    print("🧪 群模組測試")
    print("=" * 50)
    tests = [
        ("乘法表", test_group_tables),
        ("餘循環", test_cocycles),
        ("正則表示交換", test_regular_representations_commute),
        ("扭曲代數", test_twisted_algebra_is_noncommutative),
        ("字長", test_word_length),
        ("正定性", test_positive_definite_rejection),
        ("隨機正定函數", test_random_positive_definite),
        ("乘子性質", test_multiplier_properties),
        ("乘子作用", test_multiplier_action),
    ]
    results = []
    for name, fn in tests:
        try:
            fn()
            results.append((name, True))
        except Exception as e:
            print(f"❌ {name} 失敗: {e}")
            results.append((name, False))

    print("\n📊 測試結果摘要:")
    for name, ok in results:
        print(f"   {name}: {'✅ 通過' if ok else '❌ 失敗'}")
    if all(ok for _, ok in results):
        print("\n🎉 所有測試通過！")
