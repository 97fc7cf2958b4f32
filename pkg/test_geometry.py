#!/usr/bin/env python3
"""
測試譜三元組、Kasparov 外積與半範數構造
"""

import itertools

import numpy as np
import pytest

from algebra import diagonal_algebra, matrix_algebra, scalar_algebra, tensor_algebra
from errors import GradingMissing, GradingUnexpected, InvalidTriple, SeminormNotCommutatorForm
from geometry import (commutator_seminorm, custom_seminorm, even_double, kasparov_product, left_tensor_seminorm,
                      make_triple, matrix_dirac_triple, metric_graph_triple, operator_norm_seminorm,
                      opposite_seminorm, opposite_triple, random_element, right_tensor_seminorm,
                      seminorm_domination_check, stability_kernel_check, sum_tensor_seminorm,
                      tensor_seminorm_lower_bound)
from groups import cyclic_group, length_dirac, length_dirac_op, twisted_group_algebra, word_length

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _toy_even():
    return make_triple(scalar_algebra(), [np.eye(2)], X, grading=Z, name="toy")


def _z2_triples():
    tga = twisted_group_algebra(cyclic_group(2))
    length = word_length(tga.group, [1])
    return tga, length_dirac(tga, length), length_dirac_op(tga, length)


def test_even_product_spectrum():
    """偶×偶：D = X⊗1 + Z⊗X，D² = 2"""
    product = kasparov_product(_toy_even(), _toy_even(), parity=(True, True))
    eigenvalues = np.linalg.eigvalsh(product.dirac)
    np.testing.assert_allclose(eigenvalues, [-np.sqrt(2)] * 2 + [np.sqrt(2)] * 2, atol=1e-12)
    assert product.is_even
    print("✅ 偶×偶外積特徵值為 ±√2")


def test_parity_combinations_validate():
    _, ta, tb = _z2_triples()
    even_a, even_b = even_double(ta), even_double(tb)
    for left, right, graded in ((ta, tb, True), (ta, even_b, False), (even_a, tb, False), (even_a, even_b, True)):
        product = kasparov_product(left, right)
        product.validate()
        assert product.is_even is graded

    with pytest.raises(GradingMissing):
        kasparov_product(ta, tb, parity=(True, False))
    with pytest.raises(GradingUnexpected):
        kasparov_product(even_a, tb, parity=(False, False))
    with pytest.raises(GradingUnexpected):
        even_double(even_a)


def test_odd_product_seminorm_on_z2():
    """L(λ_g ⊗ λ_g^op) = ‖X⊗Y − iY⊗X‖ = √2"""
    _, ta, tb = _z2_triples()
    seminorm = commutator_seminorm(kasparov_product(ta, tb))
    coords = np.zeros(4)
    coords[1 * 2 + 1] = 1.0
    assert seminorm(coords) == pytest.approx(np.sqrt(2))
    unit = seminorm.algebra.unit_coords
    assert seminorm(unit) == pytest.approx(0.0, abs=1e-12)
    print("✅ Z/2 奇×奇半範數值為 √2")


def test_invalid_triples():
    m2 = matrix_algebra(2)
    with pytest.raises(InvalidTriple):
        make_triple(m2, m2.basis, np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidTriple):
        make_triple(m2, m2.basis, X, grading=Z)       # 分次與表示不交換
    with pytest.raises(InvalidTriple):
        make_triple(m2, m2.basis[:3], X)


def test_opposite_triple_seminorm():
    """(A^op, π^t, D^t) 的半範數等於 L^op"""
    rng = np.random.default_rng(2)
    triple = matrix_dirac_triple(2, [Z])
    direct = opposite_seminorm(commutator_seminorm(triple))
    transposed = commutator_seminorm(opposite_triple(triple))
    for _ in range(10):
        coords = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert direct(coords) == pytest.approx(transposed(coords))


def test_tensor_seminorms():
    rng = np.random.default_rng(4)
    triple = matrix_dirac_triple(2, [Z])
    la = commutator_seminorm(triple)
    d2 = diagonal_algebra(2)
    left = left_tensor_seminorm(la, d2)
    right = right_tensor_seminorm(d2, la)
    both = sum_tensor_seminorm(la, operator_norm_seminorm(d2))
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    # (L⊗1)(a⊗1) = L(a)
    assert left(np.kron(a, d2.unit_coords)) == pytest.approx(la(a))
    assert right(np.kron(d2.unit_coords, a)) == pytest.approx(la(a))
    assert both.algebra.dim == 8 and len(both.blocks()) == 2

    x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    element = left.algebra.element(x)
    assert tensor_seminorm_lower_bound(la, d2, element, samples=50) <= left(x) + 1e-9


def test_custom_seminorm_is_black_box():
    m2 = matrix_algebra(2)
    seminorm = custom_seminorm(m2, lambda x: x.norm())
    assert not seminorm.is_commutator_form
    with pytest.raises(SeminormNotCommutatorForm):
        seminorm.blocks()
    assert seminorm(m2.unit_coords) == pytest.approx(1.0)


def test_domination_all_parities():
    _, ta, tb = _z2_triples()
    for left, right in ((ta, tb), (even_double(ta), tb), (ta, even_double(tb)),
                        (even_double(ta), even_double(tb))):
        report = seminorm_domination_check(left, right, samples=30, seed=1)
        assert report.passed, report.max_violation
    print("✅ 四種奇偶組合的半範數控制皆成立")


@pytest.mark.parametrize("even_n,even_a,even_b", list(itertools.product([False, True], repeat=3)))
def test_stability_kernel(even_n, even_a, even_b):
    """八種奇偶組合下 L(1⊗1ᵒᵖ⊗x) = L(x)"""
    _, ta, tb = _z2_triples()
    tn = matrix_dirac_triple(2, [Z])
    tn = even_double(tn) if even_n else tn
    ta = even_double(ta) if even_a else ta
    tb = even_double(tb) if even_b else tb
    assert stability_kernel_check(tn, ta, tb, samples=3) < 1e-9


def _seminorm_family():
    _, ta, tb = _z2_triples()
    l_a, l_b = commutator_seminorm(ta), commutator_seminorm(tb)
    pauli = commutator_seminorm(matrix_dirac_triple(2, [Z, X]))
    return [
        ("kasparov", commutator_seminorm(kasparov_product(ta, tb))),
        ("graph", commutator_seminorm(metric_graph_triple(3, [(0, 1, 1.0), (1, 2, 0.5)]))),
        ("pauli", pauli),
        ("sum_tensor", sum_tensor_seminorm(l_a, l_b)),
        ("left_tensor", left_tensor_seminorm(commutator_seminorm(matrix_dirac_triple(2, [Z])), diagonal_algebra(2))),
        ("opposite", opposite_seminorm(pauli)),
    ]


def test_seminorm_axioms():
    """三角不等式、齊次性、L(a*) = L(a)、L(1) = 0"""
    rng = np.random.default_rng(41)
    scale = 0.7 - 1.3j
    for name, seminorm in _seminorm_family():
        algebra = seminorm.algebra
        assert seminorm(algebra.unit_coords) == pytest.approx(0.0, abs=1e-10), name
        for _ in range(5):
            a, b = random_element(algebra, rng), random_element(algebra, rng)
            la, lb = seminorm(a), seminorm(b)
            assert seminorm(a + b) <= la + lb + 1e-9, name
            assert seminorm(a * scale) == pytest.approx(abs(scale) * la, rel=1e-9, abs=1e-12), name
            assert seminorm(a.adjoint()) == pytest.approx(la, rel=1e-9, abs=1e-12), name
    print("✅ 各半範數滿足半範數公理")



def test_metric_graph_triple():
    triple = metric_graph_triple(3, [(0, 1, 1.0), (1, 2, 2.0)])
    seminorm = commutator_seminorm(triple)
    assert seminorm([0.0, 1.0, 1.0]) == pytest.approx(1.0)
    assert seminorm([0.0, 0.0, 4.0]) == pytest.approx(2.0)
    assert seminorm([3.0, 3.0, 3.0]) == pytest.approx(0.0)
    assert triple.algebra.dim == 3 and triple.hilbert_dim == 4


def test_matrix_dirac_triple():
    triple = matrix_dirac_triple(2, [Z, X])
    assert triple.name == "∂_2"
    assert triple.hilbert_dim == 4
    seminorm = commutator_seminorm(triple)
    assert seminorm(matrix_algebra(2).unit_coords) == pytest.approx(0.0, abs=1e-12)
    assert tensor_algebra(triple.algebra, triple.algebra).dim == 16


if __name__ == "__main__":
    print("🧪 幾何模組測試")
    print("=" * 50)
    tests = [
        ("偶×偶譜", test_even_product_spectrum),
        ("奇偶組合", test_parity_combinations_validate),
        ("Z/2 奇×奇", test_odd_product_seminorm_on_z2),
        ("無效三元組", test_invalid_triples),
        ("反三元組", test_opposite_triple_seminorm),
        ("張量半範數", test_tensor_seminorms),
        ("黑箱半範數", test_custom_seminorm_is_black_box),
        ("半範數控制", test_domination_all_parities),
        ("穩定性核", lambda: [test_stability_kernel(*p) for p in itertools.product([False, True], repeat=3)]),
        ("半範數公理", test_seminorm_axioms),
        ("度量圖", test_metric_graph_triple),
        ("矩陣 Dirac", test_matrix_dirac_triple),
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
