#!/usr/bin/env python3
"""
測試具體代數、張量積、反代數與跡
"""

import numpy as np
import pytest

from algebra import (AlgebraElement, LinearFunctional, TraceFunctional, as_trace, build_algebra,
                     density_from_functional, diagonal_algebra, evaluate_mu_tau, matrix_algebra,
                     matrix_trace, opposite_algebra, same_algebra, scalar_algebra, swap_factors,
                     swap_map, tensor_algebra)
from errors import (LinearlyDependentBasis, NotATensorAlgebra, NotATrace, NotClosedUnderAdjoint,
                    NotClosedUnderProduct, NotFaithful, FactorMismatch)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def test_standard_algebras():
    """M_n、對角代數與純量的維度與單位元"""
    m2 = matrix_algebra(2)
    assert m2.dim == 4 and m2.ambient_dim == 2
    np.testing.assert_allclose(m2.unit_coords, [1, 0, 0, 1], atol=1e-12)
    assert diagonal_algebra(3).dim == 3
    np.testing.assert_allclose(diagonal_algebra(3).unit().realize(), np.eye(3), atol=1e-12)
    assert scalar_algebra().dim == 1
    print("✅ 標準代數結構正確")


def test_build_rejects_bad_spans():
    with pytest.raises(LinearlyDependentBasis):
        build_algebra(2, [])
    with pytest.raises(LinearlyDependentBasis):
        build_algebra(2, [I2, 2 * I2])
    with pytest.raises(NotClosedUnderProduct) as info:
        build_algebra(2, [I2, X, Z])
    assert info.value.residual > 0
    with pytest.raises(NotClosedUnderAdjoint):
        build_algebra(2, [I2, E12])
    print("✅ 相依、不封閉於乘法與伴隨的張成皆被拒絕")


def test_element_arithmetic():
    m2 = matrix_algebra(2)
    a = AlgebraElement(m2, m2.coords_of(X))
    b = AlgebraElement(m2, m2.coords_of(Z))
    np.testing.assert_allclose((a @ b).realize(), X @ Z, atol=1e-12)
    np.testing.assert_allclose((a + b * 2).realize(), X + 2 * Z, atol=1e-12)
    assert a.is_self_adjoint() and not (a @ b).is_self_adjoint()
    assert (a @ a).is_positive()
    assert not b.is_positive()


def test_tensor_and_opposite():
    m2, d2 = matrix_algebra(2), diagonal_algebra(2)
    t = tensor_algebra(m2, d2)
    assert t.dim == 8 and t.ambient_dim == 4
    assert t.factor_dims == (4, 2)
    np.testing.assert_allclose(t.unit().realize(), np.eye(4), atol=1e-12)

    op = opposite_algebra(m2)
    assert op.is_opposite and opposite_algebra(op) is m2
    x, y = m2.coords_of(E12), m2.coords_of(E12.T)
    # a^op · b^op = (b·a)^op，座標相同
    np.testing.assert_allclose(op.multiply(x, y), m2.multiply(y, x), atol=1e-12)

    top = opposite_algebra(t)
    assert [f.is_opposite for f in top.factors] == [True, True]
    print("✅ 張量積與反代數的乘法關係成立")


def test_swap_map():
    m2, d2 = matrix_algebra(2), diagonal_algebra(2)
    t = tensor_algebra(m2, d2)
    target, matrix = swap_map(t, 0, 1)
    assert same_algebra(target, tensor_algebra(d2, m2))
    a, b = m2.coords_of(X), np.array([1.0, 3.0])
    swapped = matrix @ np.kron(a, b)
    np.testing.assert_allclose(swapped, np.kron(b, a), atol=1e-12)

    # Σ 為 *-同構
    x = AlgebraElement(t, np.kron(m2.coords_of(X @ Z), b))
    y = AlgebraElement(t, np.kron(m2.coords_of(E12), np.array([2.0, -1.0])))
    lhs = swap_factors(x @ y, 0, 1)
    rhs = swap_factors(x, 0, 1) @ swap_factors(y, 0, 1)
    np.testing.assert_allclose(lhs.coords, rhs.coords, atol=1e-12)

    with pytest.raises(NotATensorAlgebra):
        swap_map(m2, 0, 1)
    with pytest.raises(FactorMismatch):
        swap_map(t, 0, 0)
    with pytest.raises(FactorMismatch):
        swap_map(t, 0, 1, op=True)


def test_opposite_swap():
    m2 = matrix_algebra(2)
    t = tensor_algebra(m2, opposite_algebra(m2))
    target, _ = swap_map(t, 0, 1, op=True)
    assert same_algebra(target, t)


def test_traces_and_faithfulness():
    m2 = matrix_algebra(2)
    tr = matrix_trace(m2, normalized=True)
    assert abs(tr(m2.unit_coords) - 1.0) < 1e-12
    assert tr.is_tracial() and tr.is_faithful and tr.is_state()

    d2 = diagonal_algebra(2)
    partial = as_trace(LinearFunctional(d2, [1.0, 0.0]))
    assert isinstance(partial, TraceFunctional)
    assert not partial.is_faithful
    with pytest.raises(NotFaithful):
        partial.require_faithful()

    corner = LinearFunctional(m2, [1.0, 0, 0, 0])   # a ↦ a_11
    with pytest.raises(NotATrace):
        as_trace(corner)
    print("✅ 跡、忠實性與非跡泛函判斷正確")


def test_positivity_witness():
    m2 = matrix_algebra(2)
    phi = LinearFunctional(m2, [1.0, 0, 0, -1.0])   # a ↦ a_11 − a_22
    report = phi.positivity()
    assert not report.is_positive and report.is_hermitian
    assert report.min_eigenvalue == pytest.approx(-1.0)
    witness = AlgebraElement(m2, report.witness)
    assert phi((witness.adjoint() @ witness).coords).real < 0


def test_density_from_functional():
    m2 = matrix_algebra(2)
    rho = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    values = np.einsum('ab,kba->k', rho, m2.basis)
    phi = LinearFunctional(m2, values)
    result = density_from_functional(phi, matrix_trace(m2))
    np.testing.assert_allclose(result.element.realize(), rho, atol=1e-12)
    assert result.positive and result.in_density_set

    unnormalized = density_from_functional(phi * 2, matrix_trace(m2))
    assert unnormalized.positive and not unnormalized.in_density_set


def test_mu_tau_is_positive():
    m2 = matrix_algebra(2)
    mu = evaluate_mu_tau(m2, matrix_trace(m2))
    assert mu.algebra.dim == 16
    assert mu.is_positive()
    d3 = diagonal_algebra(3)
    assert evaluate_mu_tau(d3, matrix_trace(d3, normalized=True)).is_positive()


def test_three_factor_swap():
    """Σ_[23] 在 D2⊗D2⊗D2 上把基底 (i, j, k) 送到 (i, k, j)"""
    d2 = diagonal_algebra(2)
    t = tensor_algebra(tensor_algebra(d2, d2), d2)
    assert t.factor_dims == (2, 2, 2)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                swapped = swap_factors(t.basis_element(4 * i + 2 * j + k), 1, 2)
                expected = np.zeros(8)
                expected[4 * i + 2 * k + j] = 1.0
                np.testing.assert_allclose(swapped.coords, expected, atol=1e-12)


def test_mu_tau_values():
    """μ_Tr(e11⊗e11ᵒᵖ) = 1，μ_Tr(e11⊗e22ᵒᵖ) = 0，μ_Tr(e12⊗e21ᵒᵖ) = 1"""
    m2 = matrix_algebra(2)
    mu = evaluate_mu_tau(m2, matrix_trace(m2))
    assert mu.values[0 * 4 + 0] == pytest.approx(1.0)
    assert mu.values[0 * 4 + 3] == pytest.approx(0.0)
    assert mu.values[1 * 4 + 2] == pytest.approx(1.0)


def test_opposite_product_law():
    """A^op 中 a·b 的實現為 (b a)ᵀ"""
    rng = np.random.default_rng(21)
    m3 = matrix_algebra(3)
    op = opposite_algebra(m3)
    for _ in range(5):
        a = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        b = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        np.testing.assert_allclose(op.multiply(a, b), m3.multiply(b, a), atol=1e-10)
        np.testing.assert_allclose(op.realize(op.multiply(a, b)), (m3.realize(b) @ m3.realize(a)).T, atol=1e-10)



if __name__ == "__main__":
    print("🧪 代數模組測試")
    print("=" * 50)
    tests = [
        ("標準代數", test_standard_algebras),
        ("建構驗證", test_build_rejects_bad_spans),
        ("元素運算", test_element_arithmetic),
        ("張量與反代數", test_tensor_and_opposite),
        ("因子交換", test_swap_map),
        ("反交換", test_opposite_swap),
        ("跡", test_traces_and_faithfulness),
        ("正性證據", test_positivity_witness),
        ("密度", test_density_from_functional),
        ("μ_τ", test_mu_tau_is_positive),
        ("三因子交換", test_three_factor_swap),
        ("μ_τ 數值", test_mu_tau_values),
        ("反代數乘法", test_opposite_product_law),
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
