#!/usr/bin/env python3
"""
測試 ω_τ 嵌入、CP 判定、跡通道與 Choi 矩陣
"""

import numpy as np
import pytest

from algebra import (AlgebraElement, LinearFunctional, as_trace, diagonal_algebra, matrix_algebra, matrix_trace,
                     pullback_functional, swap_map)
from channels import (ChannelMap, amplify, are_composable, channel_from_function, choi_matrix, compose,
                      conjugation_channel, cp_oracle_npositivity, identity_channel, is_completely_positive,
                      is_trace_channel, is_trace_preserving, is_ucp, kms_choi_element, kms_pairing_functional,
                      kraus_channel, matrix_target_functional, omega_adjoint_identity, omega_composition_identity,
                      omega_flip_identity, omega_tau, omega_via_mu, replacement_channel, require_trace_channel,
                      trace_adjoint, transpose_channel)
from errors import AlgebraMismatch, NotMatrixUnitsBasis, NotTraceChannel, TraceMismatch
from groups import canonical_trace, multiplier_channel, twisted_group_algebra, cyclic_group
from random_instances import random_cp_map, random_non_cp_map, random_trace_channel


def test_transpose_is_not_cp():
    """轉置：ω 的 GNS Gram 最小特徵值為 −1，並給出證據"""
    m2 = matrix_algebra(2)
    verdict = is_completely_positive(transpose_channel(2), matrix_trace(m2))
    assert not verdict
    assert verdict.min_eigenvalue == pytest.approx(-1.0, abs=1e-9)
    assert verdict.witness is not None
    eigenvalues = np.linalg.eigvalsh(choi_matrix(transpose_channel(2)))
    np.testing.assert_allclose(eigenvalues, [-1, 1, 1, 1], atol=1e-12)
    print("✅ 轉置映射被判定為非 CP")


def test_identity_functional_is_not_a_state():
    m2 = matrix_algebra(2)
    identity = identity_channel(m2)
    omega = omega_tau(identity, matrix_trace(m2))
    assert omega.is_positive()
    assert omega(omega.algebra.unit_coords) == pytest.approx(2.0)
    assert not omega.is_state()
    assert not is_trace_channel(identity, matrix_trace(m2))
    np.testing.assert_allclose(np.linalg.eigvalsh(choi_matrix(identity)), [0, 0, 0, 2], atol=1e-12)


def test_trace_channel_gives_state():
    rng = np.random.default_rng(7)
    m2, m3 = matrix_algebra(2), matrix_algebra(3)
    tau = matrix_trace(m3)
    channel = random_trace_channel(m2, m3, tau, rng)
    assert is_trace_channel(channel, tau)
    assert omega_tau(channel, tau).is_state()
    require_trace_channel(channel, tau)

    with pytest.raises(NotTraceChannel) as info:
        require_trace_channel(transpose_channel(2), matrix_trace(m2))
    assert info.value.failed


def test_trace_channels_are_convex():
    rng = np.random.default_rng(11)
    m2 = matrix_algebra(2)
    tau = matrix_trace(m2, normalized=True)
    f = random_trace_channel(m2, m2, tau, rng)
    g = random_trace_channel(m2, m2, tau, rng)
    mid = f * 0.5 + g * 0.5
    assert is_trace_channel(mid, tau)
    np.testing.assert_allclose(omega_tau(mid, tau).values,
                               0.5 * omega_tau(f, tau).values + 0.5 * omega_tau(g, tau).values, atol=1e-12)


def test_omega_identities():
    """ω 的伴隨、合成、翻轉恆等式與 μ_τ 路徑"""
    rng = np.random.default_rng(3)
    m2, m3, d2 = matrix_algebra(2), matrix_algebra(3), diagonal_algebra(2)
    tr2, tr3 = matrix_trace(m2), matrix_trace(m3, normalized=True)
    f = random_cp_map(m2, m3, rng)
    g = random_cp_map(m3, d2, rng)
    h = random_cp_map(d2, m2, rng)

    assert omega_adjoint_identity(f, tr2, tr3) < 1e-10
    assert omega_composition_identity(g, f, matrix_trace(d2)) < 1e-10
    assert omega_flip_identity(f, h, tr3, tr2) < 1e-10
    np.testing.assert_allclose(omega_via_mu(f, tr3).values, omega_tau(f, tr3).values, atol=1e-10)
    print("✅ ω 恆等式殘差皆低於 1e-10")


def test_omega_is_injective():
    rng = np.random.default_rng(5)
    m2 = matrix_algebra(2)
    tau = matrix_trace(m2)
    f, g = random_cp_map(m2, m2, rng), random_cp_map(m2, m2, rng)
    assert np.max(np.abs(omega_tau(f, tau).values - omega_tau(g, tau).values)) > 1e-6


def test_oracle_agrees_with_omega():
    rng = np.random.default_rng(19)
    pairs = [(matrix_algebra(2), matrix_algebra(2)), (matrix_algebra(2), matrix_algebra(3)),
             (diagonal_algebra(3), matrix_algebra(2))]
    for source, target in pairs:
        tau = matrix_trace(target)
        for builder, expected in ((random_cp_map, True), (random_non_cp_map, False)):
            channel = builder(source, target, rng)
            verdict = is_completely_positive(channel, tau)
            oracle = cp_oracle_npositivity(channel)
            assert bool(verdict) is expected
            assert oracle.is_cp is expected
    print("✅ 算子 Gram 判定與 ω 判定一致")


def test_trace_mismatch():
    m2 = matrix_algebra(2)
    with pytest.raises(TraceMismatch):
        omega_tau(identity_channel(m2), matrix_trace(matrix_algebra(3)))


def test_choi_requires_matrix_units():
    d2 = diagonal_algebra(2)
    with pytest.raises(NotMatrixUnitsBasis):
        choi_matrix(identity_channel(d2))

    m2 = matrix_algebra(2)
    rho = m2.element(m2.coords_of(np.eye(2) / 2))
    replace = replacement_channel(rho, matrix_trace(m2))
    np.testing.assert_allclose(choi_matrix(replace), np.eye(4) / 2, atol=1e-12)


def test_matrix_target_functional():
    values = matrix_target_functional(transpose_channel(2)).values
    # F̂(e_01 ⊗ e_10) = (e_10)_10 = 1，F̂(e_01 ⊗ e_01) = 0
    assert values[1 * 4 + 2] == pytest.approx(1.0)
    assert values[1 * 4 + 1] == pytest.approx(0.0)


def test_kms_choi_element():
    d2 = diagonal_algebra(2)
    tau = matrix_trace(d2)
    element = kms_choi_element(identity_channel(d2), tau)
    np.testing.assert_allclose(element.coords, [1, 0, 0, 1], atol=1e-12)

    rng = np.random.default_rng(23)
    m2 = matrix_algebra(2)
    tr = matrix_trace(m2, normalized=True)
    f = random_cp_map(m2, m2, rng)
    element = kms_choi_element(f, tr)
    assert element.is_positive()
    omega = omega_tau(f, tr)
    _, swap = swap_map(omega.algebra, 0, 1, op=True)
    pulled = pullback_functional(kms_pairing_functional(element, tr), swap, omega.algebra)
    np.testing.assert_allclose(pulled.values, omega.values, atol=1e-10)

    assert not kms_choi_element(transpose_channel(2), tr).is_positive()


def test_composition_and_amplification():
    m2, m3 = matrix_algebra(2), matrix_algebra(3)
    rng = np.random.default_rng(29)
    f = random_cp_map(m2, m3, rng)
    with pytest.raises(AlgebraMismatch):
        compose(f, f)
    with pytest.raises(ValueError):
        amplify(0, f)
    assert amplify(1, f) is f
    amplified = amplify(2, f)
    assert amplified.source.dim == 16 and amplified.target.dim == 36
    assert is_completely_positive(amplified, matrix_trace(amplified.target))


def test_composability():
    tga = twisted_group_algebra(cyclic_group(2))
    tau = canonical_trace(tga)
    m1 = multiplier_channel(tga, [1.0, 0.5])
    m2 = multiplier_channel(tga, [1.0, -0.3])
    assert is_ucp(m1, tau) and is_trace_channel(m2, tau)
    assert are_composable(m1, m2, tau, tau)

    alg = matrix_algebra(2)
    tr = matrix_trace(alg)
    assert not are_composable(transpose_channel(2), identity_channel(alg), tr, tr)


def test_kraus_channel_shape_checks():
    k = np.array([[1, 0], [0, 0], [0, 1]], dtype=complex)
    channel = kraus_channel([k])
    assert channel.source.ambient_dim == 2 and channel.target.ambient_dim == 3
    with pytest.raises(AlgebraMismatch):
        ChannelMap(channel.source, channel.target, np.zeros((4, 4)))
    with pytest.raises(AlgebraMismatch):
        LinearFunctional(channel.source, np.zeros(3))


def _random_matrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def test_trace_adjoint_of_conjugation():
    """F(a) = V a V* 的跡伴隨為 F♯(b) = V* b V，且 (F♯)♯ = F"""
    rng = np.random.default_rng(31)
    m2, m3 = matrix_algebra(2), matrix_algebra(3)
    tr2, tr3 = matrix_trace(m2), matrix_trace(m3)
    v = _random_matrix(rng, 3, 2)
    f = conjugation_channel(v)
    adjoint = trace_adjoint(f, tr2, tr3)
    np.testing.assert_allclose(adjoint.matrix, conjugation_channel(v.conj().T).matrix, atol=1e-10)
    np.testing.assert_allclose(trace_adjoint(adjoint, tr3, tr2).matrix, f.matrix, atol=1e-10)


def test_trace_adjoint_pairing():
    """τ_B(F(a) b) = τ_A(a F♯(b))，含非均勻的跡"""
    rng = np.random.default_rng(32)
    m2, d3 = matrix_algebra(2), diagonal_algebra(3)
    tau_a = matrix_trace(m2)
    tau_b = as_trace(LinearFunctional(d3, [0.2, 0.3, 0.5]))
    f = random_cp_map(m2, d3, rng)
    adjoint = trace_adjoint(f, tau_a, tau_b)
    for _ in range(5):
        a = AlgebraElement(m2, m2.coords_of(_random_matrix(rng, 2, 2)))
        b = AlgebraElement(d3, rng.standard_normal(3) + 1j * rng.standard_normal(3))
        lhs = tau_b(f(a) @ b)
        rhs = tau_a(a @ adjoint(b))
        assert abs(lhs - rhs) < 1e-10


def test_adjoint_of_trace_preserving_is_trace_channel():
    """Σ K*K = 1 的 Kraus 映射保跡，其伴隨 F♯ ∈ TC_τA"""
    rng = np.random.default_rng(33)
    m2, m3 = matrix_algebra(2), matrix_algebra(3)
    isometry, _ = np.linalg.qr(_random_matrix(rng, 6, 2))
    f = kraus_channel([isometry[:3], isometry[3:]])
    tau_a = matrix_trace(m2, normalized=True)
    tau_b = as_trace(matrix_trace(m3) * 0.5)
    assert is_trace_preserving(f, tau_a, tau_b)
    adjoint = trace_adjoint(f, tau_a, tau_b)
    assert is_trace_channel(adjoint, tau_a)
    assert is_ucp(adjoint, tau_a)
    print("✅ 保跡映射的跡伴隨是跡通道")


def test_is_trace_preserving():
    m2 = matrix_algebra(2)
    tr2 = matrix_trace(m2)
    half_trace = channel_from_function(m2, m2, lambda a: 0.5 * np.trace(a) * np.eye(2))
    to_corner = channel_from_function(m2, m2, lambda a: np.trace(a) * np.diag([1.0, 0.0]))
    corner_entry = channel_from_function(m2, m2, lambda a: a[0, 0] * np.eye(2))
    assert is_trace_preserving(half_trace, tr2, tr2)
    assert is_trace_preserving(to_corner, tr2, tr2)
    assert not is_trace_preserving(corner_entry, tr2, tr2)
    assert not is_trace_preserving(identity_channel(m2) * 2, tr2, tr2)
    with pytest.raises(TraceMismatch):
        is_trace_preserving(half_trace, matrix_trace(matrix_algebra(3)), tr2)



if __name__ == "__main__":
    print("🧪 通道模組測試")
    print("=" * 50)
    tests = [
        ("轉置非 CP", test_transpose_is_not_cp),
        ("恆等映射", test_identity_functional_is_not_a_state),
        ("跡通道", test_trace_channel_gives_state),
        ("凸性", test_trace_channels_are_convex),
        ("ω 恆等式", test_omega_identities),
        ("單射", test_omega_is_injective),
        ("CP 獨立判定", test_oracle_agrees_with_omega),
        ("跡不符", test_trace_mismatch),
        ("Choi 矩陣", test_choi_requires_matrix_units),
        ("矩陣目標泛函", test_matrix_target_functional),
        ("KMS Choi 元素", test_kms_choi_element),
        ("合成與放大", test_composition_and_amplification),
        ("可合成性", test_composability),
        ("Kraus 形狀", test_kraus_channel_shape_checks),
        ("共軛的跡伴隨", test_trace_adjoint_of_conjugation),
        ("跡伴隨配對", test_trace_adjoint_pairing),
        ("保跡伴隨", test_adjoint_of_trace_preserving_is_trace_channel),
        ("保跡判定", test_is_trace_preserving),
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
