"""
代數間的線性映射與完全正映射
分類（CP、跡通道、單位、保跡）、合成、張量、放大、
Choi-Jamiolkowski 泛函 ω_τ、Choi 矩陣、KMS Choi 元素與跡伴隨
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg as linalg

from algebra import (AlgebraElement, ConcreteAlgebra, LinearFunctional, TraceFunctional,
                     as_trace, evaluate_mu_tau, is_matrix_units_basis, matrix_algebra,
                     opposite_algebra, opposite_functional, pullback_functional,
                     require_same_algebra, same_algebra, swap_map, tensor_algebra,
                     tensor_functional, tensor_trace)
from config import EPS_STRUCT, psd_floor
from errors import AlgebraMismatch, NotMatrixUnitsBasis, NotTraceChannel, TraceMismatch


class ChannelMap:
    """線性映射 A → B，以座標矩陣 (d_B × d_A) 表示"""

    def __init__(self, source: ConcreteAlgebra, target: ConcreteAlgebra, matrix, name: str = ""):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (target.dim, source.dim):
            raise AlgebraMismatch(f"座標矩陣形狀 {matrix.shape} 應為 {(target.dim, source.dim)}")
        matrix.flags.writeable = False
        self.source = source
        self.target = target
        self.matrix = matrix
        self.name = name or "F"
        self._flags = {}

    def __repr__(self):
        return f"ChannelMap({self.name}: {self.source.name} → {self.target.name})"

    def apply(self, x) -> AlgebraElement:
        coords = x.coords if isinstance(x, AlgebraElement) else np.asarray(x, dtype=complex)
        return AlgebraElement(self.target, self.matrix @ coords)

    __call__ = apply

    def _check_compatible(self, other: 'ChannelMap'):
        require_same_algebra(self.source, other.source, "來源代數")
        require_same_algebra(self.target, other.target, "目標代數")

    def __add__(self, other: 'ChannelMap'):
        self._check_compatible(other)
        return ChannelMap(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other: 'ChannelMap'):
        self._check_compatible(other)
        return ChannelMap(self.source, self.target, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return ChannelMap(self.source, self.target, self.matrix * scalar, self.name)

    __rmul__ = __mul__

    def cached(self, key, compute: Callable):
        if key not in self._flags:
            self._flags[key] = compute()
        return self._flags[key]


def _trace_key(tau: LinearFunctional):
    return (tau.name, tau.algebra.dim, np.round(tau.values, 14).tobytes())


# ---------- 建構 ----------

def channel_from_function(source: ConcreteAlgebra, target: ConcreteAlgebra, fn: Callable,
                          name: str = "") -> ChannelMap:
    """由作用於環境矩陣的函數建立映射"""
    columns = [target.coords_of(fn(b)) for b in source.basis]
    return ChannelMap(source, target, np.stack(columns, axis=1), name)


def identity_channel(algebra: ConcreteAlgebra) -> ChannelMap:
    return ChannelMap(algebra, algebra, np.eye(algebra.dim), name="id")


def transpose_channel(n: int) -> ChannelMap:
    algebra = matrix_algebra(n)
    return channel_from_function(algebra, algebra, lambda a: a.T, name="transpose")


def conjugation_channel(v, source: Optional[ConcreteAlgebra] = None,
                        target: Optional[ConcreteAlgebra] = None) -> ChannelMap:
    """F(a) = V a V*"""
    v = np.asarray(v, dtype=complex)
    source = source or matrix_algebra(v.shape[1])
    target = target or matrix_algebra(v.shape[0])
    return channel_from_function(source, target, lambda a: v @ a @ v.conj().T, name="Ad(V)")


def kraus_channel(operators: Sequence, source: Optional[ConcreteAlgebra] = None,
                  target: Optional[ConcreteAlgebra] = None) -> ChannelMap:
    """F(a) = Σ K a K*"""
    operators = [np.asarray(k, dtype=complex) for k in operators]
    source = source or matrix_algebra(operators[0].shape[1])
    target = target or matrix_algebra(operators[0].shape[0])
    return channel_from_function(source, target,
                                 lambda a: sum(k @ a @ k.conj().T for k in operators), name="Kraus")


def functional_channel(phi: LinearFunctional, b: AlgebraElement) -> ChannelMap:
    """F(a) = φ(a)·b"""
    return ChannelMap(phi.algebra, b.algebra, np.outer(b.coords, phi.values), name="φ(·)b")


def replacement_channel(rho: AlgebraElement, tau_src: LinearFunctional) -> ChannelMap:
    """F(a) = τ_src(a)·ρ"""
    channel = functional_channel(tau_src, rho)
    channel.name = "replace"
    return channel


# ---------- ω_τ ----------

@dataclass(eq=False)
class OmegaFunctional(LinearFunctional):
    channel: Optional[ChannelMap] = None
    trace: Optional[TraceFunctional] = None


def _target_trace(F: ChannelMap, tau: LinearFunctional) -> TraceFunctional:
    if not same_algebra(tau.algebra, F.target):
        raise TraceMismatch(f"跡定義在 {tau.algebra.name}，但映射目標為 {F.target.name}")
    return as_trace(tau)


def omega_tau(F: ChannelMap, tau: LinearFunctional) -> OmegaFunctional:
    """ω_τ(F)(B_i ⊗ B_j^op) = τ(F(B_i) B_j)"""
    tau = _target_trace(F, tau)
    pairing = F.target.product_pairing(tau.values)
    values = (F.matrix.T @ pairing).reshape(-1)
    algebra = tensor_algebra(F.source, opposite_algebra(F.target))
    return OmegaFunctional(algebra, values, name=f"ω[{F.name}]", channel=F, trace=tau)


def omega_via_mu(F: ChannelMap, tau: LinearFunctional) -> LinearFunctional:
    """μ_τ ∘ (F ⊗ id)，作為 ω_τ 的第二條計算路徑"""
    mu = evaluate_mu_tau(F.target, tau)
    lift = np.kron(F.matrix, np.eye(F.target.dim))
    return pullback_functional(mu, lift, tensor_algebra(F.source, opposite_algebra(F.target)))


# ---------- 分類 ----------

@dataclass
class CPVerdict:
    is_cp: bool
    min_eigenvalue: float
    witness: Optional[np.ndarray] = None   # A⊗B^op 座標，ω(x*x) < 0

    def __bool__(self):
        return self.is_cp


def is_completely_positive(F: ChannelMap, tau: LinearFunctional) -> CPVerdict:
    """F 為 CP ⟺ ω_τ(F) 為正泛函（τ 忠實）"""
    tau = _target_trace(F, tau)
    tau.require_faithful()

    def compute():
        report = omega_tau(F, tau).positivity()
        return CPVerdict(report.is_positive, report.min_eigenvalue, report.witness)

    return F.cached(('cp',) + _trace_key(tau), compute)


def trace_channel_failures(F: ChannelMap, tau: LinearFunctional) -> List[str]:
    """列出未通過的跡通道條件"""
    failures = []
    if not is_completely_positive(F, tau):
        failures.append("完全正")
    value = tau(F.matrix @ F.source.unit_coords)
    if abs(value - 1.0) >= EPS_STRUCT:
        failures.append(f"τ(F(1)) = {value.real:.6g} ≠ 1")
    return failures


def is_trace_channel(F: ChannelMap, tau: LinearFunctional) -> bool:
    tau = _target_trace(F, tau)
    return F.cached(('tc',) + _trace_key(tau), lambda: not trace_channel_failures(F, tau))


def require_trace_channel(F: ChannelMap, tau: LinearFunctional):
    failures = trace_channel_failures(F, _target_trace(F, tau))
    if failures:
        raise NotTraceChannel(f"{F.name} 不是跡通道：{'、'.join(failures)}", failed=failures)


def is_unital(F: ChannelMap) -> bool:
    image = F.matrix @ F.source.unit_coords
    return bool(np.allclose(image, F.target.unit_coords, atol=EPS_STRUCT))


def is_trace_preserving(F: ChannelMap, tau_src: LinearFunctional, tau_tgt: LinearFunctional) -> bool:
    """τ_tgt(F(B_i)) = τ_src(B_i)"""
    if not same_algebra(tau_src.algebra, F.source) or not same_algebra(tau_tgt.algebra, F.target):
        raise TraceMismatch("跡與映射的代數不符")
    return bool(np.allclose(F.matrix.T @ tau_tgt.values, tau_src.values, atol=EPS_STRUCT))


def is_ucp(F: ChannelMap, tau_tgt: LinearFunctional) -> bool:
    return is_unital(F) and bool(is_completely_positive(F, tau_tgt))


def is_quantum_channel(F: ChannelMap, tau_src: LinearFunctional, tau_tgt: LinearFunctional) -> bool:
    return bool(is_completely_positive(F, tau_tgt)) and is_trace_preserving(F, tau_src, tau_tgt)


def are_composable(F: ChannelMap, G: ChannelMap, tau_b: LinearFunctional, tau_c: LinearFunctional) -> bool:
    """(F, G) ∈ UCP × TC_τC，或 TC_τB × QC(τB, τC)"""
    require_same_algebra(F.target, G.source, "合成的中間代數")
    if is_ucp(F, tau_b) and is_trace_channel(G, tau_c):
        return True
    return is_trace_channel(F, tau_b) and is_quantum_channel(G, tau_b, tau_c)


# ---------- 合成與張量 ----------

def compose(G: ChannelMap, F: ChannelMap) -> ChannelMap:
    """G∘F"""
    if not same_algebra(F.target, G.source):
        raise AlgebraMismatch(f"無法合成：{F.name} 的目標 {F.target.name} ≠ {G.name} 的來源 {G.source.name}")
    return ChannelMap(F.source, G.target, G.matrix @ F.matrix, name=f"{G.name}∘{F.name}")


def tensor_channel(F: ChannelMap, G: ChannelMap) -> ChannelMap:
    return ChannelMap(tensor_algebra(F.source, G.source), tensor_algebra(F.target, G.target),
                      np.kron(F.matrix, G.matrix), name=f"{F.name}⊗{G.name}")


def amplify(n: int, F: ChannelMap) -> ChannelMap:
    """id_n ⊗ F"""
    if n < 1:
        raise ValueError(f"放大階數必須 ≥ 1，收到 {n}")
    if n == 1:
        return F
    return tensor_channel(identity_channel(matrix_algebra(n)), F)


# ---------- 跡伴隨 ----------

def trace_adjoint(F: ChannelMap, tau_src: LinearFunctional, tau_tgt: LinearFunctional) -> ChannelMap:
    """F♯：τ_B(F(a) b) = τ_A(a F♯(b))，即 F♯ = K_A^{-1} F^T K_B"""
    if not same_algebra(tau_src.algebra, F.source) or not same_algebra(tau_tgt.algebra, F.target):
        raise TraceMismatch("跡與映射的代數不符")
    tau_src, tau_tgt = as_trace(tau_src), as_trace(tau_tgt)
    tau_src.require_faithful()
    tau_tgt.require_faithful()
    k_src = F.source.product_pairing(tau_src.values)
    k_tgt = F.target.product_pairing(tau_tgt.values)
    matrix = linalg.solve(k_src, F.matrix.T @ k_tgt)
    return ChannelMap(F.target, F.source, matrix, name=f"{F.name}♯")


def omega_adjoint_identity(F: ChannelMap, tau_src: LinearFunctional, tau_tgt: LinearFunctional) -> float:
    """ω_τA(F♯) 與 ω_τB(F)∘Σ^op 的最大差"""
    adjoint = trace_adjoint(F, tau_src, tau_tgt)
    omega_adj = omega_tau(adjoint, tau_src)
    omega_f = omega_tau(F, tau_tgt)
    _, swap = swap_map(omega_adj.algebra, 0, 1, op=True)
    pulled = pullback_functional(omega_f, swap, omega_adj.algebra)
    return float(np.max(np.abs(pulled.values - omega_adj.values)))


def omega_composition_identity(G: ChannelMap, F: ChannelMap, tau: LinearFunctional) -> float:
    """ω_τ(G∘F) 與 ω_τ(G)∘(F⊗id) 的最大差"""
    lhs = omega_tau(compose(G, F), tau)
    omega_g = omega_tau(G, tau)
    lift = np.kron(F.matrix, np.eye(G.target.dim))
    pulled = pullback_functional(omega_g, lift, lhs.algebra)
    return float(np.max(np.abs(pulled.values - lhs.values)))


def omega_flip_identity(F: ChannelMap, G: ChannelMap, tau_b: LinearFunctional,
                           tau_d: LinearFunctional) -> float:
    """ω_{τB⊗τD}(F⊗G) 與 Σ*_[23](ω(F)⊗ω(G)) 的最大差（單因子來源與目標）"""
    lhs = omega_tau(tensor_channel(F, G), tensor_trace(as_trace(tau_b), as_trace(tau_d)))
    product = tensor_functional(omega_tau(F, tau_b), omega_tau(G, tau_d))
    i = len(F.source.factors)
    j = i + len(G.source.factors) + len(F.target.factors) - 1
    if len(F.target.factors) != 1 or len(G.source.factors) != 1:
        raise AlgebraMismatch("翻轉恆等式只處理單因子的 B 與 C")
    _, swap = swap_map(lhs.algebra, i, j)
    pulled = pullback_functional(product, swap, lhs.algebra)
    return float(np.max(np.abs(pulled.values - lhs.values)))


# ---------- Choi 矩陣 ----------

def choi_matrix(F: ChannelMap) -> np.ndarray:
    """C_F = Σ e_ij ⊗ F(e_ij)"""
    if not is_matrix_units_basis(F.source):
        raise NotMatrixUnitsBasis(f"來源 {F.source.name} 不是標準矩陣單位基底")
    n = F.source.ambient_dim
    units = matrix_algebra(n).basis
    return sum(np.kron(units[k], F.target.realize(F.matrix[:, k])) for k in range(n * n))


def kms_orthonormal_basis(tau: TraceFunctional) -> np.ndarray:
    """⟨x, y⟩ = τ(x*y) 的正交基底（座標為各行）"""
    tau.require_faithful()
    gram = tau.gns_gram()
    lower = np.linalg.cholesky((gram + gram.conj().T) / 2)
    return np.linalg.inv(lower).conj().T


def kms_choi_element(F: ChannelMap, tau: LinearFunctional) -> AlgebraElement:
    """τ^KMS(F) = Σ F(b_i) ⊗ (b_i^*)^op"""
    require_same_algebra(F.source, F.target, "KMS Choi 元素需要 A → A")
    tau = _target_trace(F, tau)
    w = kms_orthonormal_basis(tau)
    images = F.matrix @ w
    adjoints = F.source.adjoint_map @ w.conj()
    coords = np.einsum('ai,bi->ab', images, adjoints).reshape(-1)
    return AlgebraElement(tensor_algebra(F.source, opposite_algebra(F.source)), coords)


def kms_pairing_functional(element: AlgebraElement, tau: LinearFunctional) -> LinearFunctional:
    """φ_b = (τ ⊗ τ^op)(b ·)"""
    tau = as_trace(tau)
    product_trace = tensor_trace(tau, opposite_functional(tau))
    require_same_algebra(product_trace.algebra, element.algebra)
    return LinearFunctional(element.algebra, element.coords @ product_trace.pairing(), name="φ_KMS")


def matrix_target_functional(F: ChannelMap) -> LinearFunctional:
    """F̂(a ⊗ e_kl) = F(a)_kl，定義在 A ⊗ M_m"""
    if not is_matrix_units_basis(F.target):
        raise NotMatrixUnitsBasis(f"目標 {F.target.name} 不是標準矩陣單位基底")
    algebra = tensor_algebra(F.source, matrix_algebra(F.target.ambient_dim))
    return LinearFunctional(algebra, F.matrix.T.reshape(-1), name=f"{F.name}^")


def transpose_identification(source: ConcreteAlgebra, m: int) -> np.ndarray:
    """id ⊗ t：A⊗(M_m)^op → A⊗M_m 的座標矩陣，e_kl^op ↦ e_lk"""
    perm = np.arange(m * m).reshape(m, m).T.reshape(-1)
    return np.kron(np.eye(source.dim), np.eye(m * m)[perm])


# ---------- 獨立 CP 判定 ----------

@dataclass
class OracleReport:
    is_cp: bool
    min_eigenvalues: List[float] = field(default_factory=list)   # 第 k 項：k 階區塊
    choi_min_eigenvalue: Optional[float] = None


def cp_oracle_npositivity(F: ChannelMap, k_max: Optional[int] = None) -> OracleReport:
    """
    以算子 Gram 矩陣 [F(B_i^* B_j)]_{i,j≤k} 檢查 k-正性

    任意 a_1..a_k 的 [F(a_i^* a_j)] 皆為完整區塊矩陣的合同變換，
    因此 k = d 時判定即為完全正性。完全不使用跡。
    """
    source = F.source
    d = source.dim
    k_max = d if k_max is None else min(k_max, d)
    adjoints = np.conj(np.transpose(source.basis, (0, 2, 1)))
    products = np.einsum('iab,jbc->ijac', adjoints, source.basis)
    n = F.target.ambient_dim
    blocks = np.zeros((d, n, d, n), dtype=complex)
    for i in range(d):
        for j in range(d):
            blocks[i, :, j, :] = F.target.realize(F.matrix @ source.coords_of(products[i, j]))
    full = blocks.reshape(d * n, d * n)
    scale = max(1.0, float(np.max(np.abs(full))))
    hermitian = float(np.max(np.abs(full - full.conj().T))) <= EPS_STRUCT * scale

    minima = []
    for k in range(1, k_max + 1):
        block = full[:k * n, :k * n]
        minima.append(float(np.linalg.eigvalsh((block + block.conj().T) / 2)[0]))

    eigenvalues = np.linalg.eigvalsh((full + full.conj().T) / 2)
    is_cp = hermitian and eigenvalues[0] >= psd_floor(eigenvalues)

    choi_min = None
    if is_matrix_units_basis(source):
        choi_min = float(np.linalg.eigvalsh(choi_matrix(F))[0])
    return OracleReport(bool(is_cp), minima, choi_min)
