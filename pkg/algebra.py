"""
有限維具體 C*-代數
以 N×N 複矩陣的線性張成表示代數，提供：
1. 代數建構與驗證（乘法/伴隨閉包、單位元、線性獨立）
2. 元素、線性泛函、跡
3. 張量積、反代數、張量因子交換 Σ 與 Σ^op
4. μ_τ 泛函與密度矩陣
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from string import ascii_letters
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as linalg

from config import EPS_PSD, EPS_STRUCT, psd_floor
from errors import (AlgebraMismatch, FactorMismatch, LinearlyDependentBasis,
                    NoUnit, NotATensorAlgebra, NotATrace, NotClosedUnderAdjoint,
                    NotClosedUnderProduct, NotFaithful, TraceMismatch)


def _relative_residual(target: np.ndarray, approx: np.ndarray) -> float:
    return float(np.linalg.norm(target - approx) / max(1.0, np.linalg.norm(target)))


class ConcreteAlgebra:
    """
    矩陣張成的有限維 C*-代數

    basis: (d, N, N) 複數陣列。結構常數、伴隨矩陣、單位座標皆惰性計算並快取；
    張量積與反代數直接由因子推導，不重新投影。
    """

    def __init__(self, basis, name: str = "", factors: Optional[Tuple['ConcreteAlgebra', ...]] = None,
                 opposite_of: Optional['ConcreteAlgebra'] = None, **derived):
        basis = np.array(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise LinearlyDependentBasis(f"基底形狀 {basis.shape} 不是 (d, N, N)")
        basis.flags.writeable = False
        self.basis = basis
        self.dim = basis.shape[0]
        self.ambient_dim = basis.shape[1]
        self.name = name or f"A{self.dim}"
        self._factors = factors
        self.opposite_of = opposite_of
        self._opposite = None
        # 預先給定的衍生量直接寫入 cached_property 的快取
        for key in ('gram', 'gram_inv', 'structure_constants', 'adjoint_map', 'unit_coords'):
            if derived.get(key) is not None:
                self.__dict__[key] = derived[key]

    def __repr__(self):
        return f"ConcreteAlgebra({self.name}, d={self.dim}, N={self.ambient_dim})"

    # ---------- 因子結構 ----------

    @property
    def factors(self) -> Tuple['ConcreteAlgebra', ...]:
        return self._factors if self._factors else (self,)

    @property
    def factor_dims(self) -> Tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def is_tensor(self) -> bool:
        return len(self.factors) > 1

    @property
    def is_opposite(self) -> bool:
        return self.opposite_of is not None

    # ---------- 座標 ----------

    @cached_property
    def gram(self) -> np.ndarray:
        """Hilbert-Schmidt Gram 矩陣 Tr(B_i^* B_j)"""
        return np.einsum('iab,jab->ij', self.basis.conj(), self.basis)

    @cached_property
    def gram_inv(self) -> np.ndarray:
        return np.linalg.inv(self.gram)

    def coords_of(self, matrix) -> np.ndarray:
        """環境矩陣在基底上的（最小平方）座標"""
        matrix = np.asarray(matrix, dtype=complex)
        rhs = np.einsum('iab,ab->i', self.basis.conj(), matrix)
        return self.gram_inv @ rhs

    def realize(self, coords) -> np.ndarray:
        return np.tensordot(np.asarray(coords, dtype=complex), self.basis, axes=1)

    def projection_residual(self, matrix) -> float:
        matrix = np.asarray(matrix, dtype=complex)
        return _relative_residual(matrix, self.realize(self.coords_of(matrix)))

    # ---------- 代數運算 ----------

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """T[i,j,:] = coords(B_i B_j)"""
        if self.is_tensor:
            result = np.ones((1, 1, 1), dtype=complex)
            for factor in self.factors:
                t = factor.structure_constants
                result = np.einsum('abc,def->adbecf', result, t).reshape(
                    result.shape[0] * t.shape[0], result.shape[1] * t.shape[1], result.shape[2] * t.shape[2])
            return result
        products = np.einsum('iab,jbc->ijac', self.basis, self.basis)
        rhs = np.einsum('kab,ijab->ijk', self.basis.conj(), products)
        return rhs @ self.gram_inv.T

    @cached_property
    def adjoint_map(self) -> np.ndarray:
        """S 的第 i 行為 coords(B_i^*)"""
        adjoints = np.conj(np.transpose(self.basis, (0, 2, 1)))
        return np.stack([self.coords_of(m) for m in adjoints], axis=1)

    @cached_property
    def unit_coords(self) -> np.ndarray:
        return _solve_unit(self)

    def multiply(self, x, y) -> np.ndarray:
        return self.coords_of(self.realize(x) @ self.realize(y))

    def adjoint(self, x) -> np.ndarray:
        return self.adjoint_map @ np.conj(np.asarray(x, dtype=complex))

    def product_pairing(self, values) -> np.ndarray:
        """矩陣 [φ(B_a B_b)]，張量代數逐因子收縮，不展開完整結構常數"""
        values = np.asarray(values, dtype=complex)
        if not self.is_tensor:
            return np.einsum('abk,k->ab', self.structure_constants, values)
        factors = self.factors
        k = len(factors)
        letters = ascii_letters
        a, b, m = letters[:k], letters[k:2 * k], letters[2 * k:3 * k]
        subscripts = ','.join(a[f] + b[f] + m[f] for f in range(k)) + ',' + m + '->' + a + b
        operands = [f.structure_constants for f in factors] + [values.reshape(self.factor_dims)]
        result = np.einsum(subscripts, *operands, optimize=True)
        return result.reshape(self.dim, self.dim)

    def element(self, coords) -> 'AlgebraElement':
        return AlgebraElement(self, np.asarray(coords, dtype=complex))

    def unit(self) -> 'AlgebraElement':
        return self.element(self.unit_coords)

    def basis_element(self, index: int) -> 'AlgebraElement':
        coords = np.zeros(self.dim, dtype=complex)
        coords[index] = 1.0
        return self.element(coords)

    def self_adjoint_basis(self) -> np.ndarray:
        """
        自伴元素的實數正交基底（以座標表示）

        回傳 (d, r) 複數陣列 H；每個實向量 y 對應自伴座標 H @ y。
        """
        d = self.dim
        eye = np.eye(d, dtype=complex)
        S = self.adjoint_map
        candidates = np.concatenate([(eye + S @ eye.conj()) / 2, 1j * (eye - S @ eye.conj()) / 2], axis=1)
        realified = np.concatenate([candidates.real, candidates.imag], axis=0)
        u, s, _ = np.linalg.svd(realified, full_matrices=False)
        rank = int(np.sum(s > EPS_STRUCT * max(1.0, s[0])))
        columns = u[:, :rank]
        return columns[:d] + 1j * columns[d:]


def _solve_unit(algebra: ConcreteAlgebra) -> np.ndarray:
    """以 2d² 條方程的最小平方求兩側單位元"""
    T = algebra.structure_constants
    d = algebra.dim
    # 左單位：Σ_k u_k T[k,j,:] = e_j；右單位：Σ_k u_k T[j,k,:] = e_j
    left = np.transpose(T, (1, 2, 0)).reshape(d * d, d)
    right = np.transpose(T, (0, 2, 1)).reshape(d * d, d)
    system = np.concatenate([left, right], axis=0)
    rhs = np.concatenate([np.eye(d).reshape(-1), np.eye(d).reshape(-1)]).astype(complex)
    u, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    unit_matrix = algebra.realize(u)
    worst = 0.0
    for b in algebra.basis:
        worst = max(worst, _relative_residual(b, unit_matrix @ b), _relative_residual(b, b @ unit_matrix))
    if worst > EPS_STRUCT:
        raise NoUnit(f"代數 {algebra.name} 沒有單位元（殘差 {worst:.2e}）", residual=worst)
    return u


def build_algebra(ambient_dim: int, basis: Sequence, name: str = "") -> ConcreteAlgebra:
    """驗證並建立具體代數"""
    basis = np.array(basis, dtype=complex)
    if basis.size == 0 or basis.shape[0] == 0:
        raise LinearlyDependentBasis("零代數（空基底）不被接受")
    if basis.ndim != 3 or basis.shape[1:] != (ambient_dim, ambient_dim):
        raise LinearlyDependentBasis(f"基底矩陣必須為 {ambient_dim}×{ambient_dim}，收到 {basis.shape[1:]}")

    algebra = ConcreteAlgebra(basis, name=name)

    eigenvalues = np.linalg.eigvalsh(algebra.gram)
    if eigenvalues[0] <= EPS_STRUCT * max(1.0, eigenvalues[-1]):
        raise LinearlyDependentBasis(f"基底線性相依（Gram 最小特徵值 {eigenvalues[0]:.2e}）",
                                     min_eigenvalue=float(eigenvalues[0]))

    T = algebra.structure_constants
    products = np.einsum('iab,jbc->ijac', basis, basis)
    reconstructed = np.einsum('ijk,kab->ijab', T, basis)
    for i in range(algebra.dim):
        for j in range(algebra.dim):
            residual = _relative_residual(products[i, j], reconstructed[i, j])
            if residual > EPS_STRUCT:
                raise NotClosedUnderProduct(f"B_{i}·B_{j} 不在張成內（殘差 {residual:.2e}）",
                                            pair=(i, j), residual=residual)

    for i in range(algebra.dim):
        adjoint = basis[i].conj().T
        residual = algebra.projection_residual(adjoint)
        if residual > EPS_STRUCT:
            raise NotClosedUnderAdjoint(f"B_{i}* 不在張成內（殘差 {residual:.2e}）",
                                        index=i, residual=residual)

    algebra.unit_coords  # 觸發 NoUnit 檢查
    return algebra


# ---------- 標準代數 ----------

@lru_cache(maxsize=None)
def matrix_algebra(n: int) -> ConcreteAlgebra:
    """M_n，矩陣單位基底 e_11, e_12, ..., e_nn（列優先）"""
    basis = np.zeros((n * n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            basis[i * n + j, i, j] = 1.0
    return build_algebra(n, basis, name=f"M{n}")


@lru_cache(maxsize=None)
def diagonal_algebra(n: int) -> ConcreteAlgebra:
    """n 點空間上的函數"""
    basis = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        basis[i, i, i] = 1.0
    return build_algebra(n, basis, name=f"diag{n}")


@lru_cache(maxsize=None)
def scalar_algebra() -> ConcreteAlgebra:
    return build_algebra(1, [[[1.0]]], name="C")


def is_matrix_units_basis(algebra: ConcreteAlgebra) -> bool:
    n = algebra.ambient_dim
    if algebra.dim != n * n:
        return False
    return bool(np.allclose(algebra.basis, matrix_algebra(n).basis, atol=EPS_STRUCT))


def same_algebra(a: ConcreteAlgebra, b: ConcreteAlgebra) -> bool:
    """結構相等：環境維度與基底矩陣一致"""
    if a is b:
        return True
    if a.basis.shape != b.basis.shape:
        return False
    return bool(np.allclose(a.basis, b.basis, atol=1e-12))


def require_same_algebra(a: ConcreteAlgebra, b: ConcreteAlgebra, what: str = "代數"):
    if not same_algebra(a, b):
        raise AlgebraMismatch(f"{what}不一致: {a.name} vs {b.name}")


# ---------- 張量積與反代數 ----------

def tensor_algebra(a: ConcreteAlgebra, b: ConcreteAlgebra) -> ConcreteAlgebra:
    """Kronecker 實現 A⊗B，基底索引 i·d_B + j"""
    basis = np.einsum('iab,jcd->ijacbd', a.basis, b.basis).reshape(
        a.dim * b.dim, a.ambient_dim * b.ambient_dim, a.ambient_dim * b.ambient_dim)
    return _TensorAlgebra(basis, name=f"{a.name}⊗{b.name}", factors=a.factors + b.factors,
                          gram=np.kron(a.gram, b.gram), gram_inv=np.kron(a.gram_inv, b.gram_inv))


class _TensorAlgebra(ConcreteAlgebra):
    """伴隨與單位元由因子 Kronecker 組合"""

    @cached_property
    def adjoint_map(self) -> np.ndarray:
        return reduce(np.kron, [f.adjoint_map for f in self.factors])

    @cached_property
    def unit_coords(self) -> np.ndarray:
        return reduce(np.kron, [f.unit_coords for f in self.factors])


def tensor_of_factors(factors: Sequence[ConcreteAlgebra]) -> ConcreteAlgebra:
    factors = list(factors)
    if len(factors) == 1:
        return factors[0]
    return reduce(tensor_algebra, factors)


def opposite_algebra(a: ConcreteAlgebra) -> ConcreteAlgebra:
    """轉置實現 A^op，座標不變；(A^op)^op = A"""
    if a.opposite_of is not None:
        return a.opposite_of
    if a._opposite is not None:
        return a._opposite
    if a.is_tensor:
        result = tensor_of_factors([opposite_algebra(f) for f in a.factors])
    else:
        result = ConcreteAlgebra(np.transpose(a.basis, (0, 2, 1)), name=f"{a.name}ᵒᵖ",
                                 gram=a.gram, gram_inv=a.gram_inv,
                                 structure_constants=np.transpose(a.structure_constants, (1, 0, 2)),
                                 adjoint_map=a.adjoint_map, unit_coords=a.unit_coords)
    result.opposite_of = a
    a._opposite = result
    return result


def swap_map(algebra: ConcreteAlgebra, i: int, j: int, op: bool = False) -> Tuple[ConcreteAlgebra, np.ndarray]:
    """
    Σ_[ij]（op=True 時為 Σ^op）的座標矩陣與目標代數

    索引從 0 起算。Σ^op 要求第 i、j 個因子恰好一個是反代數，
    目標的第 i 個因子為原第 j 個因子的反代數，反之亦然。
    """
    factors = list(algebra.factors)
    k = len(factors)
    if k < 2:
        raise NotATensorAlgebra(f"{algebra.name} 不是張量代數")
    if not (0 <= i < k and 0 <= j < k) or i == j:
        raise FactorMismatch(f"因子位置 ({i}, {j}) 無效（共 {k} 個因子）")

    new_factors = list(factors)
    if op:
        if factors[i].is_opposite == factors[j].is_opposite:
            raise FactorMismatch("Σ^op 需要一個代數與一個反代數")
        new_factors[i] = opposite_algebra(factors[j])
        new_factors[j] = opposite_algebra(factors[i])
    else:
        new_factors[i], new_factors[j] = factors[j], factors[i]

    dims = algebra.factor_dims
    index = np.arange(algebra.dim).reshape(dims)
    permuted = np.swapaxes(index, i, j).reshape(-1)
    matrix = np.zeros((algebra.dim, algebra.dim))
    matrix[np.arange(algebra.dim), permuted] = 1.0
    return tensor_of_factors(new_factors), matrix


def swap_factors(x: 'AlgebraElement', i: int, j: int, op: bool = False) -> 'AlgebraElement':
    target, matrix = swap_map(x.algebra, i, j, op=op)
    return AlgebraElement(target, matrix @ x.coords)


# ---------- 元素 ----------

@dataclass(eq=False)
class AlgebraElement:
    algebra: ConcreteAlgebra
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=complex)
        if self.coords.shape != (self.algebra.dim,):
            raise AlgebraMismatch(f"座標長度 {self.coords.shape} 與代數維度 {self.algebra.dim} 不符")

    def realize(self) -> np.ndarray:
        return self.algebra.realize(self.coords)

    def adjoint(self) -> 'AlgebraElement':
        return AlgebraElement(self.algebra, self.algebra.adjoint(self.coords))

    def is_self_adjoint(self, tol: float = EPS_STRUCT) -> bool:
        m = self.realize()
        return _relative_residual(m, m.conj().T) < tol

    def is_positive(self, tol: float = EPS_PSD) -> bool:
        m = self.realize()
        if not self.is_self_adjoint():
            return False
        eigenvalues = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return bool(eigenvalues[0] >= psd_floor(eigenvalues, tol))

    def norm(self) -> float:
        return float(np.linalg.norm(self.realize(), 2))

    def _other(self, other) -> np.ndarray:
        if isinstance(other, AlgebraElement):
            require_same_algebra(self.algebra, other.algebra)
            return other.coords
        return np.asarray(other, dtype=complex)

    def __add__(self, other):
        return AlgebraElement(self.algebra, self.coords + self._other(other))

    def __sub__(self, other):
        return AlgebraElement(self.algebra, self.coords - self._other(other))

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.coords)

    def __mul__(self, scalar):
        return AlgebraElement(self.algebra, self.coords * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return AlgebraElement(self.algebra, self.algebra.multiply(self.coords, self._other(other)))


# ---------- 泛函 ----------

@dataclass
class PositivityReport:
    is_positive: bool
    is_hermitian: bool
    min_eigenvalue: float
    witness: Optional[np.ndarray]   # x 使得 φ(x*x) = min_eigenvalue


@dataclass(eq=False)
class LinearFunctional:
    algebra: ConcreteAlgebra
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.algebra.dim,):
            raise AlgebraMismatch(f"泛函長度 {self.values.shape} 與代數維度 {self.algebra.dim} 不符")

    def __call__(self, x) -> complex:
        coords = x.coords if isinstance(x, AlgebraElement) else np.asarray(x, dtype=complex)
        return complex(self.values @ coords)

    def __add__(self, other: 'LinearFunctional'):
        require_same_algebra(self.algebra, other.algebra)
        return LinearFunctional(self.algebra, self.values + other.values)

    def __sub__(self, other: 'LinearFunctional'):
        require_same_algebra(self.algebra, other.algebra)
        return LinearFunctional(self.algebra, self.values - other.values)

    def __mul__(self, scalar):
        return LinearFunctional(self.algebra, self.values * scalar)

    __rmul__ = __mul__

    def pairing(self) -> np.ndarray:
        return self.algebra.product_pairing(self.values)

    def gns_gram(self) -> np.ndarray:
        """[φ(B_i^* B_j)]"""
        return self.algebra.adjoint_map.T @ self.pairing()

    def positivity(self) -> PositivityReport:
        gram = self.gns_gram()
        scale = max(1.0, float(np.max(np.abs(gram))) if gram.size else 1.0)
        hermitian = float(np.max(np.abs(gram - gram.conj().T))) <= EPS_STRUCT * scale
        eigenvalues, vectors = np.linalg.eigh((gram + gram.conj().T) / 2)
        positive = hermitian and eigenvalues[0] >= psd_floor(eigenvalues)
        witness = None if positive else vectors[:, 0]
        return PositivityReport(bool(positive), bool(hermitian), float(eigenvalues[0]), witness)

    def is_positive(self) -> bool:
        return self.positivity().is_positive

    def is_hermitian(self) -> bool:
        adjoint_values = self.algebra.adjoint_map.T @ self.values
        return bool(np.allclose(adjoint_values, self.values.conj(), atol=EPS_STRUCT))

    def is_state(self) -> bool:
        return self.is_positive() and abs(self(self.algebra.unit_coords) - 1.0) < EPS_STRUCT

    def is_tracial(self) -> bool:
        pairing = self.pairing()
        scale = max(1.0, float(np.max(np.abs(pairing))))
        return float(np.max(np.abs(pairing - pairing.T))) <= EPS_STRUCT * scale


class TraceFunctional(LinearFunctional):
    """跡：正且 τ(xy) = τ(yx)；忠實性快取"""

    @cached_property
    def is_faithful(self) -> bool:
        eigenvalues = np.linalg.eigvalsh(self.gns_gram())
        return bool(eigenvalues[0] > EPS_PSD * max(1.0, abs(eigenvalues[-1])))

    def require_faithful(self):
        if not self.is_faithful:
            raise NotFaithful(f"跡 {self.name or self.algebra.name} 不忠實")


def as_trace(phi: LinearFunctional, name: str = "") -> TraceFunctional:
    """驗證跡條件"""
    if isinstance(phi, TraceFunctional):
        return phi
    if not phi.is_tracial():
        raise NotATrace(f"{phi.name or '泛函'} 不滿足 τ(xy)=τ(yx)")
    if not phi.is_positive():
        raise NotATrace(f"{phi.name or '泛函'} 不是正泛函")
    return TraceFunctional(phi.algebra, phi.values, name or phi.name)


def matrix_trace(algebra: ConcreteAlgebra, normalized: bool = False) -> TraceFunctional:
    """環境矩陣跡在子代數上的限制"""
    values = np.einsum('kaa->k', algebra.basis)
    name = "Tr"
    if normalized:
        values = values / (values @ algebra.unit_coords)
        name = "tr"
    return TraceFunctional(algebra, values, name=f"{name}[{algebra.name}]")


def tensor_functional(phi: LinearFunctional, psi: LinearFunctional) -> LinearFunctional:
    algebra = tensor_algebra(phi.algebra, psi.algebra)
    return LinearFunctional(algebra, np.kron(phi.values, psi.values), name=f"{phi.name}⊗{psi.name}")


def tensor_trace(tau1: TraceFunctional, tau2: TraceFunctional) -> TraceFunctional:
    algebra = tensor_algebra(tau1.algebra, tau2.algebra)
    return TraceFunctional(algebra, np.kron(tau1.values, tau2.values), name=f"{tau1.name}⊗{tau2.name}")


def opposite_functional(phi: LinearFunctional) -> LinearFunctional:
    """φ^op(b^op) = φ(b)"""
    cls = TraceFunctional if isinstance(phi, TraceFunctional) else LinearFunctional
    return cls(opposite_algebra(phi.algebra), phi.values, name=f"{phi.name}ᵒᵖ")


def pullback_functional(phi: LinearFunctional, matrix, source: ConcreteAlgebra) -> LinearFunctional:
    """(φ∘P)(x) = φ(P x)，P 為座標矩陣"""
    matrix = np.asarray(matrix)
    if matrix.shape != (phi.algebra.dim, source.dim):
        raise AlgebraMismatch(f"座標映射形狀 {matrix.shape} 不符")
    return LinearFunctional(source, matrix.T @ phi.values, name=phi.name)


def _require_trace_on(tau: LinearFunctional, algebra: ConcreteAlgebra) -> TraceFunctional:
    if not same_algebra(tau.algebra, algebra):
        raise TraceMismatch(f"跡定義在 {tau.algebra.name}，需要 {algebra.name}")
    return as_trace(tau)


def evaluate_mu_tau(algebra: ConcreteAlgebra, tau: LinearFunctional) -> LinearFunctional:
    """μ_τ(B_i ⊗ B_j^op) = τ(B_i B_j)，定義在 B⊗B^op"""
    tau = _require_trace_on(tau, algebra)
    pairing = algebra.product_pairing(tau.values)
    target = tensor_algebra(algebra, opposite_algebra(algebra))
    return LinearFunctional(target, pairing.reshape(-1), name=f"μ[{tau.name}]")


@dataclass
class DensityResult:
    element: AlgebraElement
    positive: bool
    trace_value: complex

    @property
    def in_density_set(self) -> bool:
        return self.positive and abs(self.trace_value - 1.0) < EPS_STRUCT


def density_from_functional(phi: LinearFunctional, tau: LinearFunctional) -> DensityResult:
    """解 φ(x) = τ(b x)：K^T b = v，K_ij = τ(B_i B_j)"""
    tau = _require_trace_on(tau, phi.algebra)
    tau.require_faithful()
    pairing = phi.algebra.product_pairing(tau.values)
    coords = linalg.solve(pairing.T, phi.values)
    element = AlgebraElement(phi.algebra, coords)
    return DensityResult(element, element.is_positive(), tau(element))
