"""
譜三元組與 Lipschitz 半範數
交換子半範數、張量/反代數/拉回構造，以及四種奇偶情形的 Kasparov 外積
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from algebra import (AlgebraElement, ConcreteAlgebra, diagonal_algebra, matrix_algebra, opposite_algebra,
                     require_same_algebra, swap_map, tensor_algebra)
from config import EPS_STRUCT
from errors import (AlgebraMismatch, GradingMissing, GradingUnexpected, InvalidTriple,
                    SeminormNotCommutatorForm)
from performance_optimizer import parallel_map


def _max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[a, b_k]，b 為 (k, H, H)"""
    return np.einsum('ab,kbc->kac', a, b) - np.einsum('kab,bc->kac', b, a)


@dataclass(eq=False)
class SpectralTriple:
    algebra: ConcreteAlgebra
    rep: np.ndarray                      # (d, H, H)：π(B_i)
    dirac: np.ndarray
    grading: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.rep = np.asarray(self.rep, dtype=complex)
        self.dirac = np.asarray(self.dirac, dtype=complex)
        if self.grading is not None:
            self.grading = np.asarray(self.grading, dtype=complex)
        self.name = self.name or f"T[{self.algebra.name}]"

    @property
    def hilbert_dim(self) -> int:
        return self.dirac.shape[0]

    @property
    def is_even(self) -> bool:
        return self.grading is not None

    def represent(self, x) -> np.ndarray:
        coords = x.coords if isinstance(x, AlgebraElement) else np.asarray(x, dtype=complex)
        return np.tensordot(coords, self.rep, axes=1)

    def commutators(self) -> np.ndarray:
        """[D, π(B_i)]"""
        return _commutator(self.dirac, self.rep)

    def validate(self, tol: float = EPS_STRUCT, check_homomorphism: bool = True):
        """檢查三元組條件，不符時拋出 InvalidTriple"""
        d, h = self.algebra.dim, self.hilbert_dim
        if self.rep.shape != (d, h, h):
            raise InvalidTriple(f"表示形狀 {self.rep.shape} 應為 {(d, h, h)}")
        if self.dirac.shape != (h, h):
            raise InvalidTriple(f"Dirac 算子形狀 {self.dirac.shape} 應為 {(h, h)}")
        scale = max(1.0, _max_abs(self.dirac))
        if _max_abs(self.dirac - self.dirac.conj().T) > tol * scale:
            raise InvalidTriple("Dirac 算子不是厄米矩陣")

        identity = np.eye(h)
        if _max_abs(self.represent(self.algebra.unit_coords) - identity) > tol:
            raise InvalidTriple("表示不保持單位元")
        adjoints = np.conj(np.transpose(self.rep, (0, 2, 1)))
        expected = np.einsum('ki,kab->iab', self.algebra.adjoint_map, self.rep)
        if _max_abs(adjoints - expected) > tol * max(1.0, _max_abs(self.rep)):
            raise InvalidTriple("表示不保持伴隨")
        if check_homomorphism:
            products = np.einsum('iab,jbc->ijac', self.rep, self.rep)
            expected = np.einsum('ijk,kac->ijac', self.algebra.structure_constants, self.rep)
            if _max_abs(products - expected) > tol * max(1.0, _max_abs(products)):
                raise InvalidTriple("表示不是乘法同態")
        singular = np.linalg.svd(self.rep.reshape(d, h * h), compute_uv=False)
        if singular[-1] <= tol * max(1.0, singular[0]):
            raise InvalidTriple("表示不忠實")

        if self.grading is not None:
            g = self.grading
            if g.shape != (h, h):
                raise InvalidTriple(f"分次算子形狀 {g.shape} 應為 {(h, h)}")
            if _max_abs(g - g.conj().T) > tol:
                raise InvalidTriple("分次算子不是厄米矩陣")
            if _max_abs(g @ g - identity) > tol:
                raise InvalidTriple("分次算子平方不為單位")
            if _max_abs(_commutator(g, self.rep)) > tol * max(1.0, _max_abs(self.rep)):
                raise InvalidTriple("分次算子與表示不交換")
            if _max_abs(g @ self.dirac + self.dirac @ g) > tol * scale:
                raise InvalidTriple("分次算子與 Dirac 算子不反交換")
        return self


def make_triple(algebra: ConcreteAlgebra, rep, dirac, grading=None, name: str = "",
                validate: bool = True) -> SpectralTriple:
    triple = SpectralTriple(algebra, rep, dirac, grading, name)
    if validate:
        triple.validate()
    return triple


def matrix_dirac_triple(n: int, operators: Sequence) -> SpectralTriple:
    """(M_n, ℂ^n⊗ℂ^N, Σ L_i ⊗ e_ii)，表示 a ↦ a ⊗ 1_N"""
    operators = [np.asarray(op, dtype=complex) for op in operators]
    count = len(operators)
    algebra = matrix_algebra(n)
    rep = np.stack([np.kron(b, np.eye(count)) for b in algebra.basis])
    dirac = np.zeros((n * count, n * count), dtype=complex)
    for i, op in enumerate(operators):
        e = np.zeros((count, count))
        e[i, i] = 1.0
        dirac += np.kron(op, e)
    return make_triple(algebra, rep, dirac, name=f"∂_{n}")


def standard_triple(algebra: ConcreteAlgebra, dirac, grading=None, name: str = "") -> SpectralTriple:
    """在環境空間上的恆等表示"""
    return make_triple(algebra, algebra.basis, dirac, grading, name)


def opposite_triple(triple: SpectralTriple) -> SpectralTriple:
    """A^op 上的三元組：π^op(a^op) = π(a)^t，D^t，γ^t"""
    grading = None if triple.grading is None else triple.grading.T
    return SpectralTriple(opposite_algebra(triple.algebra), np.transpose(triple.rep, (0, 2, 1)),
                          triple.dirac.T, grading, name=f"{triple.name}ᵒᵖ")


def even_double(triple: SpectralTriple) -> SpectralTriple:
    """奇三元組加倍為偶：H⊕H，D ↦ [[0, D], [D, 0]]，γ = diag(1, -1)"""
    if triple.is_even:
        raise GradingUnexpected(f"{triple.name} 已有分次")
    h = triple.hilbert_dim
    zero = np.zeros((h, h))
    rep = np.stack([np.block([[r, zero], [zero, r]]) for r in triple.rep])
    dirac = np.block([[zero, triple.dirac], [triple.dirac, zero]])
    grading = np.diag(np.concatenate([np.ones(h), -np.ones(h)]))
    return SpectralTriple(triple.algebra, rep, dirac, grading, name=f"{triple.name}⊕")


def _require_parity(triple: SpectralTriple, even: Optional[bool]):
    if even is None:
        return
    if even and not triple.is_even:
        raise GradingMissing(f"{triple.name} 需要分次算子")
    if not even and triple.is_even:
        raise GradingUnexpected(f"{triple.name} 不應帶分次算子")


def kasparov_product(ta: SpectralTriple, tb: SpectralTriple, parity: Optional[tuple] = None,
                     validate: bool = True) -> SpectralTriple:
    """
    A⊗B 上的外積三元組

    偶×偶：D = D_A⊗1 + γ_A⊗D_B，γ = γ_A⊗γ_B
    奇×奇：H 加倍，D = [[0, D_A⊗1 + i·1⊗D_B], [D_A⊗1 − i·1⊗D_B, 0]]，γ = diag(1, −1)
    奇×偶：D = D_A⊗γ_B + 1⊗D_B；偶×奇：D = D_A⊗1 + γ_A⊗D_B；兩者皆無分次

    parity=(even_a, even_b) 時先檢查兩個三元組的奇偶性。
    """
    if parity is not None:
        _require_parity(ta, parity[0])
        _require_parity(tb, parity[1])
    algebra = tensor_algebra(ta.algebra, tb.algebra)
    ha, hb = ta.hilbert_dim, tb.hilbert_dim
    rep = np.einsum('iab,jcd->ijacbd', ta.rep, tb.rep).reshape(algebra.dim, ha * hb, ha * hb)
    ia, ib = np.eye(ha), np.eye(hb)
    name = f"{ta.name}×{tb.name}"

    if ta.is_even and tb.is_even:
        dirac = np.kron(ta.dirac, ib) + np.kron(ta.grading, tb.dirac)
        grading = np.kron(ta.grading, tb.grading)
    elif not ta.is_even and not tb.is_even:
        x = np.kron(ta.dirac, ib)
        y = np.kron(ia, tb.dirac)
        zero = np.zeros((ha * hb, ha * hb))
        dirac = np.block([[zero, x + 1j * y], [x - 1j * y, zero]])
        rep = np.stack([np.block([[r, zero], [zero, r]]) for r in rep])
        grading = np.diag(np.concatenate([np.ones(ha * hb), -np.ones(ha * hb)]))
    elif not ta.is_even:
        dirac = np.kron(ta.dirac, tb.grading) + np.kron(ia, tb.dirac)
        grading = None
    else:
        dirac = np.kron(ta.dirac, ib) + np.kron(ta.grading, tb.dirac)
        grading = None

    product = SpectralTriple(algebra, rep, dirac, grading, name=name)
    if validate:
        # 大型張量積的同態檢查代價為 d²H³，只在小尺寸時執行
        product.validate(check_homomorphism=algebra.dim ** 2 * product.hilbert_dim ** 3 <= 5e8)
    return product


# ---------- 半範數 ----------

class Seminorm:
    """
    L(a) = Σ_t ‖Σ_k a_k C^{(t)}_k‖

    每個 block C^{(t)} 為 (d, H_t, H_t) 陣列；交換子形式只有一個 block，
    sum_tensor 為兩組 block 的串接。custom 以黑箱函數求值，沒有 block。
    """

    def __init__(self, algebra: ConcreteAlgebra, kind: str, blocks: Optional[List[np.ndarray]] = None,
                 evaluator: Optional[Callable] = None, name: str = "", triple: Optional[SpectralTriple] = None):
        self.algebra = algebra
        self.kind = kind
        self._blocks = blocks
        self.evaluator = evaluator
        self.name = name or kind
        self.triple = triple

    def __repr__(self):
        return f"Seminorm({self.name} on {self.algebra.name})"

    @property
    def is_commutator_form(self) -> bool:
        return self._blocks is not None

    def blocks(self) -> List[np.ndarray]:
        if self._blocks is None:
            raise SeminormNotCommutatorForm(f"半範數 {self.name} 不是交換子形式")
        return self._blocks

    def __call__(self, x) -> float:
        return seminorm_eval(self, x)


def seminorm_eval(seminorm: Seminorm, x) -> float:
    """有限維時定義域為整個代數，數值永遠有限"""
    if isinstance(x, AlgebraElement):
        require_same_algebra(seminorm.algebra, x.algebra)
        coords = x.coords
    else:
        coords = np.asarray(x, dtype=complex)
        if coords.shape != (seminorm.algebra.dim,):
            raise AlgebraMismatch(f"座標長度 {coords.shape} 與 {seminorm.algebra.name} 不符")
    if not seminorm.is_commutator_form:
        return float(seminorm.evaluator(AlgebraElement(seminorm.algebra, coords)))
    total = 0.0
    for block in seminorm.blocks():
        total += float(np.linalg.norm(np.tensordot(coords, block, axes=1), 2))
    return total


def commutator_seminorm(triple: SpectralTriple) -> Seminorm:
    return Seminorm(triple.algebra, 'commutator', [triple.commutators()],
                    name=f"L[{triple.name}]", triple=triple)


def operator_norm_seminorm(algebra: ConcreteAlgebra) -> Seminorm:
    """L(a) = ‖a‖"""
    return Seminorm(algebra, 'operator_norm', [np.asarray(algebra.basis)], name=f"‖·‖[{algebra.name}]")


def custom_seminorm(algebra: ConcreteAlgebra, fn: Callable, name: str = "custom") -> Seminorm:
    return Seminorm(algebra, 'custom', evaluator=fn, name=name)


def left_tensor_seminorm(seminorm: Seminorm, other: ConcreteAlgebra) -> Seminorm:
    """L_A ⊗ 1 在 A⊗B 上，以 D⊗1 的交換子求值"""
    blocks = [np.einsum('iab,jcd->ijacbd', c, other.basis).reshape(
        c.shape[0] * other.dim, c.shape[1] * other.ambient_dim, c.shape[2] * other.ambient_dim)
        for c in seminorm.blocks()]
    return Seminorm(tensor_algebra(seminorm.algebra, other), 'left_tensor', blocks,
                    name=f"{seminorm.name}⊗1")


def right_tensor_seminorm(other: ConcreteAlgebra, seminorm: Seminorm) -> Seminorm:
    """1 ⊗ L_B 在 A⊗B 上"""
    blocks = [np.einsum('iab,jcd->ijacbd', other.basis, c).reshape(
        other.dim * c.shape[0], other.ambient_dim * c.shape[1], other.ambient_dim * c.shape[2])
        for c in seminorm.blocks()]
    return Seminorm(tensor_algebra(other, seminorm.algebra), 'right_tensor', blocks,
                    name=f"1⊗{seminorm.name}")


def sum_tensor_seminorm(la: Seminorm, lb: Seminorm) -> Seminorm:
    """L_A⊗1 + 1⊗L_B"""
    left = left_tensor_seminorm(la, lb.algebra)
    right = right_tensor_seminorm(la.algebra, lb)
    return Seminorm(left.algebra, 'sum_tensor', left.blocks() + right.blocks(),
                    name=f"{la.name}⊗1+1⊗{lb.name}")


def opposite_seminorm(seminorm: Seminorm) -> Seminorm:
    """L^op(a^op) = L(a)，座標不變"""
    algebra = opposite_algebra(seminorm.algebra)
    if not seminorm.is_commutator_form:
        fn = seminorm.evaluator
        return custom_seminorm(algebra, lambda x: fn(AlgebraElement(seminorm.algebra, x.coords)),
                               name=f"{seminorm.name}ᵒᵖ")
    return Seminorm(algebra, 'opposite', seminorm.blocks(), name=f"{seminorm.name}ᵒᵖ")


def pullback_seminorm(seminorm: Seminorm, matrix, source: ConcreteAlgebra) -> Seminorm:
    """(L∘P)(x) = L(P x)，P 為座標矩陣 (d_L × d_source)"""
    matrix = np.asarray(matrix)
    if matrix.shape != (seminorm.algebra.dim, source.dim):
        raise AlgebraMismatch(f"座標映射形狀 {matrix.shape} 不符")
    if not seminorm.is_commutator_form:
        fn = seminorm.evaluator
        return custom_seminorm(source, lambda x: fn(AlgebraElement(seminorm.algebra, matrix @ x.coords)),
                               name=f"{seminorm.name}∘P")
    blocks = [np.einsum('kj,kab->jab', matrix, c) for c in seminorm.blocks()]
    return Seminorm(source, 'pullback', blocks, name=f"{seminorm.name}∘P")


def swap_pullback_seminorm(seminorm: Seminorm, source: ConcreteAlgebra, i: int, j: int,
                           op: bool = False) -> Seminorm:
    """L∘Σ_[ij]（或 L∘Σ^op），Σ 從 source 映到 L 的代數"""
    target, matrix = swap_map(source, i, j, op=op)
    require_same_algebra(target, seminorm.algebra, "交換後的代數")
    return pullback_seminorm(seminorm, matrix, source)


# ---------- 取樣檢查 ----------

def random_element(algebra: ConcreteAlgebra, rng: np.random.Generator, self_adjoint: bool = False) -> AlgebraElement:
    coords = rng.standard_normal(algebra.dim) + 1j * rng.standard_normal(algebra.dim)
    element = AlgebraElement(algebra, coords)
    if self_adjoint:
        element = (element + element.adjoint()) * 0.5
    return element


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def tensor_seminorm_lower_bound(seminorm: Seminorm, other: ConcreteAlgebra, x: AlgebraElement,
                                samples: int = 200, seed: int = 0, left: bool = True) -> float:
    """
    (L_A⊗1)(x) ≥ sup_ψ L_A((id⊗ψ)(x))，以隨機 B 上的態取樣下界

    left=False 時改為 (1⊗L_B)。態以環境空間上的密度矩陣產生。
    """
    rng = np.random.default_rng(seed)
    dims = (seminorm.algebra.dim, other.dim) if left else (other.dim, seminorm.algebra.dim)
    coords = x.coords.reshape(dims)
    best = 0.0
    for _ in range(samples):
        rho = random_density(other.ambient_dim, rng)
        values = np.einsum('kab,ba->k', other.basis, rho)
        reduced = coords @ values if left else values @ coords
        best = max(best, seminorm_eval(seminorm, reduced))
    return best


@dataclass
class DominationReport:
    samples: int
    violations: int
    max_violation: float
    details: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def seminorm_domination_check(ta: SpectralTriple, tb: SpectralTriple, samples: int = 500,
                              seed: int = 0, tol: float = EPS_STRUCT) -> DominationReport:
    """(L_A⊗1) ≤ L_{A×B} 與 (1⊗L_B) ≤ L_{A×B}"""
    product = commutator_seminorm(kasparov_product(ta, tb))
    left = left_tensor_seminorm(commutator_seminorm(ta), tb.algebra)
    right = right_tensor_seminorm(ta.algebra, commutator_seminorm(tb))
    seeds = np.random.SeedSequence(seed).spawn(samples)

    def check(seq):
        x = random_element(product.algebra, np.random.default_rng(seq))
        value = product(x)
        return max(left(x) - value, right(x) - value) / max(1.0, value)

    excess = parallel_map(check, seeds, task_type='sampling')
    violations = sum(1 for e in excess if e > tol)
    return DominationReport(samples, violations, float(max(excess, default=0.0)))


def stability_kernel_check(tn: SpectralTriple, ta: SpectralTriple, tb: SpectralTriple,
                           samples: int = 20, seed: int = 0) -> float:
    """
    L_{(∂n×∂n)×(∂A×∂B)}(1_n⊗1_n^op⊗x) 與 L_{∂A×∂B}(x) 的最大相對差

    外層 Kasparov 積以 validate=False 建構；奇偶組合由輸入三元組決定。
    """
    inner = kasparov_product(tn, opposite_triple(tn), validate=False)
    base = kasparov_product(ta, tb, validate=False)
    amplified = commutator_seminorm(kasparov_product(inner, base, validate=False))
    small = commutator_seminorm(base)
    unit = inner.algebra.unit_coords
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = random_element(base.algebra, rng)
        lhs = amplified(np.kron(unit, x.coords))
        rhs = small(x)
        worst = max(worst, abs(lhs - rhs) / max(1.0, rhs))
    return worst


def metric_graph_triple(n: int, edges: Sequence[tuple], name: str = "") -> SpectralTriple:
    """
    n 點空間上以加權圖給出的交換三元組

    每條邊 (i, j, d) 貢獻一個 ℂ² 區塊，f ↦ diag(f_i, f_j)，D = offdiag(1/d)，
    因此 L(f) = max |f_i − f_j| / d。
    """
    algebra = diagonal_algebra(n)
    h = 2 * len(edges)
    rep = np.zeros((n, h, h), dtype=complex)
    dirac = np.zeros((h, h), dtype=complex)
    for e, (i, j, d) in enumerate(edges):
        rep[i, 2 * e, 2 * e] = 1.0
        rep[j, 2 * e + 1, 2 * e + 1] = 1.0
        dirac[2 * e, 2 * e + 1] = dirac[2 * e + 1, 2 * e] = 1.0 / d
    return make_triple(algebra, rep, dirac, name=name or f"graph{n}")
