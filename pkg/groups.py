"""
有限群、2-餘循環、長度函數與扭曲群代數
左右正則表示、典範跡、長度 Dirac 算子、正定函數與乘子通道
"""

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from math import gcd
from typing import List, Optional, Sequence

import numpy as np

from algebra import ConcreteAlgebra, TraceFunctional, build_algebra, opposite_algebra
from channels import ChannelMap, trace_adjoint
from config import EPS_PSD, EPS_STRUCT, psd_floor
from errors import InvalidCocycle, InvalidGroup, InvalidLength, NotPositiveDefinite
from geometry import (Seminorm, SpectralTriple, commutator_seminorm, make_triple,
                      random_element)
from performance_optimizer import parallel_map


@dataclass(eq=False)
class FiniteGroup:
    mult_table: np.ndarray
    identity: int = 0
    name: str = ""

    def __post_init__(self):
        self.mult_table = np.asarray(self.mult_table, dtype=int)
        self.name = self.name or f"G{self.order}"

    @property
    def order(self) -> int:
        return self.mult_table.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        rows, cols = np.nonzero(self.mult_table == self.identity)
        inverse = np.empty(self.order, dtype=int)
        inverse[rows] = cols
        return inverse

    def multiply(self, g: int, h: int) -> int:
        return int(self.mult_table[g, h])

    def validate(self) -> 'FiniteGroup':
        table, n, e = self.mult_table, self.order, self.identity
        if table.ndim != 2 or table.shape != (n, n):
            raise InvalidGroup(f"乘法表形狀 {table.shape} 不是方陣")
        if table.min() < 0 or table.max() >= n:
            raise InvalidGroup("乘法表含有超出範圍的元素")
        if not 0 <= e < n:
            raise InvalidGroup(f"單位元索引 {e} 超出範圍")
        if not (np.array_equal(table[e], np.arange(n)) and np.array_equal(table[:, e], np.arange(n))):
            raise InvalidGroup("單位元律不成立")
        for g in range(n):
            if not (np.any(table[g] == e) and np.any(table[:, g] == e)):
                raise InvalidGroup(f"元素 {g} 沒有反元素")
        # (gh)k = g(hk)
        left = table[table, :]                       # [g,h,k] = (gh)k
        right = table[:, table]                      # [g,h,k] = g(hk)
        if not np.array_equal(left, right):
            g, h, k = np.argwhere(left != right)[0]
            raise InvalidGroup(f"結合律不成立於 ({g}, {h}, {k})", triple=(int(g), int(h), int(k)))
        return self


def group_from_table(table: Sequence[Sequence[int]], identity: int = 0, name: str = "") -> FiniteGroup:
    return FiniteGroup(np.asarray(table, dtype=int), identity, name).validate()


def cyclic_group(n: int) -> FiniteGroup:
    a = np.arange(n)
    return group_from_table((a[:, None] + a[None, :]) % n, 0, name=f"Z/{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """r^k s^e 的索引為 k + n·e"""
    table = np.zeros((2 * n, 2 * n), dtype=int)
    for e1 in range(2):
        for k1 in range(n):
            for e2 in range(2):
                for k2 in range(n):
                    k = (k1 + (-1) ** e1 * k2) % n
                    table[k1 + n * e1, k2 + n * e2] = k + n * (e1 ^ e2)
    return group_from_table(table, 0, name=f"D{n}")


def symmetric_group(n: int) -> FiniteGroup:
    """置換依字典序排列，索引 0 為恆等置換；(pq)(i) = p(q(i))"""
    if n > 4:
        raise InvalidGroup("只支援 n ≤ 4 的對稱群")
    perms = list(permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(p[q[i]] for i in range(n))] for q in perms] for p in perms]
    return group_from_table(table, 0, name=f"S{n}")


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    """(a, b) 的索引為 a·|H| + b"""
    table = (g.mult_table[:, None, :, None] * h.order + h.mult_table[None, :, None, :])
    n = g.order * h.order
    return group_from_table(table.reshape(n, n), g.identity * h.order + h.identity, name=f"{g.name}×{h.name}")


# ---------- 餘循環 ----------

@dataclass(eq=False)
class Cocycle:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    @property
    def is_trivial(self) -> bool:
        return bool(np.allclose(self.values, 1.0))

    def validate(self, group: FiniteGroup, tol: float = EPS_STRUCT) -> 'Cocycle':
        s, table, e = self.values, group.mult_table, group.identity
        if s.shape != (group.order, group.order):
            raise InvalidCocycle(f"餘循環形狀 {s.shape} 與群階 {group.order} 不符")
        if np.max(np.abs(np.abs(s) - 1.0)) > tol:
            raise InvalidCocycle("餘循環的值必須為單位模")
        if np.max(np.abs(s[e, :] - 1.0)) > tol or np.max(np.abs(s[:, e] - 1.0)) > tol:
            raise InvalidCocycle("餘循環未正規化（σ(e,·) = σ(·,e) = 1）")
        # σ(g,h)σ(gh,k) = σ(g,hk)σ(h,k)
        lhs = s[:, :, None] * s[table, :]
        rhs = s[:, table] * s[None, :, :]
        residual = float(np.max(np.abs(lhs - rhs)))
        if residual > tol:
            raise InvalidCocycle(f"餘循環恆等式不成立（殘差 {residual:.2e}）", residual=residual)
        return self


def trivial_cocycle(group: FiniteGroup) -> Cocycle:
    return Cocycle(np.ones((group.order, group.order)))


def cocycle_from_table(group: FiniteGroup, table) -> Cocycle:
    return Cocycle(table).validate(group)


def bicharacter_cocycle(m: int, n: int, k: int = 1) -> tuple:
    """
    Z/m × Z/n 上的 σ((a1,a2),(b1,b2)) = ζ^{a2·b1}，ζ = exp(2πik/gcd(m,n))

    回傳 (群, 餘循環)。m = n = 2、k = 1 時為 (−1)^{a2·b1}。
    """
    group = direct_product(cyclic_group(m), cyclic_group(n))
    zeta = np.exp(2j * np.pi * k / gcd(m, n))
    a1, a2 = np.divmod(np.arange(group.order), n)
    values = zeta ** np.outer(a2, a1)
    return group, Cocycle(values).validate(group)


# ---------- 長度函數 ----------

def validate_length(group: FiniteGroup, length, tol: float = EPS_STRUCT) -> np.ndarray:
    length = np.asarray(length, dtype=float)
    if length.shape != (group.order,):
        raise InvalidLength(f"長度函數長度 {length.shape} 與群階 {group.order} 不符")
    if np.any(length < -tol):
        raise InvalidLength("長度函數必須非負")
    if abs(length[group.identity]) > tol:
        raise InvalidLength("l(e) 必須為 0")
    if np.max(np.abs(length - length[group.inverse])) > tol:
        raise InvalidLength("長度函數必須滿足 l(g⁻¹) = l(g)")
    excess = length[group.mult_table] - (length[:, None] + length[None, :])
    if np.max(excess) > tol:
        g, h = np.unravel_index(int(np.argmax(excess)), excess.shape)
        raise InvalidLength(f"次可加性不成立：l({g}·{h}) > l({g}) + l({h})", pair=(int(g), int(h)))
    return length


def word_length(group: FiniteGroup, generators: Sequence[int]) -> np.ndarray:
    """Cayley 圖上的廣度優先搜尋，生成元自動加入反元素"""
    steps = sorted(set(generators) | {int(group.inverse[g]) for g in generators})
    length = np.full(group.order, -1.0)
    length[group.identity] = 0.0
    queue = deque([group.identity])
    while queue:
        g = queue.popleft()
        for s in steps:
            h = group.multiply(g, s)
            if length[h] < 0:
                length[h] = length[g] + 1
                queue.append(h)
    if np.any(length < 0):
        raise InvalidLength("生成元無法生成整個群")
    return length


# ---------- 扭曲群代數 ----------

@dataclass(eq=False)
class TwistedGroupAlgebra:
    group: FiniteGroup
    cocycle: Cocycle
    algebra: ConcreteAlgebra
    left: np.ndarray     # λ^σ_g
    right: np.ndarray    # ρ^σ_g，A^op 的表示

    @property
    def opposite(self) -> ConcreteAlgebra:
        return opposite_algebra(self.algebra)


def left_regular(group: FiniteGroup, cocycle: Cocycle) -> np.ndarray:
    """(λ_g)_{x,y} = σ(g,y)·[x = g·y]"""
    n = group.order
    matrices = np.zeros((n, n, n), dtype=complex)
    g, y = np.meshgrid(np.arange(n), np.arange(n), indexing='ij')
    matrices[g, group.mult_table[g, y], y] = cocycle.values[g, y]
    return matrices


def right_regular(group: FiniteGroup, cocycle: Cocycle) -> np.ndarray:
    """(ρ_g)_{x,y} = σ(y,g)·[x = y·g]，滿足 ρ_g ρ_h = σ(h,g) ρ_{hg}"""
    n = group.order
    matrices = np.zeros((n, n, n), dtype=complex)
    g, y = np.meshgrid(np.arange(n), np.arange(n), indexing='ij')
    matrices[g, group.mult_table[y, g], y] = cocycle.values[y, g]
    return matrices


def twisted_group_algebra(group: FiniteGroup, cocycle: Optional[Cocycle] = None,
                          name: str = "") -> TwistedGroupAlgebra:
    group.validate()
    cocycle = (cocycle or trivial_cocycle(group)).validate(group)
    left = left_regular(group, cocycle)
    suffix = "" if cocycle.is_trivial else "^σ"
    algebra = build_algebra(group.order, left, name=name or f"C*({group.name}){suffix}")
    return TwistedGroupAlgebra(group, cocycle, algebra, left, right_regular(group, cocycle))


def canonical_trace(tga: TwistedGroupAlgebra) -> TraceFunctional:
    """τ_σ(λ_g) = [g = e]"""
    values = np.zeros(tga.group.order, dtype=complex)
    values[tga.group.identity] = 1.0
    return TraceFunctional(tga.algebra, values, name=f"τ[{tga.group.name}]")


def length_dirac(tga: TwistedGroupAlgebra, length) -> SpectralTriple:
    """(C*_r(G,σ), ℓ²(G), diag(l))，左正則表示"""
    length = validate_length(tga.group, length)
    return make_triple(tga.algebra, tga.left, np.diag(length).astype(complex), name=f"∂_l[{tga.group.name}]")


def length_dirac_op(tga: TwistedGroupAlgebra, length) -> SpectralTriple:
    """反代數上的三元組，以右正則表示作用"""
    length = validate_length(tga.group, length)
    return make_triple(tga.opposite, tga.right, np.diag(length).astype(complex),
                       name=f"∂_l[{tga.group.name}]ᵒᵖ")


# ---------- 正定函數與乘子 ----------

def positive_definite_matrix(group: FiniteGroup, values) -> np.ndarray:
    """[φ(g_j⁻¹ g_i)]_{i,j}"""
    values = np.asarray(values, dtype=complex)
    index = group.mult_table[group.inverse[None, :], np.arange(group.order)[:, None]]
    return values[index]


def positive_definite_function(group: FiniteGroup, values, normalized: bool = False) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    if values.shape != (group.order,):
        raise NotPositiveDefinite(f"函數長度 {values.shape} 與群階 {group.order} 不符")
    matrix = positive_definite_matrix(group, values)
    if np.max(np.abs(matrix - matrix.conj().T)) > EPS_STRUCT * max(1.0, np.max(np.abs(matrix))):
        raise NotPositiveDefinite("[φ(g_j⁻¹g_i)] 不是厄米矩陣")
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] < psd_floor(eigenvalues, EPS_PSD):
        raise NotPositiveDefinite(f"[φ(g_j⁻¹g_i)] 有負特徵值 {eigenvalues[0]:.6g}",
                                  eigenvalue=float(eigenvalues[0]))
    if normalized and abs(values[group.identity] - 1.0) > EPS_STRUCT:
        raise NotPositiveDefinite(f"φ(e) = {values[group.identity]} ≠ 1")
    return values


def conjugate_inverse(group: FiniteGroup, values) -> np.ndarray:
    """φ°(g) = φ(g⁻¹)"""
    return np.asarray(values, dtype=complex)[group.inverse]


def random_positive_definite(group: FiniteGroup, rng: np.random.Generator, terms: int = 2) -> np.ndarray:
    """正則表示係數 ⟨ξ, λ_g ξ⟩ 的凸組合，φ(e) = 1"""
    lam = left_regular(group, trivial_cocycle(group))
    weights = rng.dirichlet(np.ones(terms))
    values = np.zeros(group.order, dtype=complex)
    for w in weights:
        xi = rng.standard_normal(group.order) + 1j * rng.standard_normal(group.order)
        xi /= np.linalg.norm(xi)
        values += w * np.einsum('a,gab,b->g', xi.conj(), lam, xi)
    return values


def multiplier_channel(tga: TwistedGroupAlgebra, values) -> ChannelMap:
    """M_φ(λ_g) = φ(g)λ_g"""
    values = positive_definite_function(tga.group, values)
    return ChannelMap(tga.algebra, tga.algebra, np.diag(values), name="M_φ")


def multiplier_adjoint_residual(tga: TwistedGroupAlgebra, values) -> float:
    """M_φ♯ 與 M_{φ°} 的座標差"""
    tau = canonical_trace(tga)
    adjoint = trace_adjoint(multiplier_channel(tga, values), tau, tau)
    expected = np.diag(conjugate_inverse(tga.group, values))
    return float(np.max(np.abs(adjoint.matrix - expected)))


@dataclass
class ContractionReport:
    samples: int
    violations: int
    max_ratio: float


def multiplier_contraction_check(tga: TwistedGroupAlgebra, values, triple: SpectralTriple,
                                 samples: int = 500, seed: int = 0, tol: float = 1e-9) -> ContractionReport:
    """L(M_φ(x)) ≤ L(x)·(1 + tol)"""
    channel = multiplier_channel(tga, values)
    seminorm = commutator_seminorm(triple)
    seeds = np.random.SeedSequence(seed).spawn(samples)

    def ratio(seq):
        x = random_element(tga.algebra, np.random.default_rng(seq))
        before = seminorm(x)
        after = seminorm(channel(x))
        if before <= EPS_STRUCT:
            return 0.0 if after <= EPS_STRUCT else float('inf')
        return after / before

    ratios = parallel_map(ratio, seeds, task_type='sampling')
    violations = sum(1 for r in ratios if r > 1.0 + tol)
    return ContractionReport(samples, violations, float(max(ratios, default=0.0)))


def corpus_group(name: str) -> tuple:
    """預設語料：回傳 (群, 餘循環, 生成元)"""
    builders = {
        'Z2': lambda: (cyclic_group(2), None, [1]),
        'Z3': lambda: (cyclic_group(3), None, [1]),
        'Z4': lambda: (cyclic_group(4), None, [1]),
        'S3': lambda: (symmetric_group(3), None, [1, 2]),
        'D4': lambda: (dihedral_group(4), None, [1, 4]),
        'Z2xZ2': lambda: (direct_product(cyclic_group(2), cyclic_group(2)), None, [1, 2]),
        'Z2xZ2_twisted': lambda: bicharacter_cocycle(2, 2, 1) + ([1, 2],),
    }
    if name not in builders:
        raise InvalidGroup(f"未知的群 {name}，可用：{', '.join(builders)}")
    return builders[name]()
