"""
Monge-Kantorovich 度量與其衍生距離

mk_L(φ, ψ) = sup{|φ(a) − ψ(a)| : L(a) ≤ 1}，以半定規劃求解：
1. 核預處理：在自伴座標上對 a ↦ 各項交換子做 SVD，φ−ψ 在核上非零即為無窮
2. 在核的正交補上解 max (φ−ψ)(a)，約束 Σ_t ‖C^{(t)}(a)‖ ≤ 1
3. 非交換子形式的半範數改走 SLSQP（較慢，無對偶證書）

另含 Δ（跡通道）、D_L（UCP 映射，交替上升啟發式）、截斷穩定化、
Wasserstein-1 對偶與窮舉格點檢驗。
"""

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from algebra import (AlgebraElement, ConcreteAlgebra, LinearFunctional, matrix_algebra,
                     require_same_algebra)
from channels import (ChannelMap, amplify, cp_oracle_npositivity, is_unital, omega_tau,
                      require_trace_channel, trace_adjoint)
from config import (DEFAULT_STARTS, EPS_SOLVER, EPS_STRUCT, MAX_ITER, create_dual_preset,
                    create_solver_preset)
from errors import ChoiMetricError, HeuristicNonConvergence, Infeasible, SolverDivergence
from geometry import (Seminorm, commutator_seminorm, matrix_dirac_triple, operator_norm_seminorm,
                      seminorm_eval, swap_pullback_seminorm)
from lmi_solver import classify_block, solve_norm_sum_program, solve_trace_norm_program
from performance_optimizer import parallel_map

BLACK_BOX_RADIUS = 1e3


@dataclass
class MKProblem:
    phi: LinearFunctional
    psi: LinearFunctional
    seminorm: Seminorm
    tolerance: float = EPS_SOLVER
    max_iter: int = MAX_ITER
    self_adjoint: bool = True
    solver_mode: str = 'balanced'
    check_states: bool = True

    @property
    def algebra(self) -> ConcreteAlgebra:
        return self.seminorm.algebra

    def difference(self) -> np.ndarray:
        return self.phi.values - self.psi.values


@dataclass
class MKResult:
    value: float                              # math.inf 表示無窮
    status: str                               # optimal / infinite / max_iter
    optimizer: Optional[AlgebraElement] = None
    dual_gap: float = 0.0
    kernel_witness: Optional[AlgebraElement] = None
    iterations: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def is_finite(self) -> bool:
        return self.status != 'infinite'

    @property
    def ok(self) -> bool:
        return self.status in ('optimal', 'infinite')

    def raise_for_status(self) -> 'MKResult':
        if not self.ok:
            raise SolverDivergence(f"求解器未收斂（狀態 {self.status}，間隙 {self.dual_gap:.2e}）",
                                   status=self.status, gap=self.dual_gap)
        return self

    def to_record(self, seed: Optional[int] = None) -> dict:
        return {
            'value': self.value if self.is_finite else "inf",
            'status': self.status,
            'gap': self.dual_gap,
            'seed': seed,
        }


def _directions(algebra: ConcreteAlgebra, self_adjoint: bool) -> np.ndarray:
    """實參數 y 對應座標 H @ y"""
    if self_adjoint:
        return algebra.self_adjoint_basis()
    eye = np.eye(algebra.dim, dtype=complex)
    return np.concatenate([eye, 1j * eye], axis=1)


def _canonical_sign(c: np.ndarray) -> np.ndarray:
    """翻轉 c 使最大分量為正，mk(φ,ψ) 與 mk(ψ,φ) 走完全相同的計算"""
    if c.size == 0:
        return c
    k = int(np.argmax(np.abs(c)))
    return -c if c[k] < 0 else c


def _realified_stack(blocks: Sequence[np.ndarray]) -> np.ndarray:
    columns = []
    for m in blocks:
        flat = m.reshape(m.shape[0], -1).T
        columns.append(flat.real)
        columns.append(flat.imag)
    return np.concatenate(columns, axis=0)


def mk_distance(problem: MKProblem) -> MKResult:
    algebra = problem.algebra
    require_same_algebra(problem.phi.algebra, algebra, "泛函與半範數的代數")
    require_same_algebra(problem.psi.algebra, algebra, "泛函與半範數的代數")
    warnings = []
    if problem.check_states:
        for phi in (problem.phi, problem.psi):
            if not phi.is_state():
                message = f"{phi.name or '泛函'} 不是態，改以差泛函計算"
                print(f"⚠️ {message}")
                warnings.append(message)

    delta = problem.difference()
    zero = AlgebraElement(algebra, np.zeros(algebra.dim))
    if float(np.max(np.abs(delta), initial=0.0)) <= EPS_STRUCT:
        return MKResult(0.0, 'optimal', zero, warnings=warnings)

    directions = _directions(algebra, problem.self_adjoint)
    c = _canonical_sign(np.real(directions.T @ delta))

    if not problem.seminorm.is_commutator_form:
        result = _mk_black_box(problem, directions, c)
        result.warnings = warnings + result.warnings
        return result

    blocks = [np.einsum('kj,kab->jab', directions, block) for block in problem.seminorm.blocks()]
    stacked = _realified_stack(blocks)
    if stacked.shape[0] < stacked.shape[1]:
        stacked = np.vstack([stacked, np.zeros((stacked.shape[1] - stacked.shape[0], stacked.shape[1]))])
    _, singular, vt = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(singular > EPS_STRUCT * max(1.0, singular[0] if singular.size else 0.0)))
    null_space = vt[rank:].T
    range_space = vt[:rank].T

    projection = null_space.T @ c
    if float(np.linalg.norm(projection)) > EPS_STRUCT * max(1.0, float(np.linalg.norm(c))):
        k = null_space @ projection / np.linalg.norm(projection)
        witness = AlgebraElement(algebra, directions @ k)
        return MKResult(math.inf, 'infinite', dual_gap=0.0, kernel_witness=witness, warnings=warnings)

    if rank == 0:
        return MKResult(0.0, 'optimal', zero, warnings=warnings)

    reduced_c = range_space.T @ c
    reduced = [classify_block(np.einsum('jl,jab->lab', range_space, m)) for m in blocks]
    preset = create_solver_preset(problem.solver_mode)
    preset['maxiters'] = problem.max_iter
    solution = solve_norm_sum_program(reduced_c, reduced, preset)

    y = range_space @ solution.y
    optimizer = AlgebraElement(algebra, directions @ y)
    value = max(0.0, float(reduced_c @ solution.y))
    status = 'optimal' if solution.status == 'optimal' else 'max_iter'
    if status == 'optimal' and not (solution.gap <= problem.tolerance * max(1.0, value)):
        status = 'max_iter'
    return MKResult(value, status, optimizer, solution.gap, iterations=solution.iterations,
                    warnings=warnings)


def _mk_black_box(problem: MKProblem, directions: np.ndarray, c: np.ndarray) -> MKResult:
    """SLSQP 於 ±R 方框內；觸及邊界視為無窮"""
    algebra = problem.algebra
    seminorm = problem.seminorm

    def constraint(y):
        return 1.0 - seminorm_eval(seminorm, directions @ y)

    r = directions.shape[1]
    result = minimize(lambda y: -float(c @ y), np.zeros(r), jac=lambda y: -c, method='SLSQP',
                      bounds=[(-BLACK_BOX_RADIUS, BLACK_BOX_RADIUS)] * r,
                      constraints=[{'type': 'ineq', 'fun': constraint}],
                      options={'maxiter': problem.max_iter * 5, 'ftol': problem.tolerance * 1e-2})
    y = result.x
    optimizer = AlgebraElement(algebra, directions @ y)
    warnings = ["黑箱半範數：以 SLSQP 求解，無對偶證書"]
    if float(np.max(np.abs(y), initial=0.0)) >= BLACK_BOX_RADIUS * (1 - 1e-6):
        witness = AlgebraElement(algebra, optimizer.coords / max(1.0, np.linalg.norm(optimizer.coords)))
        return MKResult(math.inf, 'infinite', kernel_witness=witness, iterations=int(result.nit),
                        warnings=warnings)
    status = 'optimal' if result.success else 'max_iter'
    return MKResult(max(0.0, float(c @ y)), status, optimizer, float('nan'), iterations=int(result.nit),
                    warnings=warnings)


def mk(phi: LinearFunctional, psi: LinearFunctional, seminorm: Seminorm, **options) -> MKResult:
    return mk_distance(MKProblem(phi, psi, seminorm, **options))


def zero_functional(algebra: ConcreteAlgebra) -> LinearFunctional:
    return LinearFunctional(algebra, np.zeros(algebra.dim), name="0")


def density_state(rho) -> LinearFunctional:
    """M_n 上的 Tr(ρ ·)"""
    rho = np.asarray(rho.realize() if isinstance(rho, AlgebraElement) else rho, dtype=complex)
    n = rho.shape[0]
    return LinearFunctional(matrix_algebra(n), rho.T.reshape(-1), name="Tr(ρ·)")


def point_state(algebra: ConcreteAlgebra, index: int) -> LinearFunctional:
    """對角代數上的點態 δ_p"""
    values = np.array([b[index, index] for b in algebra.basis], dtype=complex)
    return LinearFunctional(algebra, values, name=f"δ_{index}")


# ---------- Δ ----------

def delta_distance(F: ChannelMap, G: ChannelMap, tau: LinearFunctional, seminorm: Seminorm,
                   **options) -> MKResult:
    """Δ_{τ,L}(F, G) = mk_L(ω_τ(F), ω_τ(G))"""
    require_trace_channel(F, tau)
    require_trace_channel(G, tau)
    result = mk(omega_tau(F, tau), omega_tau(G, tau), seminorm, check_states=False, **options)
    if result.status == 'optimal' and result.value <= options.get('tolerance', EPS_SOLVER):
        if float(np.max(np.abs(F.matrix - G.matrix))) > EPS_STRUCT:
            message = "Δ = 0 但 F ≠ G：半範數的核大於純量"
            print(f"⚠️ {message}")
            result.warnings.append(message)
    return result


@dataclass
class AdjointDeltaReport:
    direct: MKResult
    adjoint: MKResult

    @property
    def difference(self) -> float:
        if not (self.direct.is_finite and self.adjoint.is_finite):
            return 0.0 if self.direct.is_finite == self.adjoint.is_finite else math.inf
        return abs(self.direct.value - self.adjoint.value)


def adjoint_delta_check(F: ChannelMap, G: ChannelMap, tau_a: LinearFunctional, tau_b: LinearFunctional,
                        seminorm: Seminorm, **options) -> AdjointDeltaReport:
    """Δ_{τB,L}(F, G) 對照 Δ_{τA,L∘Σ^op}(F♯, G♯)"""
    direct = delta_distance(F, G, tau_b, seminorm, **options)
    f_adj = trace_adjoint(F, tau_a, tau_b)
    g_adj = trace_adjoint(G, tau_a, tau_b)
    source = omega_tau(f_adj, tau_a).algebra
    swapped = swap_pullback_seminorm(seminorm, source, 0, 1, op=True)
    adjoint = delta_distance(f_adj, g_adj, tau_a, swapped, **options)
    return AdjointDeltaReport(direct, adjoint)


# ---------- Wasserstein-1 對偶 ----------

@dataclass
class WassersteinResult:
    value: float
    status: str
    u: List[np.ndarray] = field(default_factory=list)


def _validate_density(rho, n: int) -> np.ndarray:
    rho = np.asarray(rho.realize() if isinstance(rho, AlgebraElement) else rho, dtype=complex)
    if rho.shape != (n, n):
        raise ChoiMetricError(f"密度矩陣形狀 {rho.shape} 應為 {(n, n)}")
    if np.max(np.abs(rho - rho.conj().T)) > EPS_STRUCT:
        raise ChoiMetricError("密度矩陣不是厄米矩陣")
    eigenvalues = np.linalg.eigvalsh(rho)
    if eigenvalues[0] < -EPS_STRUCT or abs(np.trace(rho) - 1.0) > EPS_STRUCT:
        raise ChoiMetricError("密度矩陣須半正定且跡為 1")
    return rho


def commutator_range_residual(operators: Sequence[np.ndarray], target: np.ndarray) -> float:
    """target 到 {Σ [L_i, u_i]} 的相對距離"""
    n = target.shape[0]
    eye = np.eye(n)
    columns = [np.kron(op, eye) - np.kron(eye, op.T) for op in operators]   # 列優先 vec
    system = np.concatenate(columns, axis=1)
    rhs = target.reshape(-1)
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return float(np.linalg.norm(system @ solution - rhs) / max(1.0, np.linalg.norm(rhs)))


def wasserstein_dual(rho1, rho2, operators: Sequence, solver_mode: str = 'balanced') -> WassersteinResult:
    """
    inf{Σ_i ‖u_i‖_1 : Σ_i [L_i, u_i] = ρ1 − ρ2}

    為 Dirac 算子 Σ L_i⊗e_ii（半範數 max_i ‖[L_i, a]‖）下 mk 的對偶；N = 1 時即 Tr√(u*u)。
    """
    operators = [np.asarray(op, dtype=complex) for op in operators]
    n = operators[0].shape[0]
    rho1 = _validate_density(rho1, n)
    rho2 = _validate_density(rho2, n)
    target = rho1 - rho2
    if np.max(np.abs(target)) <= EPS_STRUCT:
        return WassersteinResult(0.0, 'optimal', [np.zeros((n, n)) for _ in operators])
    residual = commutator_range_residual(operators, target)
    if residual > 1e-9:
        raise Infeasible(f"ρ1 − ρ2 不在交換子映射的值域內（殘差 {residual:.2e}）", residual=residual)
    solution = solve_trace_norm_program(operators, target, create_dual_preset(solver_mode))
    if solution.status not in ('optimal', 'optimal_inaccurate'):
        raise SolverDivergence(f"對偶問題求解失敗：{solution.status}", status=solution.status)
    return WassersteinResult(solution.value, solution.status, solution.u)


def matrix_wasserstein_primal(rho1, rho2, operators: Sequence, **options) -> MKResult:
    """與 wasserstein_dual 對應的原問題"""
    n = np.asarray(operators[0]).shape[0]
    seminorm = commutator_seminorm(matrix_dirac_triple(n, operators))
    return mk(density_state(rho1), density_state(rho2), seminorm, **options)


# ---------- 格點檢驗 ----------

def grid_oracle_mk(phi: LinearFunctional, psi: LinearFunctional, seminorm: Seminorm,
                   directions: Sequence, grid: Sequence[float]) -> float:
    """在自伴方向的實組合格點上取 max |δ(a)| / L(a)；L(a) = 0 而 δ(a) ≠ 0 時為無窮"""
    delta = phi.values - psi.values
    directions = [np.asarray(d.coords if isinstance(d, AlgebraElement) else d, dtype=complex)
                  for d in directions]
    best = 0.0
    for weights in product(grid, repeat=len(directions)):
        coords = sum(w * d for w, d in zip(weights, directions))
        gain = abs(complex(delta @ coords))
        if gain <= EPS_STRUCT:
            continue
        size = seminorm_eval(seminorm, coords)
        if size <= EPS_STRUCT:
            return math.inf
        best = max(best, gain / size)
    return best


# ---------- D_L ----------

@dataclass
class StartTrace:
    seed: int
    value: float
    converged: bool
    history: List[float] = field(default_factory=list)


@dataclass
class DLResult:
    value: float
    converged: bool
    best_seed: Optional[int] = None
    starts: List[StartTrace] = field(default_factory=list)

    def raise_for_convergence(self) -> 'DLResult':
        if not self.converged:
            raise HeuristicNonConvergence(f"D_L 交替上升未收斂，最佳下界 {self.value:.6g}", value=self.value)
        return self


def _unit_range(algebra: ConcreteAlgebra) -> np.ndarray:
    """單位元投影的值域正交基"""
    projector = algebra.realize(algebra.unit_coords)
    eigenvalues, vectors = np.linalg.eigh((projector + projector.conj().T) / 2)
    return vectors[:, eigenvalues > 0.5]


def _ascend(difference: np.ndarray, F: ChannelMap, seminorm: Seminorm, seed: int,
            max_rounds: int, tolerance: float, solver_mode: str) -> StartTrace:
    rng = np.random.default_rng(seed)
    target = F.target
    frame = _unit_range(target)
    v = rng.standard_normal(frame.shape[1]) + 1j * rng.standard_normal(frame.shape[1])
    xi = frame @ (v / np.linalg.norm(v))
    best, history = 0.0, []

    for _ in range(max_rounds):
        state_values = np.einsum('a,kab,b->k', xi.conj(), target.basis, xi)
        functional = LinearFunctional(seminorm.algebra, difference.T @ state_values)
        result = mk(functional, zero_functional(seminorm.algebra), seminorm, check_states=False,
                    tolerance=tolerance, solver_mode=solver_mode)
        if not result.is_finite:
            return StartTrace(seed, math.inf, True, history + [math.inf])
        image = target.realize(difference @ result.optimizer.coords)
        compressed = frame.conj().T @ ((image + image.conj().T) / 2) @ frame
        eigenvalues, vectors = np.linalg.eigh(compressed)
        k = int(np.argmax(np.abs(eigenvalues)))
        bound = float(abs(eigenvalues[k]))
        history.append(bound)
        xi = frame @ vectors[:, k]
        improved = bound - max(best, result.value)
        best = max(best, bound)
        if improved <= tolerance * max(1.0, best):
            return StartTrace(seed, best, True, history)
    return StartTrace(seed, best, False, history)


def dl_distance(F: ChannelMap, G: ChannelMap, seminorm: Seminorm, starts: int = DEFAULT_STARTS,
                seed: int = 0, max_rounds: int = 50, tolerance: float = EPS_SOLVER,
                solver_mode: str = 'balanced') -> DLResult:
    """
    D_L(F, G) = sup{‖(F − G)(a)‖ : a 自伴，L(a) ≤ 1} 的認證下界

    固定單位向量 ξ 解內層 SDP，再以 (F−G)(a) 絕對值最大特徵向量更新 ξ。
    多起點的種子為 seed + s；同值時取最小種子。
    """
    require_same_algebra(F.source, G.source, "來源代數")
    require_same_algebra(F.target, G.target, "目標代數")
    require_same_algebra(F.source, seminorm.algebra, "半範數的代數")
    for channel in (F, G):
        if not (is_unital(channel) and cp_oracle_npositivity(channel).is_cp):
            print(f"⚠️ {channel.name} 不是 UCP 映射，D_L 僅為形式計算")

    difference = F.matrix - G.matrix
    if float(np.max(np.abs(difference))) <= EPS_STRUCT:
        return DLResult(0.0, True, seed, [])

    traces = parallel_map(lambda s: _ascend(difference, F, seminorm, seed + s, max_rounds,
                                            tolerance, solver_mode), range(starts))
    best = sorted(traces, key=lambda t: (-t.value, t.seed))[0]
    converged = any(t.converged for t in traces)
    if not converged:
        print(f"⚠️ D_L 交替上升在 {starts} 個起點皆未收斂，回報最佳下界")
    return DLResult(best.value, converged, best.seed, traces)


@dataclass
class StabilizedResult:
    value: float
    per_level: List[DLResult]
    converged: bool


def dl_stabilized(F: ChannelMap, G: ChannelMap,
                  seminorm_family: Optional[Callable[[int, ConcreteAlgebra], Seminorm]] = None,
                  m_max: int = 2, **options) -> StabilizedResult:
    """
    max_{m ≤ m_max} D_{L_m}(id_m ⊗ F, id_m ⊗ G)

    seminorm_family(m, algebra) 給出 M_m ⊗ A 上的半範數，預設為算子範數。
    """
    family = seminorm_family or (lambda m, algebra: operator_norm_seminorm(algebra))
    levels = []
    for m in range(1, m_max + 1):
        fm, gm = amplify(m, F), amplify(m, G)
        levels.append(dl_distance(fm, gm, family(m, fm.source), **options))
    value = max((level.value for level in levels), default=0.0)
    return StabilizedResult(value, levels, all(level.converged for level in levels))
