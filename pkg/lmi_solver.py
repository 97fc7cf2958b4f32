"""
線性矩陣不等式求解
1. 範數和約束的 SDP（cvxopt.solvers.sdp），供 Monge-Kantorovich 度量使用
2. 跡範數最小化（cvxpy），供 Wasserstein-1 對偶使用
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import cvxopt
import cvxopt.solvers
import cvxpy as cp
import numpy as np

from config import EPS_STRUCT, create_dual_preset, create_solver_preset


def realify(m: np.ndarray) -> np.ndarray:
    """ℂ^{n×n} → ℝ^{2n×2n}：[[Re, -Im], [Im, Re]]，保持厄米 ↔ 對稱與半正定性"""
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


@dataclass
class LMIBlock:
    """
    一個範數項 ‖Σ_j y_j M_j‖ ≤ t

    form='hermitian'：M_j 皆厄米，用兩個 H 階 LMI -tI ⪯ X ⪯ tI
    form='complex'：一般矩陣，用 [[tI, X], [X*, tI]] ⪰ 0
    """
    matrices: np.ndarray   # (r, H, H)
    form: str = 'complex'


def classify_block(matrices: np.ndarray, tol: float = EPS_STRUCT) -> LMIBlock:
    """厄米則直接用；反厄米乘 i；其餘走複數嵌入"""
    matrices = np.asarray(matrices, dtype=complex)
    adjoints = np.conj(np.transpose(matrices, (0, 2, 1)))
    scale = max(1.0, float(np.max(np.abs(matrices))) if matrices.size else 1.0)
    if float(np.max(np.abs(matrices - adjoints), initial=0.0)) <= tol * scale:
        return LMIBlock(matrices, 'hermitian')
    if float(np.max(np.abs(matrices + adjoints), initial=0.0)) <= tol * scale:
        return LMIBlock(1j * matrices, 'hermitian')
    return LMIBlock(matrices, 'complex')


def block_norm(block: LMIBlock, y: np.ndarray) -> float:
    x = np.tensordot(y, block.matrices, axes=1)
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


@dataclass
class LMISolution:
    status: str                 # 'optimal' 或 cvxopt 的其他狀態
    y: np.ndarray
    t: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int


def _constraint_matrices(block: LMIBlock, k: int, n_vars: int) -> List[np.ndarray]:
    r, h, _ = block.matrices.shape
    if block.form == 'hermitian':
        size = 2 * h
        upper = np.zeros((size * size, n_vars))
        lower = np.zeros((size * size, n_vars))
        for j in range(r):
            realified = realify(block.matrices[j]).reshape(-1)
            upper[:, j] = realified
            lower[:, j] = -realified
        upper[:, r + k] = -np.eye(size).reshape(-1)
        lower[:, r + k] = -np.eye(size).reshape(-1)
        return [upper, lower]

    size = 4 * h
    g = np.zeros((size * size, n_vars))
    zero = np.zeros((h, h), dtype=complex)
    for j in range(r):
        m = block.matrices[j]
        embedded = np.block([[zero, m], [m.conj().T, zero]])
        g[:, j] = -realify(embedded).reshape(-1)
    g[:, r + k] = -np.eye(size).reshape(-1)
    return [g]


def solve_norm_sum_program(c: np.ndarray, blocks: Sequence[LMIBlock],
                           preset: Optional[dict] = None) -> LMISolution:
    """
    max c·y  s.t.  Σ_k ‖Σ_j y_j M^{(k)}_j‖ ≤ 1

    變數 (y, t_1..t_m)，Σ t_k ≤ 1 為線性錐約束，每個範數項為 LMI。
    """
    c = np.asarray(c, dtype=float)
    r = c.shape[0]
    m = len(blocks)
    n_vars = r + m
    options = dict(preset or create_solver_preset('balanced'))
    options['show_progress'] = False

    objective = np.concatenate([-c, np.zeros(m)])
    g_lin = np.concatenate([np.zeros(r), np.ones(m)]).reshape(1, n_vars)
    h_lin = np.ones((1, 1))

    gs, hs = [], []
    for k, block in enumerate(blocks):
        for g in _constraint_matrices(block, k, n_vars):
            size = int(round(np.sqrt(g.shape[0])))
            gs.append(cvxopt.matrix(g))
            hs.append(cvxopt.matrix(np.zeros((size, size))))

    sol = cvxopt.solvers.sdp(cvxopt.matrix(objective), Gl=cvxopt.matrix(g_lin), hl=cvxopt.matrix(h_lin),
                             Gs=gs, hs=hs, options=options)
    x = np.array(sol['x']).flatten() if sol['x'] is not None else np.zeros(n_vars)
    primal = sol['primal objective']
    dual = sol['dual objective']
    gap = sol['gap']
    return LMISolution(
        status=sol['status'],
        y=x[:r],
        t=x[r:],
        primal_objective=float(primal) if primal is not None else float('nan'),
        dual_objective=float(dual) if dual is not None else float('nan'),
        gap=float(gap) if gap is not None else float('nan'),
        iterations=int(sol.get('iterations') or 0),
    )


@dataclass
class TraceNormSolution:
    status: str
    value: float
    u: List[np.ndarray]


def solve_trace_norm_program(operators: Sequence[np.ndarray], rhs: np.ndarray,
                             preset: Optional[dict] = None) -> TraceNormSolution:
    """
    min Σ_i ‖u_i‖_1  s.t.  Σ_i [L_i, u_i] = rhs

    ‖u‖_1 以 Z = [[P, u], [u*, Q]] ⪰ 0、tr(Z)/2 表示。
    """
    settings = dict(preset or create_dual_preset('balanced'))
    solver = settings.pop('solver')
    n = rhs.shape[0]
    blocks = [cp.Variable((2 * n, 2 * n), hermitian=True) for _ in operators]
    us = [z[:n, n:] for z in blocks]
    constraint = sum(l_op @ u - u @ l_op for l_op, u in zip(operators, us))
    constraints = [z >> 0 for z in blocks] + [constraint == rhs]
    objective = cp.Minimize(sum(cp.real(cp.trace(z)) for z in blocks) / 2)
    problem = cp.Problem(objective, constraints)
    problem.solve(solver=solver, **settings)
    value = float(problem.value) if problem.value is not None else float('nan')
    u_values = [np.asarray(u.value) if u.value is not None else np.zeros((n, n)) for u in us]
    return TraceNormSolution(problem.status, value, u_values)
