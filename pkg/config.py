"""
數值容差與求解器預設配置
所有模組共用的 ε 值、迭代上限與求解器模式
"""

from dataclasses import dataclass

EPS_STRUCT = 1e-9     # 結構檢查（閉包、厄米、單位元）
EPS_PSD = 1e-9        # 半正定判定，相對於最大特徵值絕對值
EPS_SOLVER = 1e-7     # SDP 對偶間隙
MAX_ITER = 200
DEFAULT_STARTS = 8
DEFAULT_M_MAX = 2
DEFAULT_SEED = 20240611

THREADS_ENV = "CHOIMETRIC_THREADS"


@dataclass(frozen=True)
class Tolerances:
    struct: float = EPS_STRUCT
    psd: float = EPS_PSD
    solver: float = EPS_SOLVER
    max_iter: int = MAX_ITER


DEFAULT_TOLERANCES = Tolerances()


def psd_floor(eigenvalues, eps: float = EPS_PSD) -> float:
    """相對特徵值下限：-eps × max|λ|"""
    scale = max((abs(float(v)) for v in eigenvalues), default=0.0)
    return -eps * scale


def create_solver_preset(mode: str = 'balanced') -> dict:
    """創建 SDP 求解器預設配置"""
    presets = {
        'fast': {
            'maxiters': 60,
            'abstol': 1e-6,
            'reltol': 1e-5,
            'feastol': 1e-7,
            'refinement': 1
        },
        'balanced': {
            'maxiters': MAX_ITER,
            'abstol': 1e-9,
            'reltol': 1e-8,
            'feastol': 1e-9,
            'refinement': 2
        },
        'precise': {
            'maxiters': MAX_ITER,
            'abstol': 1e-11,
            'reltol': 1e-10,
            'feastol': 1e-11,
            'refinement': 3
        }
    }

    if mode not in presets:
        print(f"⚠️ 未知的求解器模式 {mode}，使用 balanced")
        mode = 'balanced'
    return dict(presets[mode])


def create_dual_preset(mode: str = 'balanced') -> dict:
    """cvxpy 對偶問題（Wasserstein）求解設定"""
    presets = {
        'fast': {'solver': 'CLARABEL', 'max_iter': 100,
                 'tol_gap_abs': 1e-7, 'tol_gap_rel': 1e-7, 'tol_feas': 1e-7},
        'balanced': {'solver': 'CLARABEL', 'max_iter': MAX_ITER,
                     'tol_gap_abs': 1e-9, 'tol_gap_rel': 1e-9, 'tol_feas': 1e-9},
        'precise': {'solver': 'CLARABEL', 'max_iter': MAX_ITER,
                    'tol_gap_abs': 1e-10, 'tol_gap_rel': 1e-10, 'tol_feas': 1e-10},
    }
    return dict(presets.get(mode, presets['balanced']))
