"""
定理驗證實驗
穩定性、鏈接、嵌入、CP 判定、對偶、半範數支配與乘子收縮，每個試驗一筆紀錄

所有輸入檔在任何求解開始前讀取並驗證；試驗種子由 (設定種子, 試驗編號) 經
numpy SeedSequence 導出，因此結果只取決於設定檔與種子。
"""

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from algebra import (TraceFunctional, density_from_functional, matrix_algebra, matrix_trace,
                     opposite_algebra, tensor_algebra, tensor_trace)
from channels import (amplify, are_composable, choi_matrix, compose, cp_oracle_npositivity,
                      is_completely_positive, omega_adjoint_identity, omega_flip_identity, omega_tau,
                      omega_via_mu)
from config import DEFAULT_SEED, EPS_SOLVER, EPS_STRUCT, MAX_ITER
from data_loader import LOAD_ORDER, Registry, detect_kind, load_any, load_config, read_json
from errors import ChoiMetricError, Infeasible, InputFileError
from geometry import (Seminorm, SpectralTriple, commutator_seminorm, even_double, kasparov_product,
                      matrix_dirac_triple, opposite_triple, random_element, right_tensor_seminorm,
                      seminorm_domination_check, stability_kernel_check, sum_tensor_seminorm,
                      swap_pullback_seminorm)
from groups import (TwistedGroupAlgebra, canonical_trace, length_dirac, length_dirac_op,
                    multiplier_channel, multiplier_contraction_check, random_positive_definite)
from metrics import delta_distance, matrix_wasserstein_primal, wasserstein_dual
from performance_optimizer import parallel_map
from random_instances import (random_cp_map, random_hermitian, random_linear_map, random_state_density,
                              random_trace_channel, trace_normalize)

KINDS = ('stability', 'chaining', 'embedding', 'cp-characterization', 'duality',
         'seminorm-domination', 'contraction')

# 各實驗的通過門檻
DEFAULT_THRESHOLDS = {
    'stability': 1e-5,
    'chaining': 2 * EPS_SOLVER,
    'embedding': 1e-10,
    'cp-characterization': 0.0,
    'duality': 1e-5,
    'seminorm-domination': EPS_STRUCT,
    'contraction': 1e-9,
}


@dataclass
class ExperimentSpec:
    id: str
    kind: str
    seed: int = DEFAULT_SEED
    trials: int = 1
    tolerance: Optional[float] = None
    solver_tolerance: float = EPS_SOLVER
    max_iter: int = MAX_ITER
    params: dict = field(default_factory=dict)
    inputs: Dict[str, List[str]] = field(default_factory=dict)
    timing: bool = False
    loaded: Dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ChoiMetricError(f"未知的實驗種類 {self.kind}，可用：{', '.join(KINDS)}")
        if self.trials < 1:
            raise ChoiMetricError(f"試驗次數必須 ≥ 1，收到 {self.trials}")
        if self.tolerance is None:
            self.tolerance = DEFAULT_THRESHOLDS[self.kind]

    @property
    def solve_options(self) -> dict:
        return {'tolerance': self.solver_tolerance, 'max_iter': self.max_iter,
                'solver_mode': self.params.get('solver_mode', 'balanced')}


@dataclass
class ExperimentRecord:
    experiment: str
    trial: int
    seed: int
    lhs: float
    rhs: float
    slack: float
    status: str
    passed: bool
    ms: Optional[float] = None
    reason: str = ""

    def to_row(self) -> dict:
        return {
            'experiment': self.experiment,
            'trial': self.trial,
            'seed': self.seed,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'slack': self.slack,
            'status': self.status,
            'pass': self.passed,
            'ms': self.ms,
        }


def trial_seeds(seed: int, trials: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def _combined_status(*results) -> str:
    """全部為 optimal/infinite 時回傳 optimal 或 infinite，否則回傳第一個失敗狀態"""
    statuses = [r.status for r in results]
    for status in statuses:
        if status not in ('optimal', 'infinite'):
            return status
    return 'infinite' if 'infinite' in statuses else 'optimal'


def _run_trials(spec: ExperimentSpec, trial_fn: Callable[[int, int], ExperimentRecord]) -> List[ExperimentRecord]:
    """每個試驗獨立執行，結果依試驗編號排列；運算錯誤記為 error"""

    def task(item):
        trial, seed = item
        start = time.perf_counter()
        try:
            record = trial_fn(trial, seed)
        except ChoiMetricError as e:
            record = ExperimentRecord(spec.id, trial, seed, math.nan, math.nan, math.nan,
                                      'error', False, reason=str(e))
        if spec.timing:
            record.ms = (time.perf_counter() - start) * 1000
        return record

    return parallel_map(task, list(enumerate(trial_seeds(spec.seed, spec.trials))), task_type='solver')


# ---------- 穩定性 ----------

@dataclass
class _StabilitySetup:
    tga: TwistedGroupAlgebra
    tau: TraceFunctional
    small: Seminorm                 # L_1
    amplified: Seminorm             # L_n∘Σ_[23]
    tau_n: TraceFunctional
    n: int
    audit_right: Seminorm           # (1⊗L_1) 在 M_n⊗M_n^op⊗A⊗A^op
    audit_full: Seminorm            # 未拉回的 L_n
    tn: SpectralTriple
    ta: SpectralTriple
    tb: SpectralTriple


def _stability_setup(spec: ExperimentSpec, registry: Registry) -> _StabilitySetup:
    params = spec.params
    name = params.get('group', 'Z2')
    n = int(params.get('n', 2))
    operators = params.get('operators', [[[1, 0], [0, -1]]])
    tga = registry.group(name)
    length = params.get('length') or registry.length(name)
    ta = length_dirac(tga, length)
    tb = length_dirac_op(tga, length)
    base = kasparov_product(ta, tb)
    small = commutator_seminorm(base)

    tn = matrix_dirac_triple(n, [np.asarray(op, dtype=complex) for op in operators])
    inner = kasparov_product(tn, opposite_triple(tn))
    outer = kasparov_product(inner, base, validate=False)
    full = commutator_seminorm(outer)

    block = tensor_algebra(matrix_algebra(n), tga.algebra)
    omega_algebra = tensor_algebra(block, opposite_algebra(block))
    amplified = swap_pullback_seminorm(full, omega_algebra, 1, 2)
    tau = canonical_trace(tga)
    tau_n = tensor_trace(matrix_trace(matrix_algebra(n), normalized=True), tau)
    audit_right = right_tensor_seminorm(inner.algebra, small)
    return _StabilitySetup(tga, tau, small, amplified, tau_n, n, audit_right, full, tn, ta, tb)


def _stability_channels(spec: ExperimentSpec, setup: _StabilitySetup, rng: np.random.Generator):
    channels = spec.loaded.get('channels')
    if channels:
        return channels[0], channels[1]
    kind = spec.params.get('channels', 'cp')
    if kind == 'multiplier':
        group = setup.tga.group
        return (multiplier_channel(setup.tga, random_positive_definite(group, rng)),
                multiplier_channel(setup.tga, random_positive_definite(group, rng)))
    algebra = setup.tga.algebra
    return (random_trace_channel(algebra, algebra, setup.tau, rng),
            random_trace_channel(algebra, algebra, setup.tau, rng))


def run_stability(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """|Δ_n(id_n⊗F, id_n⊗G) − Δ_1(F, G)|，L_n = L_{(∂n×∂n)×(∂A×∂B)}∘Σ_[23]"""
    setup = _stability_setup(spec, registry)
    options = spec.solve_options

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        F, G = _stability_channels(spec, setup, rng)
        small = delta_distance(F, G, setup.tau, setup.small, **options)
        large = delta_distance(amplify(setup.n, F), amplify(setup.n, G), setup.tau_n,
                               setup.amplified, **options)
        status = _combined_status(small, large)
        if small.is_finite != large.is_finite:
            return ExperimentRecord(spec.id, index, seed, large.value, small.value, -math.inf,
                                    'finiteness_mismatch', False)
        if not small.is_finite:
            return ExperimentRecord(spec.id, index, seed, math.inf, math.inf, 0.0, status, status == 'infinite')
        gap = abs(large.value - small.value)
        slack = spec.tolerance - gap
        return ExperimentRecord(spec.id, index, seed, large.value, small.value, slack, status,
                                status == 'optimal' and slack > 0)

    records = _run_trials(spec, trial)
    if spec.params.get('audit', True):
        records.extend(_stability_audit(spec, setup))
    return records


def _stability_audit(spec: ExperimentSpec, setup: _StabilitySetup) -> List[ExperimentRecord]:
    """
    抽樣檢查穩定性的兩個前提

    條件一：(1⊗L_1) ≤ L_n（在 M_n⊗M_n^op⊗A⊗A^op 上，與 Σ_[23] 拉回等價）
    條件二：L_n(1⊗1⊗x) = L_1(x)
    """
    samples = int(spec.params.get('audit_samples', 20))
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(spec.trials + 1)[-1])
    worst = 0.0
    for _ in range(samples):
        x = random_element(setup.audit_full.algebra, rng)
        value = setup.audit_full(x)
        worst = max(worst, (setup.audit_right(x) - value) / max(1.0, value))
    kernel = stability_kernel_check(setup.tn, setup.ta, setup.tb, samples=samples, seed=spec.seed)
    tol = EPS_STRUCT
    return [
        ExperimentRecord(f"{spec.id}:audit1", 0, spec.seed, worst, 0.0, -worst, 'sampled', worst <= tol),
        ExperimentRecord(f"{spec.id}:audit2", 0, spec.seed, kernel, 0.0, -kernel, 'sampled', kernel <= tol),
    ]


# ---------- 鏈接 ----------

def _chaining_seminorm(spec: ExperimentSpec, registry: Registry):
    name = spec.params.get('group', 'Z2')
    tga = registry.group(name)
    length = registry.length(name)
    ta = length_dirac(tga, length)
    tb = length_dirac_op(tga, length)
    if spec.params.get('seminorm', 'kasparov') == 'sum':
        seminorm = sum_tensor_seminorm(commutator_seminorm(ta), commutator_seminorm(tb))
    else:
        seminorm = commutator_seminorm(kasparov_product(ta, tb))
    return tga, seminorm


def run_chaining(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """Δ(M1∘M2, M3∘M4) ≤ Δ(M1, M3) + Δ(M2, M4)，slack = 右 − 左"""
    tga, seminorm = _chaining_seminorm(spec, registry)
    tau = canonical_trace(tga)
    options = spec.solve_options
    fixed = spec.loaded.get('pd')
    if fixed and len(fixed) != 4:
        raise ChoiMetricError(f"鏈接實驗需要 4 個正定函數檔，收到 {len(fixed)}")

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        if fixed:
            phis = [values for _, values in fixed]
        else:
            phis = [random_positive_definite(tga.group, rng) for _ in range(4)]
        m1, m2, m3, m4 = [multiplier_channel(tga, phi) for phi in phis]
        if not (are_composable(m2, m1, tau, tau) and are_composable(m4, m3, tau, tau)):
            return ExperimentRecord(spec.id, index, seed, math.nan, math.nan, math.nan,
                                    'not_composable', False)
        lhs = delta_distance(compose(m1, m2), compose(m3, m4), tau, seminorm, **options)
        first = delta_distance(m1, m3, tau, seminorm, **options)
        second = delta_distance(m2, m4, tau, seminorm, **options)
        status = _combined_status(lhs, first, second)
        rhs = first.value + second.value
        if math.isinf(rhs):
            return ExperimentRecord(spec.id, index, seed, lhs.value, rhs, math.inf, status,
                                    status in ('optimal', 'infinite'))
        slack = rhs - lhs.value
        return ExperimentRecord(spec.id, index, seed, lhs.value, rhs, slack, status,
                                status == 'optimal' and slack >= -spec.tolerance)

    return _run_trials(spec, trial)


# ---------- 嵌入 ----------

def run_embedding_suite(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """
    隨機 CP 映射 M_n → M_m：

    ω_Tr(F) 的密度等於 (C_F)^t；ω 為態 ⟺ Tr(F(1)) = 1；
    並記錄 μ 路徑、伴隨與翻轉恆等式的殘差
    """
    sizes = [int(s) for s in spec.params.get('sizes', [2, 3])]

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        n, m = (int(rng.choice(sizes)) for _ in range(2))
        source, target = matrix_algebra(n), matrix_algebra(m)
        tr_src, tr_tgt = matrix_trace(source), matrix_trace(target)
        F = random_cp_map(source, target, rng, rank=int(rng.integers(1, 4)))
        if rng.random() < 0.5:
            F = trace_normalize(F, tr_tgt)

        omega = omega_tau(F, tr_tgt)
        density = density_from_functional(omega, matrix_trace(omega.algebra))
        residuals = [
            float(np.max(np.abs(density.element.realize() - choi_matrix(F).T))),
            float(np.max(np.abs(omega_via_mu(F, tr_tgt).values - omega.values))),
            omega_adjoint_identity(F, tr_src, tr_tgt),
        ]
        G = random_cp_map(target, source, rng)
        residuals.append(omega_flip_identity(F, G, tr_tgt, tr_src))
        scale = max(1.0, float(np.max(np.abs(omega.values))))
        worst = max(residuals) / scale

        unit_value = complex(tr_tgt(F.matrix @ source.unit_coords))
        agree = omega.is_state() == (abs(unit_value - 1.0) < 1e-9)
        slack = spec.tolerance - worst
        return ExperimentRecord(spec.id, index, seed, worst, 0.0, slack,
                                'agree' if agree else 'disagree', agree and slack >= 0)

    return _run_trials(spec, trial)


# ---------- CP 判定 ----------

def run_cp_characterization(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """ω 正性判定與算子 Gram 判定是否一致；lhs/rhs 為兩者的最小特徵值"""
    names = spec.params.get('algebras', ['M2', 'M3', 'diag2', 'Z3'])
    algebras = {name: registry.algebra(name) for name in names}
    traces = {name: registry.trace(name) for name in names}

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        source_name, target_name = (names[int(rng.integers(len(names)))] for _ in range(2))
        F = random_linear_map(algebras[source_name], algebras[target_name], rng)
        verdict = is_completely_positive(F, traces[target_name])
        oracle = cp_oracle_npositivity(F)
        agree = bool(verdict) == oracle.is_cp
        return ExperimentRecord(spec.id, index, seed, verdict.min_eigenvalue, oracle.min_eigenvalues[-1],
                                math.nan, 'agree' if agree else 'disagree', agree)

    return _run_trials(spec, trial)


# ---------- Wasserstein 對偶 ----------

def _duality_instance(trial: int, rng: np.random.Generator, sizes, counts):
    """
    輪流產生三種實例：
    0：N = 1 且 ρ1 − ρ2 ∈ 值域（有限）
    1：N ≥ 2 的隨機密度矩陣
    2：N = 1 的隨機密度矩陣（一般為無窮）
    """
    n = int(rng.choice(sizes))
    mode = trial % 3
    if mode == 1:
        count = int(rng.choice([c for c in counts if c >= 2] or [2]))
        operators = [random_hermitian(n, rng) for _ in range(count)]
        return operators, random_state_density(n, rng), random_state_density(n, rng)
    operators = [random_hermitian(n, rng)]
    rho1 = random_state_density(n, rng)
    if mode == 2:
        return operators, rho1, random_state_density(n, rng)
    k = random_hermitian(n, rng)
    direction = 1j * (operators[0] @ k - k @ operators[0])
    direction = (direction + direction.conj().T) / 2
    eps = 0.5 * float(np.linalg.eigvalsh(rho1)[0]) / max(float(np.linalg.norm(direction, 2)), 1e-12)
    return operators, rho1, rho1 - eps * direction


def run_duality(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """原問題 mk 與 Wasserstein 對偶；無窮情形須由核預處理與對偶不可行同時判定"""
    sizes = spec.params.get('sizes', [2, 3])
    counts = spec.params.get('counts', [1, 2, 3])
    options = spec.solve_options

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        operators, rho1, rho2 = _duality_instance(index, rng, sizes, counts)
        primal = matrix_wasserstein_primal(rho1, rho2, operators, **options)
        try:
            dual = wasserstein_dual(rho1, rho2, operators, solver_mode=options['solver_mode']).value
        except Infeasible:
            dual = math.inf
        if not primal.is_finite or math.isinf(dual):
            agree = (not primal.is_finite) and math.isinf(dual)
            return ExperimentRecord(spec.id, index, seed, primal.value, dual, 0.0 if agree else -math.inf,
                                    primal.status if agree else 'finiteness_mismatch', agree)
        slack = spec.tolerance - abs(primal.value - dual)
        return ExperimentRecord(spec.id, index, seed, primal.value, dual, slack, primal.status,
                                primal.status == 'optimal' and slack > 0)

    return _run_trials(spec, trial)


# ---------- 半範數支配 ----------

def _domination_pairs(spec: ExperimentSpec, registry: Registry) -> list:
    """四種奇偶組合：(矩陣, 群)、(偶矩陣, 群)、(矩陣, 偶群)、(偶矩陣, 偶群)"""
    name = spec.params.get('group', 'Z2')
    tga = registry.group(name)
    group_triple = length_dirac(tga, registry.length(name))
    operators = spec.params.get('operators', [[[0, 1], [1, 0]]])
    n = len(operators[0])
    matrix_triple = matrix_dirac_triple(n, [np.asarray(op, dtype=complex) for op in operators])
    return [
        (matrix_triple, group_triple),
        (even_double(matrix_triple), group_triple),
        (matrix_triple, even_double(group_triple)),
        (even_double(matrix_triple), even_double(group_triple)),
    ]


def run_seminorm_domination(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """(L_A⊗1) ≤ L_{A×B} 與 (1⊗L_B) ≤ L_{A×B}，試驗依序輪流四種奇偶組合"""
    pairs = _domination_pairs(spec, registry)
    samples = int(spec.params.get('samples', 500))

    def trial(index, seed):
        ta, tb = pairs[index % len(pairs)]
        report = seminorm_domination_check(ta, tb, samples=samples, seed=seed, tol=spec.tolerance)
        status = f"{'even' if ta.is_even else 'odd'}x{'even' if tb.is_even else 'odd'}"
        return ExperimentRecord(spec.id, index, seed, report.max_violation, 0.0, -report.max_violation,
                                status, report.passed)

    return _run_trials(spec, trial)


# ---------- 乘子收縮 ----------

def run_contraction(spec: ExperimentSpec, registry: Registry) -> List[ExperimentRecord]:
    """L(M_φ(x)) ≤ L(x)·(1 + tol)；每個試驗一個隨機 φ 與多個 x"""
    name = spec.params.get('group', 'Z2')
    tga = registry.group(name)
    triple = length_dirac(tga, registry.length(name))
    samples = int(spec.params.get('samples', 10))

    def trial(index, seed):
        rng = np.random.default_rng(seed)
        phi = random_positive_definite(tga.group, rng)
        report = multiplier_contraction_check(tga, phi, triple, samples=samples, seed=seed, tol=spec.tolerance)
        bound = 1.0 + spec.tolerance
        return ExperimentRecord(spec.id, index, seed, report.max_ratio, bound, bound - report.max_ratio,
                                'sampled', report.violations == 0)

    return _run_trials(spec, trial)


RUNNERS: Dict[str, Callable[[ExperimentSpec, Registry], List[ExperimentRecord]]] = {
    'stability': run_stability,
    'chaining': run_chaining,
    'embedding': run_embedding_suite,
    'cp-characterization': run_cp_characterization,
    'duality': run_duality,
    'seminorm-domination': run_seminorm_domination,
    'contraction': run_contraction,
}


# ---------- 設定與執行 ----------

def _resolve(path: str, base: Path) -> Path:
    candidate = Path(path)
    return candidate if candidate.is_absolute() else base / candidate


def load_inputs(spec: ExperimentSpec, registry: Registry, base: Path):
    """讀取並驗證實驗引用的所有檔案，依種類順序載入"""
    entries = []
    for key, paths in spec.inputs.items():
        for path in ([paths] if isinstance(paths, str) else paths):
            resolved = _resolve(path, base)
            data, _ = read_json(resolved)
            kind = detect_kind(data) if isinstance(data, dict) else 'unknown'
            if kind == 'unknown':
                raise InputFileError("無法判斷檔案種類", path=str(resolved))
            entries.append((LOAD_ORDER.index(kind), key, kind, resolved))
    for _, key, kind, resolved in sorted(entries, key=lambda e: e[0]):
        spec.loaded.setdefault(key, []).append(load_any(kind, resolved, registry))


def prepare_experiments(config: dict, registry: Registry, seed: Optional[int] = None,
                        trials: Optional[int] = None, tolerance: Optional[float] = None,
                        max_iter: Optional[int] = None, timing: bool = False) -> List[ExperimentSpec]:
    """建立 ExperimentSpec 並載入所有輸入檔；任何錯誤都在求解前拋出"""
    base = Path(config.get('_path', '.')).parent
    default_seed = int(config.get('seed', DEFAULT_SEED)) if seed is None else seed
    specs = []
    for number, entry in enumerate(config['experiments']):
        try:
            spec = ExperimentSpec(
                id=str(entry.get('id', f"{entry['kind']}-{number}")),
                kind=entry['kind'],
                seed=int(entry.get('seed', default_seed)) if seed is None else seed,
                trials=int(trials if trials is not None else entry.get('trials', 1)),
                tolerance=tolerance if tolerance is not None else entry.get('tolerance'),
                max_iter=int(max_iter if max_iter is not None else entry.get('max_iter', MAX_ITER)),
                params=dict(entry.get('params', {})),
                inputs=dict(entry.get('inputs', {})),
                timing=timing,
            )
        except ChoiMetricError as e:
            raise InputFileError(f"實驗 #{number}：{e}", path=config.get('_path', ''))
        load_inputs(spec, registry, base)
        specs.append(spec)
    return specs


def run_experiment(spec: ExperimentSpec, registry: Registry, log: Optional[List[str]] = None) -> List[ExperimentRecord]:
    log = [] if log is None else log
    log.append(f"🚀 {spec.id} ({spec.kind})：{spec.trials} 個試驗，種子 {spec.seed}")
    start = time.time()
    records = RUNNERS[spec.kind](spec, registry)
    for record in records:
        mark = "✅" if record.passed else "❌"
        line = f"{mark} {record.experiment}#{record.trial}: lhs={record.lhs:.6g}, rhs={record.rhs:.6g}, {record.status}"
        if record.reason:
            line += f"（{record.reason}）"
        log.append(line)
    failed = sum(1 for r in records if not r.passed)
    log.append(f"📊 {spec.id} 完成：{len(records) - failed}/{len(records)} 通過，耗時 {time.time() - start:.1f} 秒")
    return records


def run_all(config_path, seed: Optional[int] = None, trials: Optional[int] = None,
            tolerance: Optional[float] = None, max_iter: Optional[int] = None,
            timing: bool = False, kinds: Optional[List[str]] = None) -> tuple:
    """回傳 (紀錄, 日誌文字)；設定或輸入檔錯誤時在任何求解前拋出 InputFileError"""
    config = load_config(config_path)
    registry = Registry()
    specs = prepare_experiments(config, registry, seed=seed, trials=trials, tolerance=tolerance,
                                max_iter=max_iter, timing=timing)
    if kinds:
        specs = [spec for spec in specs if spec.kind in kinds]

    log = [f"🚀 執行 {len(specs)} 個實驗（設定檔 {config_path}）", "-" * 60]
    records: List[ExperimentRecord] = []
    for spec in specs:
        records.extend(run_experiment(spec, registry, log))

    failed = [r for r in records if not r.passed]
    log.append("=" * 60)
    if failed:
        log.append(f"❌ {len(failed)} / {len(records)} 筆紀錄未通過")
        for r in failed:
            log.append(f"   • {r.experiment}#{r.trial} (seed {r.seed}): {r.status} {r.reason}".rstrip())
    else:
        log.append(f"🎉 全部 {len(records)} 筆紀錄通過")
    return records, "\n".join(log)


def single_experiment(kind: str, params: Optional[dict] = None, seed: int = DEFAULT_SEED, trials: int = 1,
                      tolerance: Optional[float] = None, solver_tolerance: float = EPS_SOLVER,
                      max_iter: int = MAX_ITER, timing: bool = False) -> tuple:
    """不經設定檔直接執行單一種類的實驗"""
    registry = Registry()
    spec = ExperimentSpec(id=kind, kind=kind, seed=seed, trials=trials, tolerance=tolerance,
                          solver_tolerance=solver_tolerance, max_iter=max_iter,
                          params=dict(params or {}), timing=timing)
    log: List[str] = []
    records = run_experiment(spec, registry, log)
    return records, "\n".join(log)


# ---------- 實例產生 ----------

def _complex_list(values) -> list:
    return [[float(np.real(v)), float(np.imag(v))] for v in np.asarray(values).reshape(-1)]


def _complex_matrix(matrix) -> list:
    return [_complex_list(row) for row in np.asarray(matrix)]


def generate_instance(kind: str, seed: int, out_dir, **params) -> List[Path]:
    """
    依種子產生輸入檔

    group：語料群的乘法表、餘循環與字長
    pd：群上的隨機正定函數（φ(e) = 1）
    channel：source → target 的隨機跡通道（座標矩陣）
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    registry = Registry()
    count = int(params.get('count', 1))
    written = []

    if kind == 'group':
        name = params.get('group', 'S3')
        tga = registry.group(name)
        payload = {
            'name': name,
            'order': tga.group.order,
            'identity': int(tga.group.identity),
            'mult_table': tga.group.mult_table.tolist(),
            'cocycle': None if tga.cocycle.is_trivial else _complex_matrix(tga.cocycle.values),
            'length': [float(v) for v in registry.length(name)],
        }
        payloads = [(f"group_{name}.json", payload)]
    elif kind == 'pd':
        name = params.get('group', 'Z2')
        group = registry.group(name).group
        payloads = [(f"pd_{name}_{i}.json", {'group': name,
                                               'values': _complex_list(random_positive_definite(group, rng))})
                    for i in range(count)]
    elif kind == 'channel':
        source_name = params.get('source', 'M2')
        target_name = params.get('target', source_name)
        source, target = registry.algebra(source_name), registry.algebra(target_name)
        tau = registry.trace(target_name)
        payloads = []
        for i in range(count):
            F = random_trace_channel(source, target, tau, rng)
            payloads.append((f"channel_{source_name}_{target_name}_{i}.json",
                             {'source': source_name, 'target': target_name,
                              'matrix': _complex_matrix(F.matrix)}))
    else:
        raise ChoiMetricError(f"未知的實例種類 {kind}，可用：group、pd、channel")

    for filename, payload in payloads:
        path = out_dir / filename
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding='utf-8')
        written.append(path)
    return written
