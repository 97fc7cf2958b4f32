"""
命令列入口
python main.py <指令> ...，指令：validate choi omega classify mk delta dl wasserstein
kasparov group-gen stability chaining embedding run-all
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from algebra import TraceFunctional
from channels import (choi_matrix, cp_oracle_npositivity, is_completely_positive, is_trace_channel,
                      is_unital, omega_tau, trace_channel_failures)
from config import DEFAULT_M_MAX, DEFAULT_SEED, DEFAULT_STARTS, EPS_SOLVER, MAX_ITER
from data_loader import (LOAD_ORDER, LOADERS, Registry, detect_kind, load_channel, load_functional,
                         load_triple, load_wasserstein, read_json)
from errors import ChoiMetricError, Infeasible
from experiments import generate_instance, run_all, single_experiment
from geometry import commutator_seminorm, kasparov_product, operator_norm_seminorm, sum_tensor_seminorm
from groups import length_dirac, length_dirac_op
from metrics import (delta_distance, dl_distance, dl_stabilized, mk, matrix_wasserstein_primal,
                     wasserstein_dual)
from performance_optimizer import PerformanceOptimizer
from report_generator import emit_report, summarize


def _format_value(value: float) -> str:
    return "inf" if np.isinf(value) else f"{value:.10g}"


def _load_files(paths, registry: Registry) -> list:
    """依種類順序載入（代數與群先於引用它們的檔案）"""
    entries = []
    for path in paths:
        data, _ = read_json(path)
        kind = detect_kind(data) if isinstance(data, dict) else 'unknown'
        entries.append((LOAD_ORDER.index(kind) if kind in LOAD_ORDER else len(LOAD_ORDER), kind, path))
    loaded = []
    for _, kind, path in sorted(entries, key=lambda e: e[0]):
        if kind not in LOADERS:
            raise ChoiMetricError(f"{path}: 無法判斷檔案種類")
        obj = LOADERS[kind](path, registry)
        if kind == 'trace' and not isinstance(obj, TraceFunctional):
            kind = 'functional'
        loaded.append((kind, path, obj))
    return loaded


def _preload(args, registry: Registry):
    for path in getattr(args, 'load', None) or []:
        _load_files([path], registry)


def _trace(args, registry: Registry, algebra):
    if getattr(args, 'trace', None):
        return registry.trace(args.trace)
    return registry.trace_for(algebra)


def _solve_options(args) -> dict:
    return {'tolerance': args.tolerance, 'max_iter': args.max_iter}


# ---------- 指令 ----------

def cmd_validate(args) -> int:
    registry = Registry()
    for kind, path, _ in _load_files(args.files, registry):
        print(f"✅ {path} ({kind})")
    return 0


def cmd_choi(args) -> int:
    registry = Registry()
    _preload(args, registry)
    F = load_channel(args.channel, registry)
    choi = choi_matrix(F)
    eigenvalues = np.linalg.eigvalsh((choi + choi.conj().T) / 2)
    print(f"📊 Choi 矩陣 ({choi.shape[0]}×{choi.shape[1]})")
    print(np.array2string(choi, precision=6, suppress_small=True))
    print(f"📊 最小特徵值: {eigenvalues[0]:.6g}")
    return 0


def cmd_omega(args) -> int:
    registry = Registry()
    _preload(args, registry)
    F = load_channel(args.channel, registry)
    tau = _trace(args, registry, F.target)
    omega = omega_tau(F, tau)
    print(f"📊 {omega.name} 在 {omega.algebra.name} 上（維度 {omega.algebra.dim}）")
    print(np.array2string(omega.values, precision=6, suppress_small=True))
    print(f"{'✅' if omega.is_state() else '⚠️'} 是否為態: {omega.is_state()}")
    return 0


def cmd_classify(args) -> int:
    registry = Registry()
    _preload(args, registry)
    F = load_channel(args.channel, registry)
    tau = _trace(args, registry, F.target)
    verdict = is_completely_positive(F, tau)
    oracle = cp_oracle_npositivity(F)
    print(f"📊 {F.name}: {F.source.name} → {F.target.name}")
    print(f"   完全正 (ω 正性): {verdict.is_cp}  最小特徵值 {verdict.min_eigenvalue:.6g}")
    print(f"   完全正 (算子 Gram): {oracle.is_cp}")
    if oracle.choi_min_eigenvalue is not None:
        print(f"   Choi 最小特徵值: {oracle.choi_min_eigenvalue:.6g}")
    print(f"   單位保持: {is_unital(F)}")
    tc = is_trace_channel(F, tau)
    print(f"   跡通道: {tc}" + ("" if tc else f"（{'、'.join(trace_channel_failures(F, tau))}）"))
    if bool(verdict) != oracle.is_cp:
        print("❌ 兩種完全正判定不一致")
        return 1
    return 0


def cmd_mk(args) -> int:
    registry = Registry()
    _preload(args, registry)
    triple = load_triple(args.triple, registry)
    phi = load_functional(args.phi, registry)
    psi = load_functional(args.psi, registry)
    result = mk(phi, psi, commutator_seminorm(triple), self_adjoint=not args.complex, **_solve_options(args))
    print(json.dumps(result.to_record(args.seed), ensure_ascii=False))
    return 0 if result.ok else 1


def _delta_seminorm(args, registry: Registry):
    if args.triple:
        return commutator_seminorm(load_triple(args.triple, registry))
    tga = registry.group(args.group)
    length = registry.length(args.group)
    ta, tb = length_dirac(tga, length), length_dirac_op(tga, length)
    if args.seminorm == 'sum':
        return sum_tensor_seminorm(commutator_seminorm(ta), commutator_seminorm(tb))
    return commutator_seminorm(kasparov_product(ta, tb))


def cmd_delta(args) -> int:
    registry = Registry()
    _preload(args, registry)
    if args.group:
        registry.group(args.group)
    F = load_channel(args.f, registry)
    G = load_channel(args.g, registry)
    seminorm = _delta_seminorm(args, registry)
    result = delta_distance(F, G, _trace(args, registry, F.target), seminorm, **_solve_options(args))
    print(json.dumps(result.to_record(args.seed), ensure_ascii=False))
    return 0 if result.ok else 1


def cmd_dl(args) -> int:
    registry = Registry()
    _preload(args, registry)
    F = load_channel(args.f, registry)
    G = load_channel(args.g, registry)
    options = {'starts': args.starts, 'seed': args.seed, 'tolerance': args.tolerance}
    if args.m_max > 1:
        result = dl_stabilized(F, G, m_max=args.m_max, **options)
        for m, level in enumerate(result.per_level, start=1):
            print(f"📊 m={m}: {_format_value(level.value)}（{'收斂' if level.converged else '未收斂'}）")
        print(json.dumps({'value': _format_value(result.value), 'converged': result.converged,
                          'seed': args.seed}))
        return 0 if result.converged else 1
    seminorm = (commutator_seminorm(load_triple(args.triple, registry)) if args.triple
                else operator_norm_seminorm(F.source))
    result = dl_distance(F, G, seminorm, **options)
    print(json.dumps({'value': _format_value(result.value), 'converged': result.converged,
                      'best_seed': result.best_seed, 'seed': args.seed}))
    return 0 if result.converged else 1


def cmd_wasserstein(args) -> int:
    rho1, rho2, operators = load_wasserstein(args.instance)
    primal = matrix_wasserstein_primal(rho1, rho2, operators, **_solve_options(args))
    try:
        dual = wasserstein_dual(rho1, rho2, operators).value
    except Infeasible as e:
        print(f"⚠️ 對偶不可行：{e}")
        dual = float('inf')
    print(f"📊 原問題 mk: {_format_value(primal.value)} ({primal.status})")
    print(f"📊 對偶 Wasserstein: {_format_value(dual)}")
    agree = (np.isinf(dual) and not primal.is_finite) or (
        primal.is_finite and not np.isinf(dual) and abs(primal.value - dual) < args.agreement)
    print("✅ 原問題與對偶一致" if agree else "❌ 原問題與對偶不一致")
    return 0 if agree else 1


def cmd_kasparov(args) -> int:
    registry = Registry()
    _preload(args, registry)
    ta = load_triple(args.first, registry)
    tb = load_triple(args.second, registry)
    product = kasparov_product(ta, tb)
    parity = f"{'偶' if ta.is_even else '奇'}×{'偶' if tb.is_even else '奇'}"
    eigenvalues = np.linalg.eigvalsh(product.dirac)
    print(f"✅ {product.name}（{parity}）：H = {product.hilbert_dim}，{'偶' if product.is_even else '奇'}三元組")
    print(f"📊 Dirac 特徵值: {np.array2string(eigenvalues, precision=8)}")
    return 0


def cmd_group_gen(args) -> int:
    params = {'group': args.group, 'count': args.count}
    if args.source:
        params['source'] = args.source
    if args.target:
        params['target'] = args.target
    for path in generate_instance(args.kind, args.seed, args.out, **params):
        print(f"✅ 已寫出 {path}")
    return 0


def _finish(records, log: str, out) -> int:
    print(log)
    print(summarize(records))
    if out:
        path = emit_report(records, out)
        print(f"💾 報表已寫入 {path}")
    return 0 if records and all(r.passed for r in records) else 1


def _single(kind: str, params: dict, args) -> int:
    records, log = single_experiment(kind, params, seed=args.seed, trials=args.trials,
                                     tolerance=args.threshold, solver_tolerance=args.tolerance,
                                     max_iter=args.max_iter, timing=args.timing)
    return _finish(records, log, args.out)


def cmd_stability(args) -> int:
    params = {'group': args.group, 'n': args.n, 'channels': args.channels, 'audit': not args.no_audit}
    return _single('stability', params, args)


def cmd_chaining(args) -> int:
    return _single('chaining', {'group': args.group, 'seminorm': args.seminorm}, args)


def cmd_embedding(args) -> int:
    return _single('embedding', {}, args)


def cmd_run_all(args) -> int:
    print(PerformanceOptimizer().describe())
    records, log = run_all(args.config, seed=args.seed_override, trials=args.trials_override,
                           tolerance=args.threshold, max_iter=args.max_iter_override, timing=args.timing)
    return _finish(records, log, args.out)


# ---------- 參數 ----------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Choi 嵌入與譜三元組距離的計算與定理驗證")
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, solver=True):
        p.add_argument('--seed', type=int, default=DEFAULT_SEED, help=f"隨機種子（預設 {DEFAULT_SEED}）")
        p.add_argument('--load', action='append', help="先載入的代數/群檔案，可重複")
        if solver:
            p.add_argument('--tolerance', type=float, default=EPS_SOLVER, help="求解器對偶間隙容差")
            p.add_argument('--max-iter', type=int, default=MAX_ITER, help="求解器迭代上限")
        return p

    p = sub.add_parser('validate', help="讀取並驗證輸入檔")
    p.add_argument('files', nargs='+')
    p.set_defaults(func=cmd_validate)

    for name, fn, helptext in (('choi', cmd_choi, "輸出 Choi 矩陣"),
                               ('omega', cmd_omega, "輸出 ω_τ(F)"),
                               ('classify', cmd_classify, "CP／跡通道／UCP 判定")):
        p = common(sub.add_parser(name, help=helptext), solver=False)
        p.add_argument('channel')
        p.add_argument('--trace', help="跡的名稱（預設依目標代數）")
        p.set_defaults(func=fn)

    p = common(sub.add_parser('mk', help="兩個泛函的 Monge-Kantorovich 距離"))
    p.add_argument('--triple', required=True)
    p.add_argument('--phi', required=True)
    p.add_argument('--psi', required=True)
    p.add_argument('--complex', action='store_true', help="在所有複元素上取最大值")
    p.set_defaults(func=cmd_mk)

    p = common(sub.add_parser('delta', help="跡通道之間的 Δ 距離"))
    p.add_argument('f')
    p.add_argument('g')
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--triple', help="A⊗B^op 上的三元組檔")
    group.add_argument('--group', help="以群長度 Dirac 的 Kasparov 積為半範數")
    p.add_argument('--seminorm', choices=['kasparov', 'sum'], default='kasparov')
    p.add_argument('--trace')
    p.set_defaults(func=cmd_delta)

    p = common(sub.add_parser('dl', help="UCP 映射之間的 D_L 下界"))
    p.add_argument('f')
    p.add_argument('g')
    p.add_argument('--triple', help="來源代數上的三元組檔（預設算子範數）")
    p.add_argument('--starts', type=int, default=DEFAULT_STARTS)
    p.add_argument('--m-max', type=int, default=1, help=f"截斷穩定化階數（建議 {DEFAULT_M_MAX}）")
    p.set_defaults(func=cmd_dl)

    p = common(sub.add_parser('wasserstein', help="矩陣 Wasserstein-1：原問題與對偶"))
    p.add_argument('instance')
    p.add_argument('--agreement', type=float, default=1e-5)
    p.set_defaults(func=cmd_wasserstein)

    p = common(sub.add_parser('kasparov', help="兩個三元組的 Kasparov 外積"), solver=False)
    p.add_argument('first')
    p.add_argument('second')
    p.set_defaults(func=cmd_kasparov)

    p = common(sub.add_parser('group-gen', help="產生群／正定函數／通道輸入檔"), solver=False)
    p.add_argument('--kind', choices=['group', 'pd', 'channel'], default='group')
    p.add_argument('--group', default='S3')
    p.add_argument('--source')
    p.add_argument('--target')
    p.add_argument('--count', type=int, default=1)
    p.add_argument('--out', default='instances')
    p.set_defaults(func=cmd_group_gen)

    def experiment(p):
        common(p)
        p.add_argument('--trials', type=int, default=10)
        p.add_argument('--threshold', type=float, help="通過門檻（預設依實驗種類）")
        p.add_argument('--out', help="CSV 報表路徑")
        p.add_argument('--timing', action='store_true', help="寫入 ms 欄位")
        return p

    p = experiment(sub.add_parser('stability', help="穩定性實驗"))
    p.add_argument('--group', default='Z2')
    p.add_argument('--n', type=int, default=2)
    p.add_argument('--channels', choices=['cp', 'multiplier'], default='cp')
    p.add_argument('--no-audit', action='store_true')
    p.set_defaults(func=cmd_stability)

    p = experiment(sub.add_parser('chaining', help="鏈接實驗"))
    p.add_argument('--group', default='Z2')
    p.add_argument('--seminorm', choices=['kasparov', 'sum'], default='kasparov')
    p.set_defaults(func=cmd_chaining)

    p = experiment(sub.add_parser('embedding', help="Choi 嵌入實驗"))
    p.set_defaults(func=cmd_embedding)

    p = sub.add_parser('run-all', help="執行設定檔中的全部實驗")
    p.add_argument('config', nargs='?', default=str(Path(__file__).with_name('acceptance.json')))
    p.add_argument('--out', default='results.csv')
    p.add_argument('--seed', dest='seed_override', type=int, help="覆寫設定檔中的種子")
    p.add_argument('--trials', dest='trials_override', type=int)
    p.add_argument('--tolerance', dest='threshold', type=float, help="覆寫所有實驗的通過門檻")
    p.add_argument('--max-iter', dest='max_iter_override', type=int)
    p.add_argument('--timing', action='store_true')
    p.set_defaults(func=cmd_run_all)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChoiMetricError as e:
        print(f"❌ {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
