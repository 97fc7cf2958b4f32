"""
JSON 輸入檔讀取與驗證
代數、跡、通道、譜三元組、群與正定函數；錯誤附檔名與行號
"""

import json
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from algebra import (ConcreteAlgebra, LinearFunctional, TraceFunctional, as_trace, build_algebra,
                     matrix_trace, opposite_algebra, opposite_functional, same_algebra, scalar_algebra)
from channels import ChannelMap, kraus_channel, transpose_channel
from errors import ChoiMetricError, InputFileError, InvalidLength, NotATrace
from geometry import SpectralTriple, make_triple
from groups import (Cocycle, TwistedGroupAlgebra, canonical_trace, corpus_group,
                    group_from_table, positive_definite_function, twisted_group_algebra,
                    validate_length, word_length)
from random_instances import corpus_algebra


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return 0


def read_json(path) -> tuple:
    """回傳 (資料, 原始文字)；語法錯誤轉為 InputFileError"""
    path = str(path)
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InputFileError(f"無法讀取檔案：{e}", path=path)
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise InputFileError(f"JSON 格式錯誤：{e.msg}", path=path, line=e.lineno)


def parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(' ', '').replace('i', 'j'))
    return complex(value)


def parse_matrix(value) -> np.ndarray:
    """巢狀串列，元素為數字、[re, im] 或 "a+bj" 字串"""
    rows = [[parse_complex(entry) for entry in row] for row in value]
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise ValueError("矩陣各列長度不一")
    return np.array(rows, dtype=complex)


def parse_vector(value) -> np.ndarray:
    return np.array([parse_complex(entry) for entry in value], dtype=complex)


class _Context:
    """以鍵名定位行號並包裝錯誤"""

    def __init__(self, path: str, text: str):
        self.path = path
        self.text = text

    def fail(self, message: str, key: str = "", **details):
        raise InputFileError(message, path=self.path, line=_line_of(self.text, key) if key else 0, **details)

    def require(self, data: dict, key: str):
        if not isinstance(data, dict) or key not in data:
            self.fail(f"缺少欄位 \"{key}\"", key)
        return data[key]

    def convert(self, key: str, fn, value):
        try:
            return fn(value)
        except InputFileError:
            raise
        except (ChoiMetricError, ValueError, TypeError) as e:
            self.fail(f"欄位 \"{key}\" 無效：{e}", key)


class Registry:
    """名稱 → 代數/群代數；內建語料，"op:" 前綴取反代數"""

    def __init__(self):
        self.algebras: Dict[str, ConcreteAlgebra] = {}
        self.groups: Dict[str, TwistedGroupAlgebra] = {}
        self.lengths: Dict[str, np.ndarray] = {}
        self.traces: Dict[str, TraceFunctional] = {}

    def register_algebra(self, name: str, algebra: ConcreteAlgebra):
        self.algebras[name] = algebra

    def register_trace(self, name: str, tau: TraceFunctional, algebra_name: str):
        """以跡名與代數名登記；同一代數後載入者覆蓋"""
        self.traces[name] = tau
        self.traces[algebra_name] = tau

    def register_group(self, name: str, tga: TwistedGroupAlgebra, length: Optional[np.ndarray] = None):
        self.groups[name] = tga
        self.algebras[name] = tga.algebra
        if length is not None:
            self.lengths[name] = length

    def group(self, name: str) -> TwistedGroupAlgebra:
        if name not in self.groups:
            group, cocycle, generators = corpus_group(name)
            tga = twisted_group_algebra(group, cocycle)
            self.register_group(name, tga, word_length(group, generators))
        return self.groups[name]

    def length(self, name: str) -> np.ndarray:
        self.group(name)
        if name not in self.lengths:
            raise InvalidLength(f"群 {name} 沒有長度函數")
        return self.lengths[name]

    def algebra(self, name: str) -> ConcreteAlgebra:
        if name.startswith("op:"):
            return opposite_algebra(self.algebra(name[3:]))
        if name in self.algebras:
            return self.algebras[name]
        if name == 'C':
            return scalar_algebra()
        builtin = corpus_algebra(name)
        if builtin is not None:
            self.algebras[name] = builtin
            return builtin
        return self.group(name).algebra

    def trace(self, name: str) -> TraceFunctional:
        """已載入的跡優先（跡名或代數名），再來群代數用典範跡，其他用環境跡"""
        op = name.startswith("op:")
        base = name[3:] if op else name
        if base in self.traces:
            tau = self.traces[base]
        elif base in self.groups:
            tau = canonical_trace(self.groups[base])
        elif base in self.algebras or base == 'C' or corpus_algebra(base) is not None:
            tau = matrix_trace(self.algebra(base))
        else:
            tau = canonical_trace(self.group(base))
        return opposite_functional(tau) if op else tau

    def trace_for(self, algebra: ConcreteAlgebra) -> TraceFunctional:
        """最後載入的同代數跡優先，再來已登記群代數用典範跡，其他用環境跡"""
        for tau in reversed(list(self.traces.values())):
            if same_algebra(tau.algebra, algebra):
                return tau
        for tga in self.groups.values():
            if same_algebra(tga.algebra, algebra):
                return canonical_trace(tga)
        return matrix_trace(algebra)


def load_algebra(path, registry: Optional[Registry] = None) -> ConcreteAlgebra:
    """{"name": ..., "ambient_dim": N, "basis": [矩陣, ...]}"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    n = ctx.convert("ambient_dim", int, ctx.require(data, "ambient_dim"))
    basis = ctx.convert("basis", lambda b: np.stack([parse_matrix(m) for m in b]), ctx.require(data, "basis"))
    name = data.get("name") or Path(path).stem
    algebra = ctx.convert("basis", lambda b: build_algebra(n, b, name=name), basis)
    if registry is not None:
        registry.register_algebra(name, algebra)
    return algebra


def _functional_values(ctx: _Context, data: dict, algebra: ConcreteAlgebra) -> np.ndarray:
    """"values" 直接給基底上的值；"density" 給 ρ，φ(B_k) = Tr(ρ B_k)"""
    if "density" in data:
        rho = ctx.convert("density", parse_matrix, data["density"])
        if rho.shape != (algebra.ambient_dim, algebra.ambient_dim):
            ctx.fail(f"密度矩陣形狀 {rho.shape} 與代數不符", "density")
        return np.einsum('ab,kba->k', rho, algebra.basis)
    return ctx.convert("values", parse_vector, ctx.require(data, "values"))


def load_trace(path, registry: Registry) -> TraceFunctional:
    """
    {"algebra": 名稱, "values": [...]}、{"algebra": 名稱, "density": 矩陣}
    或 {"algebra": 名稱, "kind": "Tr" | "tr" | "canonical"}

    載入的跡以檔名（或 "name"）及代數名登記，之後的 τ 查詢都用它。
    """
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    algebra_name = ctx.require(data, "algebra")
    algebra = ctx.convert("algebra", registry.algebra, algebra_name)
    name = data.get("name") or Path(path).stem
    if "values" in data or "density" in data:
        key = "density" if "density" in data else "values"
        values = _functional_values(ctx, data, algebra)
        if len(values) != algebra.dim:
            ctx.fail(f"值的個數 {len(values)} 與代數維度 {algebra.dim} 不符", key)
        tau = ctx.convert(key, lambda v: as_trace(LinearFunctional(algebra, v), name=name), values)
    else:
        kind = data.get("kind", "Tr")
        if kind == "canonical":
            tau = ctx.convert("kind", lambda _: canonical_trace(registry.group(algebra_name)), kind)
        elif kind in ("Tr", "tr"):
            tau = matrix_trace(algebra, normalized=(kind == "tr"))
        else:
            ctx.fail(f"未知的跡種類 {kind}", "kind")
    registry.register_trace(name, tau, algebra_name)
    return tau



def load_channel(path, registry: Registry) -> ChannelMap:
    """
    {"source": 名稱, "target": 名稱, "matrix": 座標矩陣}
    或 {"source": ..., "target": ..., "kraus": [矩陣, ...]}
    或 {"transpose": n}
    """
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    if "transpose" in data:
        return ctx.convert("transpose", lambda n: transpose_channel(int(n)), data["transpose"])
    source = ctx.convert("source", registry.algebra, ctx.require(data, "source"))
    target = ctx.convert("target", registry.algebra, ctx.require(data, "target"))
    name = data.get("name") or Path(path).stem
    if "kraus" in data:
        ops = ctx.convert("kraus", lambda ks: [parse_matrix(k) for k in ks], data["kraus"])
        channel = ctx.convert("kraus", lambda o: kraus_channel(o, source, target), ops)
        channel.name = name
        return channel
    matrix = ctx.convert("matrix", parse_matrix, ctx.require(data, "matrix"))
    return ctx.convert("matrix", lambda m: ChannelMap(source, target, m, name=name), matrix)


def load_triple(path, registry: Registry) -> SpectralTriple:
    """{"algebra": 名稱, "hilbert_dim": H, "rep": [...], "dirac": 矩陣, "grading": 矩陣 | null}"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    algebra = ctx.convert("algebra", registry.algebra, ctx.require(data, "algebra"))
    h = ctx.convert("hilbert_dim", int, ctx.require(data, "hilbert_dim"))
    rep = ctx.convert("rep", lambda r: np.stack([parse_matrix(m) for m in r]), ctx.require(data, "rep"))
    dirac = ctx.convert("dirac", parse_matrix, ctx.require(data, "dirac"))
    grading = data.get("grading")
    if grading is not None:
        grading = ctx.convert("grading", parse_matrix, grading)
    if dirac.shape != (h, h):
        ctx.fail(f"dirac 形狀 {dirac.shape} 與 hilbert_dim {h} 不符", "dirac")
    name = data.get("name") or Path(path).stem
    return ctx.convert("rep", lambda r: make_triple(algebra, r, dirac, grading, name=name), rep)


def load_group(path, registry: Optional[Registry] = None) -> TwistedGroupAlgebra:
    """{"order": n, "mult_table": [[...]], "identity": i, "cocycle": [[[re, im], ...]] | null, "length": [...] | null}"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    order = ctx.convert("order", int, ctx.require(data, "order"))
    identity = ctx.convert("identity", int, data.get("identity", 0))
    name = data.get("name") or Path(path).stem
    group = ctx.convert("mult_table", lambda t: group_from_table(t, identity, name=name),
                        ctx.require(data, "mult_table"))
    if group.order != order:
        ctx.fail(f"order = {order} 與乘法表大小 {group.order} 不符", "order")
    cocycle = None
    if data.get("cocycle") is not None:
        cocycle = ctx.convert("cocycle", lambda c: Cocycle(parse_matrix(c)).validate(group), data["cocycle"])
    tga = ctx.convert("cocycle", lambda c: twisted_group_algebra(group, c, name=name), cocycle)
    length = None
    if data.get("length") is not None:
        length = ctx.convert("length", lambda l: validate_length(group, l), data["length"])
    if registry is not None:
        registry.register_group(name, tga, length)
    return tga


def load_positive_definite(path, registry: Registry) -> tuple:
    """{"group": 名稱, "values": [[re, im], ...]}，回傳 (群代數, 值)"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    tga = ctx.convert("group", registry.group, ctx.require(data, "group"))
    values = ctx.convert("values", parse_vector, ctx.require(data, "values"))
    values = ctx.convert("values", lambda v: positive_definite_function(tga.group, v), values)
    return tga, values


def load_functional(path, registry: Registry) -> LinearFunctional:
    """{"algebra": 名稱, "values": [...]} 或 {"algebra": 名稱, "density": 矩陣}（φ(B_k) = Tr(ρ B_k)）"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    algebra = ctx.convert("algebra", registry.algebra, ctx.require(data, "algebra"))
    name = data.get("name") or Path(path).stem
    values = _functional_values(ctx, data, algebra)
    return ctx.convert("density" if "density" in data else "values",
                       lambda v: LinearFunctional(algebra, v, name=name), values)


def load_trace_or_functional(path, registry: Registry) -> LinearFunctional:
    """
    {"algebra", "values"} 檔案可能是跡也可能是一般泛函

    "role": "trace" 強制當跡（不是跡就報錯）；否則滿足跡條件者登記為跡，其餘當泛函回傳。
    """
    data, _ = read_json(path)
    if data.get("role") == "functional":
        return load_functional(path, registry)
    if data.get("role") == "trace" or "kind" in data:
        return load_trace(path, registry)
    phi = load_functional(path, registry)
    try:
        as_trace(phi)
    except NotATrace:
        return phi
    return load_trace(path, registry)


def load_wasserstein(path) -> tuple:
    """{"rho1": 矩陣, "rho2": 矩陣, "operators": [矩陣, ...]}"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    rho1 = ctx.convert("rho1", parse_matrix, ctx.require(data, "rho1"))
    rho2 = ctx.convert("rho2", parse_matrix, ctx.require(data, "rho2"))
    operators = ctx.convert("operators", lambda ops: [parse_matrix(op) for op in ops],
                            ctx.require(data, "operators"))
    if not operators:
        ctx.fail("至少需要一個算子", "operators")
    for op in operators:
        if op.shape != rho1.shape or rho2.shape != rho1.shape:
            ctx.fail("密度矩陣與算子的形狀不一致", "operators")
    return rho1, rho2, operators


LOADERS = {
    'algebra': load_algebra,
    'group': load_group,
    'trace': load_trace_or_functional,
    'channel': load_channel,
    'triple': load_triple,
    'pd': load_positive_definite,
    'functional': load_functional,
    'wasserstein': lambda path, registry: load_wasserstein(path),
}

# 代數與群先於引用它們的檔案
LOAD_ORDER = ['algebra', 'group', 'trace', 'functional', 'triple', 'channel', 'pd', 'wasserstein']


def load_any(kind: str, path, registry: Registry):
    if kind not in LOADERS:
        raise InputFileError(f"未知的檔案種類 {kind}", path=str(path))
    return LOADERS[kind](path, registry)


def detect_kind(data: dict) -> str:
    """依欄位判斷檔案種類"""
    if "mult_table" in data:
        return 'group'
    if "dirac" in data:
        return 'triple'
    if "basis" in data:
        return 'algebra'
    if "group" in data:
        return 'pd'
    if "source" in data or "transpose" in data:
        return 'channel'
    if "rho1" in data or "operators" in data:
        return 'wasserstein'
    if "algebra" in data:
        if data.get("role") in ("trace", "functional"):
            return data["role"]
        if "density" in data and "kind" not in data:
            return 'functional'
        return 'trace'
    return 'unknown'


def load_config(path) -> dict:
    """實驗設定檔：{"seed": ..., "experiments": [...]}"""
    data, text = read_json(path)
    ctx = _Context(str(path), text)
    experiments = ctx.require(data, "experiments")
    if not isinstance(experiments, list):
        ctx.fail("\"experiments\" 必須是串列", "experiments")
    for entry in experiments:
        if not isinstance(entry, dict) or "kind" not in entry:
            ctx.fail("每個實驗都需要 \"kind\"", "experiments")
    data['_path'] = str(path)
    return data
