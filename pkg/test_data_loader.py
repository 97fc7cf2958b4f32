#!/usr/bin/env python3
"""
測試 JSON 輸入檔的讀取與錯誤定位
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

from algebra import TraceFunctional
from data_loader import (LOADERS, Registry, detect_kind, load_algebra, load_channel, load_config, load_functional,
                         load_group, load_positive_definite, load_trace, load_trace_or_functional, load_triple,
                         load_wasserstein, parse_complex, read_json)
from errors import InputFileError, InvalidLength


def _write(directory: Path, name: str, payload) -> Path:
    path = directory / name
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2)
    path.write_text(text, encoding='utf-8')
    return path


def test_malformed_json_reports_line(tmp_path):
    path = _write(tmp_path, "broken.json", '{\n  "order": 2,\n  "mult_table": [[0, 1], [1, 0]\n}\n')
    with pytest.raises(InputFileError) as info:
        read_json(path)
    assert info.value.line == 4
    assert str(path) in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(InputFileError):
        read_json(tmp_path / "nope.json")


def test_parse_complex_forms():
    assert parse_complex([1, -2]) == 1 - 2j
    assert parse_complex("0.5+1i") == 0.5 + 1j
    assert parse_complex(3) == 3


def test_group_file(tmp_path):
    registry = Registry()
    path = _write(tmp_path, "z3.json", {"name": "z3", "order": 3, "mult_table": [[0, 1, 2], [1, 2, 0], [2, 0, 1]],
                                        "length": [0, 1, 1]})
    tga = load_group(path, registry)
    assert tga.group.order == 3
    np.testing.assert_allclose(registry.length("z3"), [0, 1, 1])
    assert registry.algebra("z3") is tga.algebra
    assert registry.trace("z3").values[0] == 1.0


def test_group_file_errors(tmp_path):
    bad_table = _write(tmp_path, "bad.json", {"order": 2, "mult_table": [[0, 1], [1, 1]]})
    with pytest.raises(InputFileError) as info:
        load_group(bad_table)
    assert info.value.line == 3

    bad_order = _write(tmp_path, "order.json", {"order": 3, "mult_table": [[0, 1], [1, 0]]})
    with pytest.raises(InputFileError):
        load_group(bad_order)

    bad_length = _write(tmp_path, "length.json", {"order": 2, "mult_table": [[0, 1], [1, 0]], "length": [1, 1]})
    with pytest.raises(InputFileError):
        load_group(bad_length)

    registry = Registry()
    load_group(_write(tmp_path, "plain.json", {"name": "plain", "order": 2, "mult_table": [[0, 1], [1, 0]]}),
               registry)
    with pytest.raises(InvalidLength):
        registry.length("plain")
    print("✅ 群檔錯誤皆附檔名與行號")


def test_algebra_and_trace_files(tmp_path):
    registry = Registry()
    path = _write(tmp_path, "diag.json", {"name": "d2", "ambient_dim": 2,
                                          "basis": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]})
    algebra = load_algebra(path, registry)
    assert algebra.dim == 2
    tau = load_trace(_write(tmp_path, "tau.json", {"algebra": "d2", "values": [0.5, 0.5]}), registry)
    assert tau.is_faithful

    with pytest.raises(InputFileError):
        load_trace(_write(tmp_path, "kind.json", {"algebra": "d2", "kind": "weird"}), registry)
    with pytest.raises(InputFileError):
        load_algebra(_write(tmp_path, "open.json", {"ambient_dim": 2,
                                                    "basis": [[[1, 0], [0, 1]], [[0, 1], [0, 0]]]}))


def test_channel_files(tmp_path):
    registry = Registry()
    transpose = load_channel(_write(tmp_path, "t.json", {"transpose": 2}), registry)
    assert transpose.source.dim == 4

    kraus = load_channel(_write(tmp_path, "k.json", {"source": "M2", "target": "M2",
                                                     "kraus": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}), registry)
    np.testing.assert_allclose(kraus.matrix, np.diag([1, 0, 0, 1]), atol=1e-12)

    with pytest.raises(InputFileError) as info:
        load_channel(_write(tmp_path, "shape.json", {"source": "M2", "target": "M2", "matrix": [[1, 0], [0, 1]]}),
                     registry)
    assert info.value.line > 0


def test_triple_file(tmp_path):
    registry = Registry()
    payload = {"algebra": "diag2", "hilbert_dim": 2,
               "rep": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]],
               "dirac": [[0, 1], [1, 0]], "grading": None}
    triple = load_triple(_write(tmp_path, "triple.json", payload), registry)
    assert not triple.is_even
    payload["dirac"] = [[0, 1], [0, 0]]
    with pytest.raises(InputFileError):
        load_triple(_write(tmp_path, "bad_triple.json", payload), registry)


def test_positive_definite_file(tmp_path):
    registry = Registry()
    tga, values = load_positive_definite(_write(tmp_path, "pd.json", {"group": "Z2", "values": [1, 0.5]}), registry)
    assert tga.group.order == 2
    with pytest.raises(InputFileError):
        load_positive_definite(_write(tmp_path, "npd.json", {"group": "Z2", "values": [1, 1.5]}), registry)


def test_functional_and_wasserstein_files(tmp_path):
    registry = Registry()
    phi = load_functional(_write(tmp_path, "phi.json", {"algebra": "M2", "density": [[0.25, 0], [0, 0.75]]}),
                          registry)
    assert phi.is_state()
    np.testing.assert_allclose(phi.values, [0.25, 0, 0, 0.75])

    rho1, rho2, operators = load_wasserstein(_write(tmp_path, "w.json", {
        "rho1": [[1, 0], [0, 0]], "rho2": [[0, 0], [0, 1]], "operators": [[[0, 1], [1, 0]]]}))
    assert rho1.shape == rho2.shape == operators[0].shape
    with pytest.raises(InputFileError):
        load_wasserstein(_write(tmp_path, "w_bad.json", {"rho1": [[1]], "rho2": [[1]], "operators": []}))


def test_loaded_trace_is_registered(tmp_path):
    """載入的非均勻跡取代環境跡，以跡名與代數名都可查到"""
    registry = Registry()
    algebra = load_algebra(_write(tmp_path, "D2.json", {"ambient_dim": 2,
                                                        "basis": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}), registry)
    weighted = load_trace(_write(tmp_path, "w.json", {"algebra": "D2", "values": [0.25, 0.75]}), registry)
    np.testing.assert_allclose(registry.trace("w").values, [0.25, 0.75])
    np.testing.assert_allclose(registry.trace("D2").values, [0.25, 0.75])
    assert registry.trace_for(algebra) is weighted
    assert registry.trace("op:D2").algebra.is_opposite
    np.testing.assert_allclose(registry.trace("M2").values, [1, 0, 0, 1])

    by_density = load_trace(_write(tmp_path, "rho.json", {"algebra": "D2", "density": [[0.5, 0], [0, 0.5]]}),
                            registry)
    np.testing.assert_allclose(by_density.values, [0.5, 0.5])
    assert registry.trace_for(algebra) is by_density


def test_functional_files_are_routed(tmp_path):
    """{"algebra", "values"} 非跡時當泛函；density 走泛函；Wasserstein 檔可辨識"""
    registry = Registry()
    phi = _write(tmp_path, "phi.json", {"algebra": "M2", "values": [1, 0, 0, 0]})
    loaded = LOADERS[detect_kind(read_json(phi)[0])](phi, registry)
    assert not isinstance(loaded, TraceFunctional)
    assert loaded.is_state()
    assert "phi" not in registry.traces

    assert detect_kind({"algebra": "M2", "density": [[1, 0], [0, 0]]}) == 'functional'
    assert detect_kind({"algebra": "M2", "values": [1, 0, 0, 1], "role": "functional"}) == 'functional'
    assert detect_kind({"rho1": [], "rho2": [], "operators": []}) == 'wasserstein'
    assert detect_kind({"algebra": "M2", "kind": "tr"}) == 'trace'

    forced = _write(tmp_path, "forced.json", {"algebra": "M2", "values": [1, 0, 0, 0], "role": "trace"})
    with pytest.raises(InputFileError):
        load_trace_or_functional(forced, registry)
    tau = load_trace_or_functional(_write(tmp_path, "half.json", {"algebra": "M2", "values": [0.5, 0, 0, 0.5]}),
                                   registry)
    assert isinstance(tau, TraceFunctional)
    assert registry.trace("M2") is tau



def test_detect_kind_and_config(tmp_path):
    assert detect_kind({"mult_table": []}) == 'group'
    assert detect_kind({"dirac": []}) == 'triple'
    assert detect_kind({"group": "Z2", "values": []}) == 'pd'
    assert detect_kind({"transpose": 2}) == 'channel'
    assert detect_kind({}) == 'unknown'

    config = load_config(_write(tmp_path, "c.json", {"seed": 1, "experiments": [{"kind": "embedding"}]}))
    assert config['_path'].endswith("c.json")
    with pytest.raises(InputFileError):
        load_config(_write(tmp_path, "c2.json", {"experiments": [{"trials": 3}]}))


if __name__ == "__main__":
    print("🧪 輸入檔測試")
    print("=" * 50)
    tests = [
        ("JSON 行號", test_malformed_json_reports_line),
        ("缺檔", test_missing_file),
        ("群檔", test_group_file),
        ("群檔錯誤", test_group_file_errors),
        ("代數與跡", test_algebra_and_trace_files),
        ("通道", test_channel_files),
        ("三元組", test_triple_file),
        ("正定函數", test_positive_definite_file),
        ("泛函與 Wasserstein", test_functional_and_wasserstein_files),
        ("跡登記", test_loaded_trace_is_registered),
        ("泛函分流", test_functional_files_are_routed),
        ("種類判斷", test_detect_kind_and_config),
    ]
    results = []
    for name, fn in tests:
        try:
            with tempfile.TemporaryDirectory() as directory:
                fn(Path(directory))
            results.append((name, True))
        except Exception as e:
            print(f"❌ {name} 失敗: {e}")
            results.append((name, False))
    try:
        test_parse_complex_forms()
        results.append(("複數解析", True))
    except Exception as e:
        print(f"❌ 複數解析 失敗: {e}")
        results.append(("複數解析", False))

    print("\n📊 測試結果摘要:")
    for name, ok in results:
        print(f"   {name}: {'✅ 通過' if ok else '❌ 失敗'}")
    if all(ok for _, ok in results):
        print("\n🎉 所有測試通過！")
