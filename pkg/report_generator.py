"""
實驗結果 CSV 報表
欄位：experiment,trial,seed,lhs,rhs,slack,status,pass,ms
"""

import math
import os
from pathlib import Path
from typing import Iterable, List

import pandas as pd

COLUMNS = ['experiment', 'trial', 'seed', 'lhs', 'rhs', 'slack', 'status', 'pass', 'ms']


def _format_float(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def records_to_frame(records: Iterable) -> pd.DataFrame:
    """ExperimentRecord → DataFrame，依輸入順序"""
    rows = [record.to_row() for record in records]
    frame = pd.DataFrame(rows, columns=COLUMNS)
    for column in ('lhs', 'rhs', 'slack'):
        frame[column] = frame[column].map(_format_float)
    frame['ms'] = frame['ms'].map(lambda v: "" if v is None or pd.isna(v) else f"{v:.1f}")
    frame['pass'] = frame['pass'].map(lambda v: "true" if v else "false")
    return frame


def emit_report(records: List, path) -> Path:
    """
    寫出 CSV

    先寫入暫存檔再改名，中途失敗不會留下不完整的報表。
    """
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame = records_to_frame(records)
    temp = path.with_suffix(path.suffix + ".tmp")
    try:
        frame.to_csv(temp, index=False, lineterminator="\n")
        os.replace(temp, path)
    finally:
        if temp.exists():
            temp.unlink()
    return path


def summarize(records: List) -> str:
    """每個實驗的通過數與最小 slack"""
    frame = pd.DataFrame([record.to_row() for record in records], columns=COLUMNS)
    if frame.empty:
        return "⚠️ 沒有任何紀錄"
    lines = ["📊 實驗摘要", "-" * 50]
    for name, group in frame.groupby('experiment', sort=False):
        passed = int(group['pass'].sum())
        slack = pd.to_numeric(group['slack'], errors='coerce').min()
        slack_text = "—" if pd.isna(slack) else f"{slack:.3g}"
        mark = "✅" if passed == len(group) else "❌"
        lines.append(f"{mark} {name:28}: {passed}/{len(group)} 通過，最小 slack {slack_text}")
    return "\n".join(lines)
