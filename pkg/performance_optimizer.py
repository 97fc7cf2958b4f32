"""
系統資源探測與並行執行
根據 CPU/記憶體決定工作執行緒數，CHOIMETRIC_THREADS 可設上限
"""

import multiprocessing as mp
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

import psutil

from config import THREADS_ENV

# 每個 SDP 試驗的工作記憶體估計（GB）
SOLVER_TASK_GB = 0.5


class PerformanceOptimizer:
    def __init__(self):
        self.cpu_count = mp.cpu_count()
        self.memory_gb = psutil.virtual_memory().total / (1024**3)
        self.available_gb = psutil.virtual_memory().available / (1024**3)

    def describe(self) -> str:
        cap = thread_cap()
        line = (f"🖥️ {platform.system()}，{self.cpu_count} 核心，可用記憶體 {self.available_gb:.1f} / "
                f"{self.memory_gb:.1f} GB")
        return line + (f"，{THREADS_ENV}={cap}" if cap is not None else "")

    def get_optimal_workers(self, task_type='solver'):
        """
        計算工作執行緒數

        solver：每個任務跑一次 SDP，cvxopt 的 BLAS 已多執行緒，取一半核心並依可用記憶體限制
        sampling：純 numpy 的小矩陣取樣，每個核心一個執行緒
        """
        if task_type == 'solver':
            optimal = max(1, self.cpu_count // 2)
            optimal = min(optimal, max(1, int(self.available_gb / SOLVER_TASK_GB)))
        elif task_type == 'sampling':
            optimal = self.cpu_count
        else:
            optimal = max(1, self.cpu_count - 1)

        cap = thread_cap()
        if cap is not None:
            optimal = min(optimal, cap)
        return max(1, optimal)


def thread_cap() -> Optional[int]:
    """讀取 CHOIMETRIC_THREADS 環境變數"""
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        print(f"⚠️ {THREADS_ENV}={raw} 不是整數，忽略")
        return None


def get_optimal_workers(task_type: str = 'solver') -> int:
    return PerformanceOptimizer().get_optimal_workers(task_type)


def parallel_map(fn: Callable, items: Iterable, max_workers: Optional[int] = None,
                 task_type: str = 'solver') -> List:
    """並行執行，結果依輸入順序排列"""
    items = list(items)
    if max_workers is None:
        max_workers = get_optimal_workers(task_type)
    if max_workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]

    try:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(items))) as executor:
            return list(executor.map(fn, items))
    except RuntimeError as e:
        # 執行緒無法建立等執行器錯誤；運算本身的錯誤照常拋出
        print(f"⚠️ 並行處理失敗，回退到串行處理: {e}")
        return [fn(item) for item in items]
