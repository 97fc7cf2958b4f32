"""
隨機實例產生
CP 映射、跡通道、非 CP 映射、密度矩陣與語料代數，全部由 numpy Generator 決定
"""

from typing import Optional

import numpy as np

from algebra import ConcreteAlgebra, LinearFunctional, diagonal_algebra, matrix_algebra
from channels import ChannelMap, channel_from_function, compose, transpose_channel
from geometry import random_density


def random_kraus_operators(n_in: int, n_out: int, rng: np.random.Generator, rank: int = 2):
    return [rng.standard_normal((n_out, n_in)) + 1j * rng.standard_normal((n_out, n_in))
            for _ in range(rank)]


def random_cp_map(source: ConcreteAlgebra, target: ConcreteAlgebra, rng: np.random.Generator,
                  rank: int = 2) -> ChannelMap:
    """
    a ↦ E_B(Σ K a K*)

    E_B 為 Hilbert-Schmidt 正交投影（單位 *-子代數上即保跡條件期望），因此結果仍為 CP。
    """
    ops = random_kraus_operators(source.ambient_dim, target.ambient_dim, rng, rank)
    return channel_from_function(source, target, lambda a: sum(k @ a @ k.conj().T for k in ops),
                                 name="CP")


def trace_normalize(F: ChannelMap, tau: LinearFunctional) -> ChannelMap:
    """縮放使 τ(F(1)) = 1"""
    value = tau(F.matrix @ F.source.unit_coords)
    return ChannelMap(F.source, F.target, F.matrix / value, name=F.name)


def random_trace_channel(source: ConcreteAlgebra, target: ConcreteAlgebra, tau: LinearFunctional,
                         rng: np.random.Generator, rank: int = 2) -> ChannelMap:
    return trace_normalize(random_cp_map(source, target, rng, rank), tau)


def random_non_cp_map(source: ConcreteAlgebra, target: ConcreteAlgebra, rng: np.random.Generator) -> ChannelMap:
    """兩個 CP 映射之差，負部權重足以破壞完全正性"""
    positive = random_cp_map(source, target, rng, rank=1)
    negative = random_cp_map(source, target, rng, rank=1)
    scale = np.max(np.abs(positive.matrix)) / max(np.max(np.abs(negative.matrix)), 1e-12)
    return ChannelMap(source, target, positive.matrix - 2.0 * scale * negative.matrix, name="nonCP")


def random_linear_map(source: ConcreteAlgebra, target: ConcreteAlgebra, rng: np.random.Generator) -> ChannelMap:
    """輪流產生 CP、CP 與轉置合成、CP 差與任意複映射"""
    kind = int(rng.integers(4))
    if kind == 0:
        return random_cp_map(source, target, rng, rank=int(rng.integers(1, 4)))
    if kind == 1 and target.ambient_dim * target.ambient_dim == target.dim:
        cp = random_cp_map(source, target, rng)
        return compose(transpose_channel(target.ambient_dim), cp)
    if kind == 2:
        return random_non_cp_map(source, target, rng)
    matrix = rng.standard_normal((target.dim, source.dim)) + 1j * rng.standard_normal((target.dim, source.dim))
    return ChannelMap(source, target, matrix, name="generic")


def random_state_density(n: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(n, rng)


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (g + g.conj().T) / 2


def corpus_algebra(name: str) -> Optional[ConcreteAlgebra]:
    """M2、M3、diag2、diag3；其餘由 groups 模組提供"""
    builders = {
        'M2': lambda: matrix_algebra(2),
        'M3': lambda: matrix_algebra(3),
        'diag2': lambda: diagonal_algebra(2),
        'diag3': lambda: diagonal_algebra(3),
    }
    builder = builders.get(name)
    return builder() if builder else None
