"""
量子计算机哈密顿量与单激发子空间

H_qc = Σ_i −(ε_i/2)σ^z_i + Σ_{i<j} g_ij Σ_μν J_μν σ^μ_i⊗σ^ν_j（对称 J 下与 ½Σ_{i≠j} 写法等价），
单激发投影 P，以及子空间哈密顿量 H_n。

约定：比特 1（代码中索引 0）为计算基索引的最高位；激发态为 σ^z = −1 本征态（比特值 1）。
"""

import logging
from functools import reduce
from typing import Dict, Tuple

import numpy as np
from scipy import sparse

from .tensor import PAULI, PAULI_BASIS, CouplingTensor
from ..utils.exceptions import CapacityError, InputError
from ..utils.logger import LoggerMixin


logger = logging.getLogger(__name__)

DEFAULT_MAX_QUBITS = 12
# 不超过该维度时缓存稠密算符
DENSE_CACHE_DIM = 256


def single_excitation_indices(n: int) -> np.ndarray:
    """比特 i 激发、其余基态的计算基索引：2^(n−1−i)"""
    if n < 1:
        raise InputError(f"比特数必须 ≥ 1，实际 {n}")
    return np.array([1 << (n - 1 - i) for i in range(n)], dtype=np.int64)


def single_excitation_projector(n: int) -> np.ndarray:
    """
    单激发投影 P（n × 2^n，0/1 元素），满足 P·P† = I_n
    """
    indices = single_excitation_indices(n)
    projector = np.zeros((n, 1 << n))
    projector[np.arange(n), indices] = 1.0
    return projector


def excitation_numbers(n: int) -> np.ndarray:
    """每个计算基态的激发数（汉明重量）"""
    idx = np.arange(1 << n)
    return np.array([bin(i).count('1') for i in idx], dtype=np.int64)


def _embed(ops: Dict[int, np.ndarray], n: int) -> sparse.csr_matrix:
    """把局部 2×2 算符嵌入 n 比特空间（未给出的位置为单位阵）"""
    factors = [sparse.csr_matrix(ops.get(q, PAULI['0'])) for q in range(n)]
    return reduce(lambda a, b: sparse.kron(a, b, format='csr'), factors)


def hn_matrix(eps: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """
    子空间哈密顿量 H_n：对角 ε_i − α·Σ_{k≠i} g_ik，非对角 g_ij
    """
    eps = np.asarray(eps, dtype=float)
    g = np.array(g, dtype=float)
    np.fill_diagonal(g, 0.0)
    h = g.copy()
    h[np.diag_indices_from(h)] = eps - alpha * g.sum(axis=1)
    return h


class CircuitModel(LoggerMixin):
    """
    n 比特可调耦合量子计算机模型

    预先构建 σ^z_i 与每对比特的相互作用算符，之后按控制参数线性组装 H_qc。
    """

    def __init__(self, n: int, tensor: CouplingTensor, max_qubits: int = DEFAULT_MAX_QUBITS):
        """
        Args:
            n: 比特数
            tensor: 归一化耦合张量
            max_qubits: 稠密矩阵允许的最大比特数

        Raises:
            CapacityError: n 超过 max_qubits
        """
        if n < 1:
            raise InputError(f"比特数必须 ≥ 1，实际 {n}")
        if n > max_qubits:
            raise CapacityError(f"比特数 {n} 超过上限 {max_qubits}（维度 2^{n}）")
        self.n = n
        self.dim = 1 << n
        self.tensor = tensor
        self.pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

        self._z_diag = np.array([
            np.real(_embed({i: PAULI['z']}, n).diagonal()) for i in range(n)
        ])
        self._pair_ops = {pair: self._pair_operator(*pair) for pair in self.pairs}
        self._dense = self.dim <= DENSE_CACHE_DIM
        if self._dense:
            self._pair_dense = {pair: op.toarray() for pair, op in self._pair_ops.items()}

        self.logger.debug(f"构建电路模型: n={n}, dim={self.dim}, 张量={tensor.name}")

    def _pair_operator(self, i: int, j: int) -> sparse.csr_matrix:
        op = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        for mu, s_mu in enumerate(PAULI_BASIS):
            for nu, s_nu in enumerate(PAULI_BASIS):
                weight = self.tensor.J[mu, nu]
                if weight != 0:
                    op = op + weight * _embed({i: s_mu, j: s_nu}, self.n)
        return op

    def hqc_matrix(self, eps: np.ndarray, g: np.ndarray) -> np.ndarray:
        """
        由控制参数组装稠密 H_qc

        Args:
            eps: 比特能量 (n,)
            g: 耦合矩阵 (n, n)，只读取上三角

        Returns:
            2^n × 2^n 厄米矩阵
        """
        eps = np.asarray(eps, dtype=float)
        g = np.asarray(g, dtype=float)
        if eps.shape != (self.n,) or g.shape != (self.n, self.n):
            raise InputError(f"控制参数形状不匹配: eps {eps.shape}, g {g.shape}, n={self.n}")

        diagonal = -0.5 * (eps @ self._z_diag)
        if self._dense:
            h = np.diag(diagonal).astype(complex)
            for (i, j), op in self._pair_dense.items():
                if g[i, j] != 0:
                    h += g[i, j] * op
            return h

        h = sparse.diags(diagonal.astype(complex), format='csr')
        for (i, j), op in self._pair_ops.items():
            if g[i, j] != 0:
                h = h + g[i, j] * op
        return h.toarray()

    def build_hqc(self, schedule, k: int) -> np.ndarray:
        """控制时间表第 k 个节点处的 H_qc"""
        eps, g = schedule.node_controls(k)
        return self.hqc_matrix(eps, g)

    def projector(self) -> np.ndarray:
        return single_excitation_projector(self.n)

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """P·M·P†"""
        idx = single_excitation_indices(self.n)
        return np.asarray(matrix)[np.ix_(idx, idx)]

    def subspace_block(self, eps: np.ndarray, g: np.ndarray) -> np.ndarray:
        """P·H_qc·P†"""
        return self.project(self.hqc_matrix(eps, g))


def build_hqc(schedule, tensor: CouplingTensor, k: int,
              max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """
    控制时间表第 k 个节点处的 H_qc（2^n × 2^n 厄米矩阵）

    Raises:
        CapacityError: n 超过 max_qubits
    """
    return CircuitModel(schedule.n, tensor, max_qubits).build_hqc(schedule, k)


def build_hn(schedule, alpha: float, k: int) -> np.ndarray:
    """控制时间表第 k 个节点处的 H_n（n × n 实对称）"""
    eps, g = schedule.node_controls(k)
    return hn_matrix(eps, g, alpha)


def traceless(matrix: np.ndarray) -> np.ndarray:
    """去掉单位阵分量"""
    matrix = np.asarray(matrix)
    return matrix - np.trace(matrix) / matrix.shape[0] * np.eye(matrix.shape[0])


def sector_mixing(h: np.ndarray, n: int) -> Tuple[float, float]:
    """
    H 在单激发扇区与其余基态之间的最大矩阵元，以及跨任意激发数扇区的最大矩阵元
    """
    weights = excitation_numbers(n)
    single = weights == 1
    h = np.abs(np.asarray(h))
    to_single = float(np.max(h[np.ix_(~single, single)], initial=0.0))
    across = float(np.max(h[weights[:, None] != weights[None, :]], initial=0.0))
    return to_single, across
