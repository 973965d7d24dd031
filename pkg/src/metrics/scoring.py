"""
评分指标

跃迁概率 P_si = |⟨i|U|s⟩|²、含时间缩放的保真度 F = |⟨s|U†·U_sim|s⟩|²、
单激发子空间泄漏 L = 1 − ‖P·U_qc|s⟩_n‖²，以及两个过程级扩展指标。
"""

import logging
from typing import Optional

import numpy as np

from ..utils.exceptions import InputError
from ..utils.validators import DataValidator


logger = logging.getLogger(__name__)

DEFAULT_UNITARY_TOL = 1e-8


def _square(matrix, name: str) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"{name} 必须为方阵，实际形状 {matrix.shape}")
    return matrix


def _check_source(source: int, dim: int) -> int:
    if not 0 <= source < dim:
        raise InputError(f"源态索引 {source} 超出范围 [0, {dim})")
    return int(source)


def transition_probabilities(
    u: np.ndarray,
    source: int = 0,
    tol: float = DEFAULT_UNITARY_TOL,
    check_unitary: bool = True
) -> np.ndarray:
    """
    P_si = |U_is|²（i 遍历全部目标态）

    Args:
        u: 演化算符
        source: 源态索引（0 起）
        tol: 幺正性容差 ‖U†U − I‖_F
        check_unitary: 是否检查幺正性（投影后的模拟端演化应关闭）

    Raises:
        InputError: 非方阵、索引越界或超出幺正性容差
    """
    u = _square(u, "U")
    source = _check_source(source, u.shape[0])
    if check_unitary:
        defect = DataValidator.unitarity_defect(u)
        if defect > tol:
            raise InputError(f"U 非幺正: ‖U†U − I‖_F = {defect:.3e} > {tol:.1e}")
    return np.abs(u[:, source]) ** 2


def projected_probabilities(u_sub: np.ndarray, source: int = 0) -> np.ndarray:
    """投影演化 P·U_qc·P† 的跃迁概率（和为 1 − L）"""
    return transition_probabilities(u_sub, source, check_unitary=False)


def fidelity(u_exact: np.ndarray, u_sim: np.ndarray, source: int = 0) -> float:
    """
    F = |⟨s|U†·U_sim|s⟩|² = |U[:, s]† · U_sim[:, s]|²

    对任一参数乘以全局相位不变。

    Raises:
        InputError: 维度不一致
    """
    u_exact = _square(u_exact, "U")
    u_sim = _square(u_sim, "U_sim")
    if u_exact.shape != u_sim.shape:
        raise InputError(f"维度不一致: {u_exact.shape} vs {u_sim.shape}")
    source = _check_source(source, u_exact.shape[0])
    overlap = np.vdot(u_exact[:, source], u_sim[:, source])
    return float(abs(overlap) ** 2)


def leakage(
    u_qc: np.ndarray,
    indices: np.ndarray,
    source: int = 0,
    tol: float = DEFAULT_UNITARY_TOL
) -> float:
    """
    L = 1 − ‖P·U_qc·|s⟩_n‖²

    Args:
        u_qc: 2^n 维演化算符
        indices: 单激发基态在计算基中的索引（长度 n）
        source: 单激发源态（0 起，对应 indices[source]）
        tol: 幺正性容差 ‖U†U − I‖_F

    与对正交补求和的写法等价的前提是 U_qc 幺正，因此先检查幺正性。

    Raises:
        InputError: 非方阵、索引越界或超出幺正性容差
    """
    u_qc = _square(u_qc, "U_qc")
    indices = np.asarray(indices, dtype=np.int64)
    source = _check_source(source, indices.size)
    defect = DataValidator.unitarity_defect(u_qc)
    if defect > tol:
        raise InputError(f"U_qc 非幺正: ‖U†U − I‖_F = {defect:.3e} > {tol:.1e}")
    column = u_qc[:, indices[source]]
    kept = float(np.sum(np.abs(column[indices]) ** 2))
    return max(0.0, 1.0 - kept)


def average_source_fidelity(u_exact: np.ndarray, u_sim: np.ndarray) -> float:
    """扩展指标：对全部源态取平均的 F"""
    u_exact = _square(u_exact, "U")
    return float(np.mean([fidelity(u_exact, u_sim, s) for s in range(u_exact.shape[0])]))


def process_fidelity(u_exact: np.ndarray, u_sim: np.ndarray) -> float:
    """扩展指标：|Tr(U†·U_sim)/n|²"""
    u_exact = _square(u_exact, "U")
    u_sim = _square(u_sim, "U_sim")
    if u_exact.shape != u_sim.shape:
        raise InputError(f"维度不一致: {u_exact.shape} vs {u_sim.shape}")
    n = u_exact.shape[0]
    return float(abs(np.trace(u_exact.conj().T @ u_sim) / n) ** 2)


def global_phase(u_exact: np.ndarray, u_sim: np.ndarray) -> Optional[float]:
    """U_sim ≈ e^{iθ}·U 时的 θ；迹为 0 时返回 None"""
    tr = np.trace(np.asarray(u_exact).conj().T @ np.asarray(u_sim))
    return None if abs(tr) == 0 else float(np.angle(tr))
