"""
截面积分

σ_i = 2π ∫ P_si(b)·b db，梯形求积；并给出随 b 上限累积的部分和。
"""

import math
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..utils.exceptions import InputError


PROBABILITY_SLACK = 1e-9


def _check(b: Sequence[float], p: Sequence[float]):
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise InputError("碰撞参数网格为空")
    if p.shape[0] != b.size:
        raise InputError(f"概率数量 {p.shape[0]} 与网格节点数 {b.size} 不一致")
    if not np.all(np.isfinite(b)) or b[0] < 0 or np.any(np.diff(b) <= 0):
        raise InputError("碰撞参数网格必须从 b ≥ 0 开始严格递增")
    if not np.all(np.isfinite(p)) or np.any(p < -PROBABILITY_SLACK) or np.any(p > 1 + PROBABILITY_SLACK):
        raise InputError("跃迁概率必须位于 [0, 1]")
    return b, p


def cross_section(b: Sequence[float], p: Sequence[float]) -> float:
    """
    σ = 2π ∫ P(b)·b db（a.u.²）

    Raises:
        InputError: 网格为空、非递增或概率越界
    """
    b, p = _check(b, p)
    if b.size == 1:
        return 0.0
    return float(trapezoid(2.0 * math.pi * b * p, b))


def partial_cross_sections(b: Sequence[float], p: Sequence[float]) -> np.ndarray:
    """
    累积部分和 σ(b ≤ b_k)

    Args:
        b: 碰撞参数网格
        p: 概率，形状 (B,) 或 (B, n)

    Returns:
        与 p 同形状的数组，首行为 0
    """
    b, p = _check(b, p)
    weight = 2.0 * math.pi * b
    integrand = weight * p if p.ndim == 1 else weight[:, None] * p
    return cumulative_trapezoid(integrand, b, axis=0, initial=0.0)
