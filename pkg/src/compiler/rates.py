"""
控制参数变化速率约束

在离散的控制时间表上用有限差分检查 |Δg_ij/Δt_qc| ≤ v^g_max·m 与 |Δε_i/Δt_qc| ≤ v^ε_max·m。

λ → λ·S 时，速率中与 S 无关的部分按 1/S² 缩小，而 S 随硬件时间变化带来的附加项不超过
a·|d ln S/dt_qc|（a 为 |g| 或 |ε − ε_max| 的上界，分别是 g_max 与 Δε）。因此每轮把违规区段
放大到 S² ≥ r/(1−θ)，并让 ln S 在 t_qc 上以斜率 κ 向两侧衰减（锥形包络），κ 取得使附加项
不超过 θ 倍速率上限。这样每轮都不会在相邻区段上制造新的违规，迭代收敛。
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .envelope import LambdaProfile
from ..circuit.constraints import HardwareConstraints
from ..hamiltonian.target import TargetHamiltonian, energy_profile
from ..utils.exceptions import DomainError, InfeasibleScheduleError


logger = logging.getLogger(__name__)

DEFAULT_RATE_HEADROOM = 0.25
DEFAULT_MAX_PASSES = 200
# 目标放大量的相对余量，抵消舍入
_OVERSHOOT = 1.0 + 1e-9


@dataclass
class SegmentRates:
    """
    每个区段的最大速率与违规比值

    Attributes:
        t_qc: 节点上的硬件时间 (ns)，起点为 0
        g_ratio: max_ij |Δg_ij/Δt_qc| / (v^g_max·m)，形状 (K,)
        eps_ratio: max_i |Δε_i/Δt_qc| / (v^ε_max·m)，形状 (K,)
        g_worst: 每个区段速率最大的耦合 (i, j)
        eps_worst: 每个区段速率最大的比特 i
    """
    t_qc: np.ndarray
    g_ratio: np.ndarray
    eps_ratio: np.ndarray
    g_worst: List[tuple]
    eps_worst: List[int]

    def worst_ratio(self) -> np.ndarray:
        return np.maximum(self.g_ratio, self.eps_ratio)

    def tag(self, k: int) -> str:
        """区段 k 上更严重的速率约束标签"""
        if self.g_ratio[k] >= self.eps_ratio[k]:
            i, j = self.g_worst[k]
            return f"rate_g_{i + 1}{j + 1}"
        return f"rate_eps_{self.eps_worst[k] + 1}"


def segment_rates(
    t_ns: np.ndarray,
    lam: np.ndarray,
    couplings: np.ndarray,
    delta: np.ndarray,
    constraints: HardwareConstraints,
    sign: float = -1.0,
    margin: float = 1.0
) -> SegmentRates:
    """
    离散控制时间表的区段速率（全部为规范单位）

    Args:
        t_ns: 模拟时间节点 (ns)
        lam: λ 节点值
        couplings: 上三角耦合 H^ij，形状 (K+1, P)
        delta: ΔE_i，形状 (K+1, n)
        constraints: 规范单位的硬件约束
        sign: ε = ε_max + sign·ΔE/λ 的符号（−1 为修正后的映射）
        margin: 安全裕度 m，速率上限为 v·m
    """
    t_qc = cumulative_trapezoid(lam, t_ns, initial=0.0)
    dtq = np.diff(t_qc)
    if np.any(dtq <= 0):
        raise DomainError("t_qc 映射非严格递增")

    n = delta.shape[1]
    iu = np.triu_indices(n, k=1)
    g = couplings / lam[:, None]
    eps = constraints.eps_max + sign * delta / lam[:, None]

    if couplings.shape[1]:
        g_rates = np.abs(np.diff(g, axis=0)) / dtq[:, None]
        g_arg = np.argmax(g_rates, axis=1)
        g_ratio = g_rates[np.arange(len(dtq)), g_arg] / (constraints.v_g_max * margin)
        g_worst = [(int(iu[0][a]), int(iu[1][a])) for a in g_arg]
    else:
        g_ratio = np.zeros(len(dtq))
        g_worst = [(0, 0)] * len(dtq)

    eps_rates = np.abs(np.diff(eps, axis=0)) / dtq[:, None]
    eps_arg = np.argmax(eps_rates, axis=1)
    eps_ratio = eps_rates[np.arange(len(dtq)), eps_arg] / (constraints.v_eps_max * margin)

    return SegmentRates(t_qc, g_ratio, eps_ratio, g_worst, [int(a) for a in eps_arg])


def decay_rate(constraints: HardwareConstraints, margin: float = 1.0,
               headroom: float = DEFAULT_RATE_HEADROOM) -> float:
    """
    ln S 在硬件时间上的最大斜率 κ (1/ns)

    κ·Δε ≤ θ·v^ε_max·m 且 κ·g_max ≤ θ·v^g_max·m；无限速率不参与。
    """
    bounds = [v * margin / a for v, a in ((constraints.v_eps_max, constraints.delta_eps),
                                          (constraints.v_g_max, constraints.g_max))
              if np.isfinite(v)]
    return headroom * min(bounds)


def cone_envelope(t_qc: np.ndarray, peaks: np.ndarray, kappa: float) -> np.ndarray:
    """
    max_j (peaks_j − κ·|t_qc − t_qc_j|)，截断到 ≥ 0

    两次前缀最大值即可得到，复杂度 O(K)。
    """
    rising = np.maximum.accumulate(peaks + kappa * t_qc) - kappa * t_qc
    falling = np.maximum.accumulate((peaks - kappa * t_qc)[::-1])[::-1] + kappa * t_qc
    return np.clip(np.maximum(rising, falling), 0.0, None)


def enforce_rate_limits(
    profile: LambdaProfile,
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float = 0.0,
    sign: float = -1.0,
    margin: float = 1.0,
    headroom: float = DEFAULT_RATE_HEADROOM,
    max_passes: int = DEFAULT_MAX_PASSES
) -> LambdaProfile:
    """
    放大 λ 直到离散时间表满足速率约束

    Args:
        profile: 满足幅度包络的 λ0
        h: 目标哈密顿量（网格须与 profile 一致）
        constraints: 硬件约束
        alpha: α
        sign: ε 映射符号
        margin: 安全裕度 m
        headroom: θ，留给 λ 变化附加项的速率份额，0 < θ < 1
        max_passes: 放大轮数上限（0 表示只检查）

    Returns:
        逐点 λ ≥ λ0 的 LambdaProfile；实际违规区段的两端节点标记为速率约束

    Raises:
        InfeasibleScheduleError: 轮数上限内未收敛（给出违规区段与物理量）
    """
    if profile.times.shape != h.times.shape or not np.array_equal(profile.times, h.times):
        raise DomainError("λ 网格与哈密顿量网格不一致")
    if not 0.0 < headroom < 1.0:
        raise DomainError(f"速率余量 θ 必须在 (0, 1) 内，实际 {headroom}")

    c_c = constraints.to_canonical()
    if np.isinf(c_c.v_g_max) and np.isinf(c_c.v_eps_max):
        return profile

    h_c = h.to_canonical()
    iu = np.triu_indices(h.n, k=1)
    couplings = h_c.matrices[:, iu[0], iu[1]]
    delta = energy_profile(h_c, alpha).delta
    kappa = decay_rate(c_c, margin, headroom)

    lam = profile.values.copy()
    binding = list(profile.binding)
    rates: Optional[SegmentRates] = None

    for n_pass in range(max_passes + 1):
        rates = segment_rates(h_c.times, lam, couplings, delta, c_c, sign, margin)
        ratio = rates.worst_ratio()
        violating = np.flatnonzero(ratio > 1.0)
        if violating.size == 0:
            if n_pass:
                logger.info(f"速率约束收敛: {n_pass} 轮，λ 最大放大 "
                            f"{np.max(lam / profile.values):.3g} 倍")
            return profile.with_values(lam, binding)
        if n_pass == max_passes:
            break

        targets = np.flatnonzero(ratio > 1.0 - headroom)
        log_s = 0.5 * np.log(ratio[targets] / (1.0 - headroom)) + np.log(_OVERSHOOT)
        peaks = np.zeros_like(lam)
        np.maximum.at(peaks, targets, log_s)
        np.maximum.at(peaks, targets + 1, log_s)
        lam = lam * np.exp(cone_envelope(rates.t_qc, peaks, kappa))

        for k in violating:
            tag = rates.tag(k)
            binding[k] = tag
            binding[k + 1] = tag
        logger.debug(f"速率约束第 {n_pass + 1} 轮: {violating.size} 个区段违规，"
                     f"最大比值 {ratio.max():.3g}")

    k = int(violating[0])
    quantity = rates.tag(k)
    raise InfeasibleScheduleError(
        f"速率约束在 {max_passes} 轮内未收敛: 区段 {k} 的 {quantity} "
        f"超限 {rates.worst_ratio()[k]:.3g} 倍",
        segment=k,
        quantity=quantity,
    )
