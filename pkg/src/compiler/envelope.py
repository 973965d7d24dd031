"""
能量/时间缩放包络

λ(t) 的幅度下界：max({|H^ij|/g_max, i<j} ∪ {ΔE_i/Δε})，并记录每个节点的约束来源标签。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from ..circuit.constraints import HardwareConstraints
from ..hamiltonian import units
from ..hamiltonian.target import TargetHamiltonian, energy_profile, simulated_energies
from ..utils.exceptions import DomainError


logger = logging.getLogger(__name__)

FLOOR_TAG = 'floor'


def coupling_tag(i: int, j: int) -> str:
    return f"g_{i + 1}{j + 1}"


def energy_tag(i: int) -> str:
    return f"dE_{i + 1}"


@dataclass(frozen=True, eq=False)
class LambdaProfile:
    """
    网格上的 λ(t)

    Attributes:
        times: 模拟时间节点（time_unit 单位）
        values: λ(t_k) > 0
        binding: 每个节点的约束来源标签（g_ij / dE_i / floor / rate_g_ij / rate_eps_i）
        margin: 安全裕度 m ≥ 1
        time_unit: 时间单位标签
        envelope: 乘裕度前的幅度包络（可选，用于导出）
    """
    times: np.ndarray
    values: np.ndarray
    binding: Tuple[str, ...]
    margin: float = 1.0
    time_unit: str = 'au'
    envelope: np.ndarray = field(default=None)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise DomainError(f"λ 与时间网格形状不一致: {values.shape} vs {times.shape}")
        if len(self.binding) != times.size:
            raise DomainError("约束标签数量与节点数不一致")
        if self.margin < 1.0:
            raise DomainError(f"安全裕度必须 ≥ 1，实际 {self.margin}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'binding', tuple(self.binding))
        object.__setattr__(self, 'time_unit', units.normalize_unit(self.time_unit))
        if self.envelope is not None:
            env = np.array(self.envelope, dtype=float)
            env.setflags(write=False)
            object.__setattr__(self, 'envelope', env)

    def with_values(self, values: np.ndarray, binding: List[str]) -> 'LambdaProfile':
        return LambdaProfile(self.times, values, tuple(binding), self.margin,
                             self.time_unit, self.envelope)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t': self.times, 'lambda': self.values})
        if self.envelope is not None:
            frame['envelope'] = self.envelope
        frame['binding'] = list(self.binding)
        return frame


def energy_ratios(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float
) -> Dict[str, np.ndarray]:
    """
    所有 (n²+n)/2 个能量比值随网格的取值

    Returns:
        {标签: 数组}，耦合比值在前（g_12, g_13, ...），能差比值在后（dE_1, ...）
    """
    h_c = h.to_canonical()
    c_c = constraints.to_canonical()
    ratios: Dict[str, np.ndarray] = {}
    for i, j in zip(*np.triu_indices(h.n, k=1)):
        ratios[coupling_tag(i, j)] = np.abs(h_c.matrices[:, i, j]) / c_c.g_max
    delta = energy_profile(h_c, alpha).delta
    for i in range(h.n):
        ratios[energy_tag(i)] = delta[:, i] / c_c.delta_eps
    return ratios


def envelope_values(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float
) -> Tuple[np.ndarray, List[str]]:
    """
    网格上的幅度包络与约束来源标签

    包络为 0 的节点标记为 floor。
    """
    ratios = energy_ratios(h, constraints, alpha)
    names = list(ratios)
    table = np.vstack([ratios[name] for name in names])
    winner = np.argmax(table, axis=0)
    values = table[winner, np.arange(table.shape[1])]
    tags = [names[w] if v > 0 else FLOOR_TAG for w, v in zip(winner, values)]
    return values, tags


def lambda_envelope(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float,
    t: float
) -> float:
    """
    时刻 t 的幅度包络 max(|H^ij(t)|/g_max, ΔE_i(t)/Δε)

    H 为单位阵倍数且能量简并时返回 0，由调用方施加 λ_floor。
    """
    f_h = units.energy_factor(h.unit)
    c_c = constraints.to_canonical()
    matrix = h.sample(t) * f_h
    iu = np.triu_indices(h.n, k=1)
    coupling = np.abs(matrix[iu]) / c_c.g_max
    delta = simulated_energies(h, alpha, t).delta * f_h / c_c.delta_eps
    return float(max(coupling.max(initial=0.0), delta.max(initial=0.0)))


def envelope_profile(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float,
    margin: float = 1.0,
    floor: float = 0.0
) -> LambdaProfile:
    """
    λ0 = max(m·包络, λ_floor)

    Args:
        h: 目标哈密顿量
        constraints: 硬件约束
        alpha: α
        margin: 安全裕度 m
        floor: λ_floor

    Returns:
        LambdaProfile
    """
    env, tags = envelope_values(h, constraints, alpha)
    scaled = env * margin
    values = np.maximum(scaled, floor)
    tags = [FLOOR_TAG if s < floor else tag for s, tag in zip(scaled, tags)]
    if np.any(values <= 0):
        raise DomainError("λ 包络为 0 且未设置正的 λ_floor")
    return LambdaProfile(h.times, values, tags, margin, h.unit, env)
