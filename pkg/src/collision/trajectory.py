"""
半经典直线轨迹

R(t) = sqrt(b² + v²t²)，沿轨迹由通道数据构造碰撞哈密顿量 H_s(t) = V(R(t))。
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from .channels import ChannelData
from ..hamiltonian.target import TargetHamiltonian
from ..utils.exceptions import ConfigurationError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Trajectory:
    """
    直线轨迹（原子单位）

    Attributes:
        b: 碰撞参数 (≥ 0)
        v: 相对速度 (> 0)
        t_i: 起始时间
        t_f: 终止时间
    """
    b: float = 0.5
    v: float = 1.0
    t_i: float = -40.0
    t_f: float = 40.0

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b >= 0):
            raise ConfigurationError(f"碰撞参数 b 必须 ≥ 0，实际 {self.b}")
        if not (math.isfinite(self.v) and self.v > 0):
            raise ConfigurationError(f"速度 v 必须 > 0，实际 {self.v}")
        if not (math.isfinite(self.t_i) and math.isfinite(self.t_f) and self.t_i < self.t_f):
            raise ConfigurationError(f"时间窗口非法: [{self.t_i}, {self.t_f}]")

    @property
    def is_symmetric(self) -> bool:
        return self.t_i == -self.t_f

    def with_impact(self, b: float) -> 'Trajectory':
        return Trajectory(b, self.v, self.t_i, self.t_f)

    def time_grid(self, step: float) -> np.ndarray:
        """时间窗口内的网格；窗口关于 0 对称时网格逐点对称"""
        if self.is_symmetric:
            return symmetric_time_grid(self.t_f, step)
        if not step > 0:
            raise ConfigurationError(f"时间步长必须为正，实际 {step}")
        count = max(1, math.ceil((self.t_f - self.t_i) / step))
        return np.linspace(self.t_i, self.t_f, count + 1)

    def to_dict(self) -> Dict[str, Any]:
        return {'b': self.b, 'v': self.v, 't_i': self.t_i, 't_f': self.t_f}


def internuclear_distance(traj: Trajectory, t):
    """R(t) = sqrt(b² + v²t²)，关于 t 偶对称"""
    r = np.hypot(traj.b, traj.v * np.asarray(t, dtype=float))
    return r if r.ndim else float(r)


def symmetric_time_grid(t_half: float, step: float) -> np.ndarray:
    """
    [−t_half, t_half] 上关于 0 精确对称的网格（含 0）

    负半轴由正半轴取反得到，保证 grid[k] == −grid[−1−k]。
    """
    if not (t_half > 0 and step > 0):
        raise ConfigurationError(f"对称网格参数非法: t_half={t_half}, step={step}")
    count = max(1, math.ceil(t_half / step))
    half = np.linspace(0.0, t_half, count + 1)
    return np.concatenate([-half[::-1], half[1:]])


def build_collision_hamiltonian(
    channels: ChannelData,
    traj: Trajectory,
    grid: Optional[np.ndarray] = None,
    step: float = 0.05,
    clamp: bool = False
) -> TargetHamiltonian:
    """
    H_s(t_k) = V(R(t_k))

    Args:
        channels: 通道数据
        traj: 轨迹
        grid: 时间节点（默认 traj.time_grid(step)）
        step: 默认网格步长 (a.u.)
        clamp: R 超出数据上限时取渐近值

    Raises:
        TimeRangeError: R 低于数据下限（或超出上限且未开启 clamp）
    """
    times = traj.time_grid(step) if grid is None else np.asarray(grid, dtype=float)
    r = internuclear_distance(traj, times)
    matrices = channels.potential_at(r, clamp=clamp)
    logger.debug(f"构建碰撞哈密顿量: b={traj.b}, v={traj.v}, 节点 {times.size}, "
                 f"R ∈ [{np.min(r):.3g}, {np.max(r):.3g}]")
    return TargetHamiltonian(times, matrices, channels.unit)
