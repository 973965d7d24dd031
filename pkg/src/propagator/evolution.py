"""
时间演化算符

分段常数中点指数积：U(t) = Π_k exp(−i·H(t_mid,k)·Δt)，每步由厄米本征分解精确求指数。
生成元以角频率单位给出（H/ħ），时间变量与生成元一致（a.u. 配 hartree，ns 配 rad/ns）。
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..utils.exceptions import ConfigurationError, DomainError, GeneratorError
from ..utils.validators import DataValidator


logger = logging.getLogger(__name__)

Generator = Callable[[float], np.ndarray]

METHOD_MIDPOINT = 'midpoint'


@dataclass(frozen=True)
class PropagatorConfig:
    """
    传播器配置

    Attributes:
        max_step: 最大步长（生成元自身的时间单位）
        method: 积分方式（目前仅 midpoint）
        unitarity_tol: ‖U†U − I‖_F 的审计容差
        hermitian_tol: 生成元厄米性审计容差（相对）
        max_steps: 单次演化允许的总步数
    """
    max_step: float
    method: str = METHOD_MIDPOINT
    unitarity_tol: float = 1e-9
    hermitian_tol: float = 1e-10
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not (math.isfinite(self.max_step) and self.max_step > 0):
            raise ConfigurationError(f"max_step 必须为正有限值，实际 {self.max_step}")
        if self.method != METHOD_MIDPOINT:
            raise ConfigurationError(f"不支持的积分方式: {self.method}")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps 必须为正")

    def halved(self) -> 'PropagatorConfig':
        return PropagatorConfig(self.max_step / 2, self.method, self.unitarity_tol,
                                self.hermitian_tol, self.max_steps * 2)


@dataclass
class EvolutionResult:
    """
    演化结果

    Attributes:
        times: 检查点时间
        unitaries: U(t_checkpoint)，形状 (C, dim, dim)
        defects: 每个检查点的 ‖U†U − I‖_F
        steps: 总步数
    """
    times: np.ndarray
    unitaries: np.ndarray
    defects: np.ndarray
    steps: int = 0

    @property
    def dim(self) -> int:
        return int(self.unitaries.shape[-1])

    @property
    def final(self) -> np.ndarray:
        return self.unitaries[-1]

    @property
    def max_defect(self) -> float:
        return float(np.max(self.defects, initial=0.0))

    def to_dict(self) -> Dict[str, Any]:
        """JSON 导出：矩阵按行优先展平，实部虚部交错"""
        flat = self.unitaries.reshape(len(self.times), -1)
        interleaved = np.empty((flat.shape[0], 2 * flat.shape[1]))
        interleaved[:, 0::2] = flat.real
        interleaved[:, 1::2] = flat.imag
        return {
            'dim': self.dim,
            'times': self.times.tolist(),
            'unitaries': interleaved.tolist(),
            'defects': self.defects.tolist(),
            'steps': self.steps,
        }


def step_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(−i·H·Δt)，H 厄米"""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def _sample(generator: Generator, t: float, dim: Optional[int], tol: float) -> np.ndarray:
    h = np.asarray(generator(t))
    if h.ndim != 2 or h.shape[0] != h.shape[1] or (dim is not None and h.shape[0] != dim):
        raise GeneratorError(f"生成元在 t={t} 返回非方阵或维度变化: {h.shape}")
    if not DataValidator.is_finite(h):
        raise GeneratorError(f"生成元在 t={t} 返回非有限值")
    if not DataValidator.is_hermitian(h, tol):
        raise GeneratorError(f"生成元在 t={t} 非厄米（容差 {tol}）")
    return h


def _steps_for(length: float, max_step: float) -> int:
    if length <= 0:
        return 0
    return max(1, math.ceil(length / max_step * (1.0 - 1e-12)))


def evolve(
    generator: Generator,
    t0: float,
    t1: float,
    config: PropagatorConfig,
    checkpoints: Optional[Sequence[float]] = None
) -> EvolutionResult:
    """
    时间序演化 U(t) = T exp(−i ∫_{t0}^{t} H dt')

    相邻检查点之间取 ceil(长度/max_step) 个等长步，步中点采样生成元。

    Args:
        generator: t → 厄米矩阵
        t0: 起点
        t1: 终点
        config: 传播器配置
        checkpoints: 需要记录 U 的时间（非递减，落在 [t0, t1]）；默认只记录 t1

    Returns:
        EvolutionResult

    Raises:
        GeneratorError: 生成元非厄米或非有限
        ConfigurationError: 区间非法、检查点非法或总步数超限
    """
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 < t0:
        raise ConfigurationError(f"演化区间非法: [{t0}, {t1}]")
    points = np.array([t1] if checkpoints is None else checkpoints, dtype=float)
    if points.ndim != 1 or points.size == 0:
        raise ConfigurationError("检查点列表为空")
    if np.any(np.diff(points) < 0) or points[0] < t0 or points[-1] > t1:
        raise ConfigurationError(f"检查点必须非递减且落在 [{t0}, {t1}]")

    edges = np.concatenate([[t0], points])
    counts = [_steps_for(b - a, config.max_step) for a, b in zip(edges[:-1], edges[1:])]
    total = int(sum(counts))
    if total > config.max_steps:
        raise ConfigurationError(
            f"需要 {total} 步，超过上限 {config.max_steps}（max_step={config.max_step} 过小）"
        )

    dim = _sample(generator, t0, None, config.hermitian_tol).shape[0]
    u = np.eye(dim, dtype=complex)
    unitaries = np.empty((points.size, dim, dim), dtype=complex)
    defects = np.empty(points.size)

    start = t0
    for c, (end, m) in enumerate(zip(points, counts)):
        if m:
            h_len = (end - start) / m
            for j in range(m):
                mid = start + (j + 0.5) * h_len
                u = step_unitary(_sample(generator, mid, dim, config.hermitian_tol), h_len) @ u
            start = end
        unitaries[c] = u
        defects[c] = DataValidator.unitarity_defect(u)

    result = EvolutionResult(points, unitaries, defects, total)
    if result.max_defect > config.unitarity_tol:
        logger.warning(f"幺正性偏差 {result.max_defect:.3e} 超过容差 {config.unitarity_tol:.1e}")
    logger.debug(f"演化完成: dim={dim}, 步数 {total}, 检查点 {points.size}")
    return result


@dataclass
class PairedEvolution:
    """
    成对演化：精确 U(t) 与模拟端 U_sim(t_qc(t))，检查点一一对应
    """
    exact: EvolutionResult
    simulated: EvolutionResult

    @property
    def times(self) -> np.ndarray:
        return self.exact.times

    @property
    def t_qc(self) -> np.ndarray:
        return self.simulated.times


def evolve_pair(
    exact_generator: Generator,
    simulated_generator: Generator,
    tqc_map: Callable,
    checkpoints: Sequence[float],
    exact_config: PropagatorConfig,
    simulated_config: PropagatorConfig
) -> PairedEvolution:
    """
    同步计算 U(t) 与 U_sim(t_qc(t))

    Args:
        exact_generator: 模拟时间 t 上的 H_s
        simulated_generator: 硬件时间 t_qc 上的 H_n 或 H_qc
        tqc_map: t → t_qc
        checkpoints: 模拟时间检查点（第一个为演化起点）
        exact_config: 精确端传播器配置
        simulated_config: 模拟端传播器配置

    Raises:
        DomainError: t_qc 在检查点上不严格递增
    """
    points = np.asarray(checkpoints, dtype=float)
    if points.size == 0:
        raise ConfigurationError("检查点列表为空")
    mapped = np.atleast_1d(np.asarray(tqc_map(points), dtype=float))
    if points.size > 1:
        if not DataValidator.is_strictly_increasing(points):
            raise ConfigurationError("模拟时间检查点必须严格递增")
        if not DataValidator.is_strictly_increasing(mapped):
            raise DomainError("t_qc 映射在检查点上不严格递增")

    exact = evolve(exact_generator, float(points[0]), float(points[-1]), exact_config, points)
    simulated = evolve(simulated_generator, float(mapped[0]), float(mapped[-1]),
                       simulated_config, mapped)
    return PairedEvolution(exact, simulated)


def step_halving_errors(
    generator: Generator,
    t0: float,
    t1: float,
    config: PropagatorConfig,
    levels: int = 3
) -> List[float]:
    """
    逐次减半步长的差 ‖U_Δt − U_Δt/2‖_F（二阶方法相邻比值约为 4）
    """
    finals = []
    current = config
    for _ in range(levels + 1):
        finals.append(evolve(generator, t0, t1, current).final)
        current = current.halved()
    return [float(np.linalg.norm(a - b)) for a, b in zip(finals[:-1], finals[1:])]
