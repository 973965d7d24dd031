"""
目标哈密顿量

被模拟系统的实对称、含时 n×n 哈密顿量 H_s(t)：网格采样 + 逐元素分段线性插值，
以及由此导出的模拟能量 E_i(t) 与能差 ΔE_i(t)。
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from . import units
from ..utils.exceptions import DataFormatError, TimeRangeError
from ..utils.validators import ValidationReport, validate_matrix_series


logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def upper_triangle_labels(n: int, prefix: str = 'H') -> list:
    """上三角（含对角）列名：H11, H12, ..., Hnn（行优先）"""
    return [f"{prefix}{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]


@dataclass(frozen=True, eq=False)
class TargetHamiltonian:
    """
    网格上采样的实对称含时哈密顿量

    Attributes:
        times: 严格递增的时间节点 t_0 < ... < t_K（单位见 unit）
        matrices: 形状 (K+1, n, n) 的实矩阵
        unit: 单位标签（au / mhz / rad_ns），同时决定能量与时间单位
    """
    times: np.ndarray
    matrices: np.ndarray
    unit: str = 'au'
    interpolation: str = 'linear'
    n: int = field(init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        matrices = np.asarray(self.matrices, dtype=float)

        if times.ndim != 1 or times.size < 2:
            raise DataFormatError(f"时间网格至少需要 2 个节点，实际形状 {times.shape}")
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise DataFormatError(f"矩阵序列形状必须为 (K+1, n, n)，实际 {matrices.shape}")
        if matrices.shape[0] != times.size:
            raise DataFormatError(
                f"矩阵数量 {matrices.shape[0]} 与时间节点数 {times.size} 不一致"
            )
        if matrices.shape[1] < 2:
            raise DataFormatError("维度 n 必须 ≥ 2（协议需要非对角耦合）")
        if self.interpolation != 'linear':
            raise DataFormatError(f"不支持的插值方式: {self.interpolation}")

        object.__setattr__(self, 'unit', units.normalize_unit(self.unit))
        object.__setattr__(self, 'times', _frozen(times))
        object.__setattr__(self, 'matrices', _frozen(matrices))
        object.__setattr__(self, 'n', int(matrices.shape[1]))

    # ------------------------------------------------------------------ 采样

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _locate(self, t: np.ndarray):
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            bad = t[(t < self.times[0]) | (t > self.times[-1]) | ~np.isfinite(t)]
            raise TimeRangeError(
                f"时间 {bad.ravel()[0]!r} 超出网格范围 [{self.t_start}, {self.t_end}]"
            )
        k = np.clip(np.searchsorted(self.times, t, side='right') - 1, 0, self.times.size - 2)
        t0 = self.times[k]
        t1 = self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        return k, w

    def sample(self, t: float) -> np.ndarray:
        """
        逐元素分段线性插值

        节点处精确返回存储矩阵；结果对称。

        Raises:
            TimeRangeError: t 超出 [t_0, t_K]
        """
        k, w = self._locate(np.asarray(t, dtype=float))
        k = int(k)
        w = float(w)
        return (1.0 - w) * self.matrices[k] + w * self.matrices[k + 1]

    def sample_many(self, ts: Sequence[float]) -> np.ndarray:
        """批量采样，返回形状 (len(ts), n, n)"""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        k, w = self._locate(ts)
        w = w[:, None, None]
        return (1.0 - w) * self.matrices[k] + w * self.matrices[k + 1]

    def derivative(self) -> np.ndarray:
        """
        节点处的有限差分 dH/dt（形状 (K+1, n, n)，单位 能量/时间）

        粗网格会削弱速率约束检查的意义。
        """
        if self.times.size < 3:
            return np.repeat(
                ((self.matrices[1] - self.matrices[0]) / (self.times[1] - self.times[0]))[None],
                2, axis=0
            )
        return np.gradient(self.matrices, self.times, axis=0)

    # ------------------------------------------------------------------ 变换

    def refine(self, new_times: Sequence[float]) -> 'TargetHamiltonian':
        """在新网格上重新采样（新网格须落在原网格范围内）"""
        new_times = np.asarray(new_times, dtype=float)
        return TargetHamiltonian(new_times, self.sample_many(new_times), self.unit)

    def converted(self, unit: str) -> 'TargetHamiltonian':
        """换算到另一单位标签"""
        unit = units.normalize_unit(unit)
        if unit == self.unit:
            return self
        return TargetHamiltonian(
            units.convert_time(self.times, self.unit, unit),
            units.convert_energy(self.matrices, self.unit, unit),
            unit,
        )

    def to_canonical(self) -> 'TargetHamiltonian':
        """换算到规范单位（rad/ns, ns）"""
        return self.converted(units.CANONICAL_UNIT)

    def scaled(self, s: float) -> 'TargetHamiltonian':
        """能量整体缩放 s·H（时间网格不变）"""
        return TargetHamiltonian(self.times, s * self.matrices, self.unit)

    # ------------------------------------------------------------------ 序列化

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'unit': self.unit,
            'times': self.times.tolist(),
            'matrices': self.matrices.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, path: str = None) -> 'TargetHamiltonian':
        try:
            h = cls(data['times'], data['matrices'], data.get('unit', 'au'))
        except KeyError as e:
            raise DataFormatError(f"缺少字段: {e.args[0]}", path=path)
        if 'n' in data and int(data['n']) != h.n:
            raise DataFormatError(f"n={data['n']} 与矩阵维度 {h.n} 不一致", path=path)
        return h

    def to_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict()), encoding='utf-8')
        return path

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> 'TargetHamiltonian':
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"文件不存在: {path}")
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
        return cls.from_dict(data, path=str(path))

    def to_frame(self) -> pd.DataFrame:
        """网格数据表：t, H11, H12, ...（上三角）"""
        iu = np.triu_indices(self.n)
        frame = pd.DataFrame(self.matrices[:, iu[0], iu[1]], columns=upper_triangle_labels(self.n))
        frame.insert(0, 't', self.times)
        return frame

    @classmethod
    def from_csv(cls, path: Union[str, Path], unit: str = 'au') -> 'TargetHamiltonian':
        """
        从 CSV 读取（表头 t,H11,H12,...，上三角，自动对称补全）

        Raises:
            DataFormatError: 缺列或含非数值行（报告文件行号）
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"文件不存在: {path}")
        frame = pd.read_csv(path, dtype=str, comment='#')
        frame.columns = frame.columns.str.strip()

        n_upper = len(frame.columns) - 1
        n = int(round((np.sqrt(8 * n_upper + 1) - 1) / 2))
        expected = ['t'] + upper_triangle_labels(n)
        missing = [c for c in expected if c not in frame.columns]
        if missing or n * (n + 1) // 2 != n_upper:
            raise DataFormatError(f"表头缺少列: {missing or expected}", line=1, path=str(path))

        values = frame[expected].apply(pd.to_numeric, errors='coerce')
        bad_rows = np.flatnonzero(values.isna().any(axis=1).to_numpy())
        if bad_rows.size:
            raise DataFormatError("存在非数值或缺失字段", line=int(bad_rows[0]) + 2, path=str(path))

        data = values.to_numpy(dtype=float)
        iu = np.triu_indices(n)
        matrices = np.zeros((len(data), n, n))
        matrices[:, iu[0], iu[1]] = data[:, 1:]
        matrices[:, iu[1], iu[0]] = data[:, 1:]
        return cls(data[:, 0], matrices, unit)


@dataclass(frozen=True, eq=False)
class EnergyProfile:
    """
    模拟能量

    energies 形状 (..., n)；e_max 形状 (...)；delta = e_max − energies ≥ 0，
    每个时刻至少一个分量恰为 0。
    """
    energies: np.ndarray
    e_max: np.ndarray
    delta: np.ndarray


def _energies_of(matrices: np.ndarray, alpha: float) -> EnergyProfile:
    n = matrices.shape[-1]
    diagonal = np.diagonal(matrices, axis1=-2, axis2=-1)
    off_sum = (matrices * (1.0 - np.eye(n))).sum(axis=-1)
    energies = diagonal + alpha * off_sum
    e_max = energies.max(axis=-1)
    delta = e_max[..., None] - energies
    return EnergyProfile(energies, e_max, delta)


def simulated_energies(h: TargetHamiltonian, alpha: float, t: float) -> EnergyProfile:
    """
    时刻 t 的模拟能量 E_i = H_ii + α·Σ_{j≠i} H_ij，E_max 与 ΔE_i

    Args:
        h: 目标哈密顿量
        alpha: 耦合张量导出的 α
        t: 时间（h 的单位）

    Returns:
        EnergyProfile（标量时刻切片）
    """
    if not np.isfinite(alpha):
        raise ValueError(f"α 必须有限: {alpha}")
    return _energies_of(h.sample(t), float(alpha))


def energy_profile(h: TargetHamiltonian, alpha: float) -> EnergyProfile:
    """整个网格上的模拟能量（形状 (K+1, n)）"""
    if not np.isfinite(alpha):
        raise ValueError(f"α 必须有限: {alpha}")
    return _energies_of(h.matrices, float(alpha))


def check_resolution(h: TargetHamiltonian, max_relative_step: float = 0.1) -> ValidationReport:
    """
    网格分辨率检查：相邻节点间 |dH/dt|·Δt 相对 max|H| 超过 max_relative_step 时给出警告

    只写入 warnings，不影响有效性；粗网格会削弱速率约束检查。
    """
    report = ValidationReport()
    scale = float(np.max(np.abs(h.matrices)))
    if h.times.size < 2 or scale == 0.0:
        return report
    slope = np.abs(h.derivative()).max(axis=(1, 2))
    dt = np.diff(h.times)
    local = np.maximum(np.append(dt, dt[-1]), np.insert(dt, 0, dt[0]))
    relative = slope * local / scale
    k = int(np.argmax(relative))
    if relative[k] > max_relative_step:
        report.warnings.append(
            f"网格偏粗: 节点 {k} 处相邻步长内 H 变化达 max|H| 的 {relative[k]:.3g} 倍"
        )
    return report


def validate(h: TargetHamiltonian) -> ValidationReport:
    """
    报告式验证：网格严格递增、元素有限、逐节点精确对称；通过时附带网格分辨率警告

    Returns:
        ValidationReport，violations 为空表示有效
    """
    report = validate_matrix_series(h.times, h.matrices)
    if report.is_valid():
        report.extend(check_resolution(h))
        logger.debug(f"哈密顿量验证通过: n={h.n}, 节点数={h.times.size}")
    else:
        logger.warning(f"哈密顿量验证发现 {len(report.violations)} 个问题")
    return report


def stack_constant(matrix: np.ndarray, times: Sequence[float], unit: str = 'au') -> TargetHamiltonian:
    """常矩阵在给定网格上的 TargetHamiltonian"""
    times = np.asarray(times, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    return TargetHamiltonian(times, np.broadcast_to(matrix, (times.size,) + matrix.shape), unit)
