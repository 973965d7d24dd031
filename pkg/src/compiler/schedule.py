"""
控制时间表编译

流程：幅度包络 → ×安全裕度 → 网格细化（限制单区段硬件时长）→ 速率约束 → 积分 t_qc，
然后按映射 g_ij = H^ij/λ、ε_i = ε_max − ΔE_i/λ、c = E_max − λ·ε_max 生成控制参数。
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from .envelope import LambdaProfile, envelope_profile, envelope_values
from .rates import DEFAULT_MAX_PASSES, DEFAULT_RATE_HEADROOM, enforce_rate_limits
from ..circuit.constraints import HardwareConstraints
from ..circuit.tensor import CouplingTensor, alpha as tensor_alpha
from ..hamiltonian import units
from ..hamiltonian.target import TargetHamiltonian, energy_profile
from ..utils.exceptions import ConfigurationError, DataFormatError, DomainError, TimeRangeError
from ..utils.validators import DataValidator, ValidationReport


logger = logging.getLogger(__name__)

SCHEDULE_FORMAT = 'sesim-schedule'
SIGN_CORRECTED = 'corrected'
SIGN_AS_PRINTED = 'as_printed'


@dataclass(frozen=True)
class CompileOptions:
    """
    编译选项

    Attributes:
        margin: 安全裕度 m ≥ 1，乘在幅度包络上
        lambda_floor: λ 下限；None 时自动选取
        floor_fraction: 自动下限 = floor_fraction × max(包络)
        duration_budget_ns: 包络处处为 0 时，下限 = 预算 / 模拟时长
        max_hw_step_ns: 单区段最大硬件时长（None 表示不细化）
        max_refine_passes: 细化迭代上限
        max_nodes: 细化后节点数上限
        sign: 'corrected'（ε = ε_max − ΔE/λ）或 'as_printed'（ε = ε_max + ΔE/λ，仅用于审计）
        rate_headroom: θ，速率上限中留给 λ 变化附加项的份额，0 < θ < 1
        max_rate_passes: 速率约束放大轮数上限
        t_qc_start: t_qc(t_i) 的取值 (ns)
    """
    margin: float = 1.0
    lambda_floor: Optional[float] = None
    floor_fraction: float = 1e-3
    duration_budget_ns: float = 1000.0
    max_hw_step_ns: Optional[float] = 0.05
    max_refine_passes: int = 40
    max_nodes: int = 200_000
    sign: str = SIGN_CORRECTED
    rate_headroom: float = DEFAULT_RATE_HEADROOM
    max_rate_passes: int = DEFAULT_MAX_PASSES
    t_qc_start: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.margin) and self.margin >= 1.0):
            raise ConfigurationError(f"安全裕度必须 ≥ 1，实际 {self.margin}")
        if self.lambda_floor is not None and not self.lambda_floor > 0:
            raise ConfigurationError(f"lambda_floor 必须为正，实际 {self.lambda_floor}")
        if not 0 < self.floor_fraction <= 1:
            raise ConfigurationError(f"floor_fraction 必须在 (0, 1]，实际 {self.floor_fraction}")
        if not self.duration_budget_ns > 0:
            raise ConfigurationError("duration_budget_ns 必须为正")
        if self.max_hw_step_ns is not None and not self.max_hw_step_ns > 0:
            raise ConfigurationError(f"max_hw_step_ns 必须为正，实际 {self.max_hw_step_ns}")
        if self.sign not in (SIGN_CORRECTED, SIGN_AS_PRINTED):
            raise ConfigurationError(f"未知的 ε 映射符号: {self.sign}")
        if not 0.0 < self.rate_headroom < 1.0:
            raise ConfigurationError(f"rate_headroom 必须在 (0, 1) 内，实际 {self.rate_headroom}")
        if self.max_rate_passes < 1 or self.max_refine_passes < 1 or self.max_nodes < 2:
            raise ConfigurationError("迭代上限与节点上限必须为正")

    @property
    def sign_value(self) -> float:
        return -1.0 if self.sign == SIGN_CORRECTED else 1.0


# ====================================================================== t_qc 映射

@dataclass(frozen=True, eq=False)
class TqcMap:
    """
    单调映射 t → t_qc

    λ 在区段内按 t 线性变化，t_qc 为其精确积分（节点处与梯形累积一致，区段内为二次函数）。

    Attributes:
        times: 模拟时间节点（time_unit 单位）
        t_ns: 同一节点换算到 ns
        t_qc: 硬件时间 (ns)
        lam: λ 节点值
    """
    times: np.ndarray
    t_ns: np.ndarray
    t_qc: np.ndarray
    lam: np.ndarray

    def _segment(self, grid: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(grid, x, side='right') - 1, 0, grid.size - 2)

    def __call__(self, t):
        """t（time_unit 单位）→ t_qc (ns)"""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise TimeRangeError(f"时间超出映射范围 [{self.times[0]}, {self.times[-1]}]")
        k = self._segment(self.times, t)
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        h = self.t_ns[k + 1] - self.t_ns[k]
        lam0, lam1 = self.lam[k], self.lam[k + 1]
        out = self.t_qc[k] + h * (lam0 * s + 0.5 * (lam1 - lam0) * s * s)
        return out if out.ndim else float(out)

    def locate(self, t_qc: float) -> Tuple[int, float]:
        """
        t_qc 所在区段 k 与区段内模拟时间分数 s ∈ [0, 1]

        Raises:
            TimeRangeError: t_qc 超出映射范围（允许 1e-12 相对误差）
        """
        lo, hi = self.t_qc[0], self.t_qc[-1]
        tol = 1e-12 * max(abs(lo), abs(hi), 1.0)
        if t_qc < lo - tol or t_qc > hi + tol:
            raise TimeRangeError(f"硬件时间 {t_qc} 超出范围 [{lo}, {hi}]")
        t_qc = min(max(t_qc, lo), hi)
        k = int(self._segment(self.t_qc, np.asarray(t_qc)))
        h = self.t_ns[k + 1] - self.t_ns[k]
        lam0, lam1 = self.lam[k], self.lam[k + 1]
        delta = t_qc - self.t_qc[k]
        b = lam0 * h
        a = 0.5 * (lam1 - lam0) * h
        disc = max(b * b + 4.0 * a * delta, 0.0)
        s = 2.0 * delta / (b + math.sqrt(disc))
        return k, min(max(s, 0.0), 1.0)

    def inverse(self, t_qc: float) -> float:
        """t_qc (ns) → t（time_unit 单位）"""
        k, s = self.locate(float(t_qc))
        return float(self.times[k] + s * (self.times[k + 1] - self.times[k]))

    @property
    def hardware_time(self) -> float:
        """总硬件时长 t_qc(t_K) − t_qc(t_0)"""
        return float(self.t_qc[-1] - self.t_qc[0])


def integrate_tqc(
    profile: LambdaProfile,
    t_i: Optional[float] = None,
    t_qc_start: float = 0.0
) -> TqcMap:
    """
    梯形累积积分 t_qc(t) = t_qc_start + ∫_{t_i}^{t} λ dt

    Args:
        profile: λ(t)
        t_i: 起点（默认网格首节点）
        t_qc_start: t_qc(t_i) (ns)

    Raises:
        DomainError: λ 非正或非有限
    """
    lam = profile.values
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        k = int(np.flatnonzero(~(lam > 0) | ~np.isfinite(lam))[0])
        raise DomainError(f"λ 在节点 {k} 处非正: {lam[k]}")
    if not DataValidator.is_strictly_increasing(profile.times):
        raise DomainError("λ 时间网格非严格递增")

    t_ns = units.convert_time(profile.times, profile.time_unit)
    t_ns = np.asarray(t_ns, dtype=float)
    t_qc = cumulative_trapezoid(lam, t_ns, initial=0.0)
    tqc_map = TqcMap(profile.times, t_ns, t_qc, lam)

    if t_i is None or t_i == profile.times[0]:
        offset = t_qc_start
    else:
        offset = t_qc_start - tqc_map(t_i)
    if offset != 0.0:
        tqc_map = TqcMap(profile.times, t_ns, t_qc + offset, lam)

    if not DataValidator.is_strictly_increasing(tqc_map.t_qc):
        raise DomainError("t_qc 映射非严格递增（λ·Δt 下溢）")
    return tqc_map


# ====================================================================== 控制时间表

@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """
    编译后的控制时间表

    ε、g、c 以规范单位（rad/ns）存储；导出 CSV 时 ε、g 换算为 MHz·h，
    c 换算回源哈密顿量的能量单位。

    Attributes:
        times: 模拟时间节点（time_unit 单位）
        time_unit: 源哈密顿量的单位标签
        t_qc: 硬件时间 (ns)
        lam: λ(t_k)
        c: 附加能量平移 c(t_k) (rad/ns)
        eps: ε_i(t_qc,k)，形状 (K+1, n)
        g: g_ij(t_qc,k)，形状 (K+1, n, n)，对称且对角为 0
        constraints: 编译使用的硬件约束（原单位）
        binding: 每个节点的约束来源标签
    """
    times: np.ndarray
    time_unit: str
    t_qc: np.ndarray
    lam: np.ndarray
    c: np.ndarray
    eps: np.ndarray
    g: np.ndarray
    constraints: HardwareConstraints
    binding: Tuple[str, ...]
    margin: float = 1.0
    sign: str = SIGN_CORRECTED
    envelope: Optional[np.ndarray] = None
    tensor_name: str = 'custom'
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ('times', 't_qc', 'lam', 'c', 'eps', 'g'):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if self.envelope is not None:
            object.__setattr__(self, 'envelope', np.array(self.envelope, dtype=float))
        object.__setattr__(self, 'binding', tuple(self.binding))
        object.__setattr__(self, 'time_unit', units.normalize_unit(self.time_unit))

        size = self.times.size
        n = self.eps.shape[1] if self.eps.ndim == 2 else -1
        shapes_ok = (
            n >= 1 and self.eps.shape[0] == size and self.g.shape == (size, n, n)
            and self.t_qc.shape == (size,) and self.lam.shape == (size,)
            and self.c.shape == (size,) and len(self.binding) == size
        )
        if not shapes_ok:
            raise DataFormatError("控制时间表数组形状不一致")

    @property
    def n(self) -> int:
        return int(self.eps.shape[1])

    @property
    def eps_max_canonical(self) -> float:
        return self.constraints.to_canonical().eps_max

    @property
    def t_ns(self) -> np.ndarray:
        return np.asarray(units.convert_time(self.times, self.time_unit), dtype=float)

    @property
    def tqc_map(self) -> TqcMap:
        return TqcMap(self.times, self.t_ns, self.t_qc, self.lam)

    @property
    def hardware_time(self) -> float:
        return float(self.t_qc[-1] - self.t_qc[0])

    @property
    def profile(self) -> LambdaProfile:
        return LambdaProfile(self.times, self.lam, self.binding, self.margin,
                             self.time_unit, self.envelope)

    def node_controls(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """第 k 个节点的 (ε, g)（规范单位）"""
        if not 0 <= k < self.times.size:
            raise IndexError(f"节点索引 {k} 超出范围 [0, {self.times.size})")
        return self.eps[k], self.g[k]

    def controls_at(self, t_qc: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        任意硬件时刻的 (ε, g)

        区段内 λ、λ·g 与 λ·(ε − ε_max) 均按模拟时间线性变化，
        因此 λ(t)·H_n(t_qc(t)) 与插值后的 H_s(t) 只差单位阵倍数。
        """
        k, s = self.tqc_map.locate(float(t_qc))
        lam0, lam1 = self.lam[k], self.lam[k + 1]
        lam_s = lam0 + (lam1 - lam0) * s
        eps_max = self.eps_max_canonical
        g = ((1.0 - s) * lam0 * self.g[k] + s * lam1 * self.g[k + 1]) / lam_s
        shift = ((1.0 - s) * lam0 * (self.eps[k] - eps_max)
                 + s * lam1 * (self.eps[k + 1] - eps_max)) / lam_s
        return eps_max + shift, g

    # ------------------------------------------------------------------ 导出

    def to_frame(self) -> pd.DataFrame:
        """
        CSV 表：t（源时间单位）, t_qc (ns), lambda, c（源能量单位）, eps_i, g_ij (MHz·h)
        """
        to_mhz = 1.0 / units.MHZ_RAD_PER_NS
        frame = pd.DataFrame({
            't': self.times,
            't_qc': self.t_qc,
            'lambda': self.lam,
            'c': units.convert_energy(self.c, units.CANONICAL_UNIT, self.time_unit),
        })
        for i in range(self.n):
            frame[f"eps_{i + 1}"] = self.eps[:, i] * to_mhz
        for i, j in zip(*np.triu_indices(self.n, k=1)):
            frame[f"g_{i + 1}{j + 1}"] = self.g[:, i, j] * to_mhz
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {
            'format': SCHEDULE_FORMAT,
            'version': 1,
            'n': self.n,
            'time_unit': self.time_unit,
            'energy_unit': units.CANONICAL_UNIT,
            'times': self.times.tolist(),
            't_qc': self.t_qc.tolist(),
            'lambda': self.lam.tolist(),
            'c': self.c.tolist(),
            'eps': self.eps.tolist(),
            'g': self.g.tolist(),
            'constraints': self.constraints.to_dict(),
            'binding': list(self.binding),
            'margin': self.margin,
            'sign': self.sign,
            'envelope': None if self.envelope is None else self.envelope.tolist(),
            'tensor': self.tensor_name,
            'metadata': self.metadata,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], path: Optional[str] = None) -> 'ControlSchedule':
        if data.get('format') != SCHEDULE_FORMAT:
            raise DataFormatError(f"不是控制时间表文件（format={data.get('format')!r}）", path=path)
        try:
            return cls(
                times=data['times'],
                time_unit=data['time_unit'],
                t_qc=data['t_qc'],
                lam=data['lambda'],
                c=data['c'],
                eps=data['eps'],
                g=data['g'],
                constraints=HardwareConstraints.from_dict(data['constraints']),
                binding=data['binding'],
                margin=float(data.get('margin', 1.0)),
                sign=data.get('sign', SIGN_CORRECTED),
                envelope=data.get('envelope'),
                tensor_name=data.get('tensor', 'custom'),
                metadata=data.get('metadata') or {},
            )
        except KeyError as e:
            raise DataFormatError(f"缺少字段: {e.args[0]}", path=path)


def write_schedule(schedule: ControlSchedule, out_dir: Union[str, Path],
                   table_handler=None) -> Dict[str, Path]:
    """
    写出 schedule.csv 与 schedule.json

    Args:
        schedule: 控制时间表
        out_dir: 输出目录
        table_handler: TableHandler（可选，默认 CSV）

    Returns:
        {'csv': 路径, 'json': 路径}
    """
    from ..utils.table_handler import TableHandler

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = table_handler or TableHandler()
    csv_path = handler.write_table(schedule.to_frame(), out_dir / 'schedule.csv', sheet_name='schedule')
    json_path = out_dir / 'schedule.json'
    json_path.write_text(json.dumps(schedule.to_dict(), sort_keys=True), encoding='utf-8')
    logger.info(f"写入控制时间表: {json_path}")
    return {'csv': csv_path, 'json': json_path}


def load_schedule(path: Union[str, Path]) -> ControlSchedule:
    """
    读取 schedule.json

    Raises:
        FileNotFoundError: 文件不存在
        DataFormatError: 格式错误
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"文件不存在: {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
    return ControlSchedule.from_dict(data, path=str(path))


# ====================================================================== 编译

def _auto_floor(h: TargetHamiltonian, constraints: HardwareConstraints,
                alpha: float, opts: CompileOptions) -> float:
    if opts.lambda_floor is not None:
        return float(opts.lambda_floor)
    env, _ = envelope_values(h, constraints, alpha)
    peak = float(np.max(env))
    if peak > 0:
        return opts.floor_fraction * peak
    duration_ns = float(units.convert_time(h.t_end - h.t_start, h.unit))
    return opts.duration_budget_ns / duration_ns


def step_extents(profile: LambdaProfile) -> np.ndarray:
    """每个区段的硬件时长 0.5·(λ_k + λ_{k+1})·Δt (ns)"""
    t_ns = np.asarray(units.convert_time(profile.times, profile.time_unit), dtype=float)
    return 0.5 * (profile.values[1:] + profile.values[:-1]) * np.diff(t_ns)


def _lifted_profile(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float,
    opts: CompileOptions,
    floor: float,
    base: Optional[LambdaProfile]
) -> LambdaProfile:
    # λ0 = max(包络, 下限, base 的线性插值)；插值胜出处沿用 base 左端节点的标签
    profile = envelope_profile(h, constraints, alpha, opts.margin, floor)
    if base is None:
        return profile
    lifted = np.interp(h.times, base.times, base.values)
    wins = lifted > profile.values
    if not wins.any():
        return profile
    left = np.clip(np.searchsorted(base.times, h.times, side='right') - 1, 0, base.times.size - 1)
    binding = [base.binding[j] if w else tag for w, j, tag in zip(wins, left, profile.binding)]
    return profile.with_values(np.where(wins, lifted, profile.values), binding)


def refine_for_hardware_step(
    h: TargetHamiltonian,
    constraints: HardwareConstraints,
    alpha: float,
    opts: CompileOptions,
    floor: float,
    base: Optional[LambdaProfile] = None
) -> Tuple[TargetHamiltonian, LambdaProfile]:
    """
    细化模拟时间网格，使每个区段的硬件时长不超过 max_hw_step_ns

    新节点处的 H 由原网格线性插值得到，目标函数本身不变。给出 base（例如速率约束放大后的 λ）时，
    从 base 的网格出发，λ 取包络与 base 线性插值中较大者。
    """
    current = h if base is None or np.array_equal(base.times, h.times) else h.refine(base.times)
    profile = _lifted_profile(current, constraints, alpha, opts, floor, base)
    if opts.max_hw_step_ns is None:
        return current, profile

    for n_pass in range(opts.max_refine_passes):
        parts = np.ceil(step_extents(profile) / opts.max_hw_step_ns).astype(np.int64)
        if np.all(parts <= 1):
            logger.debug(f"网格细化完成: {n_pass} 轮，{current.times.size} 个节点")
            return current, profile

        total = int(np.maximum(parts, 1).sum()) + 1
        if total > opts.max_nodes:
            raise ConfigurationError(
                f"细化后节点数 {total} 超过上限 {opts.max_nodes}，请增大 max_hw_step_ns"
            )

        pieces = [current.times[:1]]
        for k, m in enumerate(parts):
            t0, t1 = current.times[k], current.times[k + 1]
            if m > 1:
                inner = t0 + (t1 - t0) * (np.arange(1, m) / m)
                pieces.append(inner)
            pieces.append(current.times[k + 1:k + 2])
        new_times = np.concatenate(pieces)
        current = h.refine(new_times)
        profile = _lifted_profile(current, constraints, alpha, opts, floor, base)

    logger.warning(f"网格细化在 {opts.max_refine_passes} 轮内未满足硬件步长 {opts.max_hw_step_ns} ns")
    return current, profile


def compile_controls(
    h: TargetHamiltonian,
    tensor: CouplingTensor,
    constraints: HardwareConstraints,
    opts: Optional[CompileOptions] = None
) -> ControlSchedule:
    """
    把目标哈密顿量编译为控制时间表

    速率约束放大 λ 后重新检查硬件步长，必要时在放大后的 λ 上继续细化并再次施加速率约束。

    Args:
        h: 目标哈密顿量
        tensor: 耦合张量（决定 α）
        constraints: 硬件约束
        opts: 编译选项

    Returns:
        ControlSchedule

    Raises:
        InfeasibleScheduleError: 速率约束无法满足
        UnitError: 单位标签未知
    """
    opts = opts or CompileOptions()
    alpha = tensor_alpha(tensor)

    floor = _auto_floor(h, constraints, alpha, opts)
    profile: Optional[LambdaProfile] = None
    for n_pass in range(opts.max_refine_passes):
        h_ref, profile = refine_for_hardware_step(h, constraints, alpha, opts, floor, base=profile)
        profile = enforce_rate_limits(
            profile, h_ref, constraints, alpha,
            sign=opts.sign_value, margin=opts.margin,
            headroom=opts.rate_headroom, max_passes=opts.max_rate_passes,
        )
        if opts.max_hw_step_ns is None:
            break
        worst = float(step_extents(profile).max())
        if worst <= opts.max_hw_step_ns * (1.0 + 1e-9):
            break
        logger.debug(f"速率约束后区段硬件时长 {worst:.4g} ns 超过步长，第 {n_pass + 1} 次重新细化")
    else:
        logger.warning(f"速率约束与网格细化在 {opts.max_refine_passes} 轮内未满足硬件步长 "
                       f"{opts.max_hw_step_ns} ns")
    tqc_map = integrate_tqc(profile, t_qc_start=opts.t_qc_start)

    h_c = h_ref.to_canonical()
    c_c = constraints.to_canonical()
    lam = profile.values
    energies = energy_profile(h_c, alpha)

    g = h_c.matrices / lam[:, None, None]
    idx = np.arange(h.n)
    g[:, idx, idx] = 0.0
    eps = c_c.eps_max + opts.sign_value * energies.delta / lam[:, None]
    c = energies.e_max - lam * c_c.eps_max

    schedule = ControlSchedule(
        times=h_ref.times,
        time_unit=h.unit,
        t_qc=tqc_map.t_qc,
        lam=lam,
        c=c,
        eps=eps,
        g=g,
        constraints=constraints,
        binding=profile.binding,
        margin=opts.margin,
        sign=opts.sign,
        envelope=profile.envelope,
        tensor_name=tensor.name,
        metadata={'alpha': alpha, 'lambda_floor': floor, 'options': asdict(opts)},
    )

    logger.info(
        f"编译完成: n={h.n}, 节点 {h.times.size}→{h_ref.times.size}, "
        f"λ ∈ [{lam.min():.4g}, {lam.max():.4g}], 硬件时长 {schedule.hardware_time:.4g} ns"
    )

    report = audit_schedule(schedule)
    if not report.is_valid():
        for issue in report.violations:
            logger.warning(f"控制时间表审计: {issue.message}")
    return schedule


# ====================================================================== 审计

def audit_schedule(
    schedule: ControlSchedule,
    slack: float = 1e-12,
    rate_slack: float = 1e-9
) -> ValidationReport:
    """
    重新检查控制时间表的全部不变量

    窗口 |g| ≤ g_max、ε_min ≤ ε ≤ ε_max（相对余量 slack），离散速率 ≤ v·m（相对余量 rate_slack），
    λ > 0，t_qc 严格递增，全部元素有限。

    Returns:
        ValidationReport
    """
    report = ValidationReport()
    c_c = schedule.constraints.to_canonical()

    arrays = (schedule.t_qc, schedule.lam, schedule.c, schedule.eps, schedule.g)
    if not all(DataValidator.is_finite(a) for a in arrays):
        report.add('non_finite', "控制时间表含非有限值")
        return report

    bad = np.flatnonzero(schedule.lam <= 0)
    if bad.size:
        report.add('lambda_not_positive', f"λ 在 {bad.size} 个节点非正（首个节点 {bad[0]}）",
                   node=int(bad[0]))

    k = DataValidator.first_non_increasing(schedule.t_qc)
    if k is not None:
        report.add('tqc_not_increasing', f"t_qc 在节点 {k} 处不严格递增", node=k)

    g_abs = np.abs(schedule.g).max(axis=(1, 2)) if schedule.n > 1 else np.zeros(schedule.times.size)
    bad = np.flatnonzero(g_abs > c_c.g_max * (1.0 + slack))
    if bad.size:
        report.add('g_window', f"|g| 超过 g_max 的节点 {bad.size} 个（首个节点 {bad[0]}）",
                   node=int(bad[0]))

    high = schedule.eps.max(axis=1) > c_c.eps_max * (1.0 + slack)
    low = schedule.eps.min(axis=1) < c_c.eps_min * (1.0 - slack)
    bad = np.flatnonzero(high | low)
    if bad.size:
        side = "超过 ε_max" if high[bad[0]] else "低于 ε_min"
        report.add('eps_window', f"ε 越界的节点 {bad.size} 个（首个节点 {bad[0]}，{side}）",
                   node=int(bad[0]))

    m = schedule.margin
    if k is None and schedule.times.size > 1:
        dtq = np.diff(schedule.t_qc)
        if schedule.n > 1 and np.isfinite(c_c.v_g_max):
            iu = np.triu_indices(schedule.n, k=1)
            rates = np.abs(np.diff(schedule.g[:, iu[0], iu[1]], axis=0)).max(axis=1) / dtq
            bad = np.flatnonzero(rates > c_c.v_g_max * m * (1.0 + rate_slack))
            if bad.size:
                report.add('slew_g', f"g 变化速率超限的区段 {bad.size} 个（首个区段 {bad[0]}）",
                           node=int(bad[0]))
        if np.isfinite(c_c.v_eps_max):
            rates = np.abs(np.diff(schedule.eps, axis=0)).max(axis=1) / dtq
            bad = np.flatnonzero(rates > c_c.v_eps_max * m * (1.0 + rate_slack))
            if bad.size:
                report.add('slew_eps', f"ε 变化速率超限的区段 {bad.size} 个（首个区段 {bad[0]}）",
                           node=int(bad[0]))

    return report


def accumulated_phase(schedule: ControlSchedule) -> np.ndarray:
    """累积相位 φ(t) = ∫ c dt（rad），U(t) = e^{iφ(t)}·U_n(t_qc(t))"""
    return cumulative_trapezoid(schedule.c, schedule.t_ns, initial=0.0)


def round_trip_residuals(schedule: ControlSchedule, h: TargetHamiltonian) -> Dict[str, float]:
    """
    映射反演残差：max|λ·g_ij − H^ij| 与 max|E_i − c − λ·ε_i|（逐元素 / 逐节点相对误差）

    Args:
        schedule: 控制时间表
        h: 编译所用的目标哈密顿量（在 schedule 节点上重新采样）
    """
    alpha = float(schedule.metadata.get('alpha', 0.0))
    h_nodes = h.refine(schedule.times).to_canonical()
    lam = schedule.lam
    iu = np.triu_indices(schedule.n, k=1)

    coupling = h_nodes.matrices[:, iu[0], iu[1]]
    rebuilt = lam[:, None] * schedule.g[:, iu[0], iu[1]]
    scale_g = np.where(coupling != 0.0, np.abs(coupling), 1.0)
    err_g = float(np.max(np.abs(rebuilt - coupling) / scale_g, initial=0.0))

    energies = energy_profile(h_nodes, alpha).energies
    lhs = energies - schedule.c[:, None]
    rhs = lam[:, None] * schedule.eps
    # 逐节点量级
    scale_e = np.max(np.abs(rhs), axis=1) + np.max(np.abs(energies), axis=1)
    scale_e = np.where(scale_e > 0.0, scale_e, 1.0)
    err_e = float(np.max(np.max(np.abs(lhs - rhs), axis=1) / scale_e))
    return {'coupling': err_g, 'energy': err_e}
