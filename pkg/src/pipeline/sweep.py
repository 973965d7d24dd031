"""
参数扫描

- g_max 扫描：硬件时长、终态保真度与泄漏随耦合上限的变化，以及保真度提升所需的时间倍数
- 碰撞参数扫描：终态跃迁概率与截面部分和

每个扫描点独立运行完整流水线，线程池并发；单点失败记录后继续，汇总表照常写出。
"""

import json
import logging
import math
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from .runner import RunConfig, build_target, simulate, write_json
from ..circuit.constraints import HardwareConstraints
from ..circuit.tensor import CouplingTensor, load_tensor
from ..collision.channels import load_channels
from ..collision.cross_section import partial_cross_sections
from ..compiler.schedule import compile_controls
from ..database.manager import DatabaseManager
from ..utils.exceptions import ConfigurationError, DataFormatError


logger = logging.getLogger(__name__)

STATUS_OK = 'ok'
STATUS_FAILED = 'failed'
DEFAULT_FIDELITY_LEVELS = (0.999, 0.9999)


def _run_point(run: RunConfig, channels) -> Dict[str, Any]:
    h = build_target(run, channels)
    schedule = compile_controls(h, run.tensor, run.constraints, run.compile)
    report = simulate(h, schedule, run.tensor, run)
    return {
        'hardware_time_ns': report.hardware_time_ns,
        'final_fidelity': report.final_fidelity,
        'final_fidelity_ideal': report.final_fidelity_ideal,
        'final_leakage': report.final_leakage,
        'max_leakage': report.max_leakage,
        'p_exact': report.p_exact[-1],
        'p_sim': report.p_sim[-1],
    }


def run_points(
    parameters: Sequence[float],
    task: Callable[[float], Dict[str, Any]],
    max_workers: int = 1,
    label: str = 'point'
) -> List[Dict[str, Any]]:
    """
    并发执行扫描点，结果按输入顺序返回

    Returns:
        每个点的结果字典（含 index、parameter、status、error）
    """
    results: List[Optional[Dict[str, Any]]] = [None] * len(parameters)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as executor:
        future_to_index = {
            executor.submit(task, value): index
            for index, value in enumerate(parameters)
        }

        for future in as_completed(future_to_index):
            index = future_to_index[future]
            value = parameters[index]
            try:
                result = future.result()
                results[index] = {'index': index, 'parameter': value, 'status': STATUS_OK,
                                  'error': None, **result}
                logger.info(f"扫描点完成: {label}={value}")
            except Exception as e:
                logger.error(f"扫描点失败: {label}={value}, 错误: {e}")
                results[index] = {'index': index, 'parameter': value, 'status': STATUS_FAILED,
                                  'error': f"{type(e).__name__}: {e}"}

    ok = sum(1 for r in results if r['status'] == STATUS_OK)
    logger.info(f"扫描完成: {ok}/{len(parameters)} 个点成功")
    return results


def _frame_columns(points: List[Dict[str, Any]], columns: Sequence[str]) -> Dict[str, list]:
    return {col: [p.get(col, math.nan) if p['status'] == STATUS_OK else math.nan for p in points]
            for col in columns}


def sweep_gmax(run: RunConfig, gmax_values: Sequence[float],
               max_workers: int = 1) -> Tuple[pd.DataFrame, List[Dict[str, Any]]]:
    """
    g_max 扫描

    Returns:
        (汇总表 g_max, hardware_time_ns, final_fidelity, final_fidelity_ideal, final_leakage,
         max_leakage, status, error；原始结果列表)
    """
    if not gmax_values:
        raise ConfigurationError("g_max 扫描列表为空")
    channels = load_channels(run.channels_path, run.channels_format)
    points = run_points(
        [float(v) for v in gmax_values],
        lambda g: _run_point(run.with_gmax(g), channels),
        max_workers,
        label='g_max',
    )
    metrics = ['hardware_time_ns', 'final_fidelity', 'final_fidelity_ideal',
               'final_leakage', 'max_leakage']
    frame = pd.DataFrame({'g_max': [p['parameter'] for p in points]})
    for col, values in _frame_columns(points, metrics).items():
        frame[col] = values
    frame['status'] = [p['status'] for p in points]
    frame['error'] = [p['error'] or '' for p in points]
    return frame, points


def fidelity_time_ratio(
    frame: pd.DataFrame,
    low: float = DEFAULT_FIDELITY_LEVELS[0],
    high: float = DEFAULT_FIDELITY_LEVELS[1]
) -> Optional[float]:
    """
    把终态保真度从 low 提升到 high 所需的硬件时长倍数

    在 (log(1−F), log T) 上线性插值；两个水平未被扫描点覆盖时返回 None。
    """
    if not 0 < low < high < 1:
        raise ConfigurationError(f"保真度水平非法: {low}, {high}")
    ok = frame[(frame['status'] == STATUS_OK) & (frame['final_fidelity'] < 1.0)]
    if len(ok) < 2:
        return None
    x = np.log(1.0 - ok['final_fidelity'].to_numpy(dtype=float))
    y = np.log(ok['hardware_time_ns'].to_numpy(dtype=float))
    order = np.argsort(x)
    x, y = x[order], y[order]
    targets = np.log([1.0 - low, 1.0 - high])
    if np.any(targets < x[0]) or np.any(targets > x[-1]):
        return None
    t_low, t_high = np.exp(np.interp(targets, x, y))
    return float(t_high / t_low)


def sweep_impact(run: RunConfig, b_values: Sequence[float],
                 max_workers: int = 1) -> Tuple[pd.DataFrame, List[Dict[str, Any]]]:
    """
    碰撞参数扫描

    Returns:
        (汇总表 b, P_exact_i, P_sim_i, sigma_exact_i, sigma_sim_i, status, error；原始结果列表)
        截面部分和只在成功的点上累积，失败点为 NaN
    """
    if not b_values:
        raise ConfigurationError("碰撞参数扫描列表为空")
    b_values = [float(b) for b in b_values]
    if any(b < 0 for b in b_values) or np.any(np.diff(b_values) <= 0):
        raise ConfigurationError("碰撞参数网格必须从 b ≥ 0 开始严格递增")
    channels = load_channels(run.channels_path, run.channels_format)
    points = run_points(
        b_values,
        lambda b: _run_point(run.with_impact(b), channels),
        max_workers,
        label='b',
    )

    n = channels.n
    frame = pd.DataFrame({'b': b_values})
    ok = np.array([p['status'] == STATUS_OK for p in points])
    for side in ('exact', 'sim'):
        probs = np.full((len(points), n), math.nan)
        for k, p in enumerate(points):
            if ok[k]:
                probs[k] = np.clip(p[f"p_{side}"], 0.0, 1.0)
        for i in range(n):
            frame[f"P_{side}_{i + 1}"] = probs[:, i]
        sigma = np.full((len(points), n), math.nan)
        if ok.any():
            sigma[ok] = partial_cross_sections(np.asarray(b_values)[ok], probs[ok])
        for i in range(n):
            frame[f"sigma_{side}_{i + 1}"] = sigma[:, i]
    frame['status'] = [p['status'] for p in points]
    frame['error'] = [p['error'] or '' for p in points]
    return frame, points


@dataclass
class SweepOutcome:
    """扫描产物"""
    run_id: str
    gmax: Optional[pd.DataFrame] = None
    impact: Optional[pd.DataFrame] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)

    @property
    def failed_points(self) -> int:
        return sum(int((f['status'] == STATUS_FAILED).sum()) for f in (self.gmax, self.impact)
                   if f is not None)


def run_sweep(
    run: RunConfig,
    gmax_values: Optional[Sequence[float]] = None,
    b_grid: Optional[Sequence[float]] = None,
    max_workers: Optional[int] = None,
    run_id: Optional[str] = None
) -> SweepOutcome:
    """
    执行扫描并写出 gmax_sweep.csv / impact_sweep.csv / sweep_summary.json，
    数据库启用时逐点记录

    Raises:
        ConfigurationError: 两类扫描列表均为空
    """
    if not gmax_values and not b_grid:
        raise ConfigurationError("扫描规格为空：至少需要 g_max 列表或 b 网格")
    workers = max_workers or run.workers or 1
    outcome = SweepOutcome(run_id or uuid.uuid4().hex[:12])
    handler = run.table_handler()
    db = None
    if run.database_path is not None:
        db = DatabaseManager(str(run.database_path), **run.database_options)
        db.create_tables()

    if gmax_values:
        frame, points = sweep_gmax(run, gmax_values, workers)
        outcome.gmax = frame
        low, high = run.sweep.get('fidelity_levels') or DEFAULT_FIDELITY_LEVELS
        outcome.summary['gmax'] = {
            'points': len(frame),
            'failed': int((frame['status'] == STATUS_FAILED).sum()),
            'fidelity_levels': [low, high],
            'fidelity_time_ratio': fidelity_time_ratio(frame, low, high),
        }
        outcome.files['gmax'] = handler.write_table(frame, run.out_dir / 'gmax_sweep.csv', 'gmax')
        if db is not None:
            db.record_points(outcome.run_id, 'gmax', [_record(p) for p in points])

    if b_grid:
        frame, points = sweep_impact(run, b_grid, workers)
        outcome.impact = frame
        last = frame[frame['status'] == 'ok'].tail(1)
        outcome.summary['impact'] = {
            'points': len(frame),
            'failed': int((frame['status'] == STATUS_FAILED).sum()),
            'sigma_exact': last.filter(like='sigma_exact').iloc[0].tolist() if len(last) else None,
            'sigma_sim': last.filter(like='sigma_sim').iloc[0].tolist() if len(last) else None,
        }
        outcome.files['impact'] = handler.write_table(frame, run.out_dir / 'impact_sweep.csv', 'impact')
        if db is not None:
            db.record_points(outcome.run_id, 'impact', [_record(p) for p in points])

    outcome.files['summary'] = write_json(outcome.summary, run.out_dir / 'sweep_summary.json')
    if outcome.failed_points:
        logger.warning(f"扫描中有 {outcome.failed_points} 个点失败，详见汇总表 error 列")
    return outcome


def _record(point: Dict[str, Any]) -> Dict[str, Any]:
    """数据库记录：数组字段转为列表"""
    record = dict(point)
    for key in ('p_exact', 'p_sim'):
        if key in record:
            record[key] = np.asarray(record[key]).tolist()
    return record


# ====================================================================== 扫描规格文件

@dataclass(frozen=True)
class SweepSpec:
    """
    扫描规格（JSON）

    {"b_grid": [...], "gmax_values": [...], "v": 1.0, "t_window": [t_i, t_f],
     "constraints_ref": "constraints.yaml", "tensor_ref": "phase-qubit-default"}

    除 b_grid / gmax_values 至少一项外均可省略，省略时沿用配置文件。
    constraints_ref 指向 YAML/JSON 文件（顶层即约束，或含 constraints 段），也可直接内联映射；
    tensor_ref 为预设名或张量 JSON 路径。相对路径按规格文件所在目录解析。
    """
    b_grid: Optional[Tuple[float, ...]] = None
    gmax_values: Optional[Tuple[float, ...]] = None
    v: Optional[float] = None
    t_window: Optional[Tuple[float, float]] = None
    constraints: Optional[HardwareConstraints] = None
    tensor: Optional[CouplingTensor] = None
    source: Optional[Path] = None

    def apply(self, run: RunConfig) -> RunConfig:
        """把规格中的轨迹、约束与张量覆盖到运行配置上"""
        trajectory = run.trajectory
        if self.v is not None:
            trajectory = replace(trajectory, v=self.v)
        if self.t_window is not None:
            trajectory = replace(trajectory, t_i=self.t_window[0], t_f=self.t_window[1])
        return replace(
            run,
            trajectory=trajectory,
            constraints=self.constraints or run.constraints,
            tensor=self.tensor or run.tensor,
        )


def _float_tuple(data: Dict[str, Any], key: str) -> Optional[Tuple[float, ...]]:
    value = data.get(key)
    if value is None:
        return None
    if not isinstance(value, list):
        raise ConfigurationError(f"扫描规格字段 {key} 必须是数值列表")
    return tuple(float(x) for x in value)


def _load_constraints(ref: Any, base_dir: Path) -> HardwareConstraints:
    if isinstance(ref, dict):
        return HardwareConstraints.from_dict(ref)
    path = Path(ref)
    path = path if path.is_absolute() else base_dir / path
    if not path.exists():
        raise FileNotFoundError(f"约束文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f) if path.suffix == '.json' else yaml.safe_load(f)
    except json.JSONDecodeError as e:
        raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
    except yaml.YAMLError as e:
        raise ConfigurationError(f"约束文件解析失败: {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"约束文件顶层必须是映射: {path}")
    return HardwareConstraints.from_dict(data.get('constraints', data))


def load_sweep_spec(path: Union[str, Path]) -> SweepSpec:
    """
    读取扫描规格 JSON

    Raises:
        FileNotFoundError: 规格、约束或张量文件不存在
        DataFormatError: JSON 解析失败
        ConfigurationError: 字段非法或两类扫描列表均为空
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"扫描规格文件不存在: {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
    if not isinstance(data, dict):
        raise ConfigurationError(f"扫描规格顶层必须是对象: {path}")

    base_dir = path.resolve().parent
    try:
        b_grid = _float_tuple(data, 'b_grid')
        gmax_values = _float_tuple(data, 'gmax_values')
        v = float(data['v']) if data.get('v') is not None else None
        window = data.get('t_window')
        if window is not None:
            if not isinstance(window, list) or len(window) != 2:
                raise ConfigurationError("扫描规格字段 t_window 必须是 [t_i, t_f]")
            window = (float(window[0]), float(window[1]))
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"扫描规格字段非法: {e}")
    if not b_grid and not gmax_values:
        raise ConfigurationError("扫描规格为空：至少需要 g_max 列表或 b 网格")

    constraints = None
    if data.get('constraints_ref') is not None:
        constraints = _load_constraints(data['constraints_ref'], base_dir)
    tensor = None
    ref = data.get('tensor_ref')
    if ref is not None:
        if str(ref).endswith('.json') and not Path(ref).is_absolute():
            ref = str(base_dir / ref)
        tensor = load_tensor(str(ref))

    spec = SweepSpec(b_grid, gmax_values, v, window, constraints, tensor, path)
    logger.info(f"读取扫描规格: {path}（b 网格 {len(b_grid or ())} 点，"
                f"g_max {len(gmax_values or ())} 点）")
    return spec
