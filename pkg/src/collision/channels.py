"""
分子通道数据

透热势能矩阵 V(R)：核间距网格上的实对称 n×n 矩阵，按 R 分段线性插值。
文件格式：
- CSV：首行 `# key=value; ...` 元数据（unit、labels），表头 R,V11,V22,...,V12,V13,...（先对角后上三角）
- JSON：同样内容的镜像
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from ..hamiltonian import units
from ..utils.exceptions import ConfigurationError, DataFormatError, TimeRangeError
from ..utils.validators import DataValidator, ValidationReport, validate_matrix_series


logger = logging.getLogger(__name__)

DEFAULT_COUPLING_TOL = 1e-8
LABEL_SEPARATOR = '|'


def channel_columns(n: int) -> List[str]:
    """V 列名：先对角 V11..Vnn，再上三角 V12, V13, ..."""
    diagonal = [f"V{i + 1}{i + 1}" for i in range(n)]
    upper = [f"V{i + 1}{j + 1}" for i in range(n) for j in range(i + 1, n)]
    return diagonal + upper


def _pair_order(n: int) -> Tuple[np.ndarray, np.ndarray]:
    rows = list(range(n)) + [i for i in range(n) for j in range(i + 1, n)]
    cols = list(range(n)) + [j for i in range(n) for j in range(i + 1, n)]
    return np.array(rows), np.array(cols)


@dataclass(frozen=True, eq=False)
class ChannelData:
    """
    透热通道数据

    Attributes:
        labels: 通道标签
        r: 核间距网格（a.u.，严格递增）
        potentials: V(R)，形状 (M, n, n)
        unit: 能量单位标签（默认 hartree）
        metadata: 其他元数据
    """
    labels: Tuple[str, ...]
    r: np.ndarray
    potentials: np.ndarray
    unit: str = 'au'
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        potentials = np.array(self.potentials, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise DataFormatError(f"R 网格至少需要 2 个节点，实际形状 {r.shape}")
        if potentials.shape[0] != r.size or potentials.ndim != 3 \
                or potentials.shape[1] != potentials.shape[2]:
            raise DataFormatError(f"势能矩阵形状 {potentials.shape} 与 R 网格不一致")
        if len(self.labels) != potentials.shape[1]:
            raise DataFormatError(f"通道标签数 {len(self.labels)} 与维度 {potentials.shape[1]} 不一致")
        r.setflags(write=False)
        potentials.setflags(write=False)
        object.__setattr__(self, 'r', r)
        object.__setattr__(self, 'potentials', potentials)
        object.__setattr__(self, 'labels', tuple(self.labels))
        object.__setattr__(self, 'unit', units.normalize_unit(self.unit))

    @property
    def n(self) -> int:
        return int(self.potentials.shape[1])

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def potential_at(self, r, clamp: bool = False) -> np.ndarray:
        """
        V(R)，按 R 分段线性插值，返回形状 (len(R), n, n)

        Args:
            r: 核间距（标量或数组）
            clamp: R > R_max 时取渐近值 V(R_max)（记录警告）；否则报错

        Raises:
            TimeRangeError: R < R_min，或 R > R_max 且未开启 clamp
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(~np.isfinite(r)) or np.any(r < self.r_min):
            raise TimeRangeError(f"核间距 {r.min()} 低于数据范围下限 {self.r_min}")
        beyond = r > self.r_max
        if np.any(beyond):
            if not clamp:
                raise TimeRangeError(f"核间距 {r.max()} 超出数据范围上限 {self.r_max}")
            logger.warning(f"{int(beyond.sum())} 个点的核间距超出 {self.r_max}，取渐近值")
            r = np.minimum(r, self.r_max)

        k = np.clip(np.searchsorted(self.r, r, side='right') - 1, 0, self.r.size - 2)
        w = ((r - self.r[k]) / (self.r[k + 1] - self.r[k]))[:, None, None]
        return (1.0 - w) * self.potentials[k] + w * self.potentials[k + 1]

    def validate(self, coupling_tol: float = DEFAULT_COUPLING_TOL) -> ValidationReport:
        """
        报告式验证：R 严格递增、元素有限、逐节点对称、R_max 处耦合衰减到 coupling_tol 以下
        """
        report = validate_matrix_series(self.r, self.potentials, grid_name="R 网格")
        tail = self.potentials[-1]
        off = np.abs(tail - np.diag(np.diag(tail)))
        if np.max(off) > coupling_tol:
            i, j = np.unravel_index(int(np.argmax(off)), off.shape)
            report.add(
                'coupling_not_decayed',
                f"R_max={self.r_max} 处耦合 V{i + 1}{j + 1} = {tail[i, j]:.3e} 未衰减到 {coupling_tol:.1e}",
                node=self.r.size - 1,
                index=(int(i), int(j)),
            )
        return report

    # ------------------------------------------------------------------ 序列化

    def to_frame(self) -> pd.DataFrame:
        rows, cols = _pair_order(self.n)
        frame = pd.DataFrame(self.potentials[:, rows, cols], columns=channel_columns(self.n))
        frame.insert(0, 'R', self.r)
        return frame

    def metadata_line(self) -> str:
        items = {'unit': self.unit, 'labels': LABEL_SEPARATOR.join(self.labels)}
        items.update({k: v for k, v in self.metadata.items() if isinstance(v, (str, int, float))})
        return '# ' + '; '.join(f"{k}={v}" for k, v in items.items())

    def to_dict(self) -> Dict[str, Any]:
        rows, cols = _pair_order(self.n)
        return {
            'labels': list(self.labels),
            'unit': self.unit,
            'R': self.r.tolist(),
            'V': {name: self.potentials[:, i, j].tolist()
                  for name, i, j in zip(channel_columns(self.n), rows, cols)},
            'metadata': self.metadata,
        }

    @classmethod
    def from_columns(cls, r: Sequence[float], columns: Dict[str, Sequence[float]],
                     labels: Optional[Sequence[str]], unit: str,
                     metadata: Optional[Dict[str, Any]] = None) -> 'ChannelData':
        """由 R 与 V 列构造（对称补全）"""
        n_cols = len(columns)
        n = int(round((np.sqrt(8 * n_cols + 1) - 1) / 2))
        names = channel_columns(n)
        missing = [c for c in names if c not in columns]
        if missing or n * (n + 1) // 2 != n_cols:
            raise DataFormatError(f"缺少势能列: {missing or names}")
        r = np.asarray(r, dtype=float)
        potentials = np.zeros((r.size, n, n))
        rows, cols = _pair_order(n)
        for name, i, j in zip(names, rows, cols):
            potentials[:, i, j] = columns[name]
            potentials[:, j, i] = columns[name]
        labels = tuple(labels) if labels else tuple(f"channel {i + 1}" for i in range(n))
        return cls(labels, r, potentials, unit, dict(metadata or {}))


def _parse_metadata(line: str) -> Dict[str, str]:
    meta = {}
    for item in line.lstrip('#').split(';'):
        if '=' in item:
            key, value = item.split('=', 1)
            meta[key.strip()] = value.strip()
    return meta


def _check_grid(r: np.ndarray, first_line: int, path: str) -> None:
    k = DataValidator.first_non_increasing(r)
    if k is not None:
        raise DataFormatError(
            f"R 非严格递增（R={r[k]} 不大于上一行 {r[k - 1]}）", line=first_line + k, path=path
        )


def _load_csv(path: Path) -> ChannelData:
    with open(path, 'r', encoding='utf-8') as f:
        first = f.readline()
    has_meta = first.startswith('#')
    meta = _parse_metadata(first) if has_meta else {}
    header_line = 2 if has_meta else 1

    try:
        frame = pd.read_csv(path, dtype=str, skiprows=1 if has_meta else 0)
    except pd.errors.ParserError as e:
        raise DataFormatError(f"CSV 解析失败: {e}", path=str(path))
    frame.columns = frame.columns.str.strip()

    if 'R' not in frame.columns:
        raise DataFormatError("表头缺少 R 列", line=header_line, path=str(path))
    v_cols = [c for c in frame.columns if c != 'R']
    n = int(round((np.sqrt(8 * len(v_cols) + 1) - 1) / 2))
    expected = channel_columns(max(n, 1))
    missing = [c for c in expected if c not in frame.columns]
    if missing or n * (n + 1) // 2 != len(v_cols) or n < 2:
        raise DataFormatError(f"表头缺少列: {missing or expected}", line=header_line, path=str(path))

    values = frame[['R'] + expected].apply(pd.to_numeric, errors='coerce')
    bad_rows = np.flatnonzero(values.isna().any(axis=1).to_numpy())
    if bad_rows.size:
        raise DataFormatError("存在非数值或缺失字段", line=header_line + 1 + int(bad_rows[0]),
                              path=str(path))

    data = values.to_numpy(dtype=float)
    _check_grid(data[:, 0], header_line + 1, str(path))
    labels = meta.pop('labels', '')
    unit = meta.pop('unit', 'au')
    columns = {name: data[:, c + 1] for c, name in enumerate(expected)}
    return ChannelData.from_columns(
        data[:, 0], columns, labels.split(LABEL_SEPARATOR) if labels else None, unit, meta
    )


def _load_json(path: Path) -> ChannelData:
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
    try:
        r = np.asarray(data['R'], dtype=float)
        columns = {k: np.asarray(v, dtype=float) for k, v in data['V'].items()}
    except KeyError as e:
        raise DataFormatError(f"缺少字段: {e.args[0]}", path=str(path))
    except (TypeError, ValueError) as e:
        raise DataFormatError(f"字段非法: {e}", path=str(path))
    if any(col.shape != r.shape for col in columns.values()):
        raise DataFormatError("势能列长度与 R 网格不一致", path=str(path))
    _check_grid(r, 1, str(path))
    try:
        return ChannelData.from_columns(r, columns, data.get('labels'), data.get('unit', 'au'),
                                        data.get('metadata'))
    except DataFormatError as e:
        raise DataFormatError(str(e), path=str(path))


def load_channels(path: Union[str, Path], fmt: Optional[str] = None) -> ChannelData:
    """
    读取通道数据文件并验证

    Args:
        path: 文件路径
        fmt: 'csv' 或 'json'（默认按扩展名）

    Raises:
        FileNotFoundError: 文件不存在
        DataFormatError: 格式错误（带行号）或验证不通过
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"文件不存在: {path}")
    fmt = (fmt or path.suffix.lstrip('.')).lower()
    if fmt == 'csv':
        channels = _load_csv(path)
    elif fmt == 'json':
        channels = _load_json(path)
    else:
        raise DataFormatError(f"不支持的通道文件格式: {fmt}", path=str(path))

    report = validate_matrix_series(channels.r, channels.potentials, grid_name="R 网格")
    if not report.is_valid():
        issue = report.violations[0]
        raise DataFormatError(issue.message, path=str(path))
    logger.info(f"读取通道数据: {path}, n={channels.n}, R ∈ [{channels.r_min}, {channels.r_max}]")
    return channels


def write_channels(channels: ChannelData, path: Union[str, Path],
                   float_format: str = '%.12e') -> Path:
    """写出 CSV（含元数据行）或 JSON（按扩展名）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == '.json':
        path.write_text(json.dumps(channels.to_dict(), indent=2), encoding='utf-8')
    else:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(channels.metadata_line() + '\n')
            channels.to_frame().to_csv(f, index=False, float_format=float_format, lineterminator='\n')
    logger.info(f"写入通道数据: {path}")
    return path


def standin_channels(params: Union[Dict[str, Any], str, Path]) -> ChannelData:
    """
    解析式替代通道模型

    V_ii = E_i^∞ + A_ii·exp(−β_ii·R)，V_ij = A_ij·exp(−β_ij·R)

    Args:
        params: 参数字典或 YAML 文件路径（asymptotes / diagonal / couplings / grid）

    Raises:
        ConfigurationError: 参数缺失或非法
    """
    if isinstance(params, (str, Path)):
        path = Path(params)
        if not path.exists():
            raise FileNotFoundError(f"文件不存在: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            params = yaml.safe_load(f)

    try:
        asymptotes = np.asarray(params['asymptotes'], dtype=float)
        n = asymptotes.size
        amp = np.asarray(params['diagonal']['A'], dtype=float)
        beta = np.asarray(params['diagonal']['beta'], dtype=float)
        grid = params['grid']
        count = int(round((grid['r_max'] - grid['r_min']) / grid['step']))
        r = grid['r_min'] + grid['step'] * np.arange(count + 1)
        couplings = params.get('couplings') or {}
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"替代通道参数非法: {e}")
    if amp.shape != (n,) or beta.shape != (n,):
        raise ConfigurationError("对角参数 A、beta 的长度必须与 asymptotes 一致")

    potentials = np.zeros((r.size, n, n))
    for i in range(n):
        potentials[:, i, i] = asymptotes[i] + amp[i] * np.exp(-beta[i] * r)
    for key, spec in couplings.items():
        key = str(key)
        i, j = int(key[0]) - 1, int(key[1]) - 1
        if not (0 <= i < j < n):
            raise ConfigurationError(f"耦合索引非法: {key}")
        value = float(spec['A']) * np.exp(-float(spec['beta']) * r)
        potentials[:, i, j] = value
        potentials[:, j, i] = value

    labels = params.get('labels') or [f"channel {i + 1}" for i in range(n)]
    meta = {'model': params.get('name', 'standin'), 'ab_initio': 'no'}
    return ChannelData(tuple(labels), r, potentials, params.get('energy_unit', 'au'), meta)
