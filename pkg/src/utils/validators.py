"""
数据验证工具

提供数值数据的验证功能（有限性、单调性、对称性），以及报告式验证结果。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ValidationIssue:
    """
    单条验证问题

    code 为机器可读的问题类型（如 non_monotone_grid、asymmetric），
    message 为可读描述。
    """
    code: str
    message: str
    node: Optional[int] = None
    index: Optional[Tuple[int, ...]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'code': self.code,
            'message': self.message,
            'node': self.node,
            'index': list(self.index) if self.index is not None else None,
        }


@dataclass
class ValidationReport:
    """
    验证报告

    violations 为空即表示通过。
    """
    violations: List[ValidationIssue] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def is_valid(self) -> bool:
        """是否通过验证"""
        return len(self.violations) == 0

    def add(self, code: str, message: str, node: Optional[int] = None,
            index: Optional[Tuple[int, ...]] = None) -> None:
        """追加一条违规"""
        self.violations.append(ValidationIssue(code, message, node, index))

    def codes(self) -> List[str]:
        """违规类型列表"""
        return [v.code for v in self.violations]

    def extend(self, other: 'ValidationReport') -> None:
        """合并另一份报告"""
        self.violations.extend(other.violations)
        self.warnings.extend(other.warnings)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            'is_valid': self.is_valid(),
            'violations': [v.to_dict() for v in self.violations],
            'warnings': list(self.warnings),
        }


class DataValidator:
    """
    数值数据验证器

    提供各种数组检查方法。
    """

    @staticmethod
    def is_finite(values: np.ndarray) -> bool:
        """检查所有元素是否有限"""
        return bool(np.all(np.isfinite(values)))

    @staticmethod
    def first_non_increasing(values: np.ndarray) -> Optional[int]:
        """
        查找第一个不严格递增的位置

        Args:
            values: 一维数组

        Returns:
            违反 values[k+1] > values[k] 的第一个 k+1，全部递增时返回 None
        """
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            return None
        bad = np.flatnonzero(~(np.diff(values) > 0))
        return int(bad[0]) + 1 if bad.size else None

    @staticmethod
    def is_strictly_increasing(values: np.ndarray) -> bool:
        """检查一维数组是否严格递增"""
        return DataValidator.first_non_increasing(values) is None

    @staticmethod
    def asymmetric_pairs(matrix: np.ndarray, tol: float = 0.0) -> List[Tuple[int, int]]:
        """
        列出不对称的 (i, j) 位置（i < j）

        Args:
            matrix: 方阵
            tol: 允许的绝对偏差（默认 0，即精确对称）

        Returns:
            (i, j) 列表
        """
        matrix = np.asarray(matrix)
        diff = np.abs(matrix - matrix.T)
        rows, cols = np.nonzero(np.triu(diff > tol, k=1))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    @staticmethod
    def is_hermitian(matrix: np.ndarray, tol: float = 1e-10) -> bool:
        """检查矩阵是否厄米（相对范数容差）"""
        matrix = np.asarray(matrix)
        scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
        return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol * scale)

    @staticmethod
    def unitarity_defect(matrix: np.ndarray) -> float:
        """‖U†U − I‖_F"""
        matrix = np.asarray(matrix)
        return float(np.linalg.norm(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))


def validate_matrix_series(
    times: np.ndarray,
    matrices: np.ndarray,
    grid_name: str = "时间网格"
) -> ValidationReport:
    """
    验证矩阵时间序列（网格单调、元素有限、逐节点对称）

    Args:
        times: 网格节点
        matrices: 形状 (K+1, n, n) 的矩阵序列
        grid_name: 报告中使用的网格名称

    Returns:
        ValidationReport 对象
    """
    report = ValidationReport()

    if not DataValidator.is_finite(times) or not DataValidator.is_finite(matrices):
        bad_nodes = np.flatnonzero(
            ~np.isfinite(matrices).reshape(len(matrices), -1).all(axis=1)
        ) if matrices.size else np.array([], dtype=int)
        node = int(bad_nodes[0]) if bad_nodes.size else None
        report.add('non_finite', f"存在非有限元素（节点 {node}）", node=node)

    k = DataValidator.first_non_increasing(times)
    if k is not None:
        report.add('non_monotone_grid', f"non-monotone grid: {grid_name}在节点 {k} 处不严格递增", node=k)

    seen = set()
    for node, matrix in enumerate(matrices):
        for pair in DataValidator.asymmetric_pairs(matrix):
            if pair in seen:
                continue
            seen.add(pair)
            report.add('asymmetric', f"asymmetric at {pair}: 节点 {node} 处 H{pair} ≠ H{pair[::-1]}",
                       node=node, index=pair)

    return report
