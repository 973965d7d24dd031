"""
模拟报告

把成对演化结果整理为逐检查点的概率、保真度与泄漏，并导出 CSV + JSON 摘要。
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from .scoring import (
    average_source_fidelity,
    fidelity,
    leakage,
    process_fidelity,
    projected_probabilities,
    transition_probabilities,
)
from ..propagator.evolution import EvolutionResult
from ..utils.exceptions import InputError


logger = logging.getLogger(__name__)


@dataclass
class SimulationReport:
    """
    模拟报告

    Attributes:
        times: 模拟时间检查点
        t_qc: 对应硬件时间 (ns)
        p_exact: 精确跃迁概率，形状 (C, n)
        p_sim: 模拟端跃迁概率（电路投影），形状 (C, n)
        fidelity: F(t)（电路投影）
        fidelity_ideal: F(t)（子空间 H_n 演化）
        leakage: L(t)
        hardware_time_ns: 总硬件时长
        source: 源态索引（0 起）
        extras: 其他摘要字段
    """
    times: np.ndarray
    t_qc: np.ndarray
    p_exact: np.ndarray
    p_sim: np.ndarray
    fidelity: np.ndarray
    fidelity_ideal: np.ndarray
    leakage: np.ndarray
    hardware_time_ns: float
    source: int = 0
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.p_exact.shape[1])

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    @property
    def final_fidelity_ideal(self) -> float:
        return float(self.fidelity_ideal[-1])

    @property
    def final_leakage(self) -> float:
        return float(self.leakage[-1])

    @property
    def max_leakage(self) -> float:
        return float(np.max(self.leakage))

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelity))

    @classmethod
    def from_evolutions(
        cls,
        exact: EvolutionResult,
        ideal: EvolutionResult,
        circuit: Optional[EvolutionResult],
        indices: np.ndarray,
        source: int = 0,
        extras: Optional[Dict[str, Any]] = None
    ) -> 'SimulationReport':
        """
        Args:
            exact: U(t)，n 维
            ideal: U_n(t_qc(t))，n 维
            circuit: U_qc(t_qc(t))，2^n 维；None 时模拟端取 ideal 且 L ≡ 0
            indices: 单激发基态索引
            source: 源态索引
        """
        count = len(exact.times)
        if len(ideal.times) != count or (circuit is not None and len(circuit.times) != count):
            raise InputError("成对演化的检查点数量不一致")
        n = exact.dim
        indices = np.asarray(indices, dtype=np.int64)

        p_exact = np.empty((count, n))
        p_sim = np.empty((count, n))
        f_circuit = np.empty(count)
        f_ideal = np.empty(count)
        leak = np.zeros(count)
        for c in range(count):
            u = exact.unitaries[c]
            u_n = ideal.unitaries[c]
            p_exact[c] = transition_probabilities(u, source)
            f_ideal[c] = fidelity(u, u_n, source)
            if circuit is None:
                u_sub = u_n
            else:
                u_qc = circuit.unitaries[c]
                u_sub = u_qc[np.ix_(indices, indices)]
                leak[c] = leakage(u_qc, indices, source)
            p_sim[c] = projected_probabilities(u_sub, source)
            f_circuit[c] = fidelity(u, u_sub, source)

        u_final = exact.final
        u_sim_final = ideal.final if circuit is None else circuit.final[np.ix_(indices, indices)]
        summary_extras = {
            'process_fidelity': process_fidelity(u_final, u_sim_final),
            'average_source_fidelity': average_source_fidelity(u_final, u_sim_final),
            'max_unitarity_defect_exact': exact.max_defect,
            'max_unitarity_defect_simulated': (circuit or ideal).max_defect,
            'steps_exact': exact.steps,
            'steps_simulated': (circuit or ideal).steps,
        }
        summary_extras.update(extras or {})
        t_qc = ideal.times
        return cls(
            times=exact.times,
            t_qc=t_qc,
            p_exact=p_exact,
            p_sim=p_sim,
            fidelity=f_circuit,
            fidelity_ideal=f_ideal,
            leakage=leak,
            hardware_time_ns=float(t_qc[-1] - t_qc[0]),
            source=source,
            extras=summary_extras,
        )

    def to_frame(self) -> pd.DataFrame:
        """t, t_qc, P_exact_i, P_sim_i, F, F_ideal, L"""
        frame = pd.DataFrame({'t': self.times, 't_qc': self.t_qc})
        for i in range(self.n):
            frame[f"P_exact_{i + 1}"] = self.p_exact[:, i]
        for i in range(self.n):
            frame[f"P_sim_{i + 1}"] = self.p_sim[:, i]
        frame['F'] = self.fidelity
        frame['F_ideal'] = self.fidelity_ideal
        frame['L'] = self.leakage
        return frame

    def summary(self) -> Dict[str, Any]:
        data = {
            'source_channel': self.source + 1,
            'final_fidelity': self.final_fidelity,
            'final_fidelity_ideal': self.final_fidelity_ideal,
            'final_leakage': self.final_leakage,
            'max_leakage': self.max_leakage,
            'min_fidelity': self.min_fidelity,
            'hardware_time_ns': self.hardware_time_ns,
            'final_probabilities_exact': self.p_exact[-1].tolist(),
            'final_probabilities_simulated': self.p_sim[-1].tolist(),
        }
        data.update(self.extras)
        return data

    def write(self, out_dir: Union[str, Path], table_handler=None) -> Dict[str, Path]:
        """
        写出 report.csv 与 summary.json

        Returns:
            {'csv': 路径, 'json': 路径}
        """
        from ..utils.table_handler import TableHandler

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        handler = table_handler or TableHandler()
        csv_path = handler.write_table(self.to_frame(), out_dir / 'report.csv', sheet_name='report')
        json_path = out_dir / 'summary.json'
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True), encoding='utf-8')
        logger.info(f"写入模拟报告: {csv_path}")
        return {'csv': csv_path, 'json': json_path}
