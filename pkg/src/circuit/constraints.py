"""
硬件约束

耦合幅度窗口 [−g_max, g_max]、比特能量窗口 [ε_min, ε_max]，以及控制参数的最大变化速率。
能量单位由 unit 决定（默认 MHz·h），速率单位为 能量/ns。
"""

import math
from dataclasses import dataclass, replace
from typing import Any, Dict

from ..hamiltonian import units
from ..utils.exceptions import ConfigurationError, SESimError


@dataclass(frozen=True)
class HardwareConstraints:
    """
    硬件约束

    Attributes:
        g_max: 耦合幅度上限 (> 0)
        eps_min: 比特能量下限
        eps_max: 比特能量上限 (> eps_min)
        v_g_max: |dg/dt_qc| 上限（inf 表示不限制）
        v_eps_max: |dε/dt_qc| 上限（inf 表示不限制）
        unit: 能量单位标签
    """
    g_max: float
    eps_min: float
    eps_max: float
    v_g_max: float = math.inf
    v_eps_max: float = math.inf
    unit: str = 'mhz'

    def __post_init__(self):
        object.__setattr__(self, 'unit', units.normalize_unit(self.unit))
        for name in ('g_max', 'eps_min', 'eps_max'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigurationError(f"{name} 必须为正有限值，实际 {value}")
        for name in ('v_g_max', 'v_eps_max'):
            value = getattr(self, name)
            if math.isnan(value) or value <= 0:
                raise ConfigurationError(f"{name} 必须为正（inf 表示不限制），实际 {value}")
        if not self.eps_max > self.eps_min:
            raise ConfigurationError(
                f"eps_max ({self.eps_max}) 必须大于 eps_min ({self.eps_min})"
            )

    @property
    def delta_eps(self) -> float:
        """Δε = ε_max − ε_min"""
        return self.eps_max - self.eps_min

    def to_canonical(self) -> 'HardwareConstraints':
        """换算到规范单位（rad/ns；速率 rad/ns²）"""
        if self.unit == units.CANONICAL_UNIT:
            return self
        f = units.energy_factor(self.unit)
        return HardwareConstraints(
            g_max=self.g_max * f,
            eps_min=self.eps_min * f,
            eps_max=self.eps_max * f,
            v_g_max=self.v_g_max * f,
            v_eps_max=self.v_eps_max * f,
            unit=units.CANONICAL_UNIT,
        )

    def scaled(self, s: float) -> 'HardwareConstraints':
        """所有能量窗口与速率同时乘以 s"""
        return HardwareConstraints(
            g_max=s * self.g_max,
            eps_min=s * self.eps_min,
            eps_max=s * self.eps_max,
            v_g_max=s * self.v_g_max,
            v_eps_max=s * self.v_eps_max,
            unit=self.unit,
        )

    def with_g_max(self, g_max: float) -> 'HardwareConstraints':
        return replace(self, g_max=float(g_max))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'g_max': self.g_max,
            'eps_min': self.eps_min,
            'eps_max': self.eps_max,
            'v_g_max': self.v_g_max,
            'v_eps_max': self.v_eps_max,
            'unit': self.unit,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'HardwareConstraints':
        """
        从配置段构造

        支持 eps_max + delta_eps 的写法代替 eps_min；速率为 null 时表示不限制。
        """
        try:
            eps_max = float(data['eps_max'])
            if 'eps_min' in data and data['eps_min'] is not None:
                eps_min = float(data['eps_min'])
            else:
                eps_min = eps_max - float(data['delta_eps'])
            return cls(
                g_max=float(data['g_max']),
                eps_min=eps_min,
                eps_max=eps_max,
                v_g_max=_rate(data.get('v_g_max')),
                v_eps_max=_rate(data.get('v_eps_max')),
                unit=data.get('unit', 'mhz'),
            )
        except KeyError as e:
            raise ConfigurationError(f"硬件约束缺少字段: {e.args[0]}")
        except SESimError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"硬件约束字段非法: {e}")


def _rate(value) -> float:
    return math.inf if value is None else float(value)
