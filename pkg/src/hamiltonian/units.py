"""
单位换算

内部规范单位：能量以 E/ħ 表示（rad/ns），时间以 ns 表示。
支持的单位标签：
- au:     能量 hartree，时间 a.u.（ħ = 1）
- mhz:    能量 MHz·h，时间 ns
- rad_ns: 能量 ħ·rad/ns，时间 ns（规范单位）
"""

import math
from typing import Dict, Tuple

from ..utils.exceptions import UnitError


# 1 a.u. 时间 = ħ/E_h
AU_TIME_NS = 2.4188843265857e-8
# 1 E_h / ħ，单位 rad/ns
HARTREE_RAD_PER_NS = 1.0 / AU_TIME_NS
# 1 MHz·h / ħ = 2π × 10^6 rad/s
MHZ_RAD_PER_NS = 2.0 * math.pi * 1e-3

CANONICAL_UNIT = 'rad_ns'

# 单位标签 -> (能量换算到 rad/ns 的因子, 时间换算到 ns 的因子)
_UNIT_FACTORS: Dict[str, Tuple[float, float]] = {
    'au': (HARTREE_RAD_PER_NS, AU_TIME_NS),
    'mhz': (MHZ_RAD_PER_NS, 1.0),
    'rad_ns': (1.0, 1.0),
}

_ALIASES = {
    'hartree': 'au',
    'atomic': 'au',
    'mhz_h': 'mhz',
    'canonical': 'rad_ns',
}


def normalize_unit(unit: str) -> str:
    """
    规范化单位标签

    Raises:
        UnitError: 未知单位标签
    """
    if not isinstance(unit, str):
        raise UnitError(f"单位标签必须是字符串: {unit!r}")
    key = unit.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in _UNIT_FACTORS:
        raise UnitError(f"未知单位标签: {unit!r}（支持 {sorted(_UNIT_FACTORS)}）")
    return key


def energy_factor(unit: str) -> float:
    """能量换算到 rad/ns 的乘法因子"""
    return _UNIT_FACTORS[normalize_unit(unit)][0]


def time_factor(unit: str) -> float:
    """时间换算到 ns 的乘法因子"""
    return _UNIT_FACTORS[normalize_unit(unit)][1]


def convert_energy(value, from_unit: str, to_unit: str = CANONICAL_UNIT):
    """能量换算（标量或 numpy 数组）"""
    src, dst = normalize_unit(from_unit), normalize_unit(to_unit)
    if src == dst:
        return value
    return value * (energy_factor(src) / energy_factor(dst))


def convert_time(value, from_unit: str, to_unit: str = CANONICAL_UNIT):
    """时间换算（标量或 numpy 数组）"""
    src, dst = normalize_unit(from_unit), normalize_unit(to_unit)
    if src == dst:
        return value
    return value * (time_factor(src) / time_factor(dst))
