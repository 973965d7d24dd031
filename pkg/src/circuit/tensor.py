"""
耦合张量

比特间相互作用的 4×4 无量纲张量 J_μν（Pauli 指标顺序 0, x, y, z），
以及由相位算符矩阵元 φ_jk 导出张量的流程。
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..utils.exceptions import (
    ConfigurationError,
    DataFormatError,
    NonNormalizableError,
    SingularMatrixElementError,
)


logger = logging.getLogger(__name__)

PAULI_LABELS = ('0', 'x', 'y', 'z')

PAULI = {
    '0': np.eye(2, dtype=complex),
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_BASIS = tuple(PAULI[label] for label in PAULI_LABELS)

# 相位比特默认矩阵元：Φ̂ ≈ σ^x + 11·σ^0
DEFAULT_PHI = {'phi00': 11.0, 'phi11': 11.0, 'phi01': 1.0}


@dataclass(frozen=True)
class PhiCoefficients:
    """
    局部相位算符 Φ̂ = c_x·σ^x + c_z·σ^z + c_0·σ^0 的系数（c_x 恒为 1）
    """
    c_z: float
    c_0: float
    c_x: float = 1.0

    def __post_init__(self):
        if self.c_x != 1.0:
            raise ConfigurationError(f"c_x 必须等于 1，实际 {self.c_x}")

    def vector(self) -> np.ndarray:
        """按 (0, x, y, z) 排列的系数向量"""
        return np.array([self.c_0, self.c_x, 0.0, self.c_z])


def phi_coefficients(phi00: float, phi11: float, phi01: float) -> PhiCoefficients:
    """
    由相位算符矩阵元构造 Φ̂ 系数

    c_z = (φ00 − φ11) / (2φ01)，c_0 = (φ00 + φ11) / (2φ01)

    Raises:
        SingularMatrixElementError: φ01 == 0
    """
    if phi01 == 0:
        raise SingularMatrixElementError("φ01 = 0，无法归一化相位算符")
    return PhiCoefficients(
        c_z=(phi00 - phi11) / (2.0 * phi01),
        c_0=(phi00 + phi11) / (2.0 * phi01),
    )


@dataclass(frozen=True, eq=False)
class CouplingTensor:
    """
    归一化的耦合张量

    Attributes:
        J: 4×4 实对称张量，J_xx + J_yy == 1
        scale: 归一化时使用的除数 s_J
        name: 预设名称或来源说明
    """
    J: np.ndarray
    scale: float = 1.0
    name: str = 'custom'

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        J.setflags(write=False)
        object.__setattr__(self, 'J', J)

    @property
    def normalized(self) -> bool:
        """J_xx + J_yy == 1（容差 1e-12）"""
        return bool(abs(self.J[1, 1] + self.J[2, 2] - 1.0) <= 1e-12)

    def component(self, mu: str, nu: str) -> float:
        """按 Pauli 标签取分量，例如 component('z', '0')"""
        return float(self.J[PAULI_LABELS.index(mu), PAULI_LABELS.index(nu)])

    @classmethod
    def from_matrix(cls, J, name: str = 'custom', normalize: bool = True) -> 'CouplingTensor':
        """
        由任意 4×4 张量构造：先对称化，再归一化到 J_xx + J_yy = 1

        Raises:
            DataFormatError: 形状不是 4×4 或含非有限值
            NonNormalizableError: J_xx + J_yy == 0
        """
        J = np.asarray(J, dtype=float)
        if J.shape != (4, 4):
            raise DataFormatError(f"耦合张量形状必须为 4×4，实际 {J.shape}")
        if not np.all(np.isfinite(J)):
            raise DataFormatError("耦合张量含非有限值")

        if not np.array_equal(J, J.T):
            logger.warning(f"耦合张量 {name} 不对称，已对称化 (J + Jᵀ)/2")
            J = 0.5 * (J + J.T)

        if not normalize:
            return cls(J, 1.0, name)
        return normalize_tensor(cls(J, 1.0, name))

    def to_dict(self) -> dict:
        return {'J': self.J.tolist(), 'normalized': self.normalized, 'scale': self.scale, 'name': self.name}

    def to_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding='utf-8')
        return path

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> 'CouplingTensor':
        """读取 {"J": 4×4, "normalized": bool}"""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"文件不存在: {path}")
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise DataFormatError(f"JSON 解析失败: {e.msg}", line=e.lineno, path=str(path))
        if 'J' not in data:
            raise DataFormatError("缺少字段: J", path=str(path))
        tensor = cls.from_matrix(data['J'], name=data.get('name', path.stem), normalize=True)
        if not data.get('normalized', False):
            logger.info(f"张量 {path.name} 未归一化，归一化因子 s_J={tensor.scale:g}")
        return tensor


def normalize_tensor(tensor: CouplingTensor) -> CouplingTensor:
    """
    归一化到 J_xx + J_yy = 1，累计记录 s_J

    Raises:
        NonNormalizableError: J_xx + J_yy == 0
    """
    divisor = tensor.J[1, 1] + tensor.J[2, 2]
    if divisor == 0:
        raise NonNormalizableError("J_xx + J_yy = 0，耦合张量无法归一化")
    return CouplingTensor(tensor.J / divisor, float(tensor.scale * divisor), tensor.name)


def coupling_tensor_from_phi(p: PhiCoefficients, name: str = 'phase-qubit') -> CouplingTensor:
    """
    展开 Φ̂⊗Φ̂ = Σ J_μν σ^μ⊗σ^ν，J_μν = p_μ·p_ν，p = (c_0, 1, 0, c_z)
    """
    vec = p.vector()
    return CouplingTensor.from_matrix(np.outer(vec, vec), name=name, normalize=True)


def pauli_decompose(matrix: np.ndarray) -> np.ndarray:
    """
    两比特 4×4 算符的 Pauli 基分解：M = Σ J_μν σ^μ⊗σ^ν，J_μν = Tr[(σ^μ⊗σ^ν) M] / 4
    """
    matrix = np.asarray(matrix, dtype=complex)
    coeffs = np.empty((4, 4), dtype=complex)
    for mu, s_mu in enumerate(PAULI_BASIS):
        for nu, s_nu in enumerate(PAULI_BASIS):
            coeffs[mu, nu] = np.trace(np.kron(s_mu, s_nu) @ matrix) / 4.0
    return coeffs


def pair_operator(J: np.ndarray) -> np.ndarray:
    """两比特相互作用算符 Σ J_μν σ^μ⊗σ^ν（4×4）"""
    out = np.zeros((4, 4), dtype=complex)
    for mu, s_mu in enumerate(PAULI_BASIS):
        for nu, s_nu in enumerate(PAULI_BASIS):
            if J[mu, nu] != 0:
                out += J[mu, nu] * np.kron(s_mu, s_nu)
    return out


def alpha(tensor: CouplingTensor) -> float:
    """α = 2(J_z0 + J_zz)"""
    return 2.0 * (tensor.J[3, 0] + tensor.J[3, 3])


def conserves_excitation(tensor: CouplingTensor, tol: float = 1e-12) -> bool:
    """
    H_qc 是否保持每个激发数扇区不变

    判据：两比特相互作用算符与总激发数 (σ^z⊗1 + 1⊗σ^z) 对易。
    """
    op = pair_operator(tensor.J)
    number = np.kron(PAULI['z'], PAULI['0']) + np.kron(PAULI['0'], PAULI['z'])
    return bool(np.max(np.abs(op @ number - number @ op)) <= tol)


def weak_coupling_ratio(tensor: CouplingTensor, g_max: float, eps_min: float) -> float:
    """g_max·‖J‖_F / ε_min（越小泄漏越小，g_max 与 ε_min 同单位）"""
    return float(g_max * np.linalg.norm(tensor.J) / eps_min)


def tensor_preset(name: str, phi: Optional[dict] = None) -> CouplingTensor:
    """
    预设张量

    - phase-qubit-default: 由默认 φ 矩阵元导出（Φ̂ ≈ σ^x + 11σ^0）
    - xy-exchange: J_xx = J_yy = 1/2（保持激发数）
    - pure-xx: J_xx = 1
    """
    if name == 'phase-qubit-default':
        values = dict(DEFAULT_PHI)
        values.update(phi or {})
        p = phi_coefficients(values['phi00'], values['phi11'], values['phi01'])
        return coupling_tensor_from_phi(p, name=name)

    J = np.zeros((4, 4))
    if name == 'xy-exchange':
        J[1, 1] = J[2, 2] = 0.5
    elif name == 'pure-xx':
        J[1, 1] = 1.0
    else:
        raise ConfigurationError(
            f"未知张量预设: {name}（支持 phase-qubit-default, xy-exchange, pure-xx）"
        )
    return CouplingTensor.from_matrix(J, name=name)


def load_tensor(ref: str, phi: Optional[dict] = None) -> CouplingTensor:
    """按预设名或 JSON 路径加载耦合张量"""
    if ref in ('phase-qubit-default', 'xy-exchange', 'pure-xx'):
        return tensor_preset(ref, phi)
    return CouplingTensor.from_json(ref)
