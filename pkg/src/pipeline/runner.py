"""
流水线编排

配置加载 → 通道数据 → 碰撞哈密顿量 → 编译控制时间表 → 成对演化 → 报告。
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import yaml
from dotenv import load_dotenv

from ..circuit.constraints import HardwareConstraints
from ..circuit.operators import CircuitModel, DEFAULT_MAX_QUBITS, hn_matrix, single_excitation_indices
from ..circuit.tensor import CouplingTensor, alpha as tensor_alpha, load_tensor, weak_coupling_ratio
from ..collision.channels import ChannelData, DEFAULT_COUPLING_TOL, load_channels
from ..collision.trajectory import Trajectory, build_collision_hamiltonian
from ..compiler.schedule import (
    SIGN_AS_PRINTED,
    SIGN_CORRECTED,
    CompileOptions,
    ControlSchedule,
    accumulated_phase,
    audit_schedule,
    compile_controls,
    load_schedule,
    write_schedule,
)
from ..hamiltonian import units
from ..hamiltonian.target import TargetHamiltonian
from ..metrics.report import SimulationReport
from ..propagator.evolution import PropagatorConfig, evolve, evolve_pair
from ..utils.exceptions import ConfigurationError, SESimError
from ..utils.table_handler import TableHandler
from ..utils.validators import ValidationReport


logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = 'config.yaml'


def load_config(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """
    加载配置文件（先读取 .env）

    路径优先级：参数 → 环境变量 SESIM_CONFIG → config.yaml。

    Raises:
        FileNotFoundError: 文件不存在
        ConfigurationError: YAML 解析失败或顶层不是映射
    """
    load_dotenv()
    path = Path(config_path or os.getenv('SESIM_CONFIG') or DEFAULT_CONFIG_FILE)
    if not path.exists():
        raise FileNotFoundError(f"配置文件不存在: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"配置文件解析失败: {path}: {e}")
    if not isinstance(config, dict):
        raise ConfigurationError(f"配置文件顶层必须是映射: {path}")
    config.setdefault('_base_dir', str(path.resolve().parent))
    return config


def _section(config: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = config.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigurationError(f"配置段 {name} 必须是映射")
    return value


def _resolve(base_dir: Path, value: Union[str, Path]) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def resolve_workers(cli_workers: Optional[int], config_workers: Optional[int] = None) -> int:
    """并发数：命令行 → SESIM_WORKERS → 配置 → CPU 核数"""
    for value, source in ((cli_workers, '--workers'), (os.getenv('SESIM_WORKERS'), 'SESIM_WORKERS'),
                          (config_workers, 'performance.max_workers')):
        if value is None or value == '':
            continue
        try:
            workers = int(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"{source} 必须是整数: {value!r}")
        if workers < 1:
            raise ConfigurationError(f"{source} 必须 ≥ 1: {workers}")
        return workers
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    """
    一次运行的完整配置

    Attributes:
        channels_path: 通道数据文件
        tensor: 耦合张量
        constraints: 硬件约束
        trajectory: 轨迹
        time_step: 哈密顿量采样网格步长（模拟时间单位）
        compile: 编译选项
        exact_step: 精确端最大步长（模拟时间单位）
        hardware_step_ns: 模拟端最大步长 (ns)
        checkpoints: 检查点数量（模拟时间均匀分布）
        source: 源通道（0 起）
        out_dir: 输出目录
    """
    channels_path: Path
    tensor: CouplingTensor
    constraints: HardwareConstraints
    trajectory: Trajectory = field(default_factory=Trajectory)
    time_step: float = 0.05
    compile: CompileOptions = field(default_factory=CompileOptions)
    exact_step: float = 0.01
    hardware_step_ns: float = 0.01
    unitarity_tol: float = 1e-9
    checkpoints: int = 201
    source: int = 0
    out_dir: Path = Path('data/output')
    channels_format: Optional[str] = None
    clamp: bool = False
    coupling_tol: float = DEFAULT_COUPLING_TOL
    max_qubits: int = DEFAULT_MAX_QUBITS
    export_format: str = 'csv'
    float_format: str = '%.12e'
    encoding: str = 'utf-8'
    workers: Optional[int] = None
    database_path: Optional[Path] = None
    database_options: Dict[str, Any] = field(default_factory=dict)
    sweep: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.time_step > 0:
            raise ConfigurationError(f"trajectory.time_step 必须为正，实际 {self.time_step}")
        if self.checkpoints < 2:
            raise ConfigurationError(f"propagator.checkpoints 必须 ≥ 2，实际 {self.checkpoints}")
        if self.source < 0:
            raise ConfigurationError("simulation.source_channel 必须 ≥ 1")
        # 步长合法性由 PropagatorConfig 检查
        self.exact_config()
        self.hardware_config()

    def exact_config(self) -> PropagatorConfig:
        return PropagatorConfig(self.exact_step, unitarity_tol=self.unitarity_tol)

    def hardware_config(self) -> PropagatorConfig:
        return PropagatorConfig(self.hardware_step_ns, unitarity_tol=self.unitarity_tol)

    def table_handler(self) -> TableHandler:
        return TableHandler(self.float_format, self.export_format, self.encoding)

    def with_gmax(self, g_max: float) -> 'RunConfig':
        return replace(self, constraints=self.constraints.with_g_max(g_max))

    def with_impact(self, b: float) -> 'RunConfig':
        return replace(self, trajectory=self.trajectory.with_impact(b))

    @classmethod
    def from_config(cls, config: Dict[str, Any], **overrides) -> 'RunConfig':
        """
        由配置字典构造，命令行参数通过 overrides 覆盖

        支持的 overrides: out_dir, gmax, margin, sign_as_printed, workers

        Raises:
            ConfigurationError: 配置值非法
            FileNotFoundError: 通道数据文件不存在
        """
        base_dir = Path(config.get('_base_dir', '.'))
        paths = _section(config, 'paths')
        channels = _section(config, 'channels')
        circuit = _section(config, 'circuit')
        traj = _section(config, 'trajectory')
        comp = _section(config, 'compile')
        prop = _section(config, 'propagator')
        sim = _section(config, 'simulation')
        export = _section(config, 'export')
        database = _section(config, 'database')
        performance = _section(config, 'performance')

        if 'path' not in channels:
            raise ConfigurationError("缺少 channels.path")
        channels_path = _resolve(base_dir, channels['path'])
        if not channels_path.exists():
            raise FileNotFoundError(f"通道数据文件不存在: {channels_path}")

        tensor_ref = circuit.get('tensor', 'phase-qubit-default')
        if tensor_ref.endswith('.json'):
            tensor_ref = str(_resolve(base_dir, tensor_ref))
        tensor = load_tensor(tensor_ref, circuit.get('phi'))

        constraints = HardwareConstraints.from_dict(_section(config, 'constraints'))
        if overrides.get('gmax') is not None:
            constraints = constraints.with_g_max(float(overrides['gmax']))

        try:
            trajectory = Trajectory(
                b=float(traj.get('b', 0.5)),
                v=float(traj.get('v', 1.0)),
                t_i=float(traj.get('t_i', -40.0)),
                t_f=float(traj.get('t_f', 40.0)),
            )
            sign_as_printed = bool(overrides.get('sign_as_printed') or comp.get('sign_as_printed', False))
            margin = overrides.get('margin')
            compile_options = CompileOptions(
                margin=float(margin if margin is not None else comp.get('margin', 1.0)),
                lambda_floor=comp.get('lambda_floor'),
                floor_fraction=float(comp.get('floor_fraction', 1e-3)),
                duration_budget_ns=float(comp.get('duration_budget_ns', 1000.0)),
                max_hw_step_ns=comp.get('max_hw_step_ns', 0.05),
                max_refine_passes=int(comp.get('max_refine_passes', 40)),
                max_nodes=int(comp.get('max_nodes', 200_000)),
                sign=SIGN_AS_PRINTED if sign_as_printed else SIGN_CORRECTED,
                rate_headroom=float(comp.get('rate_headroom', 0.25)),
                max_rate_passes=int(comp.get('max_rate_passes', 200)),
            )
            out_dir = overrides.get('out_dir')
            out_dir = Path(out_dir) if out_dir else _resolve(base_dir, paths.get('output_dir', 'data/output'))
            db_path = None
            if database.get('enabled', False):
                db_dir = _resolve(base_dir, paths.get('database_dir', 'data/database'))
                db_path = db_dir / paths.get('database_file', 'sesim_runs.db')

            return cls(
                channels_path=channels_path,
                tensor=tensor,
                constraints=constraints,
                trajectory=trajectory,
                time_step=float(traj.get('time_step', 0.05)),
                compile=compile_options,
                exact_step=float(prop.get('exact_max_step', 0.01)),
                hardware_step_ns=float(prop.get('hardware_max_step_ns', 0.01)),
                unitarity_tol=float(prop.get('unitarity_tol', 1e-9)),
                checkpoints=int(prop.get('checkpoints', 201)),
                source=int(sim.get('source_channel', 1)) - 1,
                out_dir=out_dir,
                channels_format=channels.get('format'),
                clamp=bool(channels.get('clamp_asymptotic', False)),
                coupling_tol=float(channels.get('coupling_tol', DEFAULT_COUPLING_TOL)),
                max_qubits=int(circuit.get('max_qubits', DEFAULT_MAX_QUBITS)),
                export_format=export.get('format', 'csv'),
                float_format=export.get('float_format', '%.12e'),
                encoding=export.get('encoding', 'utf-8'),
                workers=resolve_workers(overrides.get('workers'), performance.get('max_workers')),
                database_path=db_path,
                database_options={k: database[k] for k in ('pool_size', 'max_overflow') if k in database},
                sweep=_section(config, 'sweep'),
                metadata={'device': circuit.get('device', {})},
            )
        except SESimError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"配置值非法: {e}")


# ====================================================================== 阶段

@dataclass
class CompileOutcome:
    """编译阶段产物"""
    hamiltonian: TargetHamiltonian
    schedule: ControlSchedule
    audit: ValidationReport
    files: Dict[str, Path] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        lam = self.schedule.lam
        return {
            'n': self.schedule.n,
            'nodes': int(lam.size),
            'lambda_min': float(lam.min()),
            'lambda_max': float(lam.max()),
            'hardware_time_ns': self.schedule.hardware_time,
            'g_max_mhz': self.schedule.constraints.g_max,
            'audit_passed': self.audit.is_valid(),
            'audit_codes': self.audit.codes(),
        }


def build_target(run: RunConfig, channels: Optional[ChannelData] = None) -> TargetHamiltonian:
    """沿轨迹构造碰撞哈密顿量"""
    channels = channels or load_channels(run.channels_path, run.channels_format)
    return build_collision_hamiltonian(channels, run.trajectory, step=run.time_step, clamp=run.clamp)


def validate_inputs(run: RunConfig) -> Dict[str, Any]:
    """
    检查通道数据、沿轨迹的哈密顿量与耦合张量

    Returns:
        {'valid': bool, 'channels': 报告, 'hamiltonian': 报告, 'tensor': 张量信息}
    """
    from ..circuit.tensor import conserves_excitation
    from ..hamiltonian.target import validate

    channels = load_channels(run.channels_path, run.channels_format)
    channel_report = channels.validate(run.coupling_tol)
    h_report = validate(build_target(run, channels))
    c = run.constraints
    tensor_info = {
        'name': run.tensor.name,
        'alpha': tensor_alpha(run.tensor),
        'conserves_excitation': conserves_excitation(run.tensor),
        'weak_coupling_ratio': weak_coupling_ratio(run.tensor, c.g_max, c.eps_min),
    }
    return {
        'valid': channel_report.is_valid() and h_report.is_valid(),
        'channels': channel_report.to_dict(),
        'hamiltonian': h_report.to_dict(),
        'tensor': tensor_info,
    }


def run_compile(run: RunConfig, write: bool = True,
                h: Optional[TargetHamiltonian] = None) -> CompileOutcome:
    """
    编译并写出 hamiltonian.csv、lambda_profile.csv、schedule.csv、schedule.json

    Raises:
        InfeasibleScheduleError: 速率约束无法满足
    """
    h = h or build_target(run)
    schedule = compile_controls(h, run.tensor, run.constraints, run.compile)
    schedule = replace(schedule, metadata={**schedule.metadata, **run.metadata,
                                           'trajectory': run.trajectory.to_dict()})
    audit = audit_schedule(schedule)
    outcome = CompileOutcome(h, schedule, audit)
    if write:
        handler = run.table_handler()
        run.out_dir.mkdir(parents=True, exist_ok=True)
        outcome.files['hamiltonian'] = handler.write_table(h.to_frame(), run.out_dir / 'hamiltonian.csv',
                                                           sheet_name='hamiltonian')
        outcome.files['lambda_profile'] = handler.write_table(
            schedule.profile.to_frame(), run.out_dir / 'lambda_profile.csv', sheet_name='lambda'
        )
        written = write_schedule(schedule, run.out_dir, handler)
        outcome.files['schedule'] = written['csv']
        outcome.files['schedule_json'] = written['json']
    return outcome


def _exact_generator(h: TargetHamiltonian):
    # 模拟时间单位下的 H/ħ
    factor = 1.0 if h.unit == 'au' else units.energy_factor(h.unit) * units.time_factor(h.unit)
    return lambda t: h.sample(t) * factor


def simulate(
    h: TargetHamiltonian,
    schedule: ControlSchedule,
    tensor: CouplingTensor,
    run: RunConfig,
    include_circuit: bool = True
) -> SimulationReport:
    """
    成对演化并评分

    精确端 U(t) 由 H_s 生成；模拟端在硬件时间上由 H_n（理想子空间）与 H_qc（完整电路）生成，
    检查点在模拟时间均匀分布并经 t_qc 映射对齐。
    """
    alpha = tensor_alpha(tensor)
    tqc_map = schedule.tqc_map
    t0, t1 = float(schedule.times[0]), float(schedule.times[-1])
    checkpoints = np.linspace(t0, t1, run.checkpoints)

    def ideal_generator(t_qc: float) -> np.ndarray:
        eps, g = schedule.controls_at(t_qc)
        return hn_matrix(eps, g, alpha)

    paired = evolve_pair(_exact_generator(h), ideal_generator, tqc_map, checkpoints,
                         run.exact_config(), run.hardware_config())

    circuit_result = None
    if include_circuit:
        model = CircuitModel(schedule.n, tensor, run.max_qubits)

        def circuit_generator(t_qc: float) -> np.ndarray:
            return model.hqc_matrix(*schedule.controls_at(t_qc))

        mapped = paired.t_qc
        circuit_result = evolve(circuit_generator, float(mapped[0]), float(mapped[-1]),
                                run.hardware_config(), mapped)

    c = schedule.constraints
    extras = {
        'tensor': tensor.name,
        'alpha': alpha,
        'g_max': c.g_max,
        'delta_eps': c.delta_eps,
        'constraint_unit': c.unit,
        'weak_coupling_ratio': weak_coupling_ratio(tensor, c.g_max, c.eps_min),
        'lambda_min': float(schedule.lam.min()),
        'lambda_max': float(schedule.lam.max()),
        'accumulated_phase_rad': float(accumulated_phase(schedule)[-1]),
    }
    report = SimulationReport.from_evolutions(
        paired.exact, paired.simulated, circuit_result,
        single_excitation_indices(schedule.n), run.source, extras,
    )
    logger.info(
        f"模拟完成: F={report.final_fidelity:.6f}, F_ideal={report.final_fidelity_ideal:.8f}, "
        f"L={report.final_leakage:.3e}, 硬件时长 {report.hardware_time_ns:.4g} ns"
    )
    return report


@dataclass
class SimulationOutcome:
    """模拟阶段产物"""
    compile: Optional[CompileOutcome]
    schedule: ControlSchedule
    report: SimulationReport
    files: Dict[str, Path] = field(default_factory=dict)


def run_simulate(run: RunConfig, schedule_path: Optional[Union[str, Path]] = None,
                 write: bool = True) -> SimulationOutcome:
    """
    编译（或读取已有时间表）并模拟，写出 report.csv 与 summary.json

    Raises:
        FileNotFoundError: 时间表文件不存在
    """
    h = build_target(run)
    compiled = None
    if schedule_path is not None:
        schedule = load_schedule(schedule_path)
        audit = audit_schedule(schedule)
        for issue in audit.violations:
            logger.warning(f"读取的控制时间表审计: {issue.message}")
    else:
        compiled = run_compile(run, write=write, h=h)
        schedule = compiled.schedule

    report = simulate(h, schedule, run.tensor, run)
    outcome = SimulationOutcome(compiled, schedule, report)
    if write:
        outcome.files = report.write(run.out_dir, run.table_handler())
    return outcome


def write_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default), encoding='utf-8')
    return path


def _json_default(value: Any) -> Any:
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"无法序列化类型: {type(value).__name__}")
