#!/usr/bin/env python3
"""
SESim 单激发子空间模拟器 - 主入口

四个子命令：
1. validate：检查通道数据、沿轨迹的哈密顿量与耦合张量
2. compile：把碰撞哈密顿量编译为控制时间表
3. simulate：成对演化并输出保真度 / 泄漏报告
4. sweep：g_max 扫描与碰撞参数扫描

退出码：0 成功，1 数值不可行，2 配置或输入输出错误。
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from src.pipeline.runner import RunConfig, load_config, run_compile, run_simulate, validate_inputs, write_json
from src.pipeline.sweep import load_sweep_spec, run_sweep
from src.utils.exceptions import (
    CapacityError,
    ConfigurationError,
    DataFormatError,
    DomainError,
    GeneratorError,
    InfeasibleScheduleError,
    InputError,
    NonNormalizableError,
    SingularMatrixElementError,
    TimeRangeError,
    UnitError,
)
from src.utils.logger import configure_from_config


# 加载环境变量
load_dotenv()

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2

NUMERIC_ERRORS = (TimeRangeError, CapacityError, DomainError, GeneratorError, InputError,
                  InfeasibleScheduleError)
CONFIG_ERRORS = (ConfigurationError, DataFormatError, UnitError, SingularMatrixElementError,
                 NonNormalizableError, FileNotFoundError)

console = Console()


def exit_code_for(error: BaseException) -> int:
    """异常 → 退出码"""
    if isinstance(error, NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(error, CONFIG_ERRORS):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def _float_list(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    items = [s for s in text.replace(' ', '').split(',') if s]
    try:
        return [float(s) for s in items]
    except ValueError:
        raise ConfigurationError(f"无法解析数值列表: {text!r}")


def _summary_table(title: str, rows: dict) -> Table:
    table = Table(title=title)
    table.add_column("项目", style="cyan")
    table.add_column("值", style="green")
    for key, value in rows.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        table.add_row(str(key), str(value))
    return table


def cmd_validate(run: RunConfig) -> int:
    """检查输入数据"""
    logger = logging.getLogger('main')
    result = validate_inputs(run)
    path = write_json(result, run.out_dir / 'validation.json')

    rows = {
        '通道数据': '通过' if result['channels']['is_valid'] else '未通过',
        '哈密顿量': '通过' if result['hamiltonian']['is_valid'] else '未通过',
        '张量': result['tensor']['name'],
        'α': result['tensor']['alpha'],
        '保持激发数': result['tensor']['conserves_excitation'],
        '弱耦合比 g_max‖J‖/ε_min': result['tensor']['weak_coupling_ratio'],
    }
    console.print(_summary_table("输入检查", rows))
    for section in ('channels', 'hamiltonian'):
        for issue in result[section]['violations']:
            logger.warning(f"{section}: [{issue['code']}] {issue['message']}")
        for message in result[section]['warnings']:
            logger.warning(f"{section}: {message}")
    logger.info(f"检查结果已写入: {path}")
    return EXIT_OK if result['valid'] else EXIT_CONFIG


def cmd_compile(run: RunConfig) -> int:
    """编译控制时间表"""
    logger = logging.getLogger('main')
    outcome = run_compile(run)
    console.print(_summary_table("编译摘要", outcome.summary()))
    for issue in outcome.audit.violations:
        logger.warning(f"审计: [{issue.code}] {issue.message}")
    for name, path in outcome.files.items():
        logger.info(f"输出 {name}: {path}")
    return EXIT_OK


def cmd_simulate(run: RunConfig, schedule_path: Optional[str]) -> int:
    """编译并模拟"""
    logger = logging.getLogger('main')
    outcome = run_simulate(run, schedule_path)
    summary = outcome.report.summary()
    rows = {k: summary[k] for k in ('final_fidelity', 'final_fidelity_ideal', 'final_leakage',
                                    'max_leakage', 'hardware_time_ns', 'process_fidelity')}
    console.print(_summary_table("模拟摘要", rows))
    if outcome.compile is not None:
        for issue in outcome.compile.audit.violations:
            logger.warning(f"审计: [{issue.code}] {issue.message}")
    for name, path in outcome.files.items():
        logger.info(f"输出 {name}: {path}")
    return EXIT_OK


def cmd_sweep(run: RunConfig, gmax_values, b_grid) -> int:
    """参数扫描"""
    logger = logging.getLogger('main')
    outcome = run_sweep(run, gmax_values, b_grid, run.workers)

    if outcome.gmax is not None:
        table = Table(title="g_max 扫描")
        for col in ('g_max', 'hardware_time_ns', 'final_fidelity', 'final_leakage', 'status'):
            table.add_column(col)
        for _, row in outcome.gmax.iterrows():
            table.add_row(*[f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
                            for c in ('g_max', 'hardware_time_ns', 'final_fidelity',
                                      'final_leakage', 'status')])
        console.print(table)
        ratio = outcome.summary['gmax']['fidelity_time_ratio']
        levels = outcome.summary['gmax']['fidelity_levels']
        logger.info(f"保真度 {levels[0]} → {levels[1]} 所需硬件时长倍数: "
                    f"{'未覆盖' if ratio is None else f'{ratio:.3g}'}")

    if outcome.impact is not None:
        console.print(_summary_table("截面（exact）", {
            f"σ_{i + 1}": v for i, v in enumerate(outcome.summary['impact']['sigma_exact'] or [])
        }))

    for name, path in outcome.files.items():
        logger.info(f"输出 {name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="SESim 单激发子空间模拟器",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:

  # 检查输入数据
  python main.py validate --config config.yaml

  # 编译控制时间表（g_max/h = 1 MHz）
  python main.py compile --gmax 1.0 --out data/output/gmax1

  # 编译并模拟
  python main.py simulate --out data/output/run1

  # g_max 扫描
  python main.py sweep --gmax-values 4,2,1,0.5 --workers 4

  # 按扫描规格文件做碰撞参数扫描
  python main.py sweep --spec data/sweeps/impact_sweep.json
        """
    )

    parser.add_argument(
        'command',
        choices=['validate', 'compile', 'simulate', 'sweep'],
        help='子命令'
    )

    parser.add_argument(
        '--config',
        default=None,
        help='配置文件路径（默认: SESIM_CONFIG 或 config.yaml）'
    )

    parser.add_argument(
        '--out',
        default=None,
        help='输出目录（覆盖 paths.output_dir）'
    )

    parser.add_argument(
        '--gmax',
        type=float,
        default=None,
        help='耦合上限 g_max/h (MHz)'
    )

    parser.add_argument(
        '--margin',
        type=float,
        default=None,
        help='λ 安全裕度 (≥ 1)'
    )

    parser.add_argument(
        '--sign-as-printed',
        action='store_true',
        help='使用 ε = ε_max + ΔE/λ 的映射（仅用于审计对比）'
    )

    parser.add_argument(
        '--workers',
        type=int,
        default=None,
        help='扫描并发数（默认: SESIM_WORKERS 或 CPU 核数）'
    )

    parser.add_argument(
        '--schedule',
        default=None,
        help='simulate：使用已有的 schedule.json 而不重新编译'
    )

    parser.add_argument(
        '--gmax-values',
        default=None,
        help='sweep：逗号分隔的 g_max/h 列表 (MHz)'
    )

    parser.add_argument(
        '--b-grid',
        default=None,
        help='sweep：逗号分隔的碰撞参数列表 (a.u.)'
    )

    parser.add_argument(
        '--spec',
        default=None,
        help='sweep：扫描规格 JSON（b_grid、gmax_values、v、t_window、constraints_ref、tensor_ref）'
    )

    parser.add_argument(
        '--verbose',
        action='store_true',
        help='详细日志输出'
    )

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """主函数，返回退出码"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    try:
        config = load_config(args.config)
    except CONFIG_ERRORS as e:
        logging.getLogger('main').error(f"✗ 配置加载失败: {e}")
        return EXIT_CONFIG

    logger = configure_from_config(
        config.get('logging', {}) or {},
        log_dir=Path(config['_base_dir']) / (config.get('paths') or {}).get('logs_dir', 'logs'),
        verbose=args.verbose,
    )

    try:
        run = RunConfig.from_config(
            config,
            out_dir=args.out,
            gmax=args.gmax,
            margin=args.margin,
            sign_as_printed=args.sign_as_printed,
            workers=args.workers,
        )

        if args.command == 'validate':
            code = cmd_validate(run)
        elif args.command == 'compile':
            code = cmd_compile(run)
        elif args.command == 'simulate':
            code = cmd_simulate(run, args.schedule)
        else:
            gmax_values = _float_list(args.gmax_values)
            b_grid = _float_list(args.b_grid)
            if args.spec:
                spec = load_sweep_spec(args.spec)
                run = spec.apply(run)
                if args.gmax is not None:
                    run = run.with_gmax(args.gmax)
                if gmax_values is None and b_grid is None:
                    gmax_values, b_grid = spec.gmax_values, spec.b_grid
            if gmax_values is None and b_grid is None:
                gmax_values = run.sweep.get('gmax_values')
                b_grid = run.sweep.get('b_grid')
            code = cmd_sweep(run, gmax_values, b_grid)

        if code == EXIT_OK:
            logger.info("✓ 执行完成")
        return code

    except CONFIG_ERRORS + NUMERIC_ERRORS as e:
        code = exit_code_for(e)
        logger.error(f"✗ 执行失败 (退出码 {code}): {e}")
        return code
    except Exception as e:
        logger.error(f"✗ 执行失败: {e}", exc_info=True)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
