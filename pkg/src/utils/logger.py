"""
日志工具配置

提供统一的日志配置和管理功能。
"""

import logging
import sys
from pathlib import Path
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, Optional

import colorlog


# 颜色配置
LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DEFAULT_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(
    name: str,
    log_file: Optional[str] = None,
    level: str = 'INFO',
    log_dir: Optional[Path] = None,
    console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    fmt: str = DEFAULT_FORMAT,
    datefmt: str = DEFAULT_DATE_FORMAT
) -> logging.Logger:
    """
    设置并返回一个配置好的 logger

    Args:
        name: logger 名称
        log_file: 日志文件名（可选）
        level: 日志级别 (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_dir: 日志目录（可选）
        console: 是否输出到控制台
        max_bytes: 单个日志文件最大字节数
        backup_count: 保留的备份文件数量
        fmt: 日志格式
        datefmt: 时间格式

    Returns:
        配置好的 Logger 对象
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))

    # 避免重复添加 handler
    if logger.handlers:
        return logger

    formatter = logging.Formatter(fmt, datefmt=datefmt)

    # 控制台处理器（带颜色，输出到 stderr，不干扰表格输出）
    if console:
        console_handler = colorlog.StreamHandler(sys.stderr)
        console_handler.setFormatter(colorlog.ColoredFormatter(
            '%(log_color)s' + fmt,
            datefmt=datefmt,
            log_colors=LOG_COLORS
        ))
        logger.addHandler(console_handler)

    # 文件处理器（轮转）
    if log_file:
        if log_dir:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            log_path = log_dir / log_file
        else:
            log_path = Path(log_file)

        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def configure_from_config(
    logging_config: Dict[str, Any],
    log_dir: Optional[Path] = None,
    verbose: bool = False
) -> logging.Logger:
    """
    按配置文件的 logging 段配置 src 包与 main 的 logger

    Args:
        logging_config: config.yaml 中的 logging 段
        log_dir: 日志目录
        verbose: 为 True 时强制 DEBUG

    Returns:
        main logger
    """
    level = 'DEBUG' if verbose else logging_config.get('level', 'INFO')
    fmt = logging_config.get('format', DEFAULT_FORMAT)
    datefmt = logging_config.get('date_format', DEFAULT_DATE_FORMAT)
    file_cfg = logging_config.get('file_handler', {}) or {}
    console_cfg = logging_config.get('console_handler', {}) or {}

    log_file = file_cfg.get('filename') if file_cfg.get('enabled', False) else None
    common = dict(
        log_file=log_file,
        level=level,
        log_dir=log_dir,
        console=console_cfg.get('enabled', True),
        max_bytes=file_cfg.get('max_bytes', 10 * 1024 * 1024),
        backup_count=file_cfg.get('backup_count', 5),
        fmt=fmt,
        datefmt=datefmt,
    )
    setup_logger('src', **common)
    return setup_logger('main', **common)


class LoggerMixin:
    """
    Logger 混入类

    为类提供日志功能，使用类名作为 logger 名称。
    """

    @property
    def logger(self) -> logging.Logger:
        """获取该类的 logger"""
        if not hasattr(self, '_logger'):
            self._logger = logging.getLogger(f"src.{self.__class__.__name__}")
        return self._logger
