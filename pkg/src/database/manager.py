"""
数据库管理器

提供扫描运行记录的连接、初始化与读写功能。
"""

import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import QueuePool

from .models import Base, SweepRecord


logger = logging.getLogger(__name__)


class DatabaseManager:
    """
    数据库管理器 - 扫描运行记录存储

    提供：
    - 连接管理
    - 表初始化
    - 扫描点写入与查询
    """

    def __init__(self, db_path: str, pool_size: int = 5, max_overflow: int = 10):
        """
        初始化数据库管理器

        Args:
            db_path: 数据库文件路径
            pool_size: 连接池大小
            max_overflow: 连接池溢出上限
        """
        self.db_path = Path(db_path)
        self.pool_size = pool_size
        self.max_overflow = max_overflow
        self.engine = None
        self.SessionLocal = None
        self._initialize_engine()

    def _initialize_engine(self):
        """初始化数据库引擎"""
        self.db_path.parent.mkdir(parents=True, exist_ok=True)

        db_url = f"sqlite:///{self.db_path}"

        self.engine = create_engine(
            db_url,
            connect_args={"check_same_thread": False},  # 允许多线程
            poolclass=QueuePool,
            pool_size=self.pool_size,
            max_overflow=self.max_overflow,
            pool_pre_ping=True,
            echo=False,
        )

        self.SessionLocal = sessionmaker(
            autocommit=False,
            autoflush=False,
            expire_on_commit=False,
            bind=self.engine
        )

        logger.info(f"数据库引擎初始化完成: {self.db_path}")

    def create_tables(self):
        """创建所有表"""
        Base.metadata.create_all(bind=self.engine)
        logger.debug("数据库表创建完成")

    @contextmanager
    def get_session(self) -> Iterator[Session]:
        """
        获取数据库会话（上下文管理器）

        用法:
            with db_manager.get_session() as session:
                session.add(record)
        """
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"数据库操作失败: {e}")
            raise
        finally:
            session.close()

    def record_points(
        self,
        run_id: str,
        sweep_kind: str,
        points: List[Dict[str, Any]]
    ) -> int:
        """
        批量写入扫描点

        Args:
            run_id: 运行ID
            sweep_kind: 'gmax' 或 'impact'
            points: 扫描点结果字典列表（含 index、parameter、status 等键）

        Returns:
            写入数量
        """
        with self.get_session() as session:
            for point in points:
                session.add(SweepRecord(
                    run_id=run_id,
                    sweep_kind=sweep_kind,
                    point_index=int(point['index']),
                    parameter=float(point['parameter']),
                    status=point.get('status', 'ok'),
                    error=point.get('error'),
                    hardware_time_ns=_optional_float(point.get('hardware_time_ns')),
                    final_fidelity=_optional_float(point.get('final_fidelity')),
                    final_leakage=_optional_float(point.get('final_leakage')),
                    max_leakage=_optional_float(point.get('max_leakage')),
                    payload=json.dumps(point, default=_json_default, sort_keys=True),
                ))

        logger.info(f"记录扫描点: {len(points)} 个 (run_id={run_id}, kind={sweep_kind})")
        return len(points)

    def get_run(self, run_id: str) -> List[SweepRecord]:
        """
        获取一次运行的全部扫描点（按序号排序）

        Args:
            run_id: 运行ID

        Returns:
            SweepRecord 列表
        """
        with self.get_session() as session:
            return (
                session.query(SweepRecord)
                .filter_by(run_id=run_id)
                .order_by(SweepRecord.point_index.asc())
                .all()
            )

    def get_failed_points(self, run_id: Optional[str] = None) -> List[SweepRecord]:
        """
        获取失败的扫描点

        Args:
            run_id: 运行ID（可选）

        Returns:
            SweepRecord 列表
        """
        with self.get_session() as session:
            query = session.query(SweepRecord).filter_by(status='failed')
            if run_id:
                query = query.filter_by(run_id=run_id)
            return query.order_by(SweepRecord.point_index.asc()).all()


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def _json_default(value: Any) -> Any:
    """numpy 标量 / 数组的 JSON 序列化"""
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError(f"无法序列化类型: {type(value).__name__}")
