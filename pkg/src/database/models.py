"""
数据库模型定义

定义 SQLAlchemy ORM 模型用于扫描运行记录。
"""

import json
from datetime import datetime

from sqlalchemy import Column, DateTime, Float, Index, Integer, String, Text
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class SweepRecord(Base):
    """
    扫描点记录表 - 每个 g_max / 碰撞参数扫描点一行

    失败的扫描点同样记录（status='failed'，error 保存诊断信息）。
    """
    __tablename__ = 'sweep_records'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String(64), nullable=False, comment='运行ID（同一次扫描共享）')
    sweep_kind = Column(String(20), nullable=False, comment='扫描类型: gmax/impact')
    point_index = Column(Integer, nullable=False, comment='扫描点序号')
    parameter = Column(Float, nullable=False, comment='扫描参数值（g_max/h MHz 或 b a.u.）')

    # 运行状态
    status = Column(String(20), nullable=False, default='ok', comment='状态: ok/failed')
    error = Column(Text, nullable=True, comment='失败原因')

    # 主要指标
    hardware_time_ns = Column(Float, nullable=True, comment='硬件总时长 (ns)')
    final_fidelity = Column(Float, nullable=True, comment='最终保真度')
    final_leakage = Column(Float, nullable=True, comment='最终泄漏')
    max_leakage = Column(Float, nullable=True, comment='最大泄漏')

    payload = Column(Text, nullable=True, comment='完整扫描点结果 (JSON)')

    created_at = Column(DateTime, default=datetime.now, comment='创建时间')

    def __repr__(self):
        return (f"<SweepRecord(run_id='{self.run_id}', kind='{self.sweep_kind}', "
                f"index={self.point_index}, status='{self.status}')>")

    def to_dict(self):
        """转换为字典"""
        return {
            'id': self.id,
            'run_id': self.run_id,
            'sweep_kind': self.sweep_kind,
            'point_index': self.point_index,
            'parameter': self.parameter,
            'status': self.status,
            'error': self.error,
            'hardware_time_ns': self.hardware_time_ns,
            'final_fidelity': self.final_fidelity,
            'final_leakage': self.final_leakage,
            'max_leakage': self.max_leakage,
            'payload': json.loads(self.payload) if self.payload else None,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    __table_args__ = (
        Index('idx_sweep_run', 'run_id'),
        Index('idx_sweep_run_point', 'run_id', 'point_index'),
    )
