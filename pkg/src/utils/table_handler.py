"""
表格文件处理工具

提供 CSV 写出（固定浮点格式，重复运行字节一致）以及可选的 Excel 镜像导出。
"""

import logging
from pathlib import Path
from typing import Union

import pandas as pd
import openpyxl
from openpyxl.styles import Alignment, Font, PatternFill


logger = logging.getLogger(__name__)

DEFAULT_FLOAT_FORMAT = '%.12e'


class TableHandler:
    """
    表格处理器 - 封装 CSV / Excel 写出

    功能：
    - 写入 CSV 文件（确定性浮点格式）
    - 写入 Excel 镜像（表头加粗、列宽自适应）
    """

    def __init__(
        self,
        float_format: str = DEFAULT_FLOAT_FORMAT,
        export_format: str = 'csv',
        encoding: str = 'utf-8'
    ):
        """
        初始化表格处理器

        Args:
            float_format: CSV 浮点格式
            export_format: 'csv' 或 'xlsx'（xlsx 时额外写出 Excel 镜像）
            encoding: 文件编码
        """
        if export_format not in ('csv', 'xlsx'):
            raise ValueError(f"不支持的导出格式: {export_format}")
        self.float_format = float_format
        self.export_format = export_format
        self.encoding = encoding

    def write_table(
        self,
        df: pd.DataFrame,
        output_path: Union[str, Path],
        sheet_name: str = 'data'
    ) -> Path:
        """
        写入 CSV 文件（export_format 为 xlsx 时同时写 Excel 镜像）

        Args:
            df: DataFrame
            output_path: 输出路径（.csv）
            sheet_name: Excel 镜像的工作表名称

        Returns:
            CSV 文件路径
        """
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        df.to_csv(
            output_path,
            index=False,
            float_format=self.float_format,
            encoding=self.encoding,
            lineterminator='\n'
        )
        logger.info(f"写入 CSV 文件: {output_path}, 行数: {len(df)}")

        if self.export_format == 'xlsx':
            self.write_excel(df, output_path.with_suffix('.xlsx'), sheet_name=sheet_name)

        return output_path

    def write_excel(
        self,
        df: pd.DataFrame,
        output_path: Union[str, Path],
        sheet_name: str = 'data'
    ) -> None:
        """
        写入 Excel 文件并设置表头格式

        Args:
            df: DataFrame
            output_path: 输出路径
            sheet_name: 工作表名称
        """
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)

        wb = openpyxl.Workbook()
        ws = wb.active
        ws.title = sheet_name[:31]

        ws.append([str(c) for c in df.columns])
        for row in df.itertuples(index=False):
            ws.append([_cell_value(v) for v in row])

        for cell in ws[1]:
            cell.font = Font(bold=True, color="FFFFFF")
            cell.fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
            cell.alignment = Alignment(horizontal="center", vertical="center")

        # 自动调整列宽
        for column in ws.columns:
            column_letter = column[0].column_letter
            max_length = max(len(str(cell.value)) for cell in column if cell.value is not None)
            ws.column_dimensions[column_letter].width = min(max_length + 2, 30)

        wb.save(output_path)
        logger.info(f"写入 Excel 镜像: {output_path}")


def _cell_value(value):
    """numpy 标量转为 openpyxl 可写入的 Python 值"""
    if hasattr(value, 'item'):
        return value.item()
    return value
