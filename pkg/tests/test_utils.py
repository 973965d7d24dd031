"""
工具模块测试：表格读写、验证报告、日志配置
"""

import logging

import numpy as np
import openpyxl
import pandas as pd
import pytest

from src.utils.logger import configure_from_config, setup_logger
from src.utils.table_handler import TableHandler
from src.utils.validators import DataValidator, ValidationReport, validate_matrix_series


class TestTableHandler:

    def _frame(self):
        return pd.DataFrame({'t': [0.0, 0.5, 1.0], 'value': [1.0 / 3.0, np.pi, -2.5e-9],
                             'binding': ['g_12', 'dE_1', 'floor']})

    def test_deterministic_bytes(self, tmp_path):
        handler = TableHandler()
        a = handler.write_table(self._frame(), tmp_path / 'a.csv')
        b = handler.write_table(self._frame(), tmp_path / 'b.csv')
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text(encoding='utf-8').splitlines()
        assert lines[0] == 't,value,binding'
        assert lines[2] == '5.000000000000e-01,3.141592653590e+00,dE_1'

    def test_read_back(self, tmp_path):
        handler = TableHandler()
        path = handler.write_table(self._frame(), tmp_path / 'table.csv')
        df = pd.read_csv(path, encoding='utf-8')
        np.testing.assert_allclose(df['value'], self._frame()['value'], rtol=1e-12)

    def test_excel_mirror(self, tmp_path):
        path = TableHandler(export_format='xlsx').write_table(self._frame(), tmp_path / 'table.csv')
        mirror = path.with_suffix('.xlsx')
        assert path.exists() and mirror.exists()
        ws = openpyxl.load_workbook(mirror).active
        assert [c.value for c in ws[1]] == ['t', 'value', 'binding']
        assert ws.cell(row=3, column=2).value == pytest.approx(np.pi)
        assert ws['A1'].font.bold

    def test_invalid_format(self):
        with pytest.raises(ValueError):
            TableHandler(export_format='parquet')


class TestValidators:

    def test_report(self):
        report = ValidationReport()
        assert report.is_valid()
        report.add('asymmetric', 'x', node=2, index=(0, 1))
        other = ValidationReport()
        other.add('non_finite', 'y')
        other.warnings.append('w')
        report.extend(other)
        assert report.codes() == ['asymmetric', 'non_finite']
        data = report.to_dict()
        assert not data['is_valid']
        assert data['violations'][0]['index'] == [0, 1]
        assert data['warnings'] == ['w']

    def test_first_non_increasing(self):
        assert DataValidator.first_non_increasing([0.0, 1.0, 2.0]) is None
        assert DataValidator.first_non_increasing([0.0, 1.0, 1.0, 0.5]) == 2
        assert DataValidator.first_non_increasing([0.0, np.nan]) == 1

    def test_hermitian_and_defect(self):
        assert DataValidator.is_hermitian(np.array([[1.0, 2j], [-2j, 0.0]]))
        assert not DataValidator.is_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert DataValidator.unitarity_defect(np.eye(3)) == 0.0

    def test_matrix_series_reports_first_asymmetry_once(self):
        matrices = np.zeros((3, 2, 2))
        matrices[1:, 0, 1] = 1.0
        report = validate_matrix_series(np.array([0.0, 1.0, 2.0]), matrices)
        assert report.codes() == ['asymmetric']
        assert report.violations[0].node == 1


class TestLogger:

    def test_configure_from_config(self, tmp_path):
        config = {
            'level': 'WARNING',
            'file_handler': {'enabled': True, 'filename': 'test.log'},
            'console_handler': {'enabled': False},
        }
        logger = configure_from_config(config, log_dir=tmp_path / 'logs', verbose=True)
        assert logger.name == 'main'
        assert logger.level == logging.DEBUG
        assert logging.getLogger('src').level == logging.DEBUG

    def test_setup_logger_file(self, tmp_path):
        logger = setup_logger('sesim_test_file', log_file='x.log', log_dir=tmp_path, console=False)
        logger.info("写入一行")
        for handler in logger.handlers:
            handler.flush()
        assert '写入一行' in (tmp_path / 'x.log').read_text(encoding='utf-8')

    def test_setup_logger_idempotent(self):
        first = setup_logger('sesim_test_once', console=True)
        second = setup_logger('sesim_test_once', console=True)
        assert first is second
        assert len(second.handlers) == 1
