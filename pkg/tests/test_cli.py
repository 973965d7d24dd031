"""
命令行入口测试
"""

import json
import logging

import pytest
import yaml

import main as cli
from src.pipeline.sweep import SweepOutcome
from src.utils.exceptions import (
    CapacityError,
    ConfigurationError,
    DataFormatError,
    DomainError,
    InfeasibleScheduleError,
    TimeRangeError,
)


def _write_config(base_config, tmp_path, **sections):
    for name, values in sections.items():
        base_config[name] = {**(base_config.get(name) or {}), **values}
    path = tmp_path / 'custom.yaml'
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(base_config, f, allow_unicode=True)
    return str(path)


class TestExitCodes:

    @pytest.mark.parametrize('error, code', [
        (ConfigurationError("x"), 2),
        (DataFormatError("x", line=3), 2),
        (FileNotFoundError("x"), 2),
        (InfeasibleScheduleError("x"), 1),
        (TimeRangeError("x"), 1),
        (CapacityError("x"), 1),
        (DomainError("x"), 1),
        (RuntimeError("x"), 1),
    ])
    def test_mapping(self, error, code):
        assert cli.exit_code_for(error) == code


class TestCommands:

    def test_compile(self, config_file, tmp_path):
        out = tmp_path / 'out'
        assert cli.main(['compile', '--config', str(config_file), '--out', str(out)]) == 0
        for name in ('hamiltonian.csv', 'lambda_profile.csv', 'schedule.csv', 'schedule.json'):
            assert (out / name).exists()

    def test_compile_gmax_override(self, config_file, tmp_path):
        out = tmp_path / 'out'
        assert cli.main(['compile', '--config', str(config_file), '--out', str(out),
                         '--gmax', '1.0']) == 0
        data = json.loads((out / 'schedule.json').read_text(encoding='utf-8'))
        assert data['constraints']['g_max'] == 1.0

    def test_sign_as_printed_flags_audit(self, config_file, tmp_path, caplog):
        with caplog.at_level(logging.WARNING, logger='main'):
            code = cli.main(['compile', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                             '--sign-as-printed'])
        assert code == 0
        assert '[eps_window]' in caplog.text

    def test_validate(self, config_file, tmp_path):
        out = tmp_path / 'out'
        assert cli.main(['validate', '--config', str(config_file), '--out', str(out)]) == 0
        result = json.loads((out / 'validation.json').read_text(encoding='utf-8'))
        assert result['valid']
        assert result['tensor']['name'] == 'phase-qubit-default'

    def test_validate_reports_violations(self, base_config, tmp_path):
        bad = tmp_path / 'bad.csv'
        bad.write_text("R,V11,V22,V12\n0.0,1,2,0.1\n50.0,1,2,0.1\n", encoding='utf-8')
        config = _write_config(base_config, tmp_path, channels={'path': str(bad)})
        assert cli.main(['validate', '--config', config, '--out', str(tmp_path / 'out')]) == 2

    def test_missing_channel_file(self, base_config, tmp_path, caplog):
        missing = tmp_path / 'nowhere.csv'
        config = _write_config(base_config, tmp_path, channels={'path': str(missing)})
        with caplog.at_level(logging.ERROR, logger='main'):
            code = cli.main(['compile', '--config', config, '--out', str(tmp_path / 'out')])
        assert code == 2
        assert str(missing) in caplog.text

    def test_missing_config(self, tmp_path):
        assert cli.main(['compile', '--config', str(tmp_path / 'none.yaml')]) == 2

    def test_empty_gmax_values(self, config_file, tmp_path):
        code = cli.main(['sweep', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                         '--gmax-values', ''])
        assert code == 2

    def test_bad_gmax_values(self, config_file, tmp_path):
        code = cli.main(['sweep', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                         '--gmax-values', '1,abc'])
        assert code == 2

    def test_infeasible_schedule(self, config_file, tmp_path, mocker):
        mocker.patch.object(cli, 'run_compile',
                            side_effect=InfeasibleScheduleError("不可行", segment=3, quantity='rate_g_12'))
        code = cli.main(['compile', '--config', str(config_file), '--out', str(tmp_path / 'out')])
        assert code == 1

    def test_unexpected_error(self, config_file, tmp_path, mocker):
        mocker.patch.object(cli, 'run_compile', side_effect=ZeroDivisionError("boom"))
        code = cli.main(['compile', '--config', str(config_file), '--out', str(tmp_path / 'out')])
        assert code == 1

    def test_sweep_spec_file(self, config_file, tmp_path, mocker):
        constraints = tmp_path / 'limits.yaml'
        constraints.write_text(yaml.safe_dump({'constraints': {
            'g_max': 4.0, 'eps_max': 6000.0, 'delta_eps': 190.0, 'v_g_max': None, 'v_eps_max': None,
        }}), encoding='utf-8')
        spec = tmp_path / 'sweep.json'
        spec.write_text(json.dumps({
            'b_grid': [0.0, 0.5, 1.0], 'v': 0.5, 't_window': [-30.0, 30.0],
            'constraints_ref': 'limits.yaml', 'tensor_ref': 'pure-xx',
        }), encoding='utf-8')
        sweep = mocker.patch.object(cli, 'run_sweep', return_value=SweepOutcome('spec'))
        code = cli.main(['sweep', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                         '--spec', str(spec)])
        assert code == 0
        run, gmax_values, b_grid = sweep.call_args.args[:3]
        assert gmax_values is None
        assert list(b_grid) == [0.0, 0.5, 1.0]
        assert run.constraints.g_max == 4.0
        assert run.tensor.name == 'pure-xx'
        assert (run.trajectory.v, run.trajectory.t_i, run.trajectory.t_f) == (0.5, -30.0, 30.0)

    def test_sweep_spec_without_lists(self, config_file, tmp_path):
        spec = tmp_path / 'sweep.json'
        spec.write_text(json.dumps({'v': 0.5}), encoding='utf-8')
        code = cli.main(['sweep', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                         '--spec', str(spec)])
        assert code == 2

    def test_bad_margin(self, config_file, tmp_path):
        code = cli.main(['compile', '--config', str(config_file), '--out', str(tmp_path / 'out'),
                         '--margin', '0.5'])
        assert code == 2

    @pytest.mark.parametrize('argv', [['unknown'], ['compile', '--gmax', 'abc'], []])
    def test_bad_arguments(self, argv):
        assert cli.main(argv) == 2

    def test_help(self):
        assert cli.main(['--help']) == 0
