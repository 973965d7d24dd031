"""
pytest 公共夹具
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.collision.channels import load_channels  # noqa: E402
from src.pipeline.runner import RunConfig  # noqa: E402


STANDIN_CSV = ROOT / 'data' / 'channels' / 'na_he_standin.csv'
STANDIN_YAML = ROOT / 'data' / 'channels' / 'na_he_standin.yaml'


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope='session')
def standin_path() -> Path:
    return STANDIN_CSV


@pytest.fixture(scope='session')
def standin_yaml() -> Path:
    return STANDIN_YAML


@pytest.fixture(scope='session')
def channels():
    return load_channels(STANDIN_CSV)


@pytest.fixture
def base_config(tmp_path):
    """仓库配置的测试副本：关闭文件日志，数据库写到临时目录"""
    with open(ROOT / 'config.yaml', 'r', encoding='utf-8') as f:
        config = yaml.safe_load(f)
    config['_base_dir'] = str(ROOT)
    config['channels']['path'] = str(STANDIN_CSV)
    config['paths']['output_dir'] = str(tmp_path / 'output')
    config['paths']['database_dir'] = str(tmp_path / 'database')
    config['logging']['file_handler']['enabled'] = False
    config['database']['enabled'] = False
    config['performance']['max_workers'] = 2
    return config


@pytest.fixture
def make_run(base_config, tmp_path):
    """按覆盖项构造 RunConfig，输出目录位于 tmp_path"""

    def factory(out: str = 'run', **sections) -> RunConfig:
        config = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base_config.items()}
        for name, values in sections.items():
            config[name] = {**(config.get(name) or {}), **values}
        return RunConfig.from_config(config, out_dir=str(tmp_path / out))

    return factory


@pytest.fixture
def config_file(base_config, tmp_path) -> Path:
    """写到临时目录的配置文件（供命令行测试使用）"""
    path = tmp_path / 'config.yaml'
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(base_config, f, allow_unicode=True)
    return path
