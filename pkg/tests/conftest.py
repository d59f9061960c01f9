"""测试配置

Pytest配置和共享fixtures。
"""

import os
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

# 设置测试环境
os.environ.setdefault("EVOSIM_LOG_LEVEL", "WARNING")
os.environ.pop("EVOSIM_THREADS", None)
os.environ.pop("EVOSIM_OUTPUT_DIR", None)

from evolvability_sim.ann.genome import GenotypeSpace  # noqa: E402
from evolvability_sim.ann.table import LookupTable  # noqa: E402
from evolvability_sim.config.settings import RobotParams  # noqa: E402
from evolvability_sim.core.config import Config  # noqa: E402
from evolvability_sim.core.logger import setup_logging  # noqa: E402
from evolvability_sim.maze.geometry import Maze  # noqa: E402

SMALL_MASK = "**0000000000000000"
TINY_MASK = "***000000000000000"


@pytest.fixture(scope="session")
def temp_dir() -> Generator[Path, None, None]:
    """临时目录fixture"""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def open_arena() -> Maze:
    """200×200的空旷场地，起点在中心"""
    walls = [
        (0.0, 0.0, 200.0, 0.0),
        (200.0, 0.0, 200.0, 200.0),
        (200.0, 200.0, 0.0, 200.0),
        (0.0, 200.0, 0.0, 0.0),
    ]
    return Maze.build(walls, (100.0, 100.0, 0.0))


@pytest.fixture
def short_robot() -> RobotParams:
    """步数较少的3传感器机器人"""
    return RobotParams(timesteps=40)


@pytest.fixture
def small_space() -> GenotypeSpace:
    """只有两个自由基因的3^2空间"""
    return GenotypeSpace(SMALL_MASK)


@pytest.fixture
def synthetic_table() -> LookupTable:
    """3^3空间上的人工查找表"""
    space = GenotypeSpace(TINY_MASK)
    ids = np.arange(space.size)
    return LookupTable(
        space,
        niches=(ids % 7).astype(np.uint16),
        evolvability=(ids % 4 + 1).astype(np.uint8),
        maze_digest="synthetic",
    )


@pytest.fixture(autouse=True)
def reset_logging():
    """每个测试后重新配置日志（命令行测试会替换stderr）"""
    yield
    setup_logging(Config())


def pytest_configure(config):
    """Pytest配置"""
    config.addinivalue_line("markers", "unit: 单元测试")
    config.addinivalue_line("markers", "integration: 集成测试")
    config.addinivalue_line("markers", "slow: 慢速测试（完整规模的实验批次）")
    config.addinivalue_line("markers", "oracle: 独立实现的对照测试")


def pytest_collection_modifyitems(config, items):
    """修改测试收集"""
    # 为没有标记的测试添加unit标记
    for item in items:
        if not any(item.iter_markers()):
            item.add_marker(pytest.mark.unit)
