"""实验工具模块

种子管理、实验批次、查找表构建、运行清单与自检。各子模块按需导入。
"""

from .seeds import STREAM_ALGORITHM, seed_stream

__all__ = ["STREAM_ALGORITHM", "seed_stream"]
