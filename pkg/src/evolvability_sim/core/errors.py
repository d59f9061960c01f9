"""异常定义

项目内所有异常的统一层次结构。
"""

from typing import Any, Dict, List, Optional


class EvolvabilitySimError(Exception):
    """所有项目异常的基类"""


class ConfigurationError(EvolvabilitySimError, ValueError):
    """配置或参数不合法"""

    def __init__(self, message: str, errors: Optional[List[Dict[str, Any]]] = None):
        """初始化配置异常

        Args:
            message: 错误描述
            errors: 详细的校验错误列表（通常来自pydantic）
        """
        super().__init__(message)
        self.errors = errors or []


class MazeFormatError(ConfigurationError):
    """迷宫文件格式错误或几何不合法"""


class EvaluationError(EvolvabilitySimError):
    """控制器在仿真过程中失败"""


class TableIntegrityError(EvolvabilitySimError):
    """查找表分片缺失、重叠、格式错误或摘要不匹配"""


class ScheduleMismatchError(EvolvabilitySimError, ValueError):
    """多次运行的检查点序列不一致"""


class EmptyInputError(EvolvabilitySimError, ValueError):
    """统计输入为空"""
