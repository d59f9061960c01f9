"""实验参数设置

用pydantic模型定义各个模型的参数块，默认值即标准实验的设置。
"""

import math
from enum import Enum
from pathlib import Path
from typing import Any, List, Mapping, Optional, Type, TypeVar, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ..core.errors import ConfigurationError

# 单连接基因的数量与默认的缩减空间掩码（12个自由基因，3^12个基因型）
N_GENES = 18
DEFAULT_MASK = "******0000****0**0"


class _Block(BaseModel):
    """参数块基类"""

    model_config = ConfigDict(extra="forbid", frozen=True)


BlockT = TypeVar("BlockT", bound=_Block)


class ReproductionMode(str, Enum):
    """漂移模型的繁殖方式"""

    INDEPENDENT_LINEAGES = "independent-lineages"
    RESAMPLING = "resampling"


class AbstractVariant(str, Enum):
    """抽象模型的变体"""

    DRIFT = "drift"
    NICHED = "niched"


class ControlMode(str, Enum):
    """实用模型的生态位分配方式"""

    BEHAVIOR_NICHE = "behavior-niche"
    RANDOM_NICHE = "random-niche"


class ModelKind(str, Enum):
    """可运行的模型"""

    ABSTRACT_DRIFT = "abstract-drift"
    ABSTRACT_NICHED = "abstract-niched"
    ROBOT_DRIFT = "robot-drift"
    ROBOT_NICHED = "robot-niched"
    NEAT_NICHED = "neat-niched"
    NEAT_RANDOM_CONTROL = "neat-random-control"


class DistanceMetric(str, Enum):
    """生态位距离度量"""

    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


class AbstractParams(_Block):
    """抽象模型参数"""

    init_evolvability: float = Field(0.05, ge=0.0, le=1.0)
    evo_mut_prob: float = Field(0.01, ge=0.0, le=1.0)
    evo_mut_halfwidth: float = Field(0.005, ge=0.0)
    pop_size: int = Field(40_000, ge=1)
    # None表示使用变体的默认代数（漂移3000，有限容量1000）
    generations: Optional[int] = Field(None, ge=0)
    niche_capacity: int = Field(5, ge=1)
    offspring_per_parent: int = Field(2, ge=1)
    reproduction_mode: ReproductionMode = ReproductionMode.INDEPENDENT_LINEAGES

    def generations_for(self, variant: AbstractVariant) -> int:
        """获取某个变体实际运行的代数

        Args:
            variant: 模型变体

        Returns:
            代数
        """
        if self.generations is not None:
            return self.generations
        return 3_000 if variant == AbstractVariant.DRIFT else 1_000


class RobotParams(_Block):
    """机器人与仿真参数"""

    sensor_angles: List[float] = Field(
        default_factory=lambda: [-math.pi / 4, 0.0, math.pi / 4], min_length=1
    )
    sensor_range: float = Field(100.0, gt=0.0)
    max_speed: float = Field(3.0, ge=0.0)
    max_turn: float = Field(0.25, ge=0.0)
    radius: float = Field(4.0, gt=0.0)
    timesteps: int = Field(400, ge=1)

    @classmethod
    def fixed_topology(cls) -> "RobotParams":
        """固定拓扑模型使用的3传感器机器人"""
        return cls()

    @classmethod
    def practical(cls) -> "RobotParams":
        """实用模型使用的6传感器机器人"""
        return cls(
            sensor_angles=[
                -math.pi / 2,
                -math.pi / 4,
                0.0,
                math.pi / 4,
                math.pi / 2,
                math.pi,
            ]
        )


class TableSettings(_Block):
    """基因型空间查找表设置"""

    mask: str = DEFAULT_MASK
    shard_size: int = Field(65_536, ge=1)
    sigmoid_steepness: float = Field(4.9, gt=0.0)

    @field_validator("mask")
    @classmethod
    def _check_mask(cls, value: str) -> str:
        if len(value) != N_GENES or any(c not in "012*" for c in value):
            raise ValueError(f"掩码必须是{N_GENES}个来自'012*'的字符: {value!r}")
        if "*" not in value:
            raise ValueError("掩码至少需要一个自由基因")
        return value


class RobotDriftParams(_Block):
    """枚举ANN空间中的漂移与有限容量模型参数"""

    pop_size: int = Field(2_000_000, ge=1)
    generations: int = Field(250, ge=0)
    offspring_mutation_prob: float = Field(0.5, ge=0.0, le=1.0)
    niche_capacity: int = Field(5, ge=1)
    offspring_per_parent: int = Field(2, ge=1)


class NeatParams(_Block):
    """实用（可变拓扑）模型参数"""

    weight_perturb_prob: float = Field(0.9, ge=0.0, le=1.0)
    add_connection_prob: float = Field(0.1, ge=0.0, le=1.0)
    add_node_prob: float = Field(0.02, ge=0.0, le=1.0)
    weight_perturb_halfwidth: float = Field(0.5, ge=0.0)
    weight_bound: float = Field(3.0, gt=0.0)
    evaluation_budget: int = Field(50_000, ge=1)
    niche_capacity: int = Field(5, ge=1)
    evolvability_samples: int = Field(200, ge=1)
    estimate_sample_cap: int = Field(30, ge=1)
    control_mode: ControlMode = ControlMode.BEHAVIOR_NICHE
    sigmoid_steepness: float = Field(4.9, gt=0.0)
    # 每轮一起评估的后代数；1为严格的逐个稳态循环
    evaluation_batch: int = Field(1, ge=1)


class CheckpointSettings(_Block):
    """检查点记录频率"""

    abstract_every: int = Field(10, ge=1)
    robot_every: int = Field(1, ge=1)
    neat_every: int = Field(500, ge=1)


class AnalysisSettings(_Block):
    """分析设置"""

    distance_metric: DistanceMetric = DistanceMetric.EUCLIDEAN
    heritability_samples: int = Field(100_000, ge=3)


class LoggingSettings(_Block):
    """日志设置"""

    level: str = "INFO"
    json_format: bool = False
    file_path: Optional[str] = None

    @field_validator("level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"无效的日志级别: {value}")
        return value


class ExperimentConfig(_Block):
    """一次实验批次的完整配置"""

    model: ModelKind
    runs: int = Field(1, ge=1)
    base_seed: int = Field(0, ge=0, lt=2**64)
    output_dir: Path = Path("results")
    threads: Optional[int] = Field(None, ge=1)
    maze_file: Optional[Path] = None
    table_manifest: Optional[Path] = None

    abstract: AbstractParams = Field(default_factory=AbstractParams)
    robot: RobotParams = Field(default_factory=RobotParams.fixed_topology)
    neat_robot: RobotParams = Field(default_factory=RobotParams.practical)
    table: TableSettings = Field(default_factory=TableSettings)
    robot_drift: RobotDriftParams = Field(default_factory=RobotDriftParams)
    neat: NeatParams = Field(default_factory=NeatParams)
    checkpoints: CheckpointSettings = Field(default_factory=CheckpointSettings)
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @model_validator(mode="after")
    def _check_files(self) -> "ExperimentConfig":
        for name in ("maze_file", "table_manifest"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name}指向的文件不存在: {path}")
        if self.base_seed + self.runs > 2**64:
            raise ValueError("base_seed + runs 超出64位种子范围")
        return self

    @property
    def is_abstract(self) -> bool:
        return self.model in (ModelKind.ABSTRACT_DRIFT, ModelKind.ABSTRACT_NICHED)

    @property
    def is_robot(self) -> bool:
        return self.model in (ModelKind.ROBOT_DRIFT, ModelKind.ROBOT_NICHED)

    @property
    def is_neat(self) -> bool:
        return self.model in (ModelKind.NEAT_NICHED, ModelKind.NEAT_RANDOM_CONTROL)

    def run_seeds(self) -> List[int]:
        """每次运行的种子标识（base_seed + 运行序号）"""
        return [self.base_seed + i for i in range(self.runs)]


def coerce_params(
    model_cls: Type[BlockT], value: Union[BlockT, Mapping[str, Any], None]
) -> BlockT:
    """把映射或None转换为参数块，并把校验失败转换为配置错误

    Args:
        model_cls: 参数块类型
        value: 参数块实例、字典或None（使用默认值）

    Returns:
        参数块实例

    Raises:
        ConfigurationError: 参数违反约束
    """
    if isinstance(value, model_cls):
        return value
    try:
        return model_cls.model_validate(dict(value or {}))
    except ValidationError as e:
        errors = e.errors(include_url=False)
        raise ConfigurationError(f"{model_cls.__name__}参数不合法", errors) from e
