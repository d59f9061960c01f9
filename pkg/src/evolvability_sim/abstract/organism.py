"""抽象模型的个体与种群

个体的基因型是一个整数格点生态位加一个可遗传的演化能力（每代发生生态位移动的概率）。
种群按列存储为numpy数组，便于向量化地处理数万个个体。
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..core.errors import ConfigurationError

# 生态位键：x * 2^32 + (y + 2^31)，把二维格点压缩成一个int64
_KEY_SHIFT = np.int64(2**32)
_KEY_OFFSET = np.int64(2**31)


@dataclass(frozen=True)
class AbstractOrganism:
    """抽象模型中的单个个体"""

    niche: Tuple[int, int]
    evolvability: float

    def __post_init__(self):
        if not 0.0 <= self.evolvability <= 1.0:
            raise ConfigurationError(f"演化能力必须在[0, 1]内: {self.evolvability}")
        x, y = self.niche
        if int(x) != x or int(y) != y:
            raise ConfigurationError(f"生态位坐标必须是整数: {self.niche}")
        object.__setattr__(self, "niche", (int(x), int(y)))


def niche_key(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """把格点坐标压缩为一维整数键"""
    return np.asarray(x, dtype=np.int64) * _KEY_SHIFT + (
        np.asarray(y, dtype=np.int64) + _KEY_OFFSET
    )


@dataclass
class Population:
    """按列存储的种群

    Attributes:
        x: 生态位x坐标
        y: 生态位y坐标
        evo: 演化能力
        generation: 当前代数
    """

    x: np.ndarray
    y: np.ndarray
    evo: np.ndarray
    generation: int = 0
    _size: int = field(init=False, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.evo = np.asarray(self.evo, dtype=np.float64)
        if not (self.x.shape == self.y.shape == self.evo.shape) or self.x.ndim != 1:
            raise ValueError("x、y与evo必须是等长一维数组")
        self._size = int(self.x.size)

    @classmethod
    def founders(
        cls, count: int, evolvability: float, niche: Tuple[int, int] = (0, 0)
    ) -> "Population":
        """创建count个完全相同的初始个体

        Args:
            count: 个体数
            evolvability: 初始演化能力
            niche: 初始生态位

        Returns:
            第0代种群
        """
        return cls(
            x=np.full(count, niche[0], dtype=np.int64),
            y=np.full(count, niche[1], dtype=np.int64),
            evo=np.full(count, evolvability, dtype=np.float64),
        )

    @classmethod
    def from_organisms(
        cls, organisms: List[AbstractOrganism], generation: int = 0
    ) -> "Population":
        """从个体列表构建种群"""
        return cls(
            x=np.array([o.niche[0] for o in organisms], dtype=np.int64),
            y=np.array([o.niche[1] for o in organisms], dtype=np.int64),
            evo=np.array([o.evolvability for o in organisms], dtype=np.float64),
            generation=generation,
        )

    def __len__(self) -> int:
        return self._size

    @property
    def size(self) -> int:
        return self._size

    def points(self) -> np.ndarray:
        """形状为(n, 2)的生态位格点"""
        return np.stack([self.x, self.y], axis=1)

    def niche_keys(self) -> np.ndarray:
        return niche_key(self.x, self.y)

    def organisms(self) -> List[AbstractOrganism]:
        """展开为个体列表（仅用于小种群）"""
        return [
            AbstractOrganism(niche=(int(x), int(y)), evolvability=float(e))
            for x, y, e in zip(self.x, self.y, self.evo)
        ]

    def max_occupancy(self) -> int:
        """单个生态位内的最大个体数"""
        if self._size == 0:
            return 0
        _, counts = np.unique(self.niche_keys(), return_counts=True)
        return int(counts.max())
