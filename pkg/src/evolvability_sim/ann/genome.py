"""固定拓扑ANN的基因型空间

18个三值连接基因，每个基因取 中性(0)、抑制(1)、兴奋(2) 之一，对应权重
0.0、-1.0、+1.0。基因型编号是以3为底的位置编码，基因0为最低位。

连接布局（3输入、2隐藏、2输出）：

    基因  0-5   输入i -> 隐藏j    下标 i*2 + j
    基因  6-9   隐藏i -> 隐藏j    下标 6 + i*2 + j
    基因 10-13  隐藏i -> 输出j    下标 10 + i*2 + j
    基因 14-17  输出i -> 输出j    下标 14 + i*2 + j
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional, Tuple

import numpy as np

from ..config.settings import DEFAULT_MASK, N_GENES
from ..core.errors import ConfigurationError

N_INPUTS = 3
N_HIDDEN = 2
N_OUTPUTS = 2

SPACE_SIZE = 3**N_GENES
POWERS = 3 ** np.arange(N_GENES, dtype=np.int64)

# 三值到权重的映射，按三值下标
TRIT_WEIGHTS = np.array([0.0, -1.0, 1.0])


class Gene(IntEnum):
    """连接基因的取值（即三值编码）"""

    NEUTRAL = 0
    INHIBITORY = 1
    EXCITATORY = 2

    @property
    def weight(self) -> float:
        return float(TRIT_WEIGHTS[self.value])


def _block(offset: int, n_src: int, n_dst: int) -> List[Tuple[int, int, int]]:
    return [(offset + i * n_dst + j, i, j) for i in range(n_src) for j in range(n_dst)]


# (基因下标, 源神经元, 目标神经元)
INPUT_HIDDEN = _block(0, N_INPUTS, N_HIDDEN)
HIDDEN_HIDDEN = _block(6, N_HIDDEN, N_HIDDEN)
HIDDEN_OUTPUT = _block(10, N_HIDDEN, N_OUTPUTS)
OUTPUT_OUTPUT = _block(14, N_OUTPUTS, N_OUTPUTS)


def _mirror_permutation() -> np.ndarray:
    """左右镜像下的基因置换：输入反序，两个隐藏与两个输出互换"""
    perm = np.empty(N_GENES, dtype=np.int64)
    for gene, i, j in INPUT_HIDDEN:
        perm[gene] = (N_INPUTS - 1 - i) * N_HIDDEN + (N_HIDDEN - 1 - j)
    for block, offset in ((HIDDEN_HIDDEN, 6), (HIDDEN_OUTPUT, 10), (OUTPUT_OUTPUT, 14)):
        for gene, i, j in block:
            perm[gene] = offset + (1 - i) * 2 + (1 - j)
    return perm


MIRROR_PERMUTATION = _mirror_permutation()


@dataclass(frozen=True)
class FixedAnnGenome:
    """固定拓扑网络的基因组"""

    genes: Tuple[int, ...]

    def __post_init__(self):
        genes = tuple(int(g) for g in self.genes)
        if len(genes) != N_GENES:
            raise ValueError(f"基因组长度必须为{N_GENES}: {len(genes)}")
        if any(g not in (0, 1, 2) for g in genes):
            raise ValueError(f"基因取值必须为0、1、2: {genes}")
        object.__setattr__(self, "genes", genes)

    @classmethod
    def neutral(cls) -> "FixedAnnGenome":
        return cls(genes=(0,) * N_GENES)

    def weights(self) -> np.ndarray:
        """18个连接权重"""
        return TRIT_WEIGHTS[np.asarray(self.genes)]

    def mirrored(self) -> "FixedAnnGenome":
        """左右镜像的基因组"""
        mirrored = np.empty(N_GENES, dtype=np.int64)
        mirrored[MIRROR_PERMUTATION] = self.genes
        return FixedAnnGenome(genes=tuple(mirrored))

    def with_gene(self, index: int, value: int) -> "FixedAnnGenome":
        genes = list(self.genes)
        genes[index] = value
        return FixedAnnGenome(genes=tuple(genes))


def encode(genome: FixedAnnGenome) -> int:
    """基因组 -> 基因型编号"""
    return int(np.dot(np.asarray(genome.genes, dtype=np.int64), POWERS))


def decode(genotype_id: int) -> FixedAnnGenome:
    """基因型编号 -> 基因组

    Raises:
        ValueError: 编号不在 [0, 3^18) 内
    """
    genotype_id = int(genotype_id)
    if not 0 <= genotype_id < SPACE_SIZE:
        raise ValueError(f"基因型编号超出范围[0, {SPACE_SIZE}): {genotype_id}")
    return FixedAnnGenome(genes=tuple(int(t) for t in decode_batch(np.array([genotype_id]))[0]))


def encode_batch(trits: np.ndarray) -> np.ndarray:
    """形状(n, 18)的三值矩阵 -> 编号"""
    return np.asarray(trits, dtype=np.int64) @ POWERS


def decode_batch(ids: np.ndarray) -> np.ndarray:
    """编号 -> 形状(n, 18)的三值矩阵"""
    ids = np.asarray(ids, dtype=np.int64)
    return ((ids[:, None] // POWERS[None, :]) % 3).astype(np.int8)


def single_mutation_neighbors(
    genome: FixedAnnGenome, space: Optional["GenotypeSpace"] = None
) -> List[FixedAnnGenome]:
    """所有单连接突变

    Args:
        genome: 基因组
        space: 缩减空间，只变异其自由基因；为None时为完整空间（36个邻居）

    Returns:
        邻居列表，每个自由基因依次给出两个替代值
    """
    genes = range(N_GENES) if space is None else space.free_genes
    return [
        genome.with_gene(g, (genome.genes[g] + shift) % 3) for g in genes for shift in (1, 2)
    ]


class GenotypeSpace:
    """由基因固定掩码诱导的基因型子空间

    掩码是18个来自 ``012*`` 的字符：``*`` 为自由基因，数字把该基因固定为对应三值。
    子空间按局部编号索引：自由基因按位置升序排列，第一个自由基因为最低位。
    """

    def __init__(self, mask: str = DEFAULT_MASK):
        if len(mask) != N_GENES or any(c not in "012*" for c in mask):
            raise ConfigurationError(f"掩码必须是{N_GENES}个来自'012*'的字符: {mask!r}")
        free = [i for i, c in enumerate(mask) if c == "*"]
        if not free:
            raise ConfigurationError("掩码至少需要一个自由基因")

        self.mask = mask
        self.free_genes: Tuple[int, ...] = tuple(free)
        self.k = len(free)
        self.size = 3**self.k
        self.local_powers = 3 ** np.arange(self.k, dtype=np.int64)

        pinned = np.array([0 if c == "*" else int(c) for c in mask], dtype=np.int64)
        self._base_id = int(pinned @ POWERS)
        self._free_powers = POWERS[list(free)]

    @classmethod
    def full(cls) -> "GenotypeSpace":
        return cls("*" * N_GENES)

    def __repr__(self) -> str:
        return f"GenotypeSpace(mask={self.mask!r}, size={self.size})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GenotypeSpace) and other.mask == self.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    @property
    def neighbor_count(self) -> int:
        return 2 * self.k

    def check_range(self, start: int, stop: int) -> None:
        """校验局部编号区间

        Raises:
            ConfigurationError: 区间与空间不一致
        """
        if not 0 <= start <= stop <= self.size:
            raise ConfigurationError(f"编号区间[{start}, {stop})超出空间[0, {self.size})")

    def local_trits(self, local_ids: np.ndarray) -> np.ndarray:
        """局部编号 -> 形状(n, k)的自由基因三值"""
        ids = np.asarray(local_ids, dtype=np.int64)
        return (ids[:, None] // self.local_powers[None, :]) % 3

    def to_global(self, local_ids: np.ndarray) -> np.ndarray:
        """局部编号 -> 完整空间的基因型编号"""
        return self._base_id + self.local_trits(local_ids) @ self._free_powers

    def to_local(self, global_ids: np.ndarray) -> np.ndarray:
        """完整空间编号 -> 局部编号

        Raises:
            ValueError: 固定基因与掩码不一致
        """
        trits = decode_batch(global_ids).astype(np.int64)
        pinned = [i for i in range(N_GENES) if i not in self.free_genes]
        expected = np.array([int(self.mask[i]) for i in pinned], dtype=np.int64)
        if pinned and np.any(trits[:, pinned] != expected[None, :]):
            raise ValueError("基因型的固定基因与掩码不一致")
        return trits[:, list(self.free_genes)] @ self.local_powers

    def genome(self, local_id: int) -> FixedAnnGenome:
        return decode(int(self.to_global(np.array([local_id]))[0]))

    def weights(self, local_ids: np.ndarray) -> np.ndarray:
        """形状(n, 18)的连接权重"""
        return TRIT_WEIGHTS[decode_batch(self.to_global(local_ids))]

    def neighbors(self, local_ids: np.ndarray) -> np.ndarray:
        """所有单连接突变的局部编号

        Args:
            local_ids: 形状(n,)

        Returns:
            形状(n, 2k)，列按 (自由基因, 替代值) 排列
        """
        ids = np.asarray(local_ids, dtype=np.int64)
        trits = self.local_trits(ids)
        columns = []
        for j in range(self.k):
            for shift in (1, 2):
                delta = (trits[:, j] + shift) % 3 - trits[:, j]
                columns.append(ids + delta * self.local_powers[j])
        return np.stack(columns, axis=1)

    def random_neighbor(self, local_ids: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """每个基因型的一个均匀随机单连接突变"""
        ids = np.asarray(local_ids, dtype=np.int64)
        n = ids.size
        gene = rng.integers(0, self.k, size=n)
        shift = rng.integers(1, 3, size=n)
        power = self.local_powers[gene]
        trit = (ids // power) % 3
        return ids + ((trit + shift) % 3 - trit) * power

