"""基因型查找表

把基因型空间中每个基因型映射到它的行为生态位与演化能力。构建分两个阶段：
先仿真得到所有基因型的生态位，再从已存的生态位统计每个基因型的单连接突变
邻居落入多少个不同生态位。

分片文件（小端）：32字节文件头 ``<4sHQQ10x``（魔数 ``EVLT``、格式版本、
起始编号、记录数、保留填充），随后是每条4字节的记录：uint16生态位、
uint8演化能力、uint8标志（位0为有效）。
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import orjson
import xxhash
from pydantic import BaseModel, ConfigDict, ValidationError
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from ..config.settings import RobotParams
from ..core.errors import TableIntegrityError
from ..core.logger import get_logger
from ..maze.geometry import Maze
from ..maze.robot import niche_cells, simulate_batch
from .genome import GenotypeSpace
from .network import DEFAULT_STEEPNESS, FixedAnnBatch

logger = get_logger(__name__)

MAGIC = b"EVLT"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHQQ10x")
FLAG_VALID = 1

RECORD_DTYPE = np.dtype([("niche", "<u2"), ("evolvability", "u1"), ("flags", "u1")])

PathLike = Union[str, Path]


@dataclass(frozen=True)
class TableSummary:
    """查找表在整个空间上的演化能力分布"""

    size: int
    min_evolvability: int
    max_evolvability: int
    mean_evolvability: float
    std_evolvability: float
    histogram: Dict[int, int]
    distinct_niches: int


class LookupTable:
    """基因型局部编号 -> (生态位, 演化能力)"""

    def __init__(
        self,
        space: GenotypeSpace,
        niches: np.ndarray,
        evolvability: np.ndarray,
        maze_digest: Optional[str] = None,
    ):
        """初始化查找表

        Args:
            space: 基因型空间
            niches: 每个局部编号的生态位格子
            evolvability: 每个局部编号的演化能力
            maze_digest: 构建时所用迷宫的摘要
        """
        niches = np.asarray(niches)
        evolvability = np.asarray(evolvability)
        if niches.shape != (space.size,) or evolvability.shape != (space.size,):
            raise TableIntegrityError(
                f"查找表大小与空间不一致: {niches.shape}, {evolvability.shape} vs {space.size}"
            )
        self.space = space
        self.niches = niches
        self.evolvability = evolvability
        self.maze_digest = maze_digest

    @classmethod
    def from_records(
        cls, space: GenotypeSpace, records: np.ndarray, maze_digest: Optional[str] = None
    ) -> "LookupTable":
        if np.any((records["flags"] & FLAG_VALID) == 0):
            raise TableIntegrityError("查找表中存在无效记录")
        return cls(space, records["niche"], records["evolvability"], maze_digest)

    @property
    def size(self) -> int:
        return self.space.size

    def niche_of(self, ids: np.ndarray) -> np.ndarray:
        return self.niches[ids]

    def evolvability_of(self, ids: np.ndarray) -> np.ndarray:
        return self.evolvability[ids]

    def records(self) -> np.ndarray:
        """结构化记录数组"""
        out = np.empty(self.size, dtype=RECORD_DTYPE)
        out["niche"] = self.niches
        out["evolvability"] = self.evolvability
        out["flags"] = FLAG_VALID
        return out

    def summary(self) -> TableSummary:
        """演化能力分布与可达生态位数"""
        evo = self.evolvability.astype(np.int64)
        counts = np.bincount(evo)
        return TableSummary(
            size=self.size,
            min_evolvability=int(evo.min()),
            max_evolvability=int(evo.max()),
            mean_evolvability=float(evo.mean()),
            std_evolvability=float(evo.std()),
            histogram={int(v): int(c) for v, c in enumerate(counts) if c},
            distinct_niches=int(np.unique(self.niches).size),
        )


def simulate_niches(
    maze: Maze,
    robot: RobotParams,
    space: GenotypeSpace,
    local_ids: np.ndarray,
    steepness: float = DEFAULT_STEEPNESS,
    batch_size: int = 8192,
) -> np.ndarray:
    """第一阶段：仿真每个基因型并返回其生态位格子

    Args:
        maze: 迷宫
        robot: 机器人参数（3个传感器）
        space: 基因型空间
        local_ids: 局部编号
        steepness: sigmoid陡度
        batch_size: 每批同时仿真的网络数

    Returns:
        uint16生态位数组
    """
    ids = np.asarray(local_ids, dtype=np.int64)
    cells = np.empty(ids.size, dtype=np.uint16)
    for lo in range(0, ids.size, batch_size):
        chunk = ids[lo : lo + batch_size]
        controller = FixedAnnBatch(space.weights(chunk), steepness)
        final = simulate_batch(maze, controller, robot, chunk.size)
        cells[lo : lo + chunk.size] = niche_cells(final, maze.bounds)
    return cells


def evolvability_counts(
    niches: np.ndarray,
    space: GenotypeSpace,
    local_ids: np.ndarray,
    batch_size: int = 65536,
    index: Optional[np.ndarray] = None,
) -> np.ndarray:
    """第二阶段：邻居落入的不同生态位数

    Args:
        niches: 生态位；index为None时按局部编号覆盖整个空间
        space: 基因型空间
        local_ids: 需要计算的局部编号
        batch_size: 每批处理的基因型数
        index: 与niches逐项对应的已排序局部编号，须包含所有邻居

    Returns:
        uint8演化能力数组
    """
    ids = np.asarray(local_ids, dtype=np.int64)
    out = np.empty(ids.size, dtype=np.uint8)
    for lo in range(0, ids.size, batch_size):
        chunk = ids[lo : lo + batch_size]
        neighbors = space.neighbors(chunk)
        if index is not None:
            neighbors = np.searchsorted(index, neighbors)
        cells = np.sort(niches[neighbors], axis=1)
        out[lo : lo + chunk.size] = 1 + np.count_nonzero(np.diff(cells, axis=1), axis=1)
    return out


def tabulate(
    maze: Maze,
    robot: RobotParams,
    space: GenotypeSpace,
    id_range: Optional[Tuple[int, int]] = None,
    steepness: float = DEFAULT_STEEPNESS,
    batch_size: int = 8192,
) -> np.ndarray:
    """计算一个编号区间的查找表记录

    区间外的邻居也会被仿真，以便得到区间内每个基因型的演化能力。工作数组只覆盖
    区间及其邻居，大小约为区间长度乘以(1 + 2 * 自由基因数)，与空间大小无关。

    Args:
        maze: 迷宫
        robot: 机器人参数
        space: 基因型空间
        id_range: 局部编号区间 [start, stop)，为None时为整个空间
        steepness: sigmoid陡度
        batch_size: 每批同时仿真的网络数

    Returns:
        按编号顺序排列的结构化记录

    Raises:
        ConfigurationError: 区间与空间不一致
    """
    start, stop = id_range if id_range is not None else (0, space.size)
    space.check_range(start, stop)
    ids = np.arange(start, stop, dtype=np.int64)

    needed = np.unique(np.concatenate([ids, space.neighbors(ids).ravel()]))
    niches = simulate_niches(maze, robot, space, needed, steepness, batch_size)

    records = np.empty(ids.size, dtype=RECORD_DTYPE)
    records["niche"] = niches[np.searchsorted(needed, ids)]
    records["evolvability"] = evolvability_counts(niches, space, ids, index=needed)
    records["flags"] = FLAG_VALID
    return records


@retry(
    retry=retry_if_exception_type(OSError),
    stop=stop_after_attempt(3),
    wait=wait_exponential(multiplier=0.1, max=2.0),
    reraise=True,
)
def write_shard(path: PathLike, start: int, records: np.ndarray) -> str:
    """写出一个分片文件

    Args:
        path: 分片路径
        start: 起始局部编号
        records: 结构化记录

    Returns:
        文件内容的xxh64摘要
    """
    payload = HEADER.pack(MAGIC, FORMAT_VERSION, start, records.size) + records.astype(
        RECORD_DTYPE, copy=False
    ).tobytes()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(target.suffix + ".tmp")
    tmp.write_bytes(payload)
    tmp.replace(target)
    return xxhash.xxh64(payload).hexdigest()


def read_shard(path: PathLike) -> Tuple[int, np.ndarray]:
    """以内存映射方式读取分片

    Args:
        path: 分片路径

    Returns:
        (起始编号, 记录数组)

    Raises:
        TableIntegrityError: 魔数、版本或长度不正确
    """
    target = Path(path)
    try:
        with target.open("rb") as f:
            header = f.read(HEADER.size)
    except OSError as e:
        raise TableIntegrityError(f"无法读取分片 {target}: {e}") from e

    if len(header) != HEADER.size:
        raise TableIntegrityError(f"分片文件头不完整: {target}")
    magic, version, start, count = HEADER.unpack(header)
    if magic != MAGIC:
        raise TableIntegrityError(f"分片魔数错误: {target}")
    if version != FORMAT_VERSION:
        raise TableIntegrityError(f"不支持的分片格式版本{version}: {target}")
    expected = HEADER.size + count * RECORD_DTYPE.itemsize
    if target.stat().st_size != expected:
        raise TableIntegrityError(f"分片长度与记录数不一致: {target}")
    if count == 0:
        return start, np.empty(0, dtype=RECORD_DTYPE)
    records = np.memmap(target, dtype=RECORD_DTYPE, mode="r", offset=HEADER.size, shape=(count,))
    return start, records


class ShardEntry(BaseModel):
    """清单中的一个分片"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    file: str
    start: int
    count: int
    digest: str


class TableManifest(BaseModel):
    """查找表清单"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    format_version: int = FORMAT_VERSION
    mask: str
    space_size: int
    shard_size: int
    maze_digest: str
    steepness: float
    robot: Dict[str, Any]
    shards: List[ShardEntry]


def verify_coverage(entries: List[Tuple[int, int]], size: int) -> None:
    """校验分片恰好覆盖 [0, size) 一次

    Args:
        entries: (起始编号, 记录数) 列表
        size: 空间大小

    Raises:
        TableIntegrityError: 存在缺口或重叠
    """
    expected = 0
    for start, count in sorted(entries):
        if start < expected:
            raise TableIntegrityError(f"分片重叠: 起始{start}早于{expected}")
        if start > expected:
            raise TableIntegrityError(f"分片缺口: [{expected}, {start})")
        expected = start + count
    if expected != size:
        raise TableIntegrityError(f"分片覆盖到{expected}，空间大小为{size}")


def write_manifest(path: PathLike, manifest: TableManifest) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(
        orjson.dumps(
            manifest.model_dump(mode="json"),
            option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS,
        )
    )
    return target


def read_manifest(path: PathLike) -> TableManifest:
    """读取并校验清单结构"""
    try:
        data = orjson.loads(Path(path).read_bytes())
        return TableManifest.model_validate(data)
    except (OSError, orjson.JSONDecodeError, ValidationError) as e:
        raise TableIntegrityError(f"无法读取查找表清单 {path}: {e}") from e


def load_table(manifest_path: PathLike, maze: Optional[Maze] = None) -> LookupTable:
    """加载并校验查找表

    Args:
        manifest_path: 清单路径
        maze: 预期的迷宫；给出时校验其摘要与清单一致

    Returns:
        查找表

    Raises:
        TableIntegrityError: 摘要不匹配、分片缺失/重叠或损坏
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    if manifest.format_version != FORMAT_VERSION:
        raise TableIntegrityError(f"不支持的清单格式版本: {manifest.format_version}")
    if maze is not None and maze.digest() != manifest.maze_digest:
        raise TableIntegrityError(
            f"迷宫摘要不匹配: 清单为{manifest.maze_digest}，当前为{maze.digest()}"
        )

    space = GenotypeSpace(manifest.mask)
    if space.size != manifest.space_size:
        raise TableIntegrityError(f"清单空间大小{manifest.space_size}与掩码不一致")
    verify_coverage([(s.start, s.count) for s in manifest.shards], space.size)

    merged = np.empty(space.size, dtype=RECORD_DTYPE)
    for entry in manifest.shards:
        shard_path = manifest_path.parent / entry.file
        try:
            digest = xxhash.xxh64(shard_path.read_bytes()).hexdigest()
        except OSError as e:
            raise TableIntegrityError(f"分片缺失: {entry.file}") from e
        if digest != entry.digest:
            raise TableIntegrityError(f"分片摘要不匹配: {entry.file}")
        start, records = read_shard(shard_path)
        if start != entry.start or records.size != entry.count:
            raise TableIntegrityError(f"分片文件头与清单不一致: {entry.file}")
        merged[start : start + records.size] = records

    logger.info("table_loaded", manifest=str(manifest_path), size=space.size, mask=space.mask)
    return LookupTable.from_records(space, merged, manifest.maze_digest)
