"""迷宫几何

迷宫由线段墙壁、起始位姿和包围盒组成。包围盒是所有几何元素的轴对齐外包矩形，
再向外扩展机器人半径。迷宫文件格式：

    # 注释
    start <x> <y> <heading_radians>
    wall <x1> <y1> <x2> <y2>
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import xxhash

from ..core.errors import MazeFormatError

DEFAULT_MAZE_FILE = Path(__file__).resolve().parent.parent / "data" / "hard_maze.txt"
DEFAULT_RADIUS = 4.0

_EPS = 1e-12


class StartPose(NamedTuple):
    """起始位姿"""

    x: float
    y: float
    heading: float


class Bounds(NamedTuple):
    """轴对齐包围盒"""

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    @property
    def extent(self) -> Tuple[float, float]:
        return self.max_x - self.min_x, self.max_y - self.min_y

    @property
    def center(self) -> Tuple[float, float]:
        return (self.min_x + self.max_x) / 2, (self.min_y + self.max_y) / 2

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return (x >= self.min_x) & (x <= self.max_x) & (y >= self.min_y) & (y <= self.max_y)


@dataclass(frozen=True, eq=False)
class Maze:
    """二维线段迷宫

    Attributes:
        walls: 形状为(m, 4)的墙壁线段 (x1, y1, x2, y2)
        start: 起始位姿
        bounds: 包围盒
        radius: 计算包围盒时使用的机器人半径
        source: 迷宫文件文本（用于计算内容摘要）
    """

    walls: np.ndarray
    start: StartPose
    bounds: Bounds
    radius: float
    source: str

    @classmethod
    def build(
        cls,
        walls: Sequence[Sequence[float]],
        start: Tuple[float, float, float],
        radius: float = DEFAULT_RADIUS,
        source: Optional[str] = None,
    ) -> "Maze":
        """由墙壁与起始位姿构建迷宫并校验

        Args:
            walls: 墙壁线段列表
            start: 起始位姿 (x, y, heading)
            radius: 机器人半径
            source: 原始文件文本，为None时使用规范化文本

        Returns:
            迷宫

        Raises:
            MazeFormatError: 几何不合法
        """
        if radius <= 0:
            raise MazeFormatError(f"机器人半径必须大于0: {radius}")
        segments = np.asarray(walls, dtype=np.float64).reshape(-1, 4)
        if not np.all(np.isfinite(segments)):
            raise MazeFormatError("墙壁坐标必须是有限数")
        pose = StartPose(*(float(v) for v in start))
        if not all(math.isfinite(v) for v in pose):
            raise MazeFormatError("起始位姿必须是有限数")

        xs = np.concatenate([segments[:, 0], segments[:, 2], [pose.x]])
        ys = np.concatenate([segments[:, 1], segments[:, 3], [pose.y]])
        bounds = Bounds(
            float(xs.min() - radius),
            float(ys.min() - radius),
            float(xs.max() + radius),
            float(ys.max() + radius),
        )

        if segments.size:
            clearance = point_segment_distance(
                np.array([[pose.x, pose.y]]), segments[:, :2], segments[:, 2:]
            )
            if float(clearance.min()) < radius:
                raise MazeFormatError(f"起始位置与墙壁重叠: ({pose.x}, {pose.y})")

        if source is None:
            source = format_maze(segments, pose)
        return cls(walls=segments, start=pose, bounds=bounds, radius=float(radius), source=source)

    @property
    def wall_count(self) -> int:
        return int(self.walls.shape[0])

    def digest(self) -> str:
        """迷宫文件内容的xxh64摘要"""
        return xxhash.xxh64(self.source.encode("utf-8")).hexdigest()

    def mirrored(self) -> "Maze":
        """关于x轴镜像的迷宫（y取反，朝向取反）"""
        walls = self.walls.copy()
        walls[:, 1] *= -1.0
        walls[:, 3] *= -1.0
        return Maze.build(walls, (self.start.x, -self.start.y, -self.start.heading), self.radius)


def format_maze(walls: np.ndarray, start: StartPose) -> str:
    """把迷宫写成文件格式的文本"""
    lines = [f"start {start.x!r} {start.y!r} {start.heading!r}"]
    lines.extend("wall " + " ".join(repr(float(v)) for v in row) for row in walls)
    return "\n".join(lines) + "\n"


def parse_maze(text: str, radius: float = DEFAULT_RADIUS) -> Maze:
    """解析迷宫文本

    Args:
        text: 迷宫文件内容
        radius: 机器人半径

    Returns:
        迷宫

    Raises:
        MazeFormatError: 格式错误
    """
    start: Optional[Tuple[float, float, float]] = None
    walls: List[List[float]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *fields = line.split()
        try:
            values = [float(v) for v in fields]
        except ValueError as e:
            raise MazeFormatError(f"第{lineno}行包含非数字坐标: {raw!r}") from e

        if keyword == "start":
            if start is not None:
                raise MazeFormatError(f"第{lineno}行重复定义了起始位姿")
            if len(values) != 3:
                raise MazeFormatError(f"第{lineno}行: start需要3个数值")
            start = (values[0], values[1], values[2])
        elif keyword == "wall":
            if len(values) != 4:
                raise MazeFormatError(f"第{lineno}行: wall需要4个数值")
            walls.append(values)
        else:
            raise MazeFormatError(f"第{lineno}行: 未知的关键字 {keyword!r}")

    if start is None:
        raise MazeFormatError("迷宫文件缺少start行")
    return Maze.build(walls, start, radius=radius, source=text)


def load_maze(path: Union[str, Path], radius: float = DEFAULT_RADIUS) -> Maze:
    """从文件加载迷宫

    Args:
        path: 迷宫文件路径
        radius: 机器人半径

    Returns:
        迷宫
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MazeFormatError(f"无法读取迷宫文件 {path}: {e}") from e
    return parse_maze(text, radius=radius)


def default_maze(radius: float = DEFAULT_RADIUS) -> Maze:
    """随包提供的多隔间迷宫"""
    return load_maze(DEFAULT_MAZE_FILE, radius=radius)


def point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """点到线段的距离

    Args:
        points: 形状(n, 2)
        a: 线段起点，形状(m, 2)
        b: 线段终点，形状(m, 2)

    Returns:
        形状(n, m)的距离矩阵
    """
    p = points[:, None, :]
    v = (b - a)[None, :, :]
    w = p - a[None, :, :]
    vv = np.maximum(np.sum(v * v, axis=-1), _EPS)
    t = np.clip(np.sum(w * v, axis=-1) / vv, 0.0, 1.0)
    diff = w - t[..., None] * v
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _cross(ax: np.ndarray, ay: np.ndarray, bx: np.ndarray, by: np.ndarray) -> np.ndarray:
    return ax * by - ay * bx


def _pairwise_point_segment(
    px: np.ndarray, py: np.ndarray, ax: np.ndarray, ay: np.ndarray, bx: np.ndarray, by: np.ndarray
) -> np.ndarray:
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = np.maximum(vx * vx + vy * vy, _EPS)
    t = np.clip((wx * vx + wy * vy) / vv, 0.0, 1.0)
    return np.hypot(wx - t * vx, wy - t * vy)


def segment_distance(p0: np.ndarray, p1: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """运动线段与每面墙之间的最短距离

    Args:
        p0: 运动起点，形状(n, 2)
        p1: 运动终点，形状(n, 2)
        walls: 墙壁，形状(m, 4)

    Returns:
        形状(n, m)的距离矩阵；相交时为0
    """
    x0, y0 = p0[:, 0:1], p0[:, 1:2]
    x1, y1 = p1[:, 0:1], p1[:, 1:2]
    ax, ay, bx, by = (walls[None, :, i] for i in range(4))

    dist = np.minimum(
        np.minimum(
            _pairwise_point_segment(x0, y0, ax, ay, bx, by),
            _pairwise_point_segment(x1, y1, ax, ay, bx, by),
        ),
        np.minimum(
            _pairwise_point_segment(ax, ay, x0, y0, x1, y1),
            _pairwise_point_segment(bx, by, x0, y0, x1, y1),
        ),
    )

    o1 = _cross(x1 - x0, y1 - y0, ax - x0, ay - y0)
    o2 = _cross(x1 - x0, y1 - y0, bx - x0, by - y0)
    o3 = _cross(bx - ax, by - ay, x0 - ax, y0 - ay)
    o4 = _cross(bx - ax, by - ay, x1 - ax, y1 - ay)
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    return np.where(crossing, 0.0, dist)


def raycast_batch(
    walls: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    angles: np.ndarray,
    sensor_range: float,
) -> np.ndarray:
    """成批计算测距传感器读数

    Args:
        walls: 墙壁，形状(m, 4)
        x: 射线起点x，形状(n,)
        y: 射线起点y，形状(n,)
        angles: 射线的绝对方向，形状(n, s)
        sensor_range: 传感器量程

    Returns:
        形状(n, s)的归一化距离，取值[0, 1]
    """
    n, s = angles.shape
    if walls.shape[0] == 0:
        return np.ones((n, s))

    dx = np.cos(angles)[..., None]
    dy = np.sin(angles)[..., None]
    ax, ay, bx, by = (walls[None, None, :, i] for i in range(4))
    ex, ey = bx - ax, by - ay
    qx = ax - x[:, None, None]
    qy = ay - y[:, None, None]

    denom = _cross(dx, dy, ex, ey)
    parallel = np.abs(denom) < _EPS
    safe = np.where(parallel, 1.0, denom)
    t = _cross(qx, qy, ex, ey) / safe
    u = _cross(qx, qy, dx, dy) / safe

    hit = (~parallel) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    distance = np.where(hit, t, np.inf).min(axis=-1)
    return np.minimum(distance, sensor_range) / sensor_range


def raycast(
    maze: Maze,
    origin: Tuple[float, float],
    direction: float,
    sensor_range: float = 100.0,
) -> float:
    """单条射线的归一化距离

    Args:
        maze: 迷宫
        origin: 射线起点
        direction: 射线方向（弧度）
        sensor_range: 传感器量程

    Returns:
        min(到最近墙壁的距离, 量程) / 量程
    """
    reading = raycast_batch(
        maze.walls,
        np.array([origin[0]], dtype=np.float64),
        np.array([origin[1]], dtype=np.float64),
        np.array([[direction]], dtype=np.float64),
        sensor_range,
    )
    return float(reading[0, 0])
