"""轮式机器人仿真

差速驱动运动学、测距传感器、轴分离滑动的碰撞处理，以及把最终位置映射到
20×20行为生态位网格。仿真本身不使用随机数，是 (迷宫, 控制器, 参数) 的纯函数。

控制器以批量方式调用：``reset(n)`` 清零n个网络的状态，``activate(sensors)``
接收形状(n, 传感器数)的读数并返回形状(n, 2)的左右电机输出。
"""

from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence, Tuple

import numpy as np

from ..analysis.niches import ROBOT_GRID
from ..config.settings import RobotParams
from ..core.errors import EvaluationError
from .geometry import Bounds, Maze, raycast_batch, segment_distance


class BatchController(Protocol):
    """批量控制器接口"""

    def reset(self, count: int) -> None: ...

    def activate(self, sensors: np.ndarray) -> np.ndarray: ...


class Controller(Protocol):
    """单个控制器接口：把传感器向量映射为 (左, 右) 电机输出"""

    def reset(self) -> None: ...

    def activate(self, sensors: np.ndarray) -> Sequence[float]: ...


@dataclass(frozen=True)
class RobotState:
    """机器人状态"""

    x: float
    y: float
    heading: float
    radius: float = 4.0

    @property
    def position(self) -> Tuple[float, float]:
        return self.x, self.y


@dataclass(frozen=True)
class BehaviorNiche:
    """20×20网格中的行为生态位格子"""

    cx: int
    cy: int

    def __post_init__(self):
        if not (0 <= self.cx < ROBOT_GRID and 0 <= self.cy < ROBOT_GRID):
            raise ValueError(f"格子越界: ({self.cx}, {self.cy})")

    @property
    def cell_id(self) -> int:
        return self.cy * ROBOT_GRID + self.cx

    @classmethod
    def from_cell_id(cls, cell_id: int) -> "BehaviorNiche":
        return cls(cx=int(cell_id) % ROBOT_GRID, cy=int(cell_id) // ROBOT_GRID)


class Evaluation(NamedTuple):
    """一次试验的结果"""

    position: Tuple[float, float]
    niche: BehaviorNiche


def _blocked(maze: Maze, p0: np.ndarray, p1: np.ndarray, radius: float) -> np.ndarray:
    """运动扫过的机体是否与墙壁重叠或离开包围盒"""
    outside = ~maze.bounds.contains(p1[:, 0], p1[:, 1])
    if maze.wall_count == 0:
        return outside
    clearance = segment_distance(p0, p1, maze.walls).min(axis=1)
    return outside | (clearance < radius)


def step_batch(
    maze: Maze,
    x: np.ndarray,
    y: np.ndarray,
    heading: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    params: RobotParams,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """成批推进一个时间步

    先转向再前进；若整步移动会碰撞，依次尝试只沿x移动、只沿y移动，
    都碰撞时位置保持不变。

    Returns:
        新的 (x, y, heading)
    """
    heading = heading + (left - right) * params.max_turn
    speed = (left + right) * 0.5 * params.max_speed
    dx = np.cos(heading) * speed
    dy = np.sin(heading) * speed

    start = np.stack([x, y], axis=1)
    new_x = x + dx
    new_y = y + dy
    blocked = _blocked(maze, start, np.stack([new_x, new_y], axis=1), params.radius)

    idx = np.flatnonzero(blocked)
    if idx.size:
        sub = start[idx]
        x_only = np.stack([x[idx] + dx[idx], y[idx]], axis=1)
        y_only = np.stack([x[idx], y[idx] + dy[idx]], axis=1)
        x_ok = ~_blocked(maze, sub, x_only, params.radius)
        y_ok = ~_blocked(maze, sub, y_only, params.radius)

        new_x[idx] = np.where(x_ok, x_only[:, 0], x[idx])
        new_y[idx] = np.where(x_ok, y[idx], np.where(y_ok, y_only[:, 1], y[idx]))

    return new_x, new_y, heading


def step_robot(
    maze: Maze, state: RobotState, left: float, right: float, params: RobotParams
) -> RobotState:
    """推进单个机器人一个时间步

    Args:
        maze: 迷宫
        state: 当前状态
        left: 左电机输出，[0, 1]
        right: 右电机输出，[0, 1]
        params: 机器人参数

    Returns:
        新状态
    """
    x, y, heading = step_batch(
        maze,
        np.array([state.x]),
        np.array([state.y]),
        np.array([state.heading]),
        np.array([float(left)]),
        np.array([float(right)]),
        params,
    )
    return RobotState(
        x=float(x[0]), y=float(y[0]), heading=float(heading[0]), radius=params.radius
    )


def sense_batch(
    maze: Maze, x: np.ndarray, y: np.ndarray, heading: np.ndarray, params: RobotParams
) -> np.ndarray:
    """所有测距传感器的归一化读数，形状(n, 传感器数)"""
    angles = heading[:, None] + np.asarray(params.sensor_angles, dtype=np.float64)[None, :]
    return raycast_batch(maze.walls, x, y, angles, params.sensor_range)


def simulate_batch(
    maze: Maze, controller: BatchController, params: RobotParams, count: int
) -> np.ndarray:
    """成批运行试验：感知 → 激活 → 移动，共timesteps步

    Args:
        maze: 迷宫
        controller: 批量控制器
        params: 机器人参数
        count: 同时仿真的机器人数

    Returns:
        形状(count, 2)的最终位置

    Raises:
        EvaluationError: 控制器激活失败或输出不合法
    """
    x = np.full(count, maze.start.x, dtype=np.float64)
    y = np.full(count, maze.start.y, dtype=np.float64)
    heading = np.full(count, maze.start.heading, dtype=np.float64)

    try:
        controller.reset(count)
    except Exception as e:
        raise EvaluationError(f"控制器重置失败: {e}") from e

    for _ in range(params.timesteps):
        sensors = sense_batch(maze, x, y, heading, params)
        try:
            motors = np.asarray(controller.activate(sensors), dtype=np.float64)
        except Exception as e:
            raise EvaluationError(f"控制器激活失败: {e}") from e
        if motors.shape != (count, 2) or not np.all(np.isfinite(motors)):
            raise EvaluationError(f"控制器输出不合法: 形状{motors.shape}")
        motors = np.clip(motors, 0.0, 1.0)
        x, y, heading = step_batch(maze, x, y, heading, motors[:, 0], motors[:, 1], params)

    return np.stack([x, y], axis=1)


class _SingleController:
    """把单个控制器包装为批量接口"""

    def __init__(self, controller: Controller):
        self._controller = controller

    def reset(self, count: int) -> None:
        self._controller.reset()

    def activate(self, sensors: np.ndarray) -> np.ndarray:
        return np.asarray(self._controller.activate(sensors[0]), dtype=np.float64).reshape(1, 2)


def evaluate_controller(maze: Maze, controller: Controller, params: RobotParams) -> Evaluation:
    """运行一次试验并返回最终位置与行为生态位

    Args:
        maze: 迷宫
        controller: 有状态的控制器
        params: 机器人参数

    Returns:
        试验结果

    Raises:
        EvaluationError: 控制器评估失败
    """
    final = simulate_batch(maze, _SingleController(controller), params, 1)
    position = (float(final[0, 0]), float(final[0, 1]))
    return Evaluation(position=position, niche=niche_of(position, maze.bounds))


def niche_cells(positions: np.ndarray, bounds: Bounds) -> np.ndarray:
    """成批计算格子编号（cy * 20 + cx）

    Args:
        positions: 形状(n, 2)的位置
        bounds: 包围盒

    Returns:
        格子编号数组
    """
    width, height = bounds.extent
    fx = (positions[:, 0] - bounds.min_x) / width
    fy = (positions[:, 1] - bounds.min_y) / height
    cx = np.clip(np.floor(ROBOT_GRID * fx), 0, ROBOT_GRID - 1).astype(np.int64)
    cy = np.clip(np.floor(ROBOT_GRID * fy), 0, ROBOT_GRID - 1).astype(np.int64)
    return cy * ROBOT_GRID + cx


def niche_of(position: Tuple[float, float], bounds: Bounds) -> BehaviorNiche:
    """最终位置所在的行为生态位，上边界归入第19格"""
    cell = niche_cells(np.array([position], dtype=np.float64), bounds)[0]
    return BehaviorNiche.from_cell_id(int(cell))
