"""迷宫世界

线段迷宫、测距传感器、差速驱动机器人与行为生态位映射。
"""

from .geometry import (
    DEFAULT_MAZE_FILE,
    Bounds,
    Maze,
    StartPose,
    default_maze,
    load_maze,
    parse_maze,
    raycast,
    raycast_batch,
)
from .robot import (
    BatchController,
    BehaviorNiche,
    Controller,
    Evaluation,
    RobotState,
    evaluate_controller,
    niche_cells,
    niche_of,
    simulate_batch,
    step_robot,
)

__all__ = [
    "DEFAULT_MAZE_FILE",
    "BatchController",
    "BehaviorNiche",
    "Bounds",
    "Controller",
    "Evaluation",
    "Maze",
    "RobotState",
    "StartPose",
    "default_maze",
    "evaluate_controller",
    "load_maze",
    "niche_cells",
    "niche_of",
    "parse_maze",
    "raycast",
    "raycast_batch",
    "simulate_batch",
    "step_robot",
]
