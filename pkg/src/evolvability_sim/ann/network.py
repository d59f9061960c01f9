"""固定拓扑循环网络的激活

每个时间步同步更新：隐藏神经元读取当前输入与上一步的隐藏激活，输出神经元
读取本步的隐藏激活与上一步的输出激活，再经过陡化sigmoid。
"""

from typing import NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .genome import N_GENES, N_HIDDEN, N_INPUTS, N_OUTPUTS, FixedAnnGenome

DEFAULT_STEEPNESS = 4.9


def sigmoid(x: np.ndarray, steepness: float = DEFAULT_STEEPNESS) -> np.ndarray:
    """陡化sigmoid：1 / (1 + e^(-steepness * x))"""
    return expit(steepness * np.asarray(x, dtype=np.float64))


class NetworkState(NamedTuple):
    """网络的循环状态"""

    hidden: np.ndarray
    output: np.ndarray

    @classmethod
    def zeros(cls) -> "NetworkState":
        return cls(hidden=np.zeros(N_HIDDEN), output=np.zeros(N_OUTPUTS))


def _split(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """把形状(n, 18)的权重拆成四个连接矩阵 (n, 源, 目标)"""
    n = weights.shape[0]
    w_ih = weights[:, 0:6].reshape(n, N_INPUTS, N_HIDDEN)
    w_hh = weights[:, 6:10].reshape(n, N_HIDDEN, N_HIDDEN)
    w_ho = weights[:, 10:14].reshape(n, N_HIDDEN, N_OUTPUTS)
    w_oo = weights[:, 14:18].reshape(n, N_OUTPUTS, N_OUTPUTS)
    return w_ih, w_hh, w_ho, w_oo


def activate(
    genome: FixedAnnGenome,
    inputs: Sequence[float],
    state: NetworkState,
    steepness: float = DEFAULT_STEEPNESS,
) -> Tuple[Tuple[float, float], NetworkState]:
    """单步激活

    Args:
        genome: 基因组
        inputs: 3个传感器读数，[0, 1]
        state: 上一步的隐藏与输出激活（试验开始时全为0）
        steepness: sigmoid陡度

    Returns:
        ((左电机, 右电机), 新状态)
    """
    batch = FixedAnnBatch(genome.weights()[None, :], steepness)
    batch.hidden = np.asarray(state.hidden, dtype=np.float64)[None, :].copy()
    batch.output = np.asarray(state.output, dtype=np.float64)[None, :].copy()
    motors = batch.activate(np.asarray(inputs, dtype=np.float64)[None, :])
    new_state = NetworkState(hidden=batch.hidden[0].copy(), output=batch.output[0].copy())
    return (float(motors[0, 0]), float(motors[0, 1])), new_state


class FixedAnnBatch:
    """一批固定拓扑网络，实现批量控制器接口"""

    def __init__(self, weights: np.ndarray, steepness: float = DEFAULT_STEEPNESS):
        """初始化网络批

        Args:
            weights: 形状(n, 18)的连接权重
            steepness: sigmoid陡度
        """
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[1] != N_GENES:
            raise ValueError(f"权重形状必须为(n, {N_GENES}): {weights.shape}")
        self.size = weights.shape[0]
        self.steepness = steepness
        self._w_ih, self._w_hh, self._w_ho, self._w_oo = _split(weights)
        self.hidden = np.zeros((self.size, N_HIDDEN))
        self.output = np.zeros((self.size, N_OUTPUTS))

    def reset(self, count: int) -> None:
        if count != self.size:
            raise ValueError(f"批大小不一致: {count} != {self.size}")
        self.hidden = np.zeros((self.size, N_HIDDEN))
        self.output = np.zeros((self.size, N_OUTPUTS))

    def activate(self, sensors: np.ndarray) -> np.ndarray:
        """一次同步更新，返回形状(n, 2)的电机输出"""
        hidden = sigmoid(
            np.einsum("ni,nij->nj", sensors, self._w_ih)
            + np.einsum("ni,nij->nj", self.hidden, self._w_hh),
            self.steepness,
        )
        output = sigmoid(
            np.einsum("ni,nij->nj", hidden, self._w_ho)
            + np.einsum("ni,nij->nj", self.output, self._w_oo),
            self.steepness,
        )
        self.hidden = hidden
        self.output = output
        return output


class FixedAnnController:
    """单个基因组的有状态控制器"""

    def __init__(self, genome: FixedAnnGenome, steepness: float = DEFAULT_STEEPNESS):
        self.genome = genome
        self.steepness = steepness
        self.state = NetworkState.zeros()

    def reset(self) -> None:
        self.state = NetworkState.zeros()

    def activate(self, sensors: np.ndarray) -> Tuple[float, float]:
        motors, self.state = activate(self.genome, sensors, self.state, self.steepness)
        return motors
