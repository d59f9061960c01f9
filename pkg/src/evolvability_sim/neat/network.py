"""可变拓扑网络的批量激活

一批基因组被编译为按最大节点数补齐的稠密权重矩阵。每个时间步同步更新：
输入槽写入当前传感器读数，偏置槽为1.0，其余节点读取上一步的激活并经过陡化sigmoid。
"""

from typing import Dict, List, Sequence

import numpy as np

from ..ann.network import DEFAULT_STEEPNESS, sigmoid
from .genome import N_MOTORS, NeatGenome, NodeRole


def node_order(genome: NeatGenome) -> List[int]:
    """本地槽位顺序：输入、偏置、输出、隐藏（各自按编号升序）"""
    order: List[int] = []
    for role in (NodeRole.INPUT, NodeRole.BIAS, NodeRole.OUTPUT, NodeRole.HIDDEN):
        order.extend(sorted(genome.node_ids(role)))
    return order


class NeatBatch:
    """一批可变拓扑网络，实现批量控制器接口"""

    def __init__(self, genomes: Sequence[NeatGenome], steepness: float = DEFAULT_STEEPNESS):
        """编译基因组

        Args:
            genomes: 基因组（传感器数必须一致）
            steepness: sigmoid陡度
        """
        if not genomes:
            raise ValueError("基因组列表为空")
        n_inputs = genomes[0].n_inputs
        if any(g.n_inputs != n_inputs for g in genomes):
            raise ValueError("同一批基因组的传感器数必须一致")

        self.size = len(genomes)
        self.steepness = steepness
        self.n_inputs = n_inputs
        self.bias_slot = n_inputs
        self.output_slots = slice(n_inputs + 1, n_inputs + 1 + N_MOTORS)
        self.width = max(len(g.nodes) for g in genomes)

        self.weights = np.zeros((self.size, self.width, self.width))
        for b, genome in enumerate(genomes):
            slots: Dict[int, int] = {node: i for i, node in enumerate(node_order(genome))}
            for conn in genome.enabled():
                self.weights[b, slots[conn.source], slots[conn.target]] += conn.weight
        self.state = np.zeros((self.size, self.width))

    def reset(self, count: int) -> None:
        if count != self.size:
            raise ValueError(f"批大小不一致: {count} != {self.size}")
        self.state = np.zeros((self.size, self.width))

    def activate(self, sensors: np.ndarray) -> np.ndarray:
        """一次同步更新，返回形状(n, 2)的电机输出"""
        current = self.state.copy()
        current[:, : self.n_inputs] = sensors
        current[:, self.bias_slot] = 1.0
        updated = sigmoid(np.einsum("bi,bij->bj", current, self.weights), self.steepness)
        updated[:, : self.bias_slot + 1] = current[:, : self.bias_slot + 1]
        self.state = updated
        return updated[:, self.output_slots]
