"""可变拓扑网络的基因组

节点编号约定（n为传感器数）：输入 0..n-1，偏置 n，输出 n+1、n+2，隐藏节点从 n+3
开始由创新追踪器分配。
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterator, List, Set, Tuple

import numpy as np
import orjson

N_MOTORS = 2


class NodeRole(str, Enum):
    """节点角色"""

    INPUT = "input"
    BIAS = "bias"
    OUTPUT = "output"
    HIDDEN = "hidden"


@dataclass(frozen=True)
class NodeGene:
    """节点基因"""

    node_id: int
    role: NodeRole


@dataclass(frozen=True)
class ConnectionGene:
    """连接基因"""

    source: int
    target: int
    weight: float
    enabled: bool
    innovation: int


@dataclass(frozen=True)
class NeatGenome:
    """可变拓扑基因组

    Attributes:
        key: 个体标识
        nodes: 节点基因
        connections: 连接基因
    """

    key: int
    nodes: Tuple[NodeGene, ...]
    connections: Tuple[ConnectionGene, ...]

    @property
    def n_inputs(self) -> int:
        return sum(1 for n in self.nodes if n.role == NodeRole.INPUT)

    def node_ids(self, role: NodeRole) -> List[int]:
        return [n.node_id for n in self.nodes if n.role == role]

    def enabled(self) -> Iterator[ConnectionGene]:
        return (c for c in self.connections if c.enabled)

    @property
    def enabled_count(self) -> int:
        return sum(1 for _ in self.enabled())

    @property
    def hidden_count(self) -> int:
        return len(self.node_ids(NodeRole.HIDDEN))

    def connected_pairs(self) -> Set[Tuple[int, int]]:
        """已存在连接（包括被禁用的）的 (源, 目标) 对"""
        return {(c.source, c.target) for c in self.connections}

    def with_key(self, key: int) -> "NeatGenome":
        return replace(self, key=key)

    def validate(self, weight_bound: float = 3.0) -> None:
        """校验基因组不变量

        Raises:
            ValueError: 权重越界、启用连接重复、创新号重复或端点不存在
        """
        ids = {n.node_id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise ValueError("节点编号重复")
        innovations = [c.innovation for c in self.connections]
        if len(set(innovations)) != len(innovations):
            raise ValueError("创新号重复")
        pairs = [(c.source, c.target) for c in self.enabled()]
        if len(set(pairs)) != len(pairs):
            raise ValueError("存在重复的启用连接")
        for conn in self.connections:
            if conn.source not in ids or conn.target not in ids:
                raise ValueError(f"连接{conn.innovation}的端点不存在")
            if not -weight_bound <= conn.weight <= weight_bound:
                raise ValueError(f"连接{conn.innovation}的权重越界: {conn.weight}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "key": self.key,
            "nodes": [[n.node_id, n.role.value] for n in self.nodes],
            "connections": [
                [c.source, c.target, c.weight, c.enabled, c.innovation] for c in self.connections
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NeatGenome":
        return cls(
            key=int(data["key"]),
            nodes=tuple(NodeGene(int(i), NodeRole(r)) for i, r in data["nodes"]),
            connections=tuple(
                ConnectionGene(int(s), int(t), float(w), bool(e), int(k))
                for s, t, w, e, k in data["connections"]
            ),
        )

    def to_json(self) -> bytes:
        return orjson.dumps(self.to_dict())

    @classmethod
    def from_json(cls, raw: bytes) -> "NeatGenome":
        return cls.from_dict(orjson.loads(raw))


@dataclass
class InnovationTracker:
    """一次运行内的创新号、节点编号与个体标识计数器"""

    next_innovation: int = 0
    next_node_id: int = 0
    next_key: int = 0

    @classmethod
    def from_genome(cls, genome: NeatGenome) -> "InnovationTracker":
        """从已有基因组之后继续编号（用于一次性的估计）"""
        return cls(
            next_innovation=max((c.innovation for c in genome.connections), default=-1) + 1,
            next_node_id=max(n.node_id for n in genome.nodes) + 1,
            next_key=genome.key + 1,
        )

    def innovation(self) -> int:
        value = self.next_innovation
        self.next_innovation += 1
        return value

    def node_id(self) -> int:
        value = self.next_node_id
        self.next_node_id += 1
        return value

    def key(self) -> int:
        value = self.next_key
        self.next_key += 1
        return value


def initial_genome(
    rng: np.random.Generator,
    tracker: InnovationTracker,
    n_inputs: int = 6,
    weight_bound: float = 3.0,
) -> NeatGenome:
    """初始拓扑：所有输入与偏置全连接到两个输出，没有隐藏节点

    Args:
        rng: 随机流
        tracker: 创新追踪器（应为新建的）
        n_inputs: 传感器数
        weight_bound: 权重上限

    Returns:
        初始基因组
    """
    bias = n_inputs
    outputs = [n_inputs + 1 + i for i in range(N_MOTORS)]
    nodes = (
        [NodeGene(i, NodeRole.INPUT) for i in range(n_inputs)]
        + [NodeGene(bias, NodeRole.BIAS)]
        + [NodeGene(o, NodeRole.OUTPUT) for o in outputs]
    )
    tracker.next_node_id = max(tracker.next_node_id, outputs[-1] + 1)

    sources = list(range(n_inputs)) + [bias]
    weights = rng.uniform(-weight_bound, weight_bound, size=len(sources) * len(outputs))
    connections = []
    for (source, target), weight in zip(
        ((s, t) for s in sources for t in outputs), weights
    ):
        connections.append(
            ConnectionGene(source, target, float(weight), True, tracker.innovation())
        )
    return NeatGenome(key=tracker.key(), nodes=tuple(nodes), connections=tuple(connections))
