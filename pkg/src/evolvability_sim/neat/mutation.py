"""可变拓扑基因组的无性变异

依次应用：逐连接的权重扰动、添加连接、添加节点。只有突变没有交叉。
"""

from dataclasses import replace

import numpy as np

from ..config.settings import NeatParams
from .genome import ConnectionGene, InnovationTracker, NeatGenome, NodeGene, NodeRole


def perturb_weights(
    weights: np.ndarray, params: NeatParams, rng: np.random.Generator
) -> np.ndarray:
    """每个权重以weight_perturb_prob加上均匀扰动，并截断到权重上限内"""
    weights = np.asarray(weights, dtype=np.float64)
    hit = rng.random(weights.size) < params.weight_perturb_prob
    delta = rng.uniform(
        -params.weight_perturb_halfwidth, params.weight_perturb_halfwidth, size=weights.size
    )
    return np.clip(
        np.where(hit, weights + delta, weights), -params.weight_bound, params.weight_bound
    )


def _add_connection(
    genome: NeatGenome, params: NeatParams, tracker: InnovationTracker, rng: np.random.Generator
) -> NeatGenome:
    """在一对尚未连接的节点之间添加连接；拓扑饱和时不做任何事"""
    existing = genome.connected_pairs()
    sources = [n.node_id for n in genome.nodes]
    targets = [n.node_id for n in genome.nodes if n.role in (NodeRole.OUTPUT, NodeRole.HIDDEN)]
    candidates = [(s, t) for s in sources for t in targets if (s, t) not in existing]
    if not candidates:
        return genome

    source, target = candidates[int(rng.integers(0, len(candidates)))]
    weight = float(rng.uniform(-params.weight_bound, params.weight_bound))
    conn = ConnectionGene(source, target, weight, True, tracker.innovation())
    return replace(genome, connections=genome.connections + (conn,))


def _add_node(
    genome: NeatGenome, tracker: InnovationTracker, rng: np.random.Generator
) -> NeatGenome:
    """拆分一个启用的连接：原连接禁用，入半段权重1.0，出半段继承原权重"""
    enabled = [i for i, c in enumerate(genome.connections) if c.enabled]
    if not enabled:
        return genome

    index = enabled[int(rng.integers(0, len(enabled)))]
    old = genome.connections[index]
    node = NodeGene(tracker.node_id(), NodeRole.HIDDEN)
    connections = list(genome.connections)
    connections[index] = replace(old, enabled=False)
    connections.append(ConnectionGene(old.source, node.node_id, 1.0, True, tracker.innovation()))
    connections.append(
        ConnectionGene(node.node_id, old.target, old.weight, True, tracker.innovation())
    )
    return replace(genome, nodes=genome.nodes + (node,), connections=tuple(connections))


def mutate_neat(
    genome: NeatGenome,
    params: NeatParams,
    tracker: InnovationTracker,
    rng: np.random.Generator,
) -> NeatGenome:
    """产生一个变异后代

    Args:
        genome: 亲本
        params: 变异参数
        tracker: 本次运行的创新追踪器
        rng: 随机流

    Returns:
        新个体（新的标识）
    """
    weights = perturb_weights(np.array([c.weight for c in genome.connections]), params, rng)
    child = replace(
        genome,
        key=tracker.key(),
        connections=tuple(
            replace(c, weight=float(w)) for c, w in zip(genome.connections, weights)
        ),
    )

    if rng.random() < params.add_connection_prob:
        child = _add_connection(child, params, tracker, rng)
    if rng.random() < params.add_node_prob:
        child = _add_node(child, tracker, rng)
    return child
