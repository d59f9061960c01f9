"""实用模型

可变拓扑基因组、结构与权重变异、批量网络激活，以及基于行为的有限容量生态位演化。
"""

from .evolution import (
    NeatIndividual,
    assign_niche,
    estimate_evolvability,
    estimate_evolvability_batch,
    evaluate_genomes,
    run_neat_niched,
)
from .genome import (
    ConnectionGene,
    InnovationTracker,
    NeatGenome,
    NodeGene,
    NodeRole,
    initial_genome,
)
from .mutation import mutate_neat, perturb_weights
from .network import NeatBatch

__all__ = [
    "ConnectionGene",
    "InnovationTracker",
    "NeatBatch",
    "NeatGenome",
    "NeatIndividual",
    "NodeGene",
    "NodeRole",
    "assign_niche",
    "estimate_evolvability",
    "estimate_evolvability_batch",
    "evaluate_genomes",
    "initial_genome",
    "mutate_neat",
    "perturb_weights",
    "run_neat_niched",
]
