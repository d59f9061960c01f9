"""固定拓扑ANN基因型空间

三值连接基因的编码、网络激活、穷举查找表，以及基于查找表的漂移与有限容量模型。
"""

from .evolution import heritability, run_robot_drift, run_robot_niched
from .genome import (
    SPACE_SIZE,
    FixedAnnGenome,
    Gene,
    GenotypeSpace,
    decode,
    decode_batch,
    encode,
    encode_batch,
    single_mutation_neighbors,
)
from .network import FixedAnnBatch, FixedAnnController, NetworkState, activate, sigmoid
from .table import (
    RECORD_DTYPE,
    LookupTable,
    TableManifest,
    TableSummary,
    load_table,
    read_shard,
    tabulate,
    verify_coverage,
    write_shard,
)

__all__ = [
    "RECORD_DTYPE",
    "SPACE_SIZE",
    "FixedAnnBatch",
    "FixedAnnController",
    "FixedAnnGenome",
    "Gene",
    "GenotypeSpace",
    "LookupTable",
    "NetworkState",
    "TableManifest",
    "TableSummary",
    "activate",
    "decode",
    "decode_batch",
    "encode",
    "encode_batch",
    "heritability",
    "load_table",
    "read_shard",
    "run_robot_drift",
    "run_robot_niched",
    "sigmoid",
    "single_mutation_neighbors",
    "tabulate",
    "verify_coverage",
    "write_shard",
]
