"""随机流管理

每次运行的随机流由 (base_seed, run_index) 派生：

    SeedSequence(entropy=base_seed, spawn_key=(run_index,)) -> PCG64 -> Generator

这与 ``SeedSequence(base_seed).spawn(n)[run_index]`` 得到的流完全相同，
因此不同序号的流在统计上相互独立，并且与调度顺序和并行度无关。
同一次运行需要的辅助流使用 spawn_key=(run_index, substream)。
"""

import numpy as np

STREAM_ALGORITHM = "numpy.SeedSequence(entropy=base_seed, spawn_key=(run_index,)) -> PCG64"


def seed_stream(base_seed: int, run_index: int = 0, substream: int = 0) -> np.random.Generator:
    """派生一次运行的独立随机流

    Args:
        base_seed: 64位非负基础种子
        run_index: 运行序号
        substream: 辅助流序号，0为主流

    Returns:
        numpy随机数生成器
    """
    if base_seed < 0 or run_index < 0 or substream < 0:
        raise ValueError("base_seed、run_index和substream必须为非负整数")
    spawn_key = (run_index,) if substream == 0 else (run_index, substream)
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))
