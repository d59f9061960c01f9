"""抽象模型的繁殖与变异

随机数按固定顺序成批抽取（是否移动、移动方向、是否变异演化能力、变异量），
因此给定随机流时结果逐位可复现。
"""

from typing import Tuple

import numpy as np

from ..config.settings import AbstractParams, ReproductionMode
from .organism import AbstractOrganism, Population

# 四个基本方向：+x, -x, +y, -y
_DX = np.array([1, -1, 0, 0], dtype=np.int64)
_DY = np.array([0, 0, 1, -1], dtype=np.int64)


def mutate_arrays(
    x: np.ndarray,
    y: np.ndarray,
    evo: np.ndarray,
    params: AbstractParams,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """为每个亲本产生一个后代（向量化）

    生态位移动与演化能力变异是相互独立的事件，可能在同一次繁殖中同时发生。

    Args:
        x: 亲本生态位x坐标
        y: 亲本生态位y坐标
        evo: 亲本演化能力
        params: 模型参数
        rng: 随机流

    Returns:
        后代的 (x, y, evo)
    """
    n = evo.size
    move = rng.random(n) < evo
    direction = rng.integers(0, 4, size=n)
    evo_mut = rng.random(n) < params.evo_mut_prob
    delta = rng.uniform(-params.evo_mut_halfwidth, params.evo_mut_halfwidth, size=n)

    new_x = x + np.where(move, _DX[direction], 0)
    new_y = y + np.where(move, _DY[direction], 0)
    new_evo = np.clip(np.where(evo_mut, evo + delta, evo), 0.0, 1.0)
    return new_x, new_y, new_evo


def mutate_abstract(
    parent: AbstractOrganism, params: AbstractParams, rng: np.random.Generator
) -> AbstractOrganism:
    """产生单个后代

    Args:
        parent: 亲本
        params: 模型参数
        rng: 随机流

    Returns:
        后代
    """
    x, y, evo = mutate_arrays(
        np.array([parent.niche[0]], dtype=np.int64),
        np.array([parent.niche[1]], dtype=np.int64),
        np.array([parent.evolvability], dtype=np.float64),
        params,
        rng,
    )
    return AbstractOrganism(niche=(int(x[0]), int(y[0])), evolvability=float(evo[0]))


def step_drift(pop: Population, params: AbstractParams, rng: np.random.Generator) -> Population:
    """漂移模型的一代

    独立谱系模式下每个个体恰好留下一个后代；重抽样模式下每个后代的亲本
    从上一代中有放回地均匀抽取。

    Args:
        pop: 当前种群
        params: 模型参数
        rng: 随机流

    Returns:
        下一代种群（规模不变）
    """
    x, y, evo = pop.x, pop.y, pop.evo
    if params.reproduction_mode == ReproductionMode.RESAMPLING:
        parents = rng.integers(0, pop.size, size=pop.size)
        x, y, evo = x[parents], y[parents], evo[parents]

    new_x, new_y, new_evo = mutate_arrays(x, y, evo, params, rng)
    return Population(x=new_x, y=new_y, evo=new_evo, generation=pop.generation + 1)


def rank_within_niche(keys: np.ndarray) -> np.ndarray:
    """每个元素在同一生态位中按出现顺序的名次（从0开始）

    Args:
        keys: 一维生态位键，顺序即接纳顺序

    Returns:
        名次数组
    """
    n = keys.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    positions = np.arange(n, dtype=np.int64)
    starts = np.ones(n, dtype=bool)
    starts[1:] = sorted_keys[1:] != sorted_keys[:-1]
    group_start = np.maximum.accumulate(np.where(starts, positions, 0))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = positions - group_start
    return ranks


def admit_offspring(keys: np.ndarray, capacity: int, rng: np.random.Generator) -> np.ndarray:
    """按均匀随机顺序接纳后代，生态位满员后丢弃

    Args:
        keys: 每个后代的生态位键
        capacity: 生态位容量
        rng: 随机流

    Returns:
        被接纳后代的下标（按接纳顺序）
    """
    order = rng.permutation(keys.size)
    ranks = rank_within_niche(keys[order])
    return order[ranks < capacity]


def step_niched(pop: Population, params: AbstractParams, rng: np.random.Generator) -> Population:
    """有限容量生态位模型的一代

    每个个体产生offspring_per_parent个后代，亲代不存活；所有后代按随机顺序
    进入生态位，满员的生态位丢弃后来者。

    Args:
        pop: 当前种群
        params: 模型参数
        rng: 随机流

    Returns:
        下一代种群
    """
    k = params.offspring_per_parent
    x = np.repeat(pop.x, k)
    y = np.repeat(pop.y, k)
    evo = np.repeat(pop.evo, k)

    new_x, new_y, new_evo = mutate_arrays(x, y, evo, params, rng)
    keys = Population(x=new_x, y=new_y, evo=new_evo).niche_keys()
    kept = admit_offspring(keys, params.niche_capacity, rng)
    return Population(
        x=new_x[kept], y=new_y[kept], evo=new_evo[kept], generation=pop.generation + 1
    )
