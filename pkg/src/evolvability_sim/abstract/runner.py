"""抽象模型的运行器"""

from typing import Any, Mapping, Tuple, Union

from ..analysis.records import RunRecord, checkpoint_schedule
from ..analysis.statistics import summarize_snapshot
from ..config.settings import AbstractParams, AbstractVariant, coerce_params
from ..core.errors import ConfigurationError, EvolvabilitySimError
from ..core.logger import get_logger
from ..harness.seeds import seed_stream
from .dynamics import step_drift, step_niched
from .organism import Population

logger = get_logger(__name__)


def initial_population(params: AbstractParams, variant: AbstractVariant) -> Population:
    """初始种群：漂移模型为pop_size个相同个体，有限容量模型为单个创始者，均位于(0, 0)"""
    count = params.pop_size if variant == AbstractVariant.DRIFT else 1
    return Population.founders(count, params.init_evolvability)


def run_abstract(
    params: Union[AbstractParams, Mapping[str, Any], None],
    variant: Union[AbstractVariant, str],
    seed: int,
    run_index: int = 0,
    checkpoint_every: int = 10,
) -> Tuple[RunRecord, Population]:
    """运行一次抽象模型

    Args:
        params: 模型参数（参数块或字典）
        variant: drift 或 niched
        seed: 基础种子
        run_index: 运行序号，随机流由 (seed, run_index) 派生
        checkpoint_every: 记录频率（代）

    Returns:
        (运行记录, 最终种群)

    Raises:
        ConfigurationError: 参数不合法
    """
    params = coerce_params(AbstractParams, params)
    try:
        variant = AbstractVariant(variant)
    except ValueError as e:
        raise ConfigurationError(f"未知的抽象模型变体: {variant}") from e
    if checkpoint_every < 1:
        raise ConfigurationError(f"checkpoint_every必须大于0: {checkpoint_every}")

    generations = params.generations_for(variant)
    rng = seed_stream(seed, run_index)
    step = step_drift if variant == AbstractVariant.DRIFT else step_niched
    schedule = set(checkpoint_schedule(generations, checkpoint_every))

    record = RunRecord(
        model=f"abstract-{variant.value}",
        seed=seed + run_index,
        run_index=run_index,
        metadata={"variant": variant.value, "generations": generations},
    )

    pop = initial_population(params, variant)
    cumulative = pop.size
    record.append(summarize_snapshot(0, pop.niche_keys(), pop.evo, cumulative))
    logger.debug("abstract_run_started", variant=variant.value, seed=seed, run_index=run_index)

    for generation in range(1, generations + 1):
        per_parent = params.offspring_per_parent if variant == AbstractVariant.NICHED else 1
        created = pop.size * per_parent
        pop = step(pop, params, rng)
        cumulative += created

        if variant == AbstractVariant.NICHED and pop.max_occupancy() > params.niche_capacity:
            raise EvolvabilitySimError(f"第{generation}代有生态位超出容量{params.niche_capacity}")

        if generation in schedule:
            record.append(summarize_snapshot(generation, pop.niche_keys(), pop.evo, cumulative))

    record.metadata["final_pop_size"] = pop.size
    logger.debug(
        "abstract_run_finished",
        variant=variant.value,
        run_index=run_index,
        pop_size=pop.size,
        cumulative_individuals=cumulative,
    )
    return record, pop
