"""抽象模型

固定规模的被动漂移模型与有限容量生态位的种群增长模型。
"""

from .dynamics import mutate_abstract, step_drift, step_niched
from .organism import AbstractOrganism, Population
from .runner import initial_population, run_abstract

__all__ = [
    "AbstractOrganism",
    "Population",
    "initial_population",
    "mutate_abstract",
    "run_abstract",
    "step_drift",
    "step_niched",
]
