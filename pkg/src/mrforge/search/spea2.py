from ..config import Algorithm
from .base import SearchRunner, register
from .pareto import rank_population, select_spea2


@register
class SPEA2(SearchRunner):
    """Strength Pareto EA with an external archive of population size."""

    algorithm = Algorithm.SPEA2

    def __init__(self, problem, config):
        super().__init__(problem, config)
        self.external = []

    def step(self, population, generation):
        self.external = select_spea2(
            population + self.external, self.config.population_size
        )
        scores = rank_population(self.external)
        groups = self.breed(
            self.external,
            self.config.population_size,
            key=lambda ind: scores[id(ind)],
        )
        return self.evaluate(groups, generation)


def run_spea2(problem, config):
    return SPEA2(problem, config).run()
