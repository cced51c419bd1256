from ..config import Algorithm
from .base import SearchRunner, register
from .pareto import rank_population, select_nsga2


@register
class NSGA2(SearchRunner):
    algorithm = Algorithm.NSGA2

    def step(self, population, generation):
        size = self.config.population_size
        scores = rank_population(population)
        offspring = self.evaluate(
            self.breed(population, size, key=lambda ind: scores[id(ind)]),
            generation,
        )
        return select_nsga2(population + offspring, size)


def run_nsga2(problem, config):
    return NSGA2(problem, config).run()
