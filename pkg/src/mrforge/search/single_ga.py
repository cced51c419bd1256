from ..config import Algorithm
from .archive import ArchiveKind, scalarized_key
from .base import SearchRunner, register


@register
class SingleGA(SearchRunner):
    """Generational GA on fitness_single with (mu + lambda) survival."""

    algorithm = Algorithm.SINGLE_GA
    archive_kind = ArchiveKind.ELITE

    def step(self, population, generation):
        size = self.config.population_size
        offspring = self.evaluate(self.breed(population, size), generation)
        return sorted(population + offspring, key=scalarized_key)[:size]


def run_single_ga(problem, config):
    return SingleGA(problem, config).run()
