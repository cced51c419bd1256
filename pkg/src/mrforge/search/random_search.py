from ..config import Algorithm, RandomMetric
from .archive import (
    Archive,
    ArchiveKind,
    effectiveness_key,
    scalarized_key,
)
from .base import SearchRunner, register


@register
class RandomSearch(SearchRunner):
    """Fresh CombGen groups every iteration, keeping the single best."""

    algorithm = Algorithm.RANDOM
    archive_kind = ArchiveKind.ELITE

    def make_archive(self):
        key = (
            effectiveness_key
            if self.config.random_metric == RandomMetric.EFFECTIVENESS_ONLY
            else scalarized_key
        )
        return Archive(ArchiveKind.ELITE, capacity=1, key=key)

    def tracked_value(self):
        return self.archive.key(self.archive.entries[0])[0]

    def step(self, population, generation):
        groups = self.random_groups(self.config.population_size)
        return self.evaluate(groups, generation)


def run_random_search(problem, config):
    return RandomSearch(problem, config).run()
