"""Generation loop shared by all search algorithms."""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from pydantic import BaseModel

from ..config import Algorithm, SearchConfig
from ..corpus import CorpusRecord
from ..errors import EmptyEvaluation, EmptyPopulation
from ..fitness import Evaluator
from ..mrspace import MRGroup, SingleMR, comb_gen
from ..rng import SeededRng, derive_seed
from .archive import Archive, ArchiveKind, Individual, scalarized_key
from .operators import crossover, fitness_single, mutate, tournament_select

log = logging.getLogger(__name__)

RUNNERS: dict[Algorithm, type["SearchRunner"]] = {}


def register(cls):
    RUNNERS[cls.algorithm] = cls
    return cls


@dataclass
class Problem:
    """What a search optimizes: groups over Set_MR, scored on a corpus."""

    evaluator: Evaluator
    corpus: Sequence[CorpusRecord]
    set_mr: Sequence[SingleMR]
    # seeds the per-generation input draws; shared across algorithms
    input_seed: int = 0

    def inputs_for(
        self, generation: int, config: SearchConfig
    ) -> list[tuple[str, str]]:
        rng = SeededRng(derive_seed(self.input_seed, "inputs", generation))
        k = min(config.inputs_per_iteration, len(self.corpus))
        return [r.pair for r in rng.subset(self.corpus, k)]


class GenerationStats(BaseModel):
    generation: int
    best_fitness: float
    best_fitness1: float
    best_fitness2: float
    mean_fitness: float
    mean_fitness1: float
    mean_fitness2: float
    hypervolume: float
    archive_size: int
    evaluations: int


class GenerationCounters(BaseModel):
    """Cumulative counters; they depend on the cache, not on the search."""

    generation: int
    executor_calls: int
    cache_hits: int


@dataclass
class SearchResult:
    algorithm: Algorithm
    archive: Archive
    history: list[GenerationStats] = field(default_factory=list)
    counters: list[GenerationCounters] = field(default_factory=list)
    failed_evaluations: int = 0

    @property
    def generations(self) -> int:
        return len(self.history) - 1

    @property
    def final_fitness(self) -> float:
        return self.archive.best.outcome.fitness_single

    @property
    def evaluations(self) -> int:
        return self.history[-1].evaluations if self.history else 0


def check_termination(history: Sequence[float], config: SearchConfig) -> bool:
    """Stop at the iteration cap or after ``patience`` flat generations.

    ``history`` holds one tracked value per generation, starting with the
    initial population.

    """
    if len(history) - 1 >= config.max_iterations:
        return True
    if len(history) < config.patience + 1:
        return False
    window = history[-(config.patience + 1) :]
    return all(
        abs(b - a) < config.fitness_delta_threshold
        for a, b in zip(window, window[1:])
    )


class SearchRunner:
    """Base class of the search algorithms.

    Subclasses set ``algorithm`` and ``archive_kind`` and implement
    :meth:`step`, which turns the current population into the next one.

    """

    algorithm: Algorithm
    archive_kind: ArchiveKind = ArchiveKind.PARETO

    def __init__(self, problem: Problem, config: SearchConfig):
        self.problem = problem
        self.config = config
        self.rng = SeededRng(config.seed)
        self.archive = self.make_archive()
        self.progress: list[float] = []
        self.result = SearchResult(self.algorithm, self.archive)

    def make_archive(self) -> Archive:
        if self.archive_kind == ArchiveKind.ELITE:
            return Archive(ArchiveKind.ELITE, self.config.elite_capacity)
        return Archive(ArchiveKind.PARETO)

    def evaluate_each(
        self, groups: Sequence[MRGroup], generation: int
    ) -> list[Individual | None]:
        """Evaluate on this generation's inputs, None where it failed."""
        inputs = self.problem.inputs_for(generation, self.config)
        evaluated = []
        for group in groups:
            try:
                outcome = self.problem.evaluator.evaluate_group(group, inputs)
            except EmptyEvaluation as e:
                log.warning(f"Generation {generation}: {e}")
                self.result.failed_evaluations += 1
                evaluated.append(None)
                continue
            evaluated.append(Individual(group, outcome))
        self.archive.extend(ind for ind in evaluated if ind is not None)
        return evaluated

    def evaluate(
        self, groups: Sequence[MRGroup], generation: int
    ) -> list[Individual]:
        return [
            ind
            for ind in self.evaluate_each(groups, generation)
            if ind is not None
        ]

    def random_groups(self, n: int) -> list[MRGroup]:
        return [
            comb_gen(self.problem.set_mr, self.config, self.rng)
            for _ in range(n)
        ]

    def breed(
        self,
        parents: Sequence[Individual],
        n: int,
        key: Callable[[Individual], Any] = fitness_single,
    ) -> list[MRGroup]:
        """Tournament selection, crossover and mutation."""
        set_mr, config = self.problem.set_mr, self.config
        offspring = []
        while len(offspring) < n:
            p1 = tournament_select(parents, self.rng, key)
            p2 = tournament_select(parents, self.rng, key)
            if self.rng.bernoulli(config.crossover_rate):
                children = crossover(
                    p1.group, p2.group, set_mr, config, self.rng
                )
            else:
                children = (p1.group, p2.group)
            offspring += [
                mutate(child, set_mr, config, self.rng) for child in children
            ]
        return offspring[:n]

    def initialize(self) -> list[Individual]:
        return self.evaluate(
            self.random_groups(self.config.population_size), 0
        )

    def step(
        self, population: list[Individual], generation: int
    ) -> list[Individual]:
        raise NotImplementedError

    def tracked_value(self) -> float:
        if self.archive.kind == ArchiveKind.ELITE:
            return scalarized_key(self.archive.best)[0]
        return self.archive.hypervolume()

    def record(self, generation: int, population: Sequence[Individual]):
        evaluator = self.problem.evaluator
        archive = list(self.archive)
        pop = population or archive

        def mean(values):
            return sum(values) / len(values)

        stats = GenerationStats(
            generation=generation,
            best_fitness=self.archive.best.outcome.fitness_single,
            best_fitness1=min(e.outcome.fitness1 for e in archive),
            best_fitness2=min(e.outcome.fitness2 for e in archive),
            mean_fitness=mean([i.outcome.fitness_single for i in pop]),
            mean_fitness1=mean([i.outcome.fitness1 for i in pop]),
            mean_fitness2=mean([i.outcome.fitness2 for i in pop]),
            hypervolume=self.archive.hypervolume(),
            archive_size=len(archive),
            evaluations=evaluator.evaluations,
        )
        self.result.history.append(stats)
        self.result.counters.append(
            GenerationCounters(
                generation=generation,
                executor_calls=evaluator.executor_calls,
                cache_hits=evaluator.cache_hits,
            )
        )
        self.progress.append(self.tracked_value())
        log.debug(
            f"{self.algorithm} generation {generation}: "
            f"best {stats.best_fitness:.4f}, hv {stats.hypervolume:.4f}, "
            f"archive {stats.archive_size}"
        )

    def run(self) -> SearchResult:
        population = self.initialize()
        if not population:
            raise EmptyPopulation("every initial group failed to evaluate")
        self.record(0, population)
        generation = 0
        while not check_termination(self.progress, self.config):
            generation += 1
            population = self.step(population, generation) or population
            self.record(generation, population)
        log.info(
            f"{self.algorithm} finished after {generation} generations, "
            f"best fitness {self.result.final_fitness:.4f}."
        )
        return self.result


def run_search(
    algorithm: Algorithm, problem: Problem, config: SearchConfig
) -> SearchResult:
    return RUNNERS[Algorithm(algorithm)](problem, config).run()
