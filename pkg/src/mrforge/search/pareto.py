"""Pareto ranking and selection on top of :mod:`deap.tools`."""

from dataclasses import dataclass
from typing import Sequence

from deap import base, tools
from deap.tools.emo import assignCrowdingDist

from .archive import Individual


class Objectives(base.Fitness):
    # (fitness1, fitness2), both minimized
    weights = (-1.0, -1.0)


@dataclass(eq=False)
class Ranked:
    individual: Individual
    fitness: Objectives


def wrap(population: Sequence[Individual]) -> list[Ranked]:
    return [Ranked(ind, Objectives(ind.objectives)) for ind in population]


def rank_population(population) -> dict[int, tuple[int, float]]:
    """(front rank, -crowding) per ``id()`` of each individual."""
    ranked = wrap(population)
    scores = {}
    fronts = tools.sortNondominated(ranked, len(ranked))
    for rank, front in enumerate(fronts):
        assignCrowdingDist(front)
        for r in front:
            scores[id(r.individual)] = (rank, -r.fitness.crowding_dist)
    return scores


def select_nsga2(population, k: int) -> list[Individual]:
    return [r.individual for r in tools.selNSGA2(wrap(population), k)]


def select_spea2(population, k: int) -> list[Individual]:
    return [r.individual for r in tools.selSPEA2(wrap(population), k)]
