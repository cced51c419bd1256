import numpy as np

from ..config import Algorithm
from .archive import dominates
from .base import SearchRunner, register
from .operators import crossover, mutate

MIN_WEIGHT = 1e-6


def uniform_weights(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[0.5, 0.5]])
    w = np.linspace(0.0, 1.0, n)
    return np.column_stack([w, 1.0 - w])


def neighbourhoods(weights: np.ndarray, t: int) -> list[list[int]]:
    """Indices of the ``t`` closest weight vectors, the vector itself first."""
    dist = np.linalg.norm(weights[:, None, :] - weights[None, :, :], axis=2)
    return [
        [int(j) for j in np.argsort(row, kind="stable")[:t]] for row in dist
    ]


def tchebycheff(objectives, weight, ideal) -> float:
    weight = np.maximum(weight, MIN_WEIGHT)
    diff = np.abs(np.asarray(objectives) - ideal)
    return float(np.max(weight * diff))


@register
class MOEAD(SearchRunner):
    """Decomposition into Tchebycheff subproblems with neighbourhood mating.

    The offspring of all subproblems are bred from the current population
    and evaluated as one batch before the neighbourhood updates.

    """

    algorithm = Algorithm.MOEAD

    def setup(self, population):
        n = len(population)
        self.weights = uniform_weights(n)
        self.neighbours = neighbourhoods(
            self.weights, min(self.config.moead_neighborhood, n)
        )
        self.ideal = np.min([ind.objectives for ind in population], axis=0)

    def offspring_for(self, i, population):
        config, set_mr = self.config, self.problem.set_mr
        neighbours = self.neighbours[i]
        if len(neighbours) < 2:
            p1 = p2 = population[neighbours[0]]
        else:
            k, l = self.rng.sample(neighbours, 2)
            p1, p2 = population[k], population[l]
        if dominates(p2.objectives, p1.objectives):
            p1, p2 = p2, p1
        if self.rng.bernoulli(config.crossover_rate):
            child = crossover(p1.group, p2.group, set_mr, config, self.rng)[0]
        else:
            child = p1.group
        return mutate(child, set_mr, config, self.rng)

    def step(self, population, generation):
        if generation == 1:
            self.setup(population)
        groups = [
            self.offspring_for(i, population) for i in range(len(population))
        ]
        population = list(population)
        limit = self.config.moead_replacement_limit
        for i, child in enumerate(self.evaluate_each(groups, generation)):
            if child is None:
                continue
            self.ideal = np.minimum(self.ideal, child.objectives)
            replaced = 0
            for j in self.rng.shuffled(self.neighbours[i]):
                if replaced >= limit:
                    break
                w = self.weights[j]
                current = tchebycheff(population[j].objectives, w, self.ideal)
                if tchebycheff(child.objectives, w, self.ideal) <= current:
                    population[j] = child
                    replaced += 1
        return population


def run_moead(problem, config):
    return MOEAD(problem, config).run()
