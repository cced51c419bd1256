"""Selection and variation operators on MR groups."""

from .._compat import StrEnum
from typing import Any, Callable, Sequence, TypeVar

from ..config import SearchConfig
from ..errors import EmptyPopulation
from ..mrspace import CmbMR, MRGroup, SingleMR, random_cmb_mr, repair
from ..rng import SeededRng
from .archive import Individual

T = TypeVar("T")


class Mutation(StrEnum):
    """Mutation operators, in the order of ``mutation_op_weights``."""

    MR_ADD = "mr_add"
    MR_DELETE = "mr_delete"
    MR_REPLACE = "mr_replace"
    COMB_ADD = "comb_add"
    COMB_DELETE = "comb_delete"
    COMB_REPLACE = "comb_replace"


def fitness_single(ind: Individual) -> float:
    return ind.outcome.fitness_single


def tournament_select(
    population: Sequence[Individual],
    rng: SeededRng,
    key: Callable[[Individual], Any] = fitness_single,
) -> Individual:
    """Binary tournament: lower key wins, then lower c_token, then a coin."""
    if not population:
        raise EmptyPopulation("cannot select from an empty population")
    if len(population) == 1:
        return population[0]
    a, b = rng.sample(population, 2)
    rank_a = (key(a), a.outcome.c_token)
    rank_b = (key(b), b.outcome.c_token)
    if rank_a < rank_b:
        return a
    if rank_b < rank_a:
        return b
    return a if rng.bernoulli(0.5) else b


def one_point_crossover(
    m1: Sequence[T], m2: Sequence[T], c1: int, c2: int
) -> tuple[list[T], list[T]]:
    return (
        list(m1[:c1]) + list(m2[c2:]),
        list(m2[:c2]) + list(m1[c1:]),
    )


def _cut(size: int, rng: SeededRng) -> int:
    return rng.integers(1, size) if size > 1 else 1


def crossover(
    p1: MRGroup,
    p2: MRGroup,
    set_mr: Sequence[SingleMR],
    config: SearchConfig,
    rng: SeededRng,
) -> tuple[MRGroup, MRGroup]:
    c1, c2 = _cut(len(p1), rng), _cut(len(p2), rng)
    children = one_point_crossover(p1.members, p2.members, c1, c2)
    return tuple(
        MRGroup(tuple(repair(child, set_mr, config, rng)))
        for child in children
    )


def eligible_mutations(
    members: Sequence[CmbMR], config: SearchConfig
) -> list[Mutation]:
    size = len(members)
    splittable = any(len(m) > 1 for m in members)
    rules = {
        Mutation.MR_ADD: size < config.group_max,
        Mutation.MR_DELETE: size > config.group_min,
        Mutation.MR_REPLACE: size > 0,
        Mutation.COMB_ADD: any(
            len(m) < config.max_combo_depth for m in members
        ),
        Mutation.COMB_DELETE: splittable and size < config.group_max,
        Mutation.COMB_REPLACE: splittable and size < config.group_max,
    }
    return [op for op in Mutation if rules[op]]


def select_mutation(
    eligible: Sequence[Mutation], config: SearchConfig, rng: SeededRng
) -> Mutation | None:
    """Weighted draw, renormalized over the eligible operators."""
    index = list(Mutation)
    weights = [config.mutation_op_weights[index.index(op)] for op in eligible]
    if sum(weights) <= 0:
        return None
    return eligible[rng.weighted_index(weights)]


def _comb_add(
    members: list[CmbMR],
    i: int,
    set_mr: Sequence[SingleMR],
    rng: SeededRng,
):
    parts = members[i].parts
    fresh = [mr for mr in set_mr if mr not in parts] or list(set_mr)
    members[i] = CmbMR(parts + (rng.choice(fresh),))


def _comb_delete(members: list[CmbMR], i: int, rng: SeededRng) -> int:
    """Split member ``i`` in two, returns the index of the second half."""
    parts = members[i].parts
    cut = rng.integers(1, len(parts))
    members[i : i + 1] = [CmbMR(parts[:cut]), CmbMR(parts[cut:])]
    return i + 1


def apply_mutation(
    op: Mutation,
    members: Sequence[CmbMR],
    set_mr: Sequence[SingleMR],
    config: SearchConfig,
    rng: SeededRng,
) -> list[CmbMR]:
    members = list(members)
    size = len(members)
    match op:
        case Mutation.MR_ADD:
            position = rng.integers(0, size + 1)
            members.insert(position, random_cmb_mr(set_mr, config, rng))
        case Mutation.MR_DELETE:
            del members[rng.integers(0, size)]
        case Mutation.MR_REPLACE:
            members[rng.integers(0, size)] = random_cmb_mr(
                set_mr, config, rng
            )
        case Mutation.COMB_ADD:
            open_ = [
                i
                for i, m in enumerate(members)
                if len(m) < config.max_combo_depth
            ]
            _comb_add(members, rng.choice(open_), set_mr, rng)
        case Mutation.COMB_DELETE | Mutation.COMB_REPLACE:
            multi = [i for i, m in enumerate(members) if len(m) > 1]
            second = _comb_delete(members, rng.choice(multi), rng)
            if op == Mutation.COMB_REPLACE:
                _comb_add(members, second, set_mr, rng)
    return members


def mutate(
    group: MRGroup,
    set_mr: Sequence[SingleMR],
    config: SearchConfig,
    rng: SeededRng,
) -> MRGroup:
    if not rng.bernoulli(config.mutation_rate):
        return group
    op = select_mutation(
        eligible_mutations(group.members, config), config, rng
    )
    if op is None:
        return group
    return MRGroup(
        tuple(apply_mutation(op, group.members, set_mr, config, rng))
    )
