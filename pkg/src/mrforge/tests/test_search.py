from collections import Counter

import pytest

from mrforge.config import Algorithm, SearchConfig
from mrforge.errors import EmptyPopulation
from mrforge.fitness import EvalOutcome
from mrforge.mrspace import CmbMR, MRGroup, SingleMR, validate_group
from mrforge.rng import SeededRng
from mrforge.search import (
    Archive,
    ArchiveKind,
    Individual,
    Problem,
    check_termination,
    dominates,
    run_search,
)
from mrforge.search.base import SearchRunner
from mrforge.search.moead import neighbourhoods, tchebycheff, uniform_weights
from mrforge.search.operators import (
    Mutation,
    apply_mutation,
    crossover,
    eligible_mutations,
    mutate,
    one_point_crossover,
    select_mutation,
    tournament_select,
)
from mrforge.search.pareto import (
    rank_population,
    select_nsga2,
    select_spea2,
)


def single(pid, intensity=1):
    return CmbMR((SingleMR(pid, intensity),))


def individual(f1, f2, name="g", c_token=None):
    group = MRGroup((single(name), single("delete_word"), single("add_x")))
    outcome = EvalOutcome(
        context_asr=1 - f1,
        mean_asr=1 - f1,
        mean_pq=1.0,
        c_token=c_token if c_token is not None else int(f2 * 1000),
        fitness1=f1,
        fitness2=f2,
        fitness_single=0.5 * f1 + 0.5 * f2,
    )
    return Individual(group, outcome)


FRONT = [(0.2, 0.8), (0.8, 0.2), (0.5, 0.5), (0.9, 0.9)]


def test_dominates():
    assert dominates((0.2, 0.2), (0.3, 0.2))
    assert not dominates((0.2, 0.2), (0.2, 0.2))
    assert not dominates((0.1, 0.9), (0.9, 0.1))


def test_pareto_archive_drops_dominated_entries():
    archive = Archive(ArchiveKind.PARETO)
    archive.extend(individual(*p, name=f"p{i}") for i, p in enumerate(FRONT))
    assert sorted(archive.front()) == [(0.2, 0.8), (0.5, 0.5), (0.8, 0.2)]
    assert not archive.add(individual(0.5, 0.5, name="twin"))
    assert archive.add(individual(0.4, 0.4, name="better"))
    assert sorted(archive.front()) == [(0.2, 0.8), (0.4, 0.4), (0.8, 0.2)]


def test_pareto_archive_single_individual():
    archive = Archive(ArchiveKind.PARETO)
    archive.add(individual(0.9, 0.9))
    assert len(archive) == 1
    assert archive.hypervolume() == pytest.approx(0.01)


def test_elite_archive():
    archive = Archive(ArchiveKind.ELITE, capacity=2)
    archive.add(individual(0.6, 0.6, name="a"))
    archive.add(individual(0.2, 0.2, name="b"))
    archive.add(individual(0.4, 0.4, name="c"))
    assert [e.group.id for e in archive] == [
        individual(0.2, 0.2, name="b").group.id,
        individual(0.4, 0.4, name="c").group.id,
    ]
    # a worse outcome of a stored group does not replace it
    assert not archive.add(individual(0.5, 0.5, name="b"))
    assert archive.best.outcome.fitness_single == pytest.approx(0.2)


def test_archive_file_round_trip():
    archive = Archive(ArchiveKind.PARETO)
    archive.extend(individual(*p, name=f"p{i}") for i, p in enumerate(FRONT))
    restored = Archive.from_file(archive.to_file())
    assert restored.front() == archive.front()
    assert [e.group.id for e in restored] == [e.group.id for e in archive]


def test_empty_archive_has_no_best():
    with pytest.raises(EmptyPopulation):
        Archive(ArchiveKind.ELITE).best


def test_tournament_select():
    rng = SeededRng(1)
    better, worse = individual(0.2, 0.2, "a"), individual(0.9, 0.9, "b")
    for _ in range(20):
        assert tournament_select([better, worse], rng) is better
    with pytest.raises(EmptyPopulation):
        tournament_select([], rng)


def test_tournament_ties():
    a = individual(0.5, 0.5, "a", c_token=10)
    b = individual(0.5, 0.5, "b", c_token=20)
    assert tournament_select([a, b], SeededRng(3)) is a

    c = individual(0.5, 0.5, "c", c_token=10)
    picks = {
        tournament_select([a, c], SeededRng(s)).group.id for s in range(30)
    }
    assert picks == {a.group.id, c.group.id}
    assert tournament_select([a, c], SeededRng(5)) is tournament_select(
        [a, c], SeededRng(5)
    )


def test_one_point_crossover():
    child1, child2 = one_point_crossover("ABCD", "XYZ", 2, 1)
    assert child1 == list("ABYZ")
    assert child2 == list("XCD")


def test_crossover_keeps_bounds(set_mr):
    config = SearchConfig(group_min=3, group_max=6)
    rng = SeededRng(11)
    for _ in range(300):
        p1 = MRGroup(tuple(single(mr.perturbation_id) for mr in set_mr[:6]))
        p2 = MRGroup(tuple(single(mr.perturbation_id) for mr in set_mr[6:9]))
        for child in crossover(p1, p2, set_mr, config, rng):
            validate_group(child, config)


def test_comb_delete_splits_one_member():
    config = SearchConfig(group_min=2, group_max=30)
    pair = CmbMR((SingleMR("shuffle_word", 1), SingleMR("delete_word", 1)))
    members = [pair, single("l33t_transform")]
    result = apply_mutation(
        Mutation.COMB_DELETE, members, [], config, SeededRng(0)
    )
    assert result == [
        single("shuffle_word"),
        single("delete_word"),
        single("l33t_transform"),
    ]


def test_eligible_mutations():
    config = SearchConfig(group_min=3, group_max=4, max_combo_depth=2)
    singles = [single("a"), single("b"), single("c")]
    assert eligible_mutations(singles, config) == [
        Mutation.MR_ADD,
        Mutation.MR_REPLACE,
        Mutation.COMB_ADD,
    ]
    full = [
        CmbMR((SingleMR("a", 1), SingleMR("b", 1))),
        single("c"),
        single("d"),
        single("e"),
    ]
    assert eligible_mutations(full, config) == [
        Mutation.MR_DELETE,
        Mutation.MR_REPLACE,
        Mutation.COMB_ADD,
    ]


def test_mutation_frequencies_follow_weights():
    config = SearchConfig()
    rng = SeededRng(42)
    draws = 30_000
    counts = Counter(
        select_mutation(list(Mutation), config, rng) for _ in range(draws)
    )
    for op in Mutation:
        assert counts[op] / draws == pytest.approx(1 / 6, abs=0.02)

    eligible = [Mutation.MR_ADD, Mutation.MR_REPLACE, Mutation.COMB_ADD]
    counts = Counter(
        select_mutation(eligible, config, rng) for _ in range(draws)
    )
    for op in eligible:
        assert counts[op] / draws == pytest.approx(1 / 3, abs=0.02)


def test_select_mutation_without_weight():
    weights = [0.0, 0.0, 0.0, 0.0, 0.5, 0.5]
    config = SearchConfig(mutation_op_weights=weights)
    assert select_mutation([Mutation.MR_ADD], config, SeededRng(0)) is None


def test_mutation_keeps_bounds(set_mr):
    config = SearchConfig(group_min=3, group_max=6, mutation_rate=1.0)
    rng = SeededRng(5)
    group = MRGroup(tuple(single(mr.perturbation_id) for mr in set_mr[:3]))
    for _ in range(2000):
        group = mutate(group, set_mr, config, rng)
        validate_group(group, config)


def test_check_termination():
    config = SearchConfig(max_iterations=1200, patience=50)
    patient = config.model_copy(update={"patience": 2000})
    assert check_termination([0.5] * 1201, patient)
    assert not check_termination([0.5] * 1200, patient)
    assert not check_termination([0.5] * 30, config)
    assert check_termination([0.5] + [0.5 + 5e-5] * 50, config)
    assert not check_termination([0.5] + [0.4] + [0.4] * 49, config)


def test_rank_population():
    population = [individual(*p, name=f"g{i}") for i, p in enumerate(FRONT)]
    ranks = rank_population(population)
    scores = [ranks[id(ind)] for ind in population]
    assert [rank for rank, _ in scores] == [0, 0, 0, 1]
    assert scores[0][1] == scores[1][1] == -float("inf")
    assert scores[2][1] == pytest.approx(-1.0)


def test_pareto_selection():
    population = [individual(*p, name=f"g{i}") for i, p in enumerate(FRONT)]
    assert select_nsga2(population, 3) == population[:3]
    assert select_spea2(population, 3) == population[:3]

    points = [(0.0, 1.0), (0.5, 0.5), (0.51, 0.49), (1.0, 0.0)]
    crowded = [individual(*p, name=f"c{i}") for i, p in enumerate(points)]
    for select in (select_nsga2, select_spea2):
        kept = select(crowded, 3)
        assert len(kept) == 3
        assert crowded[0] in kept and crowded[3] in kept


def test_moead_helpers():
    weights = uniform_weights(5)
    assert weights[:, 0].tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert neighbourhoods(weights, 3)[0] == [0, 1, 2]
    assert tchebycheff((0.5, 0.2), (0.0, 1.0), (0.1, 0.1)) == pytest.approx(
        0.1
    )


@pytest.fixture
def problem(make_evaluator, planted_profile, corpus, set_mr):
    def _make(profile=planted_profile):
        return Problem(make_evaluator(profile), corpus, set_mr, input_seed=3)

    return _make


def test_inputs_per_generation(problem, search_config):
    p = problem()
    first = p.inputs_for(1, search_config)
    assert len(first) == 4
    assert first == p.inputs_for(1, search_config)
    assert any(
        p.inputs_for(g, search_config) != first for g in range(2, 10)
    )


@pytest.mark.parametrize("algorithm", list(Algorithm))
def test_runs_are_reproducible(algorithm, problem, search_config):
    first = run_search(algorithm, problem(), search_config)
    second = run_search(algorithm, problem(), search_config)
    assert first.archive.to_file() == second.archive.to_file()
    assert first.history == second.history


@pytest.mark.parametrize("algorithm", list(Algorithm))
def test_run_invariants(algorithm, problem, search_config):
    result = run_search(algorithm, problem(), search_config)
    assert 1 <= result.generations <= search_config.max_iterations
    assert len(result.history) == len(result.counters)
    for entry in result.archive:
        validate_group(entry.group, search_config)

    best = [g.best_fitness for g in result.history]
    assert all(b <= a for a, b in zip(best, best[1:]))
    if result.archive.kind == ArchiveKind.PARETO:
        hv = [g.hypervolume for g in result.history]
        assert all(b >= a for a, b in zip(hv, hv[1:]))
        front = result.archive.front()
        assert not any(dominates(a, b) for a in front for b in front)
    else:
        assert len(result.archive) <= search_config.elite_capacity


@pytest.mark.parametrize(
    "algorithm", [Algorithm.NSGA2, Algorithm.SPEA2, Algorithm.MOEAD]
)
def test_pareto_archive_is_nondominated_every_generation(
    algorithm, problem, search_config, monkeypatch
):
    audited = []
    record = SearchRunner.record

    def audit(self, generation, population):
        record(self, generation, population)
        front = self.archive.front()
        assert not any(dominates(a, b) for a in front for b in front)
        audited.append(generation)

    monkeypatch.setattr(SearchRunner, "record", audit)
    result = run_search(algorithm, problem(), search_config)
    assert audited == list(range(result.generations + 1))


def test_random_search_keeps_one(problem, search_config):
    result = run_search(Algorithm.RANDOM, problem(), search_config)
    assert len(result.archive) == 1


def test_planted_vulnerability_is_selected(problem, search_config):
    config = search_config.model_copy(update={"weights": (1.0, 0.0)})
    result = run_search(Algorithm.SINGLE_GA, problem(), config)
    best = result.archive.best
    assert best.outcome.context_asr > 0
    assert {"l33t_transform", "add_random_word"} & {
        pid for member in best.group for pid in member.perturbation_ids
    }


def test_robust_model_yields_no_attack(problem, search_config):
    result = run_search(Algorithm.SINGLE_GA, problem(None), search_config)
    assert all(e.outcome.context_asr == 0 for e in result.archive)
    assert result.archive.best.outcome.fitness1 == 1.0
