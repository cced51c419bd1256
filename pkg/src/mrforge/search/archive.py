"""Elite and Pareto archives of evaluated MR groups."""

from dataclasses import dataclass
from .._compat import StrEnum
from typing import Callable, Iterable, Sequence

from pydantic import BaseModel

from ..analysis import hypervolume
from ..errors import EmptyPopulation
from ..fitness import EvalOutcome
from ..mrspace import MRGroup, SingleMR

REFERENCE_POINT = (1.0, 1.0)


class ArchiveKind(StrEnum):
    ELITE = "elite"
    PARETO = "pareto"


@dataclass(frozen=True)
class Individual:
    group: MRGroup
    outcome: EvalOutcome

    @property
    def objectives(self) -> tuple[float, float]:
        return self.outcome.objectives


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """``a`` is no worse in every objective and better in one."""
    return all(x <= y for x, y in zip(a, b)) and any(
        x < y for x, y in zip(a, b)
    )


def scalarized_key(ind: Individual) -> tuple:
    return (ind.outcome.fitness_single, ind.outcome.c_token, ind.group.id)


def effectiveness_key(ind: Individual) -> tuple:
    return (ind.outcome.fitness1, ind.outcome.c_token, ind.group.id)


def pareto_key(ind: Individual) -> tuple:
    return (*ind.objectives, ind.group.id)


class ArchiveRecord(BaseModel):
    group: dict
    outcome: EvalOutcome


class ArchiveFile(BaseModel):
    kind: ArchiveKind
    capacity: int | None = None
    entries: list[ArchiveRecord] = []


class Archive:
    """Best-so-far store.

    An elite archive keeps at most ``capacity`` distinct groups ordered by
    ``key``. A Pareto archive keeps every evaluated group that no other
    entry weakly dominates.

    """

    def __init__(
        self,
        kind: ArchiveKind,
        capacity: int | None = None,
        key: Callable[[Individual], tuple] = scalarized_key,
    ):
        self.kind = kind
        self.capacity = capacity
        self.key = key if kind == ArchiveKind.ELITE else pareto_key
        self.entries: list[Individual] = []

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def add(self, ind: Individual) -> bool:
        if self.kind == ArchiveKind.ELITE:
            return self._add_elite(ind)
        return self._add_pareto(ind)

    def extend(self, inds: Iterable[Individual]):
        for ind in inds:
            self.add(ind)

    def _add_elite(self, ind: Individual) -> bool:
        for i, entry in enumerate(self.entries):
            if entry.group.id == ind.group.id:
                if self.key(entry) <= self.key(ind):
                    return False
                del self.entries[i]
                break
        self.entries.append(ind)
        self.entries.sort(key=self.key)
        if self.capacity is not None:
            del self.entries[self.capacity :]
        return ind in self.entries

    def _add_pareto(self, ind: Individual) -> bool:
        new = ind.objectives
        for entry in self.entries:
            old = entry.objectives
            if all(x <= y for x, y in zip(old, new)):
                return False
        self.entries = [
            e for e in self.entries if not dominates(new, e.objectives)
        ]
        self.entries.append(ind)
        self.entries.sort(key=self.key)
        return True

    @property
    def best(self) -> Individual:
        """Entry with the lowest fitness_single."""
        if not self.entries:
            raise EmptyPopulation("archive is empty")
        return min(self.entries, key=scalarized_key)

    def front(self) -> list[tuple[float, float]]:
        return [e.objectives for e in self.entries]

    def hypervolume(self, reference=REFERENCE_POINT) -> float:
        return hypervolume(self.front(), reference)

    def top(self, n: int) -> list[Individual]:
        return sorted(self.entries, key=scalarized_key)[:n]

    def to_file(self) -> ArchiveFile:
        return ArchiveFile(
            kind=self.kind,
            capacity=self.capacity,
            entries=[
                ArchiveRecord(group=e.group.to_dict(), outcome=e.outcome)
                for e in self.entries
            ],
        )

    @classmethod
    def from_file(
        cls, data: ArchiveFile, set_mr: Sequence[SingleMR] = ()
    ) -> "Archive":
        archive = cls(data.kind, data.capacity)
        archive.entries = [
            Individual(MRGroup.from_dict(r.group, set_mr), r.outcome)
            for r in data.entries
        ]
        return archive
