from . import moead, nsga2, random_search, single_ga, spea2  # noqa: F401
from .archive import Archive, ArchiveFile, ArchiveKind, Individual, dominates
from .base import (
    RUNNERS,
    GenerationCounters,
    GenerationStats,
    Problem,
    SearchResult,
    check_termination,
    run_search,
)
from .moead import run_moead
from .nsga2 import run_nsga2
from .random_search import run_random_search
from .single_ga import run_single_ga
from .spea2 import run_spea2

__all__ = [
    "RUNNERS",
    "Archive",
    "ArchiveFile",
    "ArchiveKind",
    "GenerationCounters",
    "GenerationStats",
    "Individual",
    "Problem",
    "SearchResult",
    "check_termination",
    "dominates",
    "run_moead",
    "run_nsga2",
    "run_random_search",
    "run_search",
    "run_single_ga",
    "run_spea2",
]
