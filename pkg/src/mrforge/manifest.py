"""On-disk records of finished repetitions.

Every repetition directory holds ``archive.json``, ``runtime.json`` and,
written last, ``manifest.json``. The manifest and the archive depend only on
the plan; wall-clock time and cache counters go to ``runtime.json``.

"""

from pathlib import Path

from pydantic import BaseModel, ValidationError

from .config import Algorithm
from .errors import IncompatibleRuns
from .search import ArchiveFile, GenerationCounters, GenerationStats

MANIFEST_FILE = "manifest.json"
ARCHIVE_FILE = "archive.json"
RUNTIME_FILE = "runtime.json"
TRACE_FILE = "trace.csv"


class RunSummary(BaseModel):
    final_fitness: float
    best_context_asr: float
    best_c_token: int
    hypervolume: float
    archive_size: int
    generations: int
    evaluations: int
    failed_evaluations: int = 0
    failed_pairs: int = 0


class RunManifest(BaseModel):
    algorithm: Algorithm
    task_id: str
    model_id: str
    repetition: int
    seed: int
    input_seed: int
    config: dict
    history: list[GenerationStats]
    summary: RunSummary


class RuntimeRecord(BaseModel):
    wall_clock_seconds: float
    executor_calls: int
    cache_hits: int
    counters: list[GenerationCounters] = []


def rep_dir(output_dir: Path, task_id: str, algorithm, repetition: int):
    return Path(output_dir) / task_id / str(algorithm) / f"rep-{repetition:02d}"


def is_complete(path: Path) -> bool:
    return (path / MANIFEST_FILE).is_file()


def save(path: Path, model: BaseModel):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")


def load(path: Path, model: type[BaseModel]):
    try:
        return model.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise IncompatibleRuns(f"{path} is missing")
    except ValidationError as e:
        raise IncompatibleRuns(f"{path} is not a valid {model.__name__}: {e}")


def load_manifest(path: Path) -> RunManifest:
    return load(path / MANIFEST_FILE, RunManifest)


def load_archive(path: Path) -> ArchiveFile:
    return load(path / ARCHIVE_FILE, ArchiveFile)


def load_runtime(path: Path) -> RuntimeRecord:
    return load(path / RUNTIME_FILE, RuntimeRecord)
