"""Execution of an experiment plan: algorithms x repetitions per task."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from rich.progress import Progress

from . import manifest, perturb
from .cache import ExecutionCache
from .config import Algorithm, Config
from .corpus import CorpusRecord, load_corpus
from .embedding import EmbeddingProvider, TrigramEmbedder
from .executor import TaskSpec, make_executor
from .fitness import Evaluator, write_trace
from .mrspace import SingleMR, build_set_mr
from .rng import derive_seed
from .search import Problem, SearchResult, run_search

log = logging.getLogger(__name__)


def repetition_seed(master: int, algorithm: Algorithm, repetition: int):
    return derive_seed(master, str(algorithm), repetition)


def input_seed(master: int, repetition: int) -> int:
    return derive_seed(master, "inputs", repetition)


def task_spec(config: Config, task_id: str) -> TaskSpec:
    return TaskSpec(**config.tasks[task_id].model_dump(exclude={"corpus"}))


@dataclass
class Repetition:
    task: TaskSpec
    corpus: list[CorpusRecord]
    algorithm: Algorithm
    index: int

    def directory(self, config: Config) -> Path:
        return manifest.rep_dir(
            config.plan.output_dir,
            self.task.task_id,
            self.algorithm,
            self.index,
        )


class ExperimentRunner:
    """Runs every pending repetition of a plan.

    Repetitions with a manifest on disk are skipped, so an interrupted plan
    resumes where it stopped.

    """

    def __init__(
        self,
        config: Config,
        embedder: EmbeddingProvider | None = None,
        cache: ExecutionCache | None = None,
    ):
        self.config = config
        self.embedder = embedder or TrigramEmbedder(
            config.fitness.embedding_dimension
        )
        self.cache = cache or ExecutionCache(config.plan.cache_path)
        self.set_mr: list[SingleMR] = build_set_mr(
            perturb.catalog(), config.search.mr_intensities
        )

    def repetitions(self) -> list[Repetition]:
        plan = self.config.plan
        reps = []
        for task_id in plan.tasks:
            task = task_spec(self.config, task_id)
            corpus = load_corpus(self.config.corpus_for(task_id))
            for algorithm in plan.algorithms:
                for index in range(plan.repetitions):
                    reps.append(Repetition(task, corpus, algorithm, index))
        return reps

    def run(self) -> list[Path]:
        """Returns the directories of the repetitions executed now."""
        pending = []
        for rep in self.repetitions():
            path = rep.directory(self.config)
            if manifest.is_complete(path):
                log.warning(f"Skipping {path} - already done.")
                continue
            pending.append(rep)

        done = []
        with self.cache, Progress(transient=True) as progress:
            task = progress.add_task(
                "Running repetitions", total=len(pending)
            )

            def execute(rep):
                path = self.run_repetition(rep)
                progress.update(task, advance=1)
                return path

            if self.config.plan.jobs > 1:
                with ThreadPoolExecutor(self.config.plan.jobs) as pool:
                    done = list(pool.map(execute, pending))
            else:
                done = [execute(rep) for rep in pending]
        return done

    def run_repetition(self, rep: Repetition) -> Path:
        config = self.config
        master = config.search.seed
        seed = repetition_seed(master, rep.algorithm, rep.index)
        search = config.search.model_copy(update={"seed": seed})
        executor = make_executor(config.executor, config.plan.model_id)
        evaluator = Evaluator(
            rep.task,
            executor,
            self.embedder,
            self.cache,
            search=search,
            fitness=config.fitness,
            parallelism=config.executor.parallelism,
        )
        problem = Problem(
            evaluator,
            rep.corpus,
            self.set_mr,
            input_seed=input_seed(master, rep.index),
        )

        path = rep.directory(config)
        log.info(f"Starting {path}.")
        start = time.perf_counter()
        result = run_search(rep.algorithm, problem, search)
        elapsed = time.perf_counter() - start

        manifest.save(
            path / manifest.RUNTIME_FILE,
            manifest.RuntimeRecord(
                wall_clock_seconds=elapsed,
                executor_calls=evaluator.executor_calls,
                cache_hits=evaluator.cache_hits,
                counters=result.counters,
            ),
        )
        self.write(path, rep, result, evaluator, seed, problem.input_seed)
        log.info(
            f"Finished {path} in {elapsed:.1f}s "
            f"({evaluator.executor_calls} executor calls, "
            f"{evaluator.cache_hits} cache hits)."
        )
        return path

    def write(
        self,
        path: Path,
        rep: Repetition,
        result: SearchResult,
        evaluator: Evaluator,
        seed: int,
        input_seed: int,
    ):
        manifest.save(path / manifest.ARCHIVE_FILE, result.archive.to_file())
        if evaluator.trace is not None:
            write_trace(evaluator.trace, path / manifest.TRACE_FILE)
        best = result.archive.best.outcome
        summary = manifest.RunSummary(
            final_fitness=result.final_fitness,
            best_context_asr=max(
                e.outcome.context_asr for e in result.archive
            ),
            best_c_token=best.c_token,
            hypervolume=result.archive.hypervolume(),
            archive_size=len(result.archive),
            generations=result.generations,
            evaluations=result.evaluations,
            failed_evaluations=result.failed_evaluations,
            failed_pairs=evaluator.failed_pairs,
        )
        manifest.save(
            path / manifest.MANIFEST_FILE,
            manifest.RunManifest(
                algorithm=rep.algorithm,
                task_id=rep.task.task_id,
                model_id=evaluator.executor.model_id,
                repetition=rep.index,
                seed=seed,
                input_seed=input_seed,
                config=self.config.model_dump(mode="json"),
                history=result.history,
                summary=summary,
            ),
        )


def run_plan(config: Config) -> list[Path]:
    return ExperimentRunner(config).run()
