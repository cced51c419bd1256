"""Effectiveness (Context_ASR) and cost (C_token) of MR groups."""

import logging
import statistics
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict

from .cache import CacheEntry, ExecutionCache, cache_key
from .config import FitnessConfig, SearchConfig
from .embedding import EmbeddingProvider, cosine
from .errors import (
    CacheConflict,
    CompositionFailed,
    DegenerateEmbedding,
    EmptyEvaluation,
    ExecutorError,
    ExecutorUnavailable,
)
from .executor import Executor, Probe, TaskKind, TaskSpec
from .mrspace import CmbMR, MRGroup, compose
from .perturb import ContextType
from .rng import SeededRng, derive_seed

log = logging.getLogger(__name__)

IDENTITY = "IDENTITY"

CALIBRATION_PROBES = (
    "The delivery arrived early and the product works exactly as described.",
    "I would not buy this again because the battery died after two days.",
    "The city council announced a new budget for public transport on Monday.",
    "Customer service was quick to answer and very helpful with my questions.",
    "The report shows that prices rose sharply during the last quarter.",
)

TRACE_COLUMNS = [
    "group_id",
    "cmb_mr_id",
    "input_id",
    "satisfied",
    "pq",
    "input_tokens",
    "output_tokens",
]


class EvalOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    context_asr: float
    mean_asr: float
    mean_pq: float
    c_token: int
    fitness1: float
    fitness2: float
    fitness_single: float
    pairs: int = 0
    failed_pairs: int = 0

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.fitness1, self.fitness2)


@dataclass(frozen=True)
class TraceRow:
    group_id: str
    cmb_mr_id: str
    input_id: str
    satisfied: bool
    pq: float
    input_tokens: int
    output_tokens: int


def similarity(a: str, b: str, embedder: EmbeddingProvider) -> float:
    try:
        return cosine(embedder.embed(a), embedder.embed(b))
    except DegenerateEmbedding:
        return 0.0


def perturbation_quality(
    original: str, perturbed: str, embedder: EmbeddingProvider
) -> float:
    try:
        value = cosine(embedder.embed(original), embedder.embed(perturbed))
    except DegenerateEmbedding:
        log.warning("Degenerate embedding, perturbation quality set to 0.")
        return 0.0
    return min(max(value, 0.0), 1.0)


def asr(results: Sequence[bool]) -> float:
    """Share of unsatisfied relations."""
    if not results:
        raise EmptyEvaluation("no satisfaction results")
    return sum(1 for satisfied in results if not satisfied) / len(results)


def pair_eval_result(results: Sequence[bool], pqs: Sequence[float]) -> float:
    """Mean over inputs of unsatisfied * perturbation quality."""
    if not results:
        raise EmptyEvaluation("no satisfaction results")
    return statistics.fmean(
        (0.0 if satisfied else 1.0) * pq for satisfied, pq in zip(results, pqs)
    )


def normalize_cost(c_token: int, task: TaskSpec) -> float:
    low, high = task.token_bounds
    return min(max((c_token - low) / (high - low), 0.0), 1.0)


def default_token_bounds(
    search: SearchConfig, fitness: FitnessConfig
) -> tuple[int, int]:
    return (
        0,
        search.group_max
        * search.inputs_per_iteration
        * fitness.per_exec_token_ceiling,
    )


class ContextResolver:
    """Effective context type of a CmbMR.

    Uniform CmbMRs keep their type. Mixed ones are calibrated: the median
    perturbation quality of the composed perturbation over a fixed set of
    probe sentences decides whether they behave like a context-preserving
    perturbation.

    """

    def __init__(
        self,
        embedder: EmbeddingProvider,
        sim_threshold: float = 0.70,
        seed: int = 0,
        probes: Sequence[str] = CALIBRATION_PROBES,
    ):
        self.embedder = embedder
        self.sim_threshold = sim_threshold
        self.seed = seed
        self.probes = probes
        self._resolved: dict[str, ContextType] = {}

    def resolve(self, cmb: CmbMR) -> ContextType:
        types = cmb.context_types
        if len(types) == 1:
            return next(iter(types))
        if cmb.id not in self._resolved:
            self._resolved[cmb.id] = self._calibrate(cmb)
        return self._resolved[cmb.id]

    def _calibrate(self, cmb: CmbMR) -> ContextType:
        pqs = []
        for i, probe in enumerate(self.probes):
            rng = SeededRng(derive_seed(self.seed, "calibration", cmb.id, i))
            try:
                perturbed = compose(cmb, probe, rng)
            except CompositionFailed:
                continue
            pqs.append(perturbation_quality(probe, perturbed, self.embedder))
        if pqs and statistics.median(pqs) >= self.sim_threshold:
            return ContextType.PRESERVING
        return ContextType.ALTERING


def satisfaction(
    cmb: CmbMR,
    original_out: str,
    perturbed_out: str,
    task: TaskSpec,
    embedder: EmbeddingProvider,
    *,
    context_type: ContextType | None = None,
    sim_threshold: float = 0.70,
) -> bool:
    """Whether the relation between the two outputs holds."""
    if context_type is None:
        context_type = ContextResolver(embedder, sim_threshold).resolve(cmb)
    if task.kind == TaskKind.CLASSIFICATION:
        same = original_out.strip() == perturbed_out.strip()
    else:
        same = similarity(original_out, perturbed_out, embedder) >= (
            sim_threshold
        )
    if context_type == ContextType.PRESERVING:
        return same
    return not same


class Evaluator:
    """Evaluates MR groups against one task on one executor.

    Every (CmbMR, input) pair is looked up in the cache first. The clean
    execution of an input is cached under the ``IDENTITY`` sentinel and
    charged once per input and evaluation.

    """

    def __init__(
        self,
        task: TaskSpec,
        executor: Executor,
        embedder: EmbeddingProvider,
        cache: ExecutionCache | None = None,
        *,
        search: SearchConfig | None = None,
        fitness: FitnessConfig | None = None,
        parallelism: int = 1,
    ):
        search = search or SearchConfig()
        fitness = fitness or FitnessConfig()
        if task.token_bounds is None:
            task = task.model_copy(
                update={"token_bounds": default_token_bounds(search, fitness)}
            )
        self.task = task
        self.executor = executor
        self.embedder = embedder
        self.cache = cache if cache is not None else ExecutionCache()
        self.weights = search.weights
        self.sim_threshold = fitness.sim_threshold
        self.perturbation_seed = fitness.perturbation_seed
        self.parallelism = parallelism
        self.resolver = ContextResolver(
            embedder, fitness.sim_threshold, fitness.perturbation_seed
        )
        self.trace: list[TraceRow] | None = [] if fitness.trace else None

        self.evaluations = 0
        self.cache_hits = 0
        self.failed_pairs = 0
        # pairs whose composition fails deterministically
        self._uncomposable: set[str] = set()
        self._lock = threading.Lock()

    @property
    def executor_calls(self) -> int:
        return self.executor.calls

    def key(self, cmb_id: str, input_id: str) -> str:
        return cache_key(
            self.executor.model_id,
            self.task.task_id,
            cmb_id,
            input_id,
            self.perturbation_seed,
        )

    def _cached(self, key: str) -> CacheEntry | None:
        entry = self.cache.get(key)
        if entry is not None:
            with self._lock:
                self.cache_hits += 1
        return entry

    def _store(self, entry: CacheEntry) -> CacheEntry:
        try:
            self.cache.put(entry)
        except CacheConflict:
            # another worker stored this pair first
            log.debug(f"Keeping the cached payload of {entry.key}.")
            return self.cache.peek(entry.key)
        return entry

    def _map(self, func: Callable, items: Iterable) -> list:
        items = list(items)
        if self.parallelism > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    def original(self, input_id: str, text: str) -> CacheEntry:
        key = self.key(IDENTITY, input_id)
        if (entry := self._cached(key)) is not None:
            return entry
        record = self.executor.execute(text, self.task)
        entry = CacheEntry(
            key,
            record.output_text,
            0.0,
            record.input_tokens,
            record.output_tokens,
        )
        return self._store(entry)

    def evaluate_pair(
        self, cmb: CmbMR, input_id: str, text: str, original: CacheEntry
    ) -> CacheEntry | None:
        key = self.key(cmb.id, input_id)
        if key in self._uncomposable:
            return None
        if (entry := self._cached(key)) is not None:
            return entry
        rng = SeededRng(derive_seed(self.perturbation_seed, cmb.id, input_id))
        try:
            perturbed = compose(cmb, text, rng)
        except CompositionFailed as e:
            log.debug(f"Skipping {input_id}: {e}")
            with self._lock:
                self._uncomposable.add(key)
            return None
        context_type = self.resolver.resolve(cmb)
        probe = Probe(
            input_id, text, cmb.id, cmb.perturbation_ids, context_type
        )
        record = self.executor.execute(perturbed, self.task, probe)
        satisfied = satisfaction(
            cmb,
            original.output_text,
            record.output_text,
            self.task,
            self.embedder,
            context_type=context_type,
            sim_threshold=self.sim_threshold,
        )
        pq = perturbation_quality(text, perturbed, self.embedder)
        entry = CacheEntry(
            key,
            record.output_text,
            pair_eval_result([satisfied], [pq]),
            record.input_tokens,
            record.output_tokens,
            satisfied=satisfied,
            pq=pq,
        )
        return self._store(entry)

    def evaluate_group(
        self, group: MRGroup, inputs: Sequence[tuple[str, str]]
    ) -> EvalOutcome:
        if not inputs:
            raise EmptyEvaluation("no inputs to evaluate on")
        texts = dict(inputs)
        errors: list[ExecutorError] = []

        def attempt(func, *args):
            try:
                return func(*args)
            except ExecutorError as e:
                log.warning(f"Execution failed: {e}")
                errors.append(e)
                return None

        originals = dict(
            zip(
                texts,
                self._map(
                    lambda item: attempt(self.original, *item), texts.items()
                ),
            )
        )
        originals = {k: v for k, v in originals.items() if v is not None}

        jobs = [
            (cmb, input_id)
            for cmb in dict.fromkeys(group.members)
            for input_id in originals
        ]
        results = dict(
            zip(
                [(cmb.id, input_id) for cmb, input_id in jobs],
                self._map(
                    lambda job: attempt(
                        self.evaluate_pair,
                        job[0],
                        job[1],
                        texts[job[1]],
                        originals[job[1]],
                    ),
                    jobs,
                ),
            )
        )

        c_token = sum(
            e.input_tokens + e.output_tokens for e in originals.values()
        )
        eval_results, asrs, pqs = [], [], []
        pairs = failed = 0
        for cmb in group.members:
            entries = [results[(cmb.id, input_id)] for input_id in originals]
            done = [e for e in entries if e is not None]
            pairs += len(entries)
            failed += len(entries) - len(done)
            c_token += sum(e.input_tokens + e.output_tokens for e in done)
            if not done:
                continue
            flags = [e.satisfied for e in done]
            member_pqs = [e.pq for e in done]
            eval_results.append(pair_eval_result(flags, member_pqs))
            asrs.append(asr(flags))
            pqs.append(statistics.fmean(member_pqs))
        failed += (len(texts) - len(originals)) * len(group)

        with self._lock:
            self.evaluations += 1
            self.failed_pairs += failed
        if failed:
            log.warning(f"Group {group.id}: {failed} pairs failed.")
        attempts = len(jobs) + len(texts) - len(originals)
        if not eval_results and errors and len(errors) == attempts:
            raise ExecutorUnavailable(
                f"every pair of group {group.id} failed to execute"
            ) from errors[-1]
        if not eval_results:
            raise EmptyEvaluation(f"every pair of group {group.id} failed")

        if self.trace is not None:
            for cmb, input_id in jobs:
                if (entry := results[(cmb.id, input_id)]) is not None:
                    self.trace.append(
                        TraceRow(
                            group.id,
                            cmb.id,
                            input_id,
                            entry.satisfied,
                            entry.pq,
                            entry.input_tokens,
                            entry.output_tokens,
                        )
                    )

        context_asr = statistics.fmean(eval_results)
        fitness1 = 1.0 - context_asr
        fitness2 = normalize_cost(c_token, self.task)
        w1, w2 = self.weights
        return EvalOutcome(
            context_asr=context_asr,
            mean_asr=statistics.fmean(asrs),
            mean_pq=statistics.fmean(pqs),
            c_token=c_token,
            fitness1=fitness1,
            fitness2=fitness2,
            fitness_single=w1 * fitness1 + w2 * fitness2,
            pairs=pairs,
            failed_pairs=failed,
        )


def write_trace(rows: Iterable[TraceRow], path: Path):
    frame = pd.DataFrame([asdict(r) for r in rows], columns=TRACE_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


def evaluate_group(
    group: MRGroup,
    inputs: Sequence[tuple[str, str]],
    task: TaskSpec,
    executor: Executor,
    embedder: EmbeddingProvider,
    cache: ExecutionCache | None = None,
    **kwargs,
) -> EvalOutcome:
    """One-off evaluation; searches keep a long-lived :class:`Evaluator`."""
    evaluator = Evaluator(task, executor, embedder, cache, **kwargs)
    return evaluator.evaluate_group(group, inputs)
