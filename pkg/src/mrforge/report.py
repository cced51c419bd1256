"""Comparison reports over finished repetitions.

All tables are pure functions of the files in the run directories and are
written as plot-ready CSV, plus JSON for the convergence series and the
summary.

"""

import itertools
import json
import logging
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import pandas as pd

from . import analysis, manifest
from .config import Algorithm, AnalysisConfig
from .errors import DegenerateSamples, IncompatibleRuns
from .manifest import RunManifest, RuntimeRecord
from .search import Archive

log = logging.getLogger(__name__)

MULTI_OBJECTIVE = (Algorithm.NSGA2, Algorithm.SPEA2, Algorithm.MOEAD)


@dataclass
class RunRecord:
    label: str
    path: Path
    manifest: RunManifest
    archive: Archive
    runtime: RuntimeRecord | None = None

    @property
    def task_id(self) -> str:
        return self.manifest.task_id

    @property
    def algorithm(self) -> Algorithm:
        return self.manifest.algorithm


METRICS: dict[str, Callable[[RunRecord], float | None]] = {
    "fitness": lambda r: r.manifest.summary.final_fitness,
    "hypervolume": lambda r: r.manifest.summary.hypervolume,
    "wall_clock": lambda r: (
        r.runtime.wall_clock_seconds if r.runtime else None
    ),
}


def find_runs(root: Path) -> list[Path]:
    root = Path(root)
    if not root.is_dir():
        raise IncompatibleRuns(f"{root} is not a run directory")
    return sorted(p.parent for p in root.rglob(manifest.MANIFEST_FILE))


def load_runs(output_dirs: Sequence[Path]) -> list[RunRecord]:
    found = [
        (Path(root), path)
        for root in output_dirs
        for path in find_runs(root)
    ]
    manifests = {path: manifest.load_manifest(path) for _, path in found}

    roots_per_algorithm = {}
    for root, path in found:
        roots_per_algorithm.setdefault(manifests[path].algorithm, set()).add(
            root
        )

    runs = []
    for root, path in found:
        m = manifests[path]
        label = str(m.algorithm)
        if len(roots_per_algorithm[m.algorithm]) > 1:
            label = f"{root}/{m.algorithm}"
        try:
            runtime = manifest.load_runtime(path)
        except IncompatibleRuns:
            log.warning(f"{path} has no runtime record.")
            runtime = None
        archive = Archive.from_file(manifest.load_archive(path))
        runs.append(RunRecord(label, path, m, archive, runtime))

    if len(runs) < 2:
        raise IncompatibleRuns(
            f"need at least two completed runs, found {len(runs)}"
        )
    models = {r.manifest.model_id for r in runs}
    if len(models) > 1:
        raise IncompatibleRuns(
            f"runs of different models: {', '.join(sorted(models))}"
        )
    return runs


class Comparison:
    def __init__(self, runs: list[RunRecord], config: AnalysisConfig):
        self.runs = runs
        self.config = config
        self.model_id = runs[0].manifest.model_id
        self.tasks = sorted({r.task_id for r in runs})

    def labels(self, task_id: str, algorithms=None) -> list[str]:
        return sorted(
            {
                r.label
                for r in self.runs
                if r.task_id == task_id
                and (algorithms is None or r.algorithm in algorithms)
            }
        )

    def runs_of(self, task_id: str, label: str) -> list[RunRecord]:
        return [
            r for r in self.runs if r.task_id == task_id and r.label == label
        ]

    def samples(
        self, task_id: str, metric: str, algorithms=None
    ) -> list[analysis.SampleSet]:
        samples = []
        for label in self.labels(task_id, algorithms):
            values = [
                v
                for r in self.runs_of(task_id, label)
                if (v := METRICS[metric](r)) is not None
            ]
            if values:
                samples.append(analysis.SampleSet(label=label, values=values))
        return samples

    def _row(self, test: str, task_id: str, metric: str, **fields) -> dict:
        return {
            "test": test,
            "task": task_id,
            "model": self.model_id,
            "metric": metric,
        } | fields

    def pairwise(self, task_id, metric, algorithms=None) -> list[dict]:
        """Mann-Whitney U and A12 for every pair, Bonferroni-corrected."""
        samples = self.samples(task_id, metric, algorithms)
        pairs = list(itertools.combinations(samples, 2))
        if not pairs:
            return []
        alpha = analysis.bonferroni_alpha(self.config.alpha, len(pairs))
        rows = []
        for a, b in pairs:
            u, p = analysis.mann_whitney_u(a, b, self.config.alternative)
            effect = analysis.vargha_delaney_a(a, b)
            rows.append(
                self._row(
                    "MWU",
                    task_id,
                    metric,
                    a=a.label,
                    b=b.label,
                    n_a=len(a.values),
                    n_b=len(b.values),
                    u=u,
                    p=p,
                    alpha=alpha,
                    significant=p < alpha,
                    a12=effect.a12,
                    magnitude=str(effect.magnitude),
                    direction=effect.direction,
                )
            )
        return rows

    def kruskal(self, task_id, metric, algorithms=None) -> list[dict]:
        samples = self.samples(task_id, metric, algorithms)
        try:
            h, p = analysis.kruskal_wallis(samples)
        except DegenerateSamples as e:
            log.warning(f"No Kruskal-Wallis test on {metric}: {e}")
            return []
        return [
            self._row(
                "KW",
                task_id,
                metric,
                groups=len(samples),
                h=h,
                p=p,
                alpha=self.config.alpha,
                significant=p < self.config.alpha,
            )
        ]

    def dunn(self, task_id, metric, algorithms=None) -> list[dict]:
        samples = self.samples(task_id, metric, algorithms)
        try:
            matrix = analysis.dunns_test(samples)
        except DegenerateSamples as e:
            log.warning(f"No Dunn test on {metric}: {e}")
            return []
        labels = list(matrix.index)
        pairs = list(itertools.combinations(labels, 2))
        alpha = analysis.bonferroni_alpha(self.config.alpha, len(pairs))
        return [
            self._row(
                "Dunn",
                task_id,
                metric,
                a=a,
                b=b,
                p=float(matrix.loc[a, b]),
                alpha=alpha,
                significant=float(matrix.loc[a, b]) < alpha,
            )
            for a, b in pairs
        ]

    def convergence(self, task_id) -> pd.DataFrame:
        rows = [
            {
                "task": task_id,
                "label": r.label,
                "repetition": r.manifest.repetition,
                "generation": g.generation,
                "best_fitness": g.best_fitness,
                "mean_fitness": g.mean_fitness,
                "hypervolume": g.hypervolume,
                "archive_size": g.archive_size,
            }
            for r in self.runs
            if r.task_id == task_id
            for g in r.manifest.history
        ]
        frame = pd.DataFrame(rows)
        return (
            frame.groupby(["task", "label", "generation"], sort=True)
            .agg(
                best_fitness=("best_fitness", "median"),
                mean_fitness=("mean_fitness", "median"),
                hypervolume=("hypervolume", "median"),
                archive_size=("archive_size", "median"),
                repetitions=("repetition", "count"),
            )
            .reset_index()
        )

    def composition(self, task_id) -> list[dict]:
        rows = []
        for label in self.labels(task_id):
            ratios = [
                analysis.composition_ratio(e.group for e in r.archive)
                for r in self.runs_of(task_id, label)
            ]
            rows.append(
                {
                    "task": task_id,
                    "label": label,
                    "repetitions": len(ratios),
                    "combined_share": statistics.fmean(ratios),
                    "single_share": 1 - statistics.fmean(ratios),
                }
            )
        return rows

    def dominant_perturbations(self, task_id) -> list[dict]:
        top_n = self.config.top_n
        rows = []
        for label in self.labels(task_id):
            counts = analysis.perturbation_frequency(
                e.group
                for r in self.runs_of(task_id, label)
                for e in r.archive.top(top_n)
            )
            total = sum(counts.values())
            for pid, count in sorted(
                counts.items(), key=lambda item: (-item[1], item[0])
            ):
                rows.append(
                    {
                        "task": task_id,
                        "label": label,
                        "perturbation_id": pid,
                        "count": count,
                        "share": count / total,
                    }
                )
        return rows

    def planted(self, task_id) -> list[dict]:
        """Share of repetitions whose top-N contains a planted perturbation."""
        if not self.config.planted:
            return []
        rows = []
        for label in self.labels(task_id):
            runs = self.runs_of(task_id, label)
            hits = sum(
                analysis.contains_any(
                    (e.group for e in r.archive.top(self.config.top_n)),
                    self.config.planted,
                )
                for r in runs
            )
            rows.append(
                {
                    "task": task_id,
                    "label": label,
                    "repetitions": len(runs),
                    "hits": hits,
                    "share": hits / len(runs),
                }
            )
        return rows

    def summary(self) -> list[dict]:
        rows = []
        for task_id in self.tasks:
            for label in self.labels(task_id):
                runs = self.runs_of(task_id, label)
                row = {"task": task_id, "label": label, "runs": len(runs)}
                for counter in ("failed_evaluations", "failed_pairs"):
                    row[counter] = sum(
                        getattr(r.manifest.summary, counter) for r in runs
                    )
                if row["failed_pairs"]:
                    log.warning(
                        f"{task_id}/{label}: {row['failed_pairs']} pairs "
                        "failed and were left out of the ASR."
                    )
                for metric, value in METRICS.items():
                    values = [v for r in runs if (v := value(r)) is not None]
                    row[f"median_{metric}"] = (
                        statistics.median(values) if values else None
                    )
                rows.append(row)
        return rows

    def tables(self) -> dict[str, pd.DataFrame]:
        mwu, kw, dunn = [], [], []
        convergence, composition, dominant, planted = [], [], [], []
        for task_id in self.tasks:
            for metric in ("fitness", "wall_clock"):
                mwu += self.pairwise(task_id, metric)
                kw += self.kruskal(task_id, metric)
                dunn += self.dunn(task_id, metric)
            if len(self.labels(task_id, MULTI_OBJECTIVE)) >= 2:
                mwu += self.pairwise(task_id, "hypervolume", MULTI_OBJECTIVE)
                kw += self.kruskal(task_id, "hypervolume", MULTI_OBJECTIVE)
                dunn += self.dunn(task_id, "hypervolume", MULTI_OBJECTIVE)
            convergence.append(self.convergence(task_id))
            composition += self.composition(task_id)
            dominant += self.dominant_perturbations(task_id)
            planted += self.planted(task_id)
        tables = {
            "mwu": pd.DataFrame(mwu),
            "kruskal": pd.DataFrame(kw),
            "dunn": pd.DataFrame(dunn),
            "convergence": pd.concat(convergence, ignore_index=True),
            "composition": pd.DataFrame(composition),
            "perturbations": pd.DataFrame(dominant),
        }
        if planted:
            tables["planted"] = pd.DataFrame(planted)
        return tables

    def write(self, out: Path) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, frame in self.tables().items():
            path = out / f"{name}.csv"
            frame.to_csv(path, index=False)
            written.append(path)
            if name == "convergence":
                path = out / "convergence.json"
                frame.to_json(path, orient="records", indent=2)
                written.append(path)
        path = out / "summary.json"
        path.write_text(
            json.dumps(
                {"model": self.model_id, "groups": self.summary()}, indent=2
            )
            + "\n"
        )
        written.append(path)
        return written


def compare(
    output_dirs: Sequence[Path], out: Path, config: AnalysisConfig
) -> Comparison:
    comparison = Comparison(load_runs(output_dirs), config)
    comparison.write(out)
    return comparison
