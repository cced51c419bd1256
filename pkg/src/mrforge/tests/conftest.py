import json

import pytest

from mrforge import perturb
from mrforge.config import FitnessConfig, SearchConfig
from mrforge.corpus import CorpusRecord
from mrforge.embedding import TrigramEmbedder
from mrforge.executor import (
    SurrogateExecutor,
    TaskKind,
    TaskSpec,
    VulnerabilityProfile,
)
from mrforge.fitness import Evaluator
from mrforge.mrspace import build_set_mr

REVIEWS = [
    "This kettle is great. It works well and feels sturdy in daily use.",
    "This router is terrible. It broke after two days and feels weak.",
    "Nothing - All good for purpose. The delivery arrived early.",
    "This blender is nice. I love how quiet and easy it is to clean.",
    "This toaster is awful. The buttons are hard to press. I returned it.",
    "This keyboard is perfect. I would recommend it to a friend.",
    "This lamp is poor. It looks ugly in person and the lid is flimsy.",
    "This chair is comfortable. I am satisfied and would buy it again.",
]


@pytest.fixture
def sa_task():
    return TaskSpec(
        task_id="sa",
        kind=TaskKind.CLASSIFICATION,
        instruction="Classify the sentiment as Positive or Negative.",
        label_set=["Positive", "Negative"],
    )


@pytest.fixture
def summary_task():
    return TaskSpec(
        task_id="summary",
        kind=TaskKind.GENERATION,
        instruction="Summarize the text in one sentence.",
    )


@pytest.fixture
def embedder():
    return TrigramEmbedder()


@pytest.fixture
def corpus():
    return [
        CorpusRecord(input_id=f"r{i}", text=text)
        for i, text in enumerate(REVIEWS)
    ]


@pytest.fixture
def inputs(corpus):
    return [record.pair for record in corpus]


@pytest.fixture
def set_mr():
    return build_set_mr(perturb.catalog(), [1, 2])


@pytest.fixture
def search_config():
    return SearchConfig(
        population_size=8,
        max_iterations=6,
        inputs_per_iteration=4,
        group_min=3,
        group_max=8,
        elite_capacity=5,
        moead_neighborhood=4,
        seed=7,
    )


@pytest.fixture
def planted_profile():
    return VulnerabilityProfile(
        default=0.0,
        probabilities={"l33t_transform": 1.0, "add_random_word": 1.0},
    )


@pytest.fixture
def make_evaluator(sa_task, embedder, search_config):
    def _make(profile=None, cache=None, task=None, **fitness):
        executor = SurrogateExecutor("surrogate", profile)
        return Evaluator(
            task or sa_task,
            executor,
            embedder,
            cache,
            search=search_config,
            fitness=FitnessConfig(**fitness),
        )

    return _make


TINY_PLAN = """
[plan]
algorithms = ["single_ga", "nsga2", "random"]
repetitions = 2
tasks = ["sa"]
model_id = "surrogate-planted"
cache_path = "{root}/cache.jsonl"
output_dir = "{root}/runs"

[search]
population_size = 4
max_iterations = 2
inputs_per_iteration = 3
group_min = 3
group_max = 5
elite_capacity = 3
seed = 11

[executor.profile.probabilities]
l33t_transform = 0.9

[analysis]
planted = ["l33t_transform"]

[tasks.sa]
kind = "classification"
instruction = "Classify the sentiment as Positive or Negative."
label_set = ["Positive", "Negative"]
corpus = "{root}/reviews.jsonl"
"""


@pytest.fixture
def tiny_plan(tmp_path):
    """A complete plan that runs in seconds; returns the config path."""
    (tmp_path / "reviews.jsonl").write_text(
        "".join(
            json.dumps({"input_id": f"r{i}", "text": text}) + "\n"
            for i, text in enumerate(REVIEWS)
        )
    )
    path = tmp_path / "mrforge.toml"
    path.write_text(TINY_PLAN.format(root=tmp_path.as_posix()))
    return path
