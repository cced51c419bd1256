"""LLM execution: task definitions, token accounting and executors.

Two executors are provided. :class:`SurrogateExecutor` is a deterministic
stand-in model whose failures are planted through a vulnerability profile,
:class:`RemoteExecutor` talks to an HTTP inference endpoint.

"""

import functools
import logging
import math
import re
import threading
import time
from dataclasses import dataclass
from ._compat import StrEnum
from importlib import resources
from typing import Literal

import requests
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import (
    ConfigError,
    EmptyInput,
    ExecutorUnavailable,
    MalformedResponse,
)
from .perturb import ContextType
from .rng import derive_seed, hash_unit

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w+")

STOPWORDS = frozenset(
    "a an and are as at be but by for from had has have in is it its of on "
    "or that the this to was were will with they them their there these "
    "those than then very just also been into over only such some what "
    "when which while would could should about after again".split()
)
RETRY_STATUS = (429, 500, 502, 503, 504)


def count_tokens(text: str) -> int:
    """Count tokens: ceil(len/4) per word run, one per punctuation mark."""
    return sum(math.ceil(len(t) / 4) for t in _TOKEN_RE.findall(text))


class TaskKind(StrEnum):
    CLASSIFICATION = "classification"
    GENERATION = "generation"


class TaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task_id: str
    kind: TaskKind
    instruction: str
    label_set: list[str] | None = None
    # (min_tokens, max_tokens) normalization range of C_token
    token_bounds: tuple[int, int] | None = None

    @model_validator(mode="after")
    def check_task(self):
        if self.kind == TaskKind.CLASSIFICATION and not self.label_set:
            raise ValueError("classification tasks need a label_set")
        if self.token_bounds and self.token_bounds[0] >= self.token_bounds[1]:
            raise ValueError("token_bounds must satisfy min < max")
        return self


@dataclass(frozen=True)
class ExecRecord:
    input_tokens: int
    output_tokens: int
    output_text: str

    @property
    def c_token(self) -> int:
        return self.input_tokens + self.output_tokens


@dataclass(frozen=True)
class Probe:
    """Provenance of a perturbed input, visible to the surrogate only."""

    input_id: str
    original_text: str
    cmb_id: str
    perturbation_ids: tuple[str, ...]
    context_type: ContextType


class VulnerabilityProfile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    default: float = Field(0.0, ge=0, le=1)
    probabilities: dict[str, float] = {}

    @model_validator(mode="after")
    def check_probabilities(self):
        for pid, p in self.probabilities.items():
            if not 0 <= p <= 1:
                raise ValueError(f"probability of '{pid}' not in [0, 1]")
        return self

    def probability(self, perturbation_id: str) -> float:
        return self.probabilities.get(perturbation_id, self.default)


class ExecutorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["surrogate", "remote"] = "surrogate"
    parallelism: int = Field(1, ge=1)
    endpoint: str | None = None
    api_key: str | None = Field(None, exclude=True, repr=False)
    timeout: float = Field(30.0, gt=0)
    retries: int = Field(3, ge=1)
    backoff: float = Field(1.0, ge=0)
    profile: VulnerabilityProfile = Field(default_factory=VulnerabilityProfile)
    summary_tokens: int = Field(12, ge=1)


class Executor:
    """Base executor. Subclasses implement :meth:`_complete`."""

    def __init__(self, model_id: str, counter=count_tokens):
        self.model_id = model_id
        self.count_tokens = counter
        self.calls = 0
        self._lock = threading.Lock()

    def execute(
        self, input: str, task: TaskSpec, probe: Probe | None = None
    ) -> ExecRecord:
        if not input:
            raise EmptyInput("cannot execute an empty input")
        with self._lock:
            self.calls += 1
        output = self._complete(input, task, probe)
        return ExecRecord(
            input_tokens=self.count_tokens(task.instruction + "\n" + input),
            output_tokens=self.count_tokens(output),
            output_text=output,
        )

    def _complete(self, input: str, task: TaskSpec, probe: Probe | None):
        raise NotImplementedError


@functools.cache
def sentiment_words() -> dict[str, int]:
    data = resources.files("mrforge") / "data" / "sentiment.tsv"
    words = {}
    for line in data.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        word, polarity = line.split("\t")
        words[word.strip().lower()] = int(polarity)
    return words


class SurrogateExecutor(Executor):
    """Deterministic stand-in model.

    Without a probe the surrogate answers from the text alone: a word-list
    sentiment label for classification, an extractive summary for
    generation. With a probe it behaves as a robust model would (same answer
    for context-preserving perturbations, a changed answer for
    context-altering ones) unless one of the planted per-perturbation
    Bernoulli draws fires for this (input, CmbMR) pair.

    """

    def __init__(
        self,
        model_id: str,
        profile: VulnerabilityProfile | None = None,
        summary_tokens: int = 12,
        counter=count_tokens,
    ):
        super().__init__(model_id, counter)
        self.profile = profile or VulnerabilityProfile()
        self.summary_tokens = summary_tokens

    def _complete(self, input, task, probe):
        if task.kind == TaskKind.CLASSIFICATION:
            return self._classify(input, task, probe)
        return self._summarize(input, task, probe)

    def flipped(self, task: TaskSpec, probe: Probe) -> bool:
        key = (self.model_id, task.task_id, probe.input_id, probe.cmb_id)
        return any(
            hash_unit(*key, i) < self.profile.probability(pid)
            for i, pid in enumerate(probe.perturbation_ids)
        )

    def label(self, text: str, labels: list[str]) -> str:
        by_name = {label.lower(): label for label in labels}
        if "positive" in by_name and "negative" in by_name:
            score = sum(
                sentiment_words().get(w.lower(), 0)
                for w in _WORD_RE.findall(text)
            )
            if score == 0 and "neutral" in by_name:
                return by_name["neutral"]
            return by_name["positive" if score >= 0 else "negative"]
        return labels[derive_seed(self.model_id, text) % len(labels)]

    def _other(self, label: str, labels: list[str], *key) -> str:
        others = [candidate for candidate in labels if candidate != label]
        if not others:
            return label
        return others[derive_seed(self.model_id, "other", *key) % len(others)]

    def _classify(self, input, task, probe):
        labels = task.label_set
        if probe is None:
            return self.label(input, labels)
        key = (task.task_id, probe.input_id, probe.cmb_id)
        expected = self.label(probe.original_text, labels)
        if probe.context_type == ContextType.ALTERING:
            expected = self._other(expected, labels, *key)
        if self.flipped(task, probe):
            return self._other(expected, labels, "flip", *key)
        return expected

    def summary(self, text: str) -> str:
        words = [w.lower() for w in _WORD_RE.findall(text)]
        salient = [w for w in words if len(w) > 3 and w not in STOPWORDS]
        picked = list(dict.fromkeys(salient or words))
        return " ".join(picked[: self.summary_tokens])

    def _corrupt(self, summary: str, *key) -> str:
        return " ".join(
            f"q{derive_seed(self.model_id, word, *key) % 16**6:06x}"
            for word in summary.split()
        )

    def _summarize(self, input, task, probe):
        if probe is None:
            return self.summary(input)
        key = (task.task_id, probe.input_id, probe.cmb_id)
        corrupted = self.flipped(task, probe)
        expected = self.summary(probe.original_text)
        if probe.context_type == ContextType.PRESERVING:
            return self._corrupt(expected, *key) if corrupted else expected
        # a corrupted model ignores the altered content
        if corrupted:
            return expected
        return self._corrupt(expected, "altered", *key)


class RemoteExecutor(Executor):
    """Executor for an HTTP endpoint speaking the mrforge JSON protocol."""

    def __init__(
        self,
        model_id: str,
        endpoint: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 1.0,
        session: requests.Session | None = None,
        sleep=time.sleep,
        counter=count_tokens,
    ):
        super().__init__(model_id, counter)
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()
        self.sleep = sleep

    def _complete(self, input, task, probe):
        payload = {
            "model": self.model_id,
            "instruction": task.instruction,
            "input": input,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error = None
        for attempt in range(self.retries):
            try:
                r = self.session.post(
                    self.endpoint,
                    json=payload,
                    headers=headers,
                    timeout=self.timeout,
                )
                if r.status_code in RETRY_STATUS:
                    raise requests.HTTPError(
                        f"HTTP {r.status_code}: {r.text[:200]}", response=r
                    )
                r.raise_for_status()
            except requests.RequestException as e:
                last_error = e
                log.warning(
                    f"Request to {self.endpoint} failed "
                    f"(attempt {attempt + 1}/{self.retries}): {e}"
                )
                if attempt < self.retries - 1:
                    self.sleep(self.backoff * 2**attempt)
                continue
            return self._parse(r)

        raise ExecutorUnavailable(
            f"{self.endpoint} unavailable after {self.retries} attempts: "
            f"{last_error}"
        )

    def _parse(self, r: requests.Response) -> str:
        try:
            data = r.json()
        except ValueError:
            raise MalformedResponse(f"response is not JSON: {r.text[:200]}")
        if not isinstance(data, dict) or not isinstance(
            data.get("output"), str
        ):
            raise MalformedResponse(f"response lacks 'output': {data!r:.200}")
        return data["output"]


def make_executor(config: ExecutorConfig, model_id: str) -> Executor:
    if config.kind == "remote":
        if not config.endpoint:
            raise ConfigError(
                "remote executor needs an endpoint (set MRFORGE_ENDPOINT)"
            )
        return RemoteExecutor(
            model_id,
            config.endpoint,
            api_key=config.api_key,
            timeout=config.timeout,
            retries=config.retries,
            backoff=config.backoff,
        )
    return SurrogateExecutor(
        model_id, config.profile, summary_tokens=config.summary_tokens
    )
