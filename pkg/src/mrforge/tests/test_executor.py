from unittest import mock

import pytest
import requests
from pydantic import ValidationError

from mrforge.errors import (
    ConfigError,
    EmptyInput,
    ExecutorUnavailable,
    MalformedResponse,
)
from mrforge.executor import (
    ExecutorConfig,
    Probe,
    RemoteExecutor,
    SurrogateExecutor,
    TaskKind,
    TaskSpec,
    VulnerabilityProfile,
    count_tokens,
    make_executor,
)
from mrforge.perturb import ContextType


def probe(text, *perturbations, context=ContextType.PRESERVING, cmb="c1"):
    return Probe("in-1", text, cmb, tuple(perturbations), context)


@pytest.mark.parametrize(
    "text, tokens",
    [("", 0), ("meet", 1), ("Nothing - All good for purpose", 8)],
)
def test_count_tokens(text, tokens):
    assert count_tokens(text) == tokens


def test_task_spec_validation():
    with pytest.raises(ValidationError):
        TaskSpec(task_id="t", kind=TaskKind.CLASSIFICATION, instruction="x")
    with pytest.raises(ValidationError):
        TaskSpec(
            task_id="t",
            kind=TaskKind.GENERATION,
            instruction="x",
            token_bounds=(10, 10),
        )


def test_vulnerability_profile():
    profile = VulnerabilityProfile(default=0.1, probabilities={"a": 0.5})
    assert profile.probability("a") == 0.5
    assert profile.probability("b") == 0.1
    with pytest.raises(ValidationError):
        VulnerabilityProfile(probabilities={"a": 1.5})


def test_surrogate_clean_label_is_stable(sa_task):
    executor = SurrogateExecutor("surrogate")
    outputs = {
        executor.execute("All good for purpose", sa_task).output_text
        for _ in range(100)
    }
    assert outputs == {"Positive"}
    assert executor.calls == 100
    negative = executor.execute("It is terrible and broken.", sa_task)
    assert negative.output_text == "Negative"


def test_surrogate_token_accounting(sa_task):
    record = SurrogateExecutor("surrogate").execute("All good", sa_task)
    assert record.input_tokens == count_tokens(
        sa_task.instruction + "\n" + "All good"
    )
    assert record.output_tokens == count_tokens(record.output_text)
    assert record.c_token == record.input_tokens + record.output_tokens


def test_surrogate_rejects_empty_input(sa_task):
    with pytest.raises(EmptyInput):
        SurrogateExecutor("surrogate").execute("", sa_task)


def test_surrogate_planted_flip(sa_task):
    profile = VulnerabilityProfile(probabilities={"l33t_transform": 1.0})
    executor = SurrogateExecutor("surrogate", profile)
    original = "All good for purpose"
    clean = executor.execute(original, sa_task).output_text
    p = probe(original, "l33t_transform")
    flipped = executor.execute("All g00d for purpose", sa_task, p)
    assert flipped.output_text != clean


def test_surrogate_without_vulnerabilities(sa_task):
    executor = SurrogateExecutor("surrogate")
    original = "All good for purpose"
    clean = executor.execute(original, sa_task).output_text
    kept = executor.execute(
        "All g00d for purpose", sa_task, probe(original, "l33t_transform")
    )
    assert kept.output_text == clean
    altered = executor.execute(
        "All bad for purpose",
        sa_task,
        probe(original, "antonym_replace", context=ContextType.ALTERING),
    )
    assert altered.output_text != clean


def test_surrogate_flip_rate_follows_profile(sa_task):
    profile = VulnerabilityProfile(probabilities={"shuffle_word": 0.3})
    executor = SurrogateExecutor("surrogate", profile)
    flips = sum(
        executor.flipped(
            sa_task, probe("text", "shuffle_word", cmb=f"cmb-{i}")
        )
        for i in range(2000)
    )
    assert 0.25 < flips / 2000 < 0.35


def test_surrogate_summaries(summary_task):
    profile = VulnerabilityProfile(probabilities={"delete_character": 1.0})
    executor = SurrogateExecutor("surrogate", profile, summary_tokens=4)
    text = "The council announced a new budget for public transport."
    clean = executor.execute(text, summary_task).output_text
    assert clean == "council announced budget public"
    assert executor.execute(text, summary_task).output_text == clean

    robust = SurrogateExecutor("surrogate", summary_tokens=4)
    p = probe(text, "swap_character")
    assert robust.execute(text + "x", summary_task, p).output_text == clean

    corrupted = executor.execute(
        text, summary_task, probe(text, "delete_character")
    ).output_text
    assert corrupted != clean
    assert len(corrupted.split()) == len(clean.split())

    altered = probe(text, "remove_sentence", context=ContextType.ALTERING)
    answer = robust.execute(text, summary_task, altered).output_text
    assert answer != clean
    assert len(answer.split()) == len(clean.split())
    flipped = SurrogateExecutor(
        "surrogate",
        VulnerabilityProfile(probabilities={"remove_sentence": 1.0}),
        summary_tokens=4,
    )
    assert flipped.execute(text, summary_task, altered).output_text == clean


@pytest.fixture
def session():
    return mock.Mock(spec=requests.Session)


def response(status=200, payload=None, text=""):
    r = mock.Mock(spec=requests.Response)
    r.status_code = status
    r.text = text
    if isinstance(payload, Exception):
        r.json.side_effect = payload
    else:
        r.json.return_value = payload
    return r


def test_remote_pass_through(sa_task, session):
    session.post.return_value = response(payload={"output": "Negative"})
    executor = RemoteExecutor(
        "model-a", "http://llm.test/v1", api_key="secret", session=session
    )
    record = executor.execute("All good", sa_task)
    assert record.output_text == "Negative"
    _, kwargs = session.post.call_args
    assert kwargs["json"] == {
        "model": "model-a",
        "instruction": sa_task.instruction,
        "input": "All good",
    }
    assert kwargs["headers"]["Authorization"] == "Bearer secret"


def test_remote_retries_with_backoff(sa_task, session):
    session.post.side_effect = [
        response(503, text="busy"),
        response(429, text="slow down"),
        response(payload={"output": "Positive"}),
    ]
    sleep = mock.Mock()
    executor = RemoteExecutor(
        "m", "http://llm.test", session=session, sleep=sleep, backoff=1.0
    )
    assert executor.execute("x", sa_task).output_text == "Positive"
    assert sleep.call_args_list == [mock.call(1.0), mock.call(2.0)]


def test_remote_gives_up(sa_task, session):
    session.post.side_effect = requests.ConnectionError("refused")
    sleep = mock.Mock()
    executor = RemoteExecutor(
        "m", "http://llm.test", session=session, sleep=sleep, retries=3
    )
    with pytest.raises(ExecutorUnavailable):
        executor.execute("x", sa_task)
    assert session.post.call_count == 3
    assert sleep.call_count == 2


@pytest.mark.parametrize(
    "payload", [ValueError("no json"), {"result": "x"}, ["x"]]
)
def test_remote_malformed_response(sa_task, session, payload):
    session.post.return_value = response(payload=payload, text="oops")
    executor = RemoteExecutor("m", "http://llm.test", session=session)
    with pytest.raises(MalformedResponse):
        executor.execute("x", sa_task)


def test_make_executor():
    assert isinstance(
        make_executor(ExecutorConfig(), "surrogate"), SurrogateExecutor
    )
    with pytest.raises(ConfigError):
        make_executor(ExecutorConfig(kind="remote"), "m")
    remote = make_executor(
        ExecutorConfig(kind="remote", endpoint="http://llm.test"), "m"
    )
    assert isinstance(remote, RemoteExecutor)
    assert remote.model_id == "m"
