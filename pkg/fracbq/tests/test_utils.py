import logging
import os
from typing import List, NamedTuple

import pytest

from fracbq import utils
from fracbq.utils import MessageMatcher, ScenarioAssertionError, assert_message_logged, capture_log


def test_render_template_with_None_value() -> None:
    # Given
    template = "{{ a }} {{ b }}"
    data = {"a": None, "b": 99}

    # When
    actual = utils.render_template(template=template, data=data)

    # Then
    assert actual == "None 99"


def test_render_template_without_placeholders() -> None:
    assert utils.render_template("alpha={alpha}", {"alpha": 1.5}) == "alpha={alpha}"


class ThreadsTestData(NamedTuple):
    raw: str
    threads: int


@pytest.mark.parametrize(
    "data",
    [ThreadsTestData("", 1), ThreadsTestData("4", 4), ThreadsTestData("0", 1), ThreadsTestData("many", 1)],
    ids=["empty", "four", "zero", "garbage"],
)
def test_threads_from_env(data: ThreadsTestData) -> None:
    assert utils.threads_from_env({utils.THREADS_VARIABLE: data.raw}) == data.threads


def test_threads_default_to_one() -> None:
    assert utils.threads_from_env({}) == 1


def test_temp_environ_restores_variables() -> None:
    with utils.temp_environ():
        os.environ["FRACBQ_SCRATCH"] = "1"

    assert "FRACBQ_SCRATCH" not in os.environ


@pytest.mark.parametrize(
    "matcher, line, matches",
    [
        (MessageMatcher(r"passed \(max deviation \d"), "INFO fracbq.scaling: ok passed (max deviation 1.0e-12)", True),
        (MessageMatcher("(3α-2)", is_regex=False), "ERROR fracbq: p=5 must exceed (3α-2)/(α-1)=5", True),
        (MessageMatcher("^INFO fracbq"), "ERROR fracbq: p=5 must exceed (3α-2)/(α-1)=5", False),
    ],
    ids=["regex", "substring", "anchored"],
)
def test_message_matcher(matcher: MessageMatcher, line: str, matches: bool) -> None:
    assert matcher.matches(line) is matches


def test_missing_message_reports_the_log() -> None:
    with pytest.raises(ScenarioAssertionError) as excinfo:
        assert_message_logged(MessageMatcher("converged", is_regex=False), ["INFO fracbq: started"])

    assert str(excinfo.value) == (
        "Expected message not found in the log:\n  converged\nActual log:\n  INFO fracbq: started\n"
    )


def test_capture_log_collects_package_records() -> None:
    lines: List[str] = []

    with capture_log(lines):
        logging.getLogger("fracbq.solver").info("residual %.1e", 1e-12)
        logging.getLogger("fracbq.solver").debug("hidden")
        logging.getLogger("elsewhere").warning("ignored")

    assert lines == ["INFO fracbq.solver: residual 1.0e-12"]
