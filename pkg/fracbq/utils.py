import io
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Final, Iterator, List, Mapping, Optional, Sequence, Union

import jinja2
import regex
from decorator import contextmanager
from scipy import fft as sfft

logger = logging.getLogger(__name__)

THREADS_VARIABLE: Final = "FRACBQ_THREADS"
LOG_FORMAT: Final = "%(levelname)s %(name)s: %(message)s"

_rendering_env = jinja2.Environment()


@contextmanager
def temp_environ() -> Iterator[None]:
    """Allow the ability to set os.environ temporarily"""
    environ = dict(os.environ)
    try:
        yield
    finally:
        os.environ.clear()
        os.environ.update(environ)


@contextmanager
def cd(path: Union[str, Path]) -> Iterator[None]:
    """Context manager to temporarily change working directories"""
    previous = Path.cwd()
    os.chdir(str(path))
    try:
        yield
    finally:
        os.chdir(previous)


@contextmanager
def capture_log(lines: List[str], name: str = "fracbq", level: int = logging.INFO) -> Iterator[None]:
    """Collect formatted records of the named logger into ``lines``."""
    stream = io.StringIO()
    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(level)
    target = logging.getLogger(name)
    previous_level = target.level
    target.addHandler(handler)
    if target.getEffectiveLevel() > level:
        target.setLevel(level)
    try:
        yield
    finally:
        target.removeHandler(handler)
        target.setLevel(previous_level)
        lines.extend(line for line in stream.getvalue().splitlines() if line)


def render_template(template: str, data: Mapping[str, Any]) -> str:
    if _rendering_env.variable_start_string not in template:
        return template

    t: jinja2.environment.Template = _rendering_env.from_string(template)
    return t.render({k: v if v is not None else "None" for k, v in data.items()})


def threads_from_env(environ: Optional[Mapping[str, str]] = None) -> int:
    """Worker count for the transforms; invalid values fall back to 1."""
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_VARIABLE)
    if raw is None or raw == "":
        return 1
    try:
        threads = int(raw)
    except ValueError:
        threads = 0
    if threads < 1:
        logger.warning("Ignoring %s=%r, using a single worker", THREADS_VARIABLE, raw)
        return 1
    return threads


@contextmanager
def transform_workers(threads: int) -> Iterator[None]:
    with sfft.set_workers(threads):
        yield


class ScenarioAssertionError(AssertionError):
    def __init__(self, error_message: Optional[str] = None, lineno: int = 0) -> None:
        self.error_message = error_message or ""
        self.lineno = lineno

    def first_line(self) -> str:
        return self.__class__.__name__ + '(message="Unexpected outcome")'

    def __str__(self) -> str:
        return self.error_message


@dataclass
class MessageMatcher:
    """Expected log message: a regex searched in each captured line, or an exact substring."""

    message: str
    is_regex: bool = True

    def matches(self, actual: str) -> bool:
        if self.is_regex:
            return regex.search(self.message, actual) is not None
        return self.message in actual

    def __str__(self) -> str:
        return self.message


def format_lines(lines: Sequence[str]) -> str:
    return "\n".join(f"  {line}" for line in lines) if lines else "  (empty)"


def assert_message_logged(expected: MessageMatcher, actual: Sequence[str], lineno: int = 0) -> None:
    if any(expected.matches(line) for line in actual):
        return
    kind = "regex" if expected.is_regex else "message"
    raise ScenarioAssertionError(
        error_message=f"Expected {kind} not found in the log:\n  {expected}\nActual log:\n{format_lines(actual)}\n",
        lineno=lineno,
    )
