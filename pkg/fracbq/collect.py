import json
import os
import pathlib
import platform
import sys
import tempfile
from typing import TYPE_CHECKING, Any, Dict, Hashable, Iterator, List, Optional

import jsonschema
import pytest
import yaml
from _pytest.config.argparsing import Parser
from _pytest.nodes import Node

from fracbq import utils
from fracbq.configs import default_run_name, parse_parametrized

if TYPE_CHECKING:
    from fracbq.item import ScenarioItem


def validate_schema(data: Any, *, is_closed: bool = False) -> None:
    """Validate the schema of the file-under-test."""
    if not isinstance(data, list):
        raise TypeError(f"Scenario file has to be YAML list, got {type(data)!r}.")

    schema = json.loads((pathlib.Path(__file__).parent / "scenario_schema.json").read_text("utf8"))
    schema["items"]["properties"]["__line__"] = {
        "type": "integer",
        "description": "Line number where the scenario starts (fracbq internal)",
    }
    schema["items"]["additionalProperties"] = not is_closed

    jsonschema.validate(instance=data, schema=schema)


def parse_environment_variables(env_vars: List[str]) -> Dict[str, str]:
    """``NAME=value`` strings to a mapping; a missing ``=`` gives an empty value."""
    return {name: value for name, _, value in (env_var.partition("=") for env_var in env_vars)}


def strip_line_marks(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: strip_line_marks(v) for k, v in value.items() if not str(k).startswith("__")}
    if isinstance(value, list):
        return [strip_line_marks(item) for item in value]
    return value


def render_config(raw_config: Any, params: Dict[str, Any]) -> Dict[str, Any]:
    """Mappings are taken as written; YAML text is rendered with ``params`` before parsing."""
    if raw_config is None:
        return {}
    if isinstance(raw_config, str):
        raw_config = yaml.safe_load(utils.render_template(template=raw_config, data=params)) or {}
        if not isinstance(raw_config, dict):
            raise ValueError(f"Scenario config has to be a mapping, got {type(raw_config)!r}.")
    return strip_line_marks(raw_config)


class SafeLineLoader(yaml.SafeLoader):
    def construct_mapping(self, node: yaml.MappingNode, deep: bool = False) -> Dict[Hashable, Any]:
        mapping = super().construct_mapping(node, deep=deep)
        # Add 1 so line numbering starts at 1
        starting_line = node.start_mark.line + 1
        for title_node, _contents_node in node.value:
            if title_node.value == "config":
                starting_line = title_node.start_mark.line + 1
        mapping["__line__"] = starting_line
        return mapping


class ScenarioFile(pytest.File):
    def collect(self) -> Iterator["ScenarioItem"]:
        from fracbq.item import ScenarioItem

        parsed_file = yaml.load(stream=self.path.read_text("utf8"), Loader=SafeLineLoader)
        if parsed_file is None:
            return

        validate_schema(parsed_file, is_closed=self.config.option.fracbq_closed_schema)

        for raw_test in parsed_file:
            test_name_prefix = raw_test["case"]
            parametrized = parse_parametrized(strip_line_marks(raw_test.get("parametrized", [])))

            for params in parametrized:
                test_name_suffix = f"[{default_run_name(params)}]" if params else ""

                expected = raw_test.get("expect_message", [])
                if isinstance(expected, str):
                    expected = [expected]
                regex = raw_test.get("regex", False)
                expected_messages = [
                    utils.MessageMatcher(utils.render_template(template=message, data=params), is_regex=regex)
                    for message in expected
                ]

                skip = self._eval_skip(str(raw_test.get("skip", "False")))
                if not skip:
                    yield ScenarioItem.from_parent(
                        self,
                        name=f"{test_name_prefix}{test_name_suffix}",
                        command=raw_test.get("command"),
                        experiment_config=render_config(raw_test.get("config"), params),
                        extra_args=[utils.render_template(arg, params) for arg in raw_test.get("args", [])],
                        starting_lineno=raw_test["__line__"],
                        environment_variables=parse_environment_variables(raw_test.get("env", [])),
                        expected_exit=raw_test.get("expect_exit", 0),
                        expected_messages=expected_messages,
                        expected_files=raw_test.get("expect_files", []),
                        expect_fail=raw_test.get("expect_fail", False),
                    )

    def _eval_skip(self, skip_if: str) -> bool:
        return eval(skip_if, {"sys": sys, "os": os, "pytest": pytest, "platform": platform})


def pytest_collect_file(file_path: pathlib.Path, parent: Node) -> Optional[ScenarioFile]:
    if file_path.suffix in {".yaml", ".yml"} and file_path.name.startswith(("test-", "test_")):
        return ScenarioFile.from_parent(parent, path=file_path)
    return None


def pytest_addoption(parser: Parser) -> None:
    group = parser.getgroup("fracbq-scenarios")
    group.addoption(
        "--fracbq-testing-base", type=str, default=tempfile.gettempdir(), help="Base directory for scenarios to use"
    )
    group.addoption(
        "--fracbq-closed-schema",
        action="store_true",
        help="Use closed schema to validate YAML scenarios, which won't allow any extra keys",
    )
