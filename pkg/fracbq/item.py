import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple, Union

import pytest
import yaml
from _pytest._code import ExceptionInfo
from _pytest._code.code import ReprEntry, ReprFileLocation, TerminalRepr
from _pytest._io import TerminalWriter
from _pytest.config import Config

if TYPE_CHECKING:
    from _pytest._code.code import _TracebackStyle

from fracbq import cli, utils
from fracbq.collect import ScenarioFile
from fracbq.utils import MessageMatcher, ScenarioAssertionError, assert_message_logged

CONFIG_FILENAME = "experiment.yaml"
OUTPUT_DIRNAME = "out"


class TraceLastReprEntry(ReprEntry):
    def toterminal(self, tw: TerminalWriter) -> None:
        if not self.reprfileloc:
            return

        self.reprfileloc.toterminal(tw)
        for line in self.lines:
            red = line.startswith("E   ")
            tw.line(line, bold=True, red=red)
        return


class ScenarioItem(pytest.Item):
    """One command-line run in a scratch directory, checked for exit code, log lines and written files."""

    def __init__(
        self,
        name: str,
        parent: Optional[ScenarioFile] = None,
        config: Optional[Config] = None,
        *,
        command: Optional[str],
        experiment_config: Dict[str, Any],
        extra_args: List[str],
        starting_lineno: int,
        environment_variables: Dict[str, str],
        expected_exit: int,
        expected_messages: List[MessageMatcher],
        expected_files: List[str],
        expect_fail: bool,
    ) -> None:
        super().__init__(name, parent, config)
        self.command = command
        self.experiment_config = experiment_config
        self.extra_args = extra_args
        self.starting_lineno = starting_lineno
        self.environment_variables = environment_variables
        self.expected_exit = expected_exit
        self.expected_messages = expected_messages
        self.expected_files = expected_files
        self.expect_fail = expect_fail

        self.root_directory = self.config.option.fracbq_testing_base

    def prepare_cli_args(self, execution_path: Path) -> List[str]:
        config_file = execution_path / CONFIG_FILENAME
        config_file.write_text(yaml.safe_dump(self.experiment_config, sort_keys=True))

        args = [self.command] if self.command else []
        args.extend(["--config", str(config_file), "--out", str(execution_path / OUTPUT_DIRNAME)])
        args.extend(self.extra_args)
        return args

    def run_cli(self, execution_path: Path) -> Tuple[int, List[str]]:
        log_lines: List[str] = []
        with utils.temp_environ():
            for key, val in self.environment_variables.items():
                os.environ[key] = val

            with utils.capture_log(log_lines):
                returncode = cli.main(self.prepare_cli_args(execution_path))
        return returncode, log_lines

    def check_outcome(self, execution_path: Path, returncode: int, log_lines: List[str]) -> None:
        if returncode != self.expected_exit:
            raise ScenarioAssertionError(
                error_message=(
                    f"Expected exit code {self.expected_exit}, got {returncode}\n"
                    f"Actual log:\n{utils.format_lines(log_lines)}\n"
                )
            )

        for expected in self.expected_messages:
            assert_message_logged(expected, log_lines)

        output_dir = execution_path / OUTPUT_DIRNAME
        missing = [name for name in self.expected_files if not (output_dir / name).exists()]
        if missing:
            raise ScenarioAssertionError(
                error_message=f"Expected output files were not written:\n{utils.format_lines(missing)}\n"
            )

    def runtest(self) -> None:
        try:
            temp_dir = tempfile.TemporaryDirectory(prefix="fracbq-", dir=self.root_directory)

        except (FileNotFoundError, PermissionError, NotADirectoryError) as e:
            raise ScenarioAssertionError(
                error_message=f"Testing base directory {self.root_directory} must exist and be writable"
            ) from e

        try:
            execution_path = Path(temp_dir.name)

            with utils.cd(execution_path):
                returncode, log_lines = self.run_cli(execution_path)
                try:
                    self.check_outcome(execution_path, returncode, log_lines)
                except ScenarioAssertionError as e:
                    if not self.expect_fail:
                        raise e
                else:
                    if self.expect_fail:
                        raise ScenarioAssertionError("Expected failure, but scenario passed")

        finally:
            temp_dir.cleanup()

        assert not os.path.exists(temp_dir.name)

    def repr_failure(
        self, excinfo: ExceptionInfo[BaseException], style: Optional["_TracebackStyle"] = None
    ) -> Union[str, TerminalRepr]:
        if excinfo.errisinstance(SystemExit):
            # argparse exits on bad arguments after printing its own usage message
            return excinfo.exconly(tryshort=True)
        elif excinfo.errisinstance(ScenarioAssertionError):
            # with traceback removed
            exception_repr = excinfo.getrepr(style="short")
            exception_repr.reprcrash.message = ""  # type: ignore
            repr_file_location = ReprFileLocation(
                path=self.fspath, lineno=self.starting_lineno + excinfo.value.lineno, message=""  # type: ignore
            )
            repr_tb_entry = TraceLastReprEntry(
                exception_repr.reprtraceback.reprentries[-1].lines[1:], None, None, repr_file_location, "short"
            )
            exception_repr.reprtraceback.reprentries = [repr_tb_entry]
            return exception_repr
        else:
            return super().repr_failure(excinfo, style="native")

    def reportinfo(self) -> Tuple[Union[Path, str], Optional[int], str]:
        return self.path, None, self.name
