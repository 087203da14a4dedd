import os
import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def cli():
    """Path of the command-line binary under test."""
    path = os.environ.get("METRICUQ_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("METRICUQ_CLI not set; build the project first")
    return path


@pytest.fixture(scope="session")
def core():
    """The compiled extension module, importable from the build tree."""
    core_dir = os.environ.get("METRICUQ_CORE_DIR")
    if core_dir:
        sys.path.insert(0, core_dir)
    try:
        import _core  # noqa: F401

        return _core
    except ImportError:
        try:
            from metricuq import _core  # noqa: F401

            return _core
        except ImportError:
            pytest.skip("compiled module not available")


def run_cli(cli, *args, expect_code=0):
    result = subprocess.run(
        [cli, *args], capture_output=True, text=True, timeout=600
    )
    assert result.returncode == expect_code, (
        f"exit {result.returncode} != {expect_code}\n"
        f"stdout: {result.stdout}\nstderr: {result.stderr}"
    )
    return result
