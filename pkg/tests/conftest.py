import pathlib

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def demo_scenario_path() -> pathlib.Path:
    return REPO_ROOT / "scenarios" / "two_robot_demo.yaml"
