from pathlib import Path

import pytest

import lanegrid as lg

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

SCENARIO_FILES = ("straight_free", "overtaking_stopped", "overtaking_moving",
                  "t_intersection")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def t_scenario():
    return lg.load_scenario(FIXTURES / "t_intersection.json")


@pytest.fixture(scope="session")
def t_artifacts(t_scenario):
    return lg.execute(t_scenario)


@pytest.fixture(scope="session")
def overtaking_stopped():
    return lg.load_scenario(FIXTURES / "overtaking_stopped.json")


@pytest.fixture(scope="session")
def overtaking_moving():
    return lg.load_scenario(FIXTURES / "overtaking_moving.json")


@pytest.fixture(scope="session")
def straight_scenario():
    return lg.load_scenario(FIXTURES / "straight_free.json")


@pytest.fixture(scope="session")
def all_scenarios(straight_scenario, overtaking_stopped, overtaking_moving, t_scenario):
    return {
        "straight_free": straight_scenario,
        "overtaking_stopped": overtaking_stopped,
        "overtaking_moving": overtaking_moving,
        "t_intersection": t_scenario,
    }
