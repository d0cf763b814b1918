import numpy as np
import pytest

from rdclass.radar_design import RadarConfig


@pytest.fixture
def radar():
    return RadarConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SMALL = dict(n_subjects=4, runs_per_subject=1, n_robot_types=2, runs_per_robot=2, frames_per_run=12)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    from rdclass.harness import DatasetConfig, build_dataset

    out = tmp_path_factory.mktemp("small")
    return build_dataset(out, DatasetConfig(**SMALL), seed=0), out


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
