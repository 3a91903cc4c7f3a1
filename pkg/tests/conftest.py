import numpy as np
import pytest

from spatialanc.scene import Disk, SceneConfig, build_scene_paper, ring

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def paper_scene():
    return build_scene_paper()


@pytest.fixture
def small_scene():
    """L=3 secondary sources, R=2 reference mics, M=1 error mic, with scatterer."""
    return SceneConfig(
        primary_sources=((-3.0, 0.5),),
        secondary_sources=ring(3, 1.0),
        reference_mics=((-2.0, 0.1), (0.3, 2.0)),
        error_mics=((0.25, 0.1),),
        target_region=Disk((0.0, 0.0), 0.5),
        scatterer=Disk((0.0, 0.0), 0.15),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
