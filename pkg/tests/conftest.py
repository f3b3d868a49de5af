import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geonium import presets  # noqa: E402


@pytest.fixture(scope="session")
def fig1_cfg():
    return presets.fig1_config()


@pytest.fixture(scope="session")
def fig2_cfg():
    return presets.fig2_config()
