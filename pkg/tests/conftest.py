import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from passivelsm.specfun import WaveContext


@pytest.fixture(scope="session")
def ctx():
    return WaveContext(k=2.0 * np.pi)
