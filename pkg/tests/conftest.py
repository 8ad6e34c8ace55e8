import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from segeval.raster_io import LabelMap, RasterImage  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20161015)


def random_instance(rng, size=8, regions=4, channels=1):
    data = rng.integers(0, 256, size=(size, size, channels)).astype(float)
    labels = rng.integers(0, regions, size=(size, size))
    space = "gray" if channels == 1 else "srgb"
    return RasterImage(data, space), LabelMap(labels)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, line = RESULTS[key]
        tag = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"[{tag}] {line}")
