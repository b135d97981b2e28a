import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from semcodec.segmap import new_segmap

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@st.composite
def segmaps(draw, max_side=12, max_classes=4):
    w = draw(st.integers(1, max_side))
    h = draw(st.integers(1, max_side))
    k = draw(st.integers(1, max_classes))
    labels = draw(hnp.arrays(np.int32, (h, w), elements=st.integers(0, k - 1)))
    return new_segmap(w, h, k, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
