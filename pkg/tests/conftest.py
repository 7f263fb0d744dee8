import numpy as np
import pytest
from hypothesis import settings, strategies as st

from spectra.intervals import normalize

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


def _raw_intervals(draw, max_size=6, lo=-10.0, hi=10.0, max_width=3.0, grid=None):
    n = draw(st.integers(1, max_size))
    out = []
    for _ in range(n):
        if grid:
            a = draw(st.integers(int(lo * grid), int(hi * grid))) / grid
            w = draw(st.integers(0, int(max_width * grid))) / grid
        else:
            a = draw(st.floats(lo, hi, allow_nan=False))
            w = draw(st.one_of(st.just(0.0), st.floats(0.0, max_width)))
        out.append((a, a + w))
    return out


@st.composite
def raw_intervals(draw, **kw):
    return _raw_intervals(draw, **kw)


@st.composite
def covers(draw, **kw):
    return normalize(_raw_intervals(draw, **kw))


@st.composite
def unit_covers(draw, max_size=4):
    """Covers inside [0, 1], mixing dyadic and generic endpoints."""
    n = draw(st.integers(1, max_size))
    raw = []
    for _ in range(n):
        if draw(st.booleans()):
            a = draw(st.integers(0, 64)) / 64
        else:
            a = draw(st.floats(0.0, 1.0))
        w = draw(st.one_of(st.just(0.0), st.integers(0, 16).map(lambda k: k / 64), st.floats(0.0, 0.3)))
        raw.append((a, min(1.0, a + w)))
    return normalize(raw)


# criterion lines collected by test_acceptance, echoed at the end of the run
ACCEPTANCE: list = []


def pytest_collection_modifyitems(items):
    for item in items:
        fn = getattr(item, "function", None)
        if fn is not None and getattr(fn, "is_hypothesis_test", False):
            item.add_marker(pytest.mark.invariant)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
