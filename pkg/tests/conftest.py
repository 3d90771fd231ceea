import numpy as np
import pytest


def disk_mask(shape, center, radius):
    yy, xx = np.indices(shape)
    cy, cx = center
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2


def ellipse_mask(shape, center, axes, angle=0.0):
    yy, xx = np.indices(shape).astype(float)
    cy, cx = center
    a, b = axes
    c, s = np.cos(angle), np.sin(angle)
    u = (xx - cx) * c + (yy - cy) * s
    v = -(xx - cx) * s + (yy - cy) * c
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
