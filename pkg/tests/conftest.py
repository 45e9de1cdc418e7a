import numpy as np
import pytest

from cmcfol import Grading, background_factor, build_torus_mesh, uniformize

QUARTER = np.pi / 2
_ACCEPTANCE_LINES: list[str] = []


def cone_surface(n, levels=4, tau=1j, point=(0.5, 0.5), angle=QUARTER):
    return build_torus_mesh(tau, [(point, angle)], Grading(levels), n)


@pytest.fixture(scope="session")
def hyperbolic():
    """Uniformized metric per base resolution, cached for the session."""
    cache = {}

    def get(n):
        if n not in cache:
            s = cone_surface(n)
            cache[n] = uniformize(s, background_factor(s))
        return cache[n]

    return get


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
