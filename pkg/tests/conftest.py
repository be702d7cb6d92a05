import numpy as np
import pytest

from esfem.geometry import OscillatingEllipsoid, Plane, UnitSphere
from esfem.mesh import SurfaceMesh, build_icosphere


@pytest.fixture(scope="session")
def sphere():
    return UnitSphere()


@pytest.fixture(scope="session")
def ellipsoid():
    return OscillatingEllipsoid()


@pytest.fixture(scope="session")
def ellipsoid_meshes(ellipsoid):
    return {level: build_icosphere(level, ellipsoid) for level in range(0, 5)}


@pytest.fixture(scope="session")
def sphere_meshes(sphere):
    return {level: build_icosphere(level, sphere) for level in range(0, 5)}


@pytest.fixture
def unit_triangle():
    """The flat right triangle (0,0,0), (1,0,0), (0,1,0) on the plane z = 0."""
    v = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0]])
    return SurfaceMesh(v, [[0, 1, 2]], surface=Plane())


@pytest.fixture
def flat_patch():
    """A 4x4 grid of right triangles on z = 0."""
    n = 5
    xs, ys = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n))
    v = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(n * n)])
    tris = []
    for i in range(n - 1):
        for j in range(n - 1):
            a, b, c, d = i * n + j, i * n + j + 1, (i + 1) * n + j, (i + 1) * n + j + 1
            tris += [[a, b, d], [a, d, c]]
    return SurfaceMesh(v, tris, surface=Plane())


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def log(number, title, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
