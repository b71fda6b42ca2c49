import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from affspace.affine_sphere import minkowski_gauge, solve_affine_sphere
from affspace.cone_model import ConeSpec
from affspace.convex_core import GridDomain

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def disk65():
    return GridDomain("disk", 65)


@pytest.fixture(scope="session")
def cone65():
    return ConeSpec.minkowski(65)


@pytest.fixture(scope="session")
def exact_gauge65(cone65):
    return minkowski_gauge(cone65.omega_star)


@pytest.fixture(scope="session")
def solved_disk101():
    return solve_affine_sphere(GridDomain("disk", 101))


@pytest.fixture(scope="session")
def solved_disk65(cone65):
    return solve_affine_sphere(cone65.omega_star)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "ACCEPTANCE", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
