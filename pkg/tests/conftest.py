import functools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from semigroup_dim.config import BUNDLED, load_config
from semigroup_dim.julia import julia_cloud
from semigroup_dim.checks import expansion_estimate
from semigroup_dim.thermo import bowen_dimension

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

LOG3_LOG2 = math.log(3) / math.log(2)

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def system(name):
    return load_config(name).system()


@functools.lru_cache(maxsize=None)
def cloud(name, count=20000, seed=0):
    return julia_cloud(system(name), count=count, rng_seed=seed)


@functools.lru_cache(maxsize=None)
def expansion(name):
    return expansion_estimate(system(name), cloud(name))


@functools.lru_cache(maxsize=None)
def dimension(name):
    return bowen_dimension(system(name), expansion=expansion(name))


@pytest.fixture(params=BUNDLED)
def bundled(request):
    return request.param


def circle_cells(radius, bounds, resolution):
    """Brute force: grid cells (row 0 on top) whose closed box meets the circle |z| = radius."""
    x0, x1, y0, y1 = bounds
    W, H = resolution
    xs = np.linspace(x0, x1, W + 1)
    ys = np.linspace(y1, y0, H + 1)
    cx0, cx1 = xs[:-1][None, :], xs[1:][None, :]
    cy1, cy0 = ys[:-1][:, None], ys[1:][:, None]
    # nearest and farthest distance from the origin to each box
    nx = np.where((cx0 <= 0) & (cx1 >= 0), 0.0, np.minimum(abs(cx0), abs(cx1)))
    ny = np.where((cy0 <= 0) & (cy1 >= 0), 0.0, np.minimum(abs(cy0), abs(cy1)))
    fx = np.maximum(abs(cx0), abs(cx1))
    fy = np.maximum(abs(cy0), abs(cy1))
    near = np.hypot(nx, ny)
    far = np.hypot(fx, fy)
    return (near <= radius) & (far >= radius)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
