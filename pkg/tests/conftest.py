"""Shared, expensive fixtures computed once per session."""

import time

import numpy as np
import pytest

from lhvcert import simpoly, sweep
from lhvcert.blochcore import zeta


@pytest.fixture(scope="session")
def timings():
    """Wall-clock seconds of the expensive session fixtures, by name."""
    return {}


@pytest.fixture(scope="session")
def vertices(timings):
    t0 = time.perf_counter()
    out = simpoly.vertex_set()
    timings["vertices"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def facet_list(vertices, timings):
    t0 = time.perf_counter()
    out = simpoly.facets(vertices)
    timings["facets"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def shrink_lp_route(vertices, timings):
    t0 = time.perf_counter()
    out = {a: simpoly.shrink_factor(zeta(a), vertices) for a in (0.0, 5 / 6)}
    timings["shrink_lp_route"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def shrink_facet_route(facet_list, timings):
    t0 = time.perf_counter()
    out = {a: simpoly.facet_shrink_factor(zeta(a), facet_list) for a in (0.0, 5 / 6)}
    timings["shrink_facet_route"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def certificate(timings):
    t0 = time.perf_counter()
    cert = sweep.certify_full_range()
    timings["certificate"] = time.perf_counter() - t0
    return cert


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
