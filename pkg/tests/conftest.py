import time

import pytest

from ulam_float.profile import ProfileBody

TAU = 0.05


@pytest.fixture(scope="session")
def even_build():
    """d=4 construction with automatic amplitude, built once per session."""
    from ulam_float.even_construct import build_even_auto

    t0 = time.perf_counter()
    body, info = build_even_auto(4, TAU)
    info["elapsed"] = time.perf_counter() - t0
    return body, info


@pytest.fixture(scope="session")
def odd_build():
    """d=3 construction with automatic amplitude, built once per session."""
    from ulam_float.odd_construct import build_odd_auto

    t0 = time.perf_counter()
    body, info = build_odd_auto(3, TAU)
    info["elapsed"] = time.perf_counter() - t0
    return body, info


@pytest.fixture(scope="session")
def ball3():
    return ProfileBody.unit_ball(3)


@pytest.fixture(scope="session")
def ball4():
    return ProfileBody.unit_ball(4)
