import dataclasses
import time

import numpy as np
import pytest

from gazescan.geometry import ImageGeometry


@pytest.fixture
def geom():
    return ImageGeometry(256, 256, 0.15)


@pytest.fixture
def small_geom():
    return ImageGeometry(64, 64, 0.15)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Expensive closed-loop runs shared across test modules. Each fixture reports
# the wall time it took to build so time-budget assertions stay honest no
# matter which test triggers the run first.


@pytest.fixture(scope="session")
def cylinder_records():
    from gazescan import runtime
    from gazescan.scenario import preset

    t0 = time.perf_counter()
    on = runtime.run(preset("cylinder_correction"))
    sc_off = preset("cylinder_correction")
    sc_off.control = dataclasses.replace(sc_off.control, correction=False)
    off = runtime.run(sc_off)
    return on, off, time.perf_counter() - t0


@pytest.fixture(scope="session")
def bifurcation_record():
    from gazescan import runtime
    from gazescan.scenario import preset

    t0 = time.perf_counter()
    rec = runtime.run(preset("bifurcation"))
    return rec, time.perf_counter() - t0
