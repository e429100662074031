import numpy as np
import pytest

from marssresid.model import ModelSpec, ObservationSet, random_mask, random_model, simulate


def scalar_model(T=1, Lambda=0.0, **kw):
    params = dict(B=[[1.0]], u=[0.0], Q=[[1.0]], Z=[[1.0]], a=[0.0], R=[[1.0]], xi=[0.0], Lambda=[[Lambda]])
    params.update(kw)
    return ModelSpec(horizon=T, **params)


@pytest.fixture
def m0():
    """m = n = 1, B = Z = Q = R = 1, Lambda = 0, T = 1 with y_1 = 2."""
    return scalar_model(T=1), ObservationSet([[2.0]], [[True]])


@pytest.fixture
def m1():
    """Scalar random walk with Lambda = 1, T = 3, middle point missing."""
    return scalar_model(T=3, Lambda=1.0), np.array([[True, False, True]])


def random_case(seed, p_missing=0.3, full=False, max_m=3, max_n=4, max_T=6):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    T = int(rng.integers(1, max_T + 1))
    spec = random_model(rng, m, n, T, time_varying=bool(seed % 2), degenerate=seed % 5 == 0)
    _, data = simulate(spec, rng)
    mask = np.ones((n, T), dtype=bool) if full else random_mask(rng, n, T, p_missing)
    return spec, ObservationSet(data.y, mask)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
