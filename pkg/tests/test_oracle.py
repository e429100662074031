import numpy as np
import pytest

from marssresid.model import ModelSpec, ObservationSet
from marssresid.oracle import (
    OracleSizeError,
    build_joint,
    condition,
    monte_carlo_check,
    residual_law_exact,
)

from conftest import random_case, scalar_model


def test_m0_joint(m0):
    spec, _ = m0
    jg = build_joint(spec)
    # ordering is (X_0, X_1, Y_1)
    np.testing.assert_array_equal(jg.cov, [[0, 0, 0], [0, 1, 1], [0, 1, 2]])
    assert jg.index[("y", 0, 1)] == 2


def test_zero_noise_joint_is_degenerate():
    jg = build_joint(scalar_model(T=3, Q=[[0.0]], R=[[0.0]]))
    assert not jg.cov.any()


def test_m1_y3_variance(m1):
    spec, _ = m1
    jg = build_joint(spec)
    assert jg.cov[jg.index[("y", 0, 3)], jg.index[("y", 0, 3)]] == pytest.approx(5.0)


def test_size_guard():
    spec = ModelSpec(
        B=np.eye(10), u=np.zeros(10), Q=np.eye(10), Z=np.eye(10), a=np.zeros(10), R=np.eye(10),
        xi=np.zeros(10), Lambda=np.eye(10), horizon=30,
    )
    with pytest.raises(OracleSizeError):
        build_joint(spec)


def test_m0_condition(m0):
    spec, obs = m0
    cg = condition(build_joint(spec), obs)
    assert cg.xhat(1)[0] == pytest.approx(1.0)
    assert cg.V(1)[0, 0] == pytest.approx(0.5)


def test_empty_mask_returns_unconditional():
    spec, obs = random_case(8)
    jg = build_joint(spec)
    cg = condition(jg, ObservationSet(obs.y, np.zeros_like(obs.mask)))
    np.testing.assert_array_equal(cg.mean, jg.mean)
    np.testing.assert_array_equal(cg.cov, jg.cov)


def test_exact_observation_has_zero_conditional_variance():
    spec = ModelSpec(
        B=np.eye(2), u=np.zeros(2), Q=np.eye(2), Z=np.eye(2), a=np.zeros(2), R=np.zeros((2, 2)),
        xi=np.zeros(2), Lambda=np.eye(2), horizon=2,
    )
    mask = np.array([[True, False], [False, False]])
    cg = condition(build_joint(spec), ObservationSet(np.ones((2, 2)), mask))
    assert cg.V(1)[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert cg.V(1)[1, 1] > 0.5


def test_m0_residual_law(m0):
    spec, obs = m0
    law = residual_law_exact(spec, build_joint(spec), obs.mask)
    # vhat = what = y/2 with var(y) = 2
    for block in (law.var_v, law.var_w, law.cov_vw_same):
        assert block[0, 0, 0] == pytest.approx(0.5, abs=1e-14)


def test_deterministic_state_law():
    spec, obs = random_case(3)
    spec = spec.replace(Q=np.zeros_like(spec.Q))
    law = residual_law_exact(spec, build_joint(spec), obs.mask)
    np.testing.assert_allclose(law.var_w, 0.0, atol=1e-12)


def test_full_data_law_reduces():
    spec, obs = random_case(21, full=True)
    jg = build_joint(spec)
    cg = condition(jg, obs)
    law = residual_law_exact(spec, jg, obs.mask)
    for t in range(1, spec.horizon + 1):
        Z = spec.at("Z", t)
        np.testing.assert_allclose(law.var_v[t - 1], spec.at("R", t) - Z @ cg.V(t) @ Z.T, atol=1e-10)


def test_monte_carlo_zero_noise():
    # with every noise zero an observed cell would make F singular, so hold all data out
    spec = scalar_model(T=2, Q=[[0.0]], R=[[0.0]])
    mc = monte_carlo_check(spec, np.zeros((1, 2), bool), 20, seed=1)
    np.testing.assert_array_equal(mc.eps, 0.0)


@pytest.mark.slow
def test_monte_carlo_m0():
    spec = scalar_model(T=1)
    mc = monte_carlo_check(spec, np.ones((1, 1), bool), 10_000, seed=3)
    assert mc.cov[0, 0, 0] == pytest.approx(0.5, rel=0.05)
