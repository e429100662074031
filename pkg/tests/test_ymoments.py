import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marssresid.kalman import kalman_smoother
from marssresid.linalg import NumericalError
from marssresid.model import ModelSpec, ObservationSet
from marssresid.oracle import build_joint, condition
from marssresid.ymoments import conditional_y_moments

from conftest import random_case


def _moments(spec, obs):
    return conditional_y_moments(spec, obs, kalman_smoother(spec, obs))


def test_full_mask_is_trivial():
    spec, obs = random_case(5, full=True)
    ym = _moments(spec, obs)
    np.testing.assert_array_equal(ym.yexp, obs.y)
    for arr in (ym.U, ym.S, ym.Slagm, ym.Slagp):
        assert not arr.any()


def test_m0_missing(m0):
    spec, obs = m0
    ym = _moments(spec, ObservationSet(obs.y, [[False]]))
    assert ym.yexp[0, 0] == 0.0
    assert ym.U[0, 0, 0] == 2.0
    assert ym.S[0, 0, 0] == 1.0
    assert ym.Slagp.shape == (0, 1, 1)


def test_diagonal_r_has_no_regression_term():
    rng = np.random.default_rng(4)
    spec = ModelSpec(
        B=0.7 * np.eye(2), u=np.zeros(2), Q=np.eye(2), Z=rng.standard_normal((3, 2)), a=np.zeros(3),
        R=np.diag([0.5, 1.0, 2.0]), xi=np.zeros(2), Lambda=np.eye(2), horizon=3,
    )
    mask = np.array([[True, False, True], [False, True, True], [True, False, False]])
    obs = ObservationSet(rng.standard_normal((3, 3)), mask)
    sm = kalman_smoother(spec, obs)
    ym = conditional_y_moments(spec, obs, sm)
    for t in range(1, 4):
        mi = obs.missing(t)
        Zm = spec.Z[mi]
        np.testing.assert_allclose(ym.U[t - 1][np.ix_(mi, mi)], spec.R[np.ix_(mi, mi)] + Zm @ sm.Vsmooth[t] @ Zm.T)
        np.testing.assert_allclose(ym.S[t - 1][mi], Zm @ sm.Vsmooth[t])
        np.testing.assert_allclose(ym.yexp[mi, t - 1], Zm @ sm.xsmooth[:, t])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matches_oracle(seed):
    spec, obs = random_case(seed)
    ym = _moments(spec, obs)
    cg = condition(build_joint(spec), obs)
    T = spec.horizon
    for t in range(1, T + 1):
        i = t - 1
        np.testing.assert_allclose(ym.yexp[:, i], cg.yexp(t), atol=1e-8, rtol=0)
        np.testing.assert_allclose(ym.U[i], cg.U(t), atol=1e-8, rtol=0)
        np.testing.assert_allclose(ym.S[i], cg.S(t, t), atol=1e-8, rtol=0)
        np.testing.assert_allclose(ym.Slagm[i], cg.S(t, t - 1), atol=1e-8, rtol=0)
        if t < T:
            np.testing.assert_allclose(ym.Slagp[i], cg.S(t, t + 1), atol=1e-8, rtol=0)
        o = obs.observed(t)
        assert not ym.U[i][o].any() and not ym.U[i][:, o].any()
        assert not ym.S[i][o].any()
        np.testing.assert_array_equal(ym.yexp[o, i], obs.y[o, i])
        assert np.linalg.eigvalsh(ym.U[i]).min() >= -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_independent_of_observed_values(seed):
    spec, obs = random_case(seed)
    a = _moments(spec, obs)
    other = obs.with_values(np.random.default_rng(seed + 1).standard_normal(obs.y.shape) * 10)
    b = _moments(spec, other)
    for name in ("U", "S", "Slagm", "Slagp"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_ill_posed_conditional_raises():
    # R is not PSD here, so R_mo has a component outside the range of R_oo
    spec = ModelSpec(
        B=np.eye(1), u=[0.0], Q=np.eye(1), Z=np.ones((2, 1)), a=np.zeros(2),
        R=[[0.0, 0.5], [0.5, 1.0]], xi=[0.0], Lambda=np.eye(1), horizon=1,
    )
    obs = ObservationSet([[1.0], [0.0]], [[True], [False]])
    with pytest.raises(NumericalError):
        _moments(spec, obs)
