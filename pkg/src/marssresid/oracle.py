"""Exact ground truth by dense joint-Gaussian conditioning.

All states X_0..X_T and observations Y_1..Y_T are stacked into one vector
``z`` that is an affine map of the independent noise
(X_0 - xi, W_1..W_T, V_1..V_T).  Conditioning and residual laws are then
plain Schur complements and linear maps of ``z``; nothing here shares code
with the recursive algorithms it checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import ModelSpec, ObservationSet

MAX_FLAT_DIM = 500


class OracleSizeError(ValueError):
    pass


def _pinv(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return a.copy()
    return np.linalg.pinv(0.5 * (a + a.T), rcond=1e-12, hermitian=True)


@dataclass(frozen=True, eq=False)
class JointGaussian:
    mean: np.ndarray
    cov: np.ndarray
    m: int
    n: int
    T: int
    index: dict  # ("x", row, t) or ("y", row, t) -> flat position
    noise_map: np.ndarray  # z - mean = noise_map @ noise
    noise_cov: np.ndarray

    def x_slice(self, t: int) -> slice:
        return slice(t * self.m, (t + 1) * self.m)

    def y_slice(self, t: int) -> slice:
        start = (self.T + 1) * self.m + (t - 1) * self.n
        return slice(start, start + self.n)

    def observed_indices(self, mask: np.ndarray) -> np.ndarray:
        base = (self.T + 1) * self.m
        # mask is n x T; flat Y ordering is time-major
        return base + np.flatnonzero(mask.T.reshape(-1))


def flat_dim(spec: ModelSpec) -> int:
    return spec.num_states * (spec.horizon + 1) + spec.num_obs * spec.horizon


def build_joint(spec: ModelSpec, max_dim: int = MAX_FLAT_DIM) -> JointGaussian:
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    N = flat_dim(spec)
    if N > max_dim:
        raise OracleSizeError(f"joint dimension {N} exceeds the oracle limit {max_dim}")
    k = m * (T + 1) + n * T  # noise dimension equals N
    A = np.zeros((N, k))
    mean = np.zeros(N)
    xoff = (T + 1) * m
    A[0:m, 0:m] = np.eye(m)
    mean[0:m] = spec.xi
    for t in range(1, T + 1):
        B = spec.at("B", t)
        xs, xp = slice(t * m, (t + 1) * m), slice((t - 1) * m, t * m)
        A[xs] = B @ A[xp]
        A[xs, t * m : (t + 1) * m] += np.eye(m)
        mean[xs] = B @ mean[xp] + spec.at("u", t)
        ys = slice(xoff + (t - 1) * n, xoff + t * n)
        Z = spec.at("Z", t)
        A[ys] = Z @ A[xs]
        A[ys, xoff + (t - 1) * n : xoff + t * n] += np.eye(n)
        mean[ys] = Z @ mean[xs] + spec.at("a", t)
    D = scipy.linalg.block_diag(
        spec.Lambda,
        *[spec.at("Q", t) for t in range(1, T + 1)],
        *[spec.at("R", t) for t in range(1, T + 1)],
    )
    cov = A @ D @ A.T
    cov = 0.5 * (cov + cov.T)
    index = {}
    for t in range(T + 1):
        for r in range(m):
            index[("x", r, t)] = t * m + r
    for t in range(1, T + 1):
        for r in range(n):
            index[("y", r, t)] = xoff + (t - 1) * n + r
    return JointGaussian(mean, cov, m, n, T, index, A, D)


@dataclass(frozen=True, eq=False)
class ConditionedGaussian:
    """E[z | y_obs] and var[z | y_obs] over every coordinate of ``z``."""

    joint: JointGaussian
    mean: np.ndarray
    cov: np.ndarray
    gain: np.ndarray  # N x |o|, so that mean = joint.mean + gain @ (y_o - mu_o)
    observed: np.ndarray

    def xhat(self, t: int) -> np.ndarray:
        return self.mean[self.joint.x_slice(t)]

    def V(self, t: int, s: int | None = None) -> np.ndarray:
        s = t if s is None else s
        return self.cov[self.joint.x_slice(t), self.joint.x_slice(s)]

    def yexp(self, t: int) -> np.ndarray:
        return self.mean[self.joint.y_slice(t)]

    def U(self, t: int) -> np.ndarray:
        sl = self.joint.y_slice(t)
        return self.cov[sl, sl]

    def S(self, t: int, s: int) -> np.ndarray:
        """cov(Y_t, X_s | y)."""
        return self.cov[self.joint.y_slice(t), self.joint.x_slice(s)]


def condition(jg: JointGaussian, obs: ObservationSet) -> ConditionedGaussian:
    """Schur-complement conditioning on the observed Y cells."""
    o = jg.observed_indices(obs.mask)
    yo = obs.y.T.reshape(-1)[o - (jg.T + 1) * jg.m]
    if o.size == 0:
        return ConditionedGaussian(jg, jg.mean.copy(), jg.cov.copy(), np.zeros((jg.mean.size, 0)), o)
    gain = jg.cov[:, o] @ _pinv(jg.cov[np.ix_(o, o)])
    mean = jg.mean + gain @ (yo - jg.mean[o])
    mean[o] = yo
    cov = jg.cov - gain @ jg.cov[o, :]
    cov = 0.5 * (cov + cov.T)
    cov[o, :] = 0.0
    cov[:, o] = 0.0
    return ConditionedGaussian(jg, mean, cov, gain, o)


@dataclass(frozen=True, eq=False)
class ExactResidualLaw:
    """Unconditional (over data sets) covariances of the smoothed residuals.

    ``var_v`` is the variance of y_t - Z_t xhat_t - a_t with the actual value
    of y_t in every row, observed or not.  ``var_v_mean`` is the variance of
    E[V_t | y_obs], which differs only on unobserved rows.
    """

    var_v: np.ndarray  # T x n x n
    var_w: np.ndarray  # T x m x m
    cov_vw_same: np.ndarray  # T x n x m
    cov_vw_next: np.ndarray  # (T-1) x n x m
    var_v_mean: np.ndarray  # T x n x n


def residual_maps(spec: ModelSpec, jg: JointGaussian, mask: np.ndarray) -> tuple[list, list, list]:
    """Linear maps M with residual - E[residual] = M @ (z - mean)."""
    N = jg.mean.size
    o = jg.observed_indices(mask)
    sel = np.zeros((o.size, N))
    sel[np.arange(o.size), o] = 1.0
    gain = jg.cov[:, o] @ _pinv(jg.cov[np.ix_(o, o)]) if o.size else np.zeros((N, 0))
    cond_mean_map = gain @ sel  # E[z | y_obs] - mean = cond_mean_map @ (z - mean)
    Mv, Mw, Mvm = [], [], []
    for t in range(1, jg.T + 1):
        ys, xs, xp = jg.y_slice(t), jg.x_slice(t), jg.x_slice(t - 1)
        xhat = cond_mean_map[xs]
        Z, B = spec.at("Z", t), spec.at("B", t)
        ident = np.zeros((jg.n, N))
        ident[:, ys] = np.eye(jg.n)
        Mv.append(ident - Z @ xhat)
        yexp = cond_mean_map[ys].copy()
        observed_rows = mask[:, t - 1]
        yexp[observed_rows] = ident[observed_rows]
        Mvm.append(yexp - Z @ xhat)
        Mw.append(xhat - B @ cond_mean_map[xp])
    return Mv, Mw, Mvm


def residual_law_exact(spec: ModelSpec, jg: JointGaussian, mask: np.ndarray) -> ExactResidualLaw:
    mask = np.asarray(mask, dtype=bool)
    Mv, Mw, Mvm = residual_maps(spec, jg, mask)
    S = jg.cov
    T = jg.T
    var_v = np.stack([M @ S @ M.T for M in Mv])
    var_w = np.stack([M @ S @ M.T for M in Mw])
    cov_same = np.stack([Mv[i] @ S @ Mw[i].T for i in range(T)])
    cov_next = np.stack([Mv[i] @ S @ Mw[i + 1].T for i in range(T - 1)]) if T > 1 else np.zeros((0, jg.n, jg.m))
    var_v_mean = np.stack([M @ S @ M.T for M in Mvm])
    return ExactResidualLaw(var_v, var_w, cov_same, cov_next, var_v_mean)


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    eps: np.ndarray  # num_sims x T x (n+m), stacked (v_t, w_t)
    mean: np.ndarray  # T x (n+m)
    cov: np.ndarray  # T x (n+m) x (n+m)
    se_mean: np.ndarray  # T x (n+m)
    se_cov: np.ndarray  # T x (n+m) x (n+m)
    std_eps: np.ndarray  # num_sims x T x (n+m), full-mode standardized


def monte_carlo_check(spec: ModelSpec, mask, num_sims: int, seed=0) -> MonteCarloResult:
    """Simulate, smooth and form residuals per data set; return empirical moments.

    Model residuals at masked cells use the simulated (held-out) value, so
    the empirical law is directly comparable with ``var_v``.
    """
    from .model import simulate
    from .smoothations import residual_report, standardize

    mask = np.asarray(mask, dtype=bool)
    children = np.random.SeedSequence(seed).spawn(num_sims)
    T, n, m = spec.horizon, spec.num_obs, spec.num_states
    eps = np.zeros((num_sims, T, n + m))
    std = np.zeros((num_sims, T, n + m))
    for k, child in enumerate(children):
        _, full = simulate(spec, child)
        obs = ObservationSet(full.y, mask)
        rep = residual_report(spec, obs, use_unobserved_values=True)
        eps[k, :, :n] = rep.v.T
        eps[k, :, n:] = rep.w.T
        std[k] = standardize(rep, "contemporaneous", "full").values
    mean = eps.mean(axis=0)
    centred = eps - mean
    cov = np.einsum("kti,ktj->tij", centred, centred) / (num_sims - 1)
    prods = np.einsum("kti,ktj->ktij", centred, centred)
    se_cov = prods.std(axis=0, ddof=1) / np.sqrt(num_sims)
    se_mean = eps.std(axis=0, ddof=1) / np.sqrt(num_sims)
    return MonteCarloResult(eps, mean, cov, se_mean, se_cov, std)
