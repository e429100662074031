"""Backward recursion for the residuals and their covariance in one sweep.

Non-normalized variant: the noise at step t is (v_t, w_{t+1}) with
covariance diag(R*_t, Q_{t+1}), so the structural factors G, H never need
to be formed.  Time indexing on B follows the state equation
x_t = B_t x_{t-1} + ..., hence B_{t+1} and Q_{t+1} appear at step t.

Starting from r_T = 0, N_T = 0, for t = T..1:

    K_t     = B_{t+1} Kgain_t
    L_t     = B_{t+1} - K_t Z*_t
    J_t     = Q*_{t+1} - K_t R*_t
    u_t     = F_t^- innov_t - K_t' r_t
    eps_t   = R*_t' u_t + Q*_{t+1}' r_t
    Sigma_t = R*_t' F_t^- R*_t + J_t' N_t J_t
    r_{t-1} = Z*_t' u_t + B_{t+1}' r_t
    N_{t-1} = Z*_t' F_t^- Z*_t + L_t' N_t L_t

with R*_t = [R_t*, 0_{n x m}] and Q*_{t+1} = [0_{m x n}, Q_{t+1}] so that
eps_t stacks the model residual above the state residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kalman import FilterOutput
from .linalg import pinv_sqrt_psd, roundoff_floor, sym
from .model import ModelSpec, ObservationSet


@dataclass(frozen=True, eq=False)
class HarveyResidualOutput:
    eps: np.ndarray  # T x (n+m): (vhat_t, what_{t+1}), masked rows 0
    Sigma: np.ndarray  # T x (n+m) x (n+m), masked rows/cols 0
    r: np.ndarray  # (T+1) x m, r[t] = r_t
    N: np.ndarray  # (T+1) x m x m


def harvey_backward(spec: ModelSpec, obs: ObservationSet, f: FilterOutput) -> HarveyResidualOutput:
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    if f.innov.shape != (n, T) or obs.mask.shape != (n, T):
        raise ValueError("filter output, data and model dimensions disagree")
    if not np.array_equal(f.mask, obs.mask):
        raise ValueError("filter was run with a different missing-data mask")
    if np.any(f.Zstar[~obs.mask.T]):
        raise ValueError("filter output lacks the missing-value modification of Z")

    eps = np.zeros((T, n + m))
    Sigma = np.zeros((T, n + m, n + m))
    r = np.zeros((T + 1, m))
    N = np.zeros((T + 1, m, m))
    for t in range(T, 0, -1):
        i = t - 1
        Bn = spec.at("B", t + 1)
        Qn = spec.at("Q", t + 1)
        Zs, Rs, Fi = f.Zstar[i], f.Rstar[i], f.Finv[i]
        Kh = Bn @ f.K[i]
        L = Bn - Kh @ Zs
        Rstar = np.hstack([Rs, np.zeros((n, m))])
        Qstar = np.hstack([np.zeros((m, n)), Qn])
        J = Qstar - Kh @ Rstar
        ut = Fi @ f.innov[:, i] - Kh.T @ r[t]
        eps[i] = Rstar.T @ ut + Qstar.T @ r[t]
        Sigma[i] = sym(Rstar.T @ Fi @ Rstar + J.T @ N[t] @ J)
        r[t - 1] = Zs.T @ ut + Bn.T @ r[t]
        N[t - 1] = sym(Zs.T @ Fi @ Zs + L.T @ N[t] @ L)
    return HarveyResidualOutput(eps, Sigma, r, N)


def harvey_standardize(out: HarveyResidualOutput) -> np.ndarray:
    """``Sigma*_t^{+1/2} eps*_t``; structural zero rows stay zero."""
    std = np.zeros_like(out.eps)
    floor = roundoff_floor(out.Sigma)
    for i in range(out.eps.shape[0]):
        std[i] = pinv_sqrt_psd(out.Sigma[i], t=i + 1, floor=floor) @ out.eps[i]
    return std
