"""Conditional moments of Y_t given the observed data.

With o/m the observed/missing rows at t, C_t = R_mo R_oo^+ and
Delta_t = Z_m - C_t Z_o, the missing part of Y_t given all observed data is

    Y_m = Delta_t X_t + a_m + C_t (y_o - a_o) + eta,   var(eta) = R_mm - C_t R_om

with eta independent of every X and of the other observations.  Everything
below follows from that representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kalman import SmootherOutput
from .linalg import NumericalError, pinv_psd, sym
from .model import ModelSpec, ObservationSet


@dataclass(frozen=True, eq=False)
class ConditionalYMoments:
    yexp: np.ndarray  # n x T, E[Y_t | y]
    U: np.ndarray  # T x n x n, var(Y_t | y)
    S: np.ndarray  # T x n x m, cov(Y_t, X_t | y)
    Slagm: np.ndarray  # T x n x m, cov(Y_t, X_{t-1} | y)
    Slagp: np.ndarray  # (T-1) x n x m, cov(Y_t, X_{t+1} | y) for t = 1..T-1


def conditional_y_moments(spec: ModelSpec, obs: ObservationSet, sm: SmootherOutput) -> ConditionalYMoments:
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    yexp = np.where(obs.mask, obs.y, 0.0).astype(float)
    U = np.zeros((T, n, n))
    S = np.zeros((T, n, m))
    Slagm = np.zeros((T, n, m))
    Slagp = np.zeros((max(T - 1, 0), n, m))
    for t in range(1, T + 1):
        mi = obs.missing(t)
        if mi.size == 0:
            continue
        o = obs.observed(t)
        Z, R, a = spec.at("Z", t), spec.at("R", t), spec.at("a", t)
        Rmo = R[np.ix_(mi, o)]
        Roo = R[np.ix_(o, o)]
        Roo_pinv = pinv_psd(Roo)
        if o.size and np.any(Rmo):
            # R_mo must lie in the row space of R_oo
            resid = Rmo - Rmo @ Roo @ Roo_pinv
            if np.max(np.abs(resid)) > 1e-8 * max(1.0, float(np.max(np.abs(R)))):
                raise NumericalError(
                    "R_mo is not in the range of R_oo; the conditional law is ill-posed",
                    t=t,
                    operation="conditional_y_moments",
                )
        C = Rmo @ Roo_pinv
        delta = Z[mi] - C @ Z[o]
        xhat = sm.xsmooth[:, t]
        yo = obs.y[o, t - 1]
        yexp[mi, t - 1] = Z[mi] @ xhat + a[mi] + C @ (yo - Z[o] @ xhat - a[o])
        Umm = R[np.ix_(mi, mi)] - C @ Rmo.T + delta @ sm.Vsmooth[t] @ delta.T
        U[t - 1][np.ix_(mi, mi)] = sym(Umm)
        S[t - 1][mi] = delta @ sm.Vsmooth[t]
        Slagm[t - 1][mi] = delta @ sm.Vlag_at(t)
        if t < T:
            Slagp[t - 1][mi] = delta @ sm.Vlead_at(t)
    return ConditionalYMoments(yexp, U, S, Slagm, Slagp)
