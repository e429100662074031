"""Kalman filter, RTS smoother and lag-one covariance smoother with missing data.

Missing observations are handled by zeroing the missing rows of Z_t and the
missing rows/columns of R_t, and using the inverse of F_t restricted to the
observed rows.  A fully missing time step is a pure prediction step.

Array layout: state means are m x (T+1) or m x T with time along the last
axis, covariance sequences are stacked along the first axis.  Position 0 of
any (T+1)-long sequence is t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import modified_inverse, pinv_psd, pinv_sqrt_psd, sym
from .model import ModelSpec, ObservationSet


@dataclass(frozen=True, eq=False)
class FilterOutput:
    xpred: np.ndarray  # m x T, column t-1 holds x_t^{t-1}
    Vpred: np.ndarray  # T x m x m
    xfilt: np.ndarray  # m x (T+1), column 0 holds x_0^0 = xi
    Vfilt: np.ndarray  # (T+1) x m x m
    F: np.ndarray  # T x n x n, missing-modified
    Finv: np.ndarray  # T x n x n, modified inverse
    K: np.ndarray  # T x m x n, gain V_t^{t-1} Z*' F^-
    innov: np.ndarray  # n x T, zero on missing cells
    Zstar: np.ndarray  # T x n x m
    Rstar: np.ndarray  # T x n x n
    mask: np.ndarray  # n x T
    loglik: float


@dataclass(frozen=True, eq=False)
class SmootherOutput:
    xsmooth: np.ndarray  # m x (T+1)
    Vsmooth: np.ndarray  # (T+1) x m x m
    Vlag: np.ndarray  # T x m x m, Vlag[t-1] = cov(X_t, X_{t-1} | y)
    J: np.ndarray  # T x m x m, J[t] is the smoother gain for t = 0..T-1
    filtered: FilterOutput

    def Vlag_at(self, t: int) -> np.ndarray:
        """cov(X_t, X_{t-1} | y) for t = 1..T."""
        return self.Vlag[t - 1]

    def Vlead_at(self, t: int) -> np.ndarray:
        """cov(X_t, X_{t+1} | y) for t = 0..T-1."""
        return self.Vlag[t].T


def missing_modified(Z: np.ndarray, R: np.ndarray, observed: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero the unobserved rows of Z and rows/columns (diagonal included) of R."""
    keep = observed.astype(float)
    return Z * keep[:, None], R * np.outer(keep, keep)


def _check_dims(spec: ModelSpec, obs: ObservationSet):
    if obs.y.shape != (spec.num_obs, spec.horizon):
        raise ValueError(
            f"data is {obs.y.shape[0]} x {obs.y.shape[1]}, model expects "
            f"{spec.num_obs} x {spec.horizon}"
        )


def kalman_filter(spec: ModelSpec, obs: ObservationSet) -> FilterOutput:
    _check_dims(spec, obs)
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    xpred = np.zeros((m, T))
    Vpred = np.zeros((T, m, m))
    xfilt = np.zeros((m, T + 1))
    Vfilt = np.zeros((T + 1, m, m))
    F = np.zeros((T, n, n))
    Finv = np.zeros((T, n, n))
    K = np.zeros((T, m, n))
    innov = np.zeros((n, T))
    Zstar = np.zeros((T, n, m))
    Rstar = np.zeros((T, n, n))
    loglik = 0.0

    xfilt[:, 0] = spec.xi
    Vfilt[0] = sym(spec.Lambda)
    for t in range(1, T + 1):
        i = t - 1
        B = spec.at("B", t)
        xp = B @ xfilt[:, i] + spec.at("u", t)
        Vp = sym(B @ Vfilt[i] @ B.T + spec.at("Q", t))
        observed = obs.mask[:, i]
        Zs, Rs = missing_modified(spec.at("Z", t), spec.at("R", t), observed)
        Ft = sym(Zs @ Vp @ Zs.T + Rs)
        Fi = modified_inverse(Ft, observed, t=t)
        e = np.where(observed, obs.y[:, i] - spec.at("Z", t) @ xp - spec.at("a", t), 0.0)
        Kt = Vp @ Zs.T @ Fi
        xpred[:, i], Vpred[i] = xp, Vp
        xfilt[:, t] = xp + Kt @ e
        Vfilt[t] = sym((np.eye(m) - Kt @ Zs) @ Vp)
        F[i], Finv[i], K[i], innov[:, i], Zstar[i], Rstar[i] = Ft, Fi, Kt, e, Zs, Rs

        k = int(observed.sum())
        if k:
            idx = np.flatnonzero(observed)
            _, logdet = np.linalg.slogdet(Ft[np.ix_(idx, idx)])
            loglik -= 0.5 * (k * np.log(2 * np.pi) + logdet + e @ Fi @ e)

    return FilterOutput(
        xpred=xpred,
        Vpred=Vpred,
        xfilt=xfilt,
        Vfilt=Vfilt,
        F=F,
        Finv=Finv,
        K=K,
        innov=innov,
        Zstar=Zstar,
        Rstar=Rstar,
        mask=obs.mask.copy(),
        loglik=float(loglik),
    )


def kalman_smoother(spec: ModelSpec, obs: ObservationSet, filtered: FilterOutput | None = None) -> SmootherOutput:
    """RTS smoother extended to t = 0, plus the lag-one covariance smoother."""
    f = kalman_filter(spec, obs) if filtered is None else filtered
    m, T = spec.num_states, spec.horizon
    xs = f.xfilt.copy()
    Vs = f.Vfilt.copy()
    J = np.zeros((T, m, m))
    for t in range(T - 1, -1, -1):
        # gain from t+1 back to t; pseudo-inverse covers singular predictions
        Jt = f.Vfilt[t] @ spec.at("B", t + 1).T @ pinv_psd(f.Vpred[t])
        J[t] = Jt
        xs[:, t] = f.xfilt[:, t] + Jt @ (xs[:, t + 1] - f.xpred[:, t])
        Vs[t] = sym(f.Vfilt[t] + Jt @ (Vs[t + 1] - f.Vpred[t]) @ Jt.T)

    Vlag = np.zeros((T, m, m))
    KZ = f.K[T - 1] @ f.Zstar[T - 1]
    Vlag[T - 1] = (np.eye(m) - KZ) @ spec.at("B", T) @ f.Vfilt[T - 1]
    for t in range(T, 1, -1):
        # Vlag[t-2] = cov(X_{t-1}, X_{t-2} | y)
        Vlag[t - 2] = f.Vfilt[t - 1] @ J[t - 2].T + J[t - 1] @ (
            Vlag[t - 1] - spec.at("B", t) @ f.Vfilt[t - 1]
        ) @ J[t - 2].T
    return SmootherOutput(xsmooth=xs, Vsmooth=Vs, Vlag=Vlag, J=J, filtered=f)


def standardized_innovations(f: FilterOutput) -> np.ndarray:
    """Innovations premultiplied by ``F*_t^{+1/2}``; missing rows stay 0."""
    out = np.zeros_like(f.innov)
    for i in range(f.innov.shape[1]):
        out[:, i] = pinv_sqrt_psd(f.F[i], t=i + 1) @ f.innov[:, i]
    return out
