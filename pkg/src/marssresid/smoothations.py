"""Smoothed model and state residuals and the covariance of their joint law.

The variances here are unconditional over data sets: they describe how the
residuals computed from E[X | y_obs] scatter across realizations of the
data.  The model-residual variance counts the actual value of y_t in every
row, so on unobserved rows it is the spread of a held-out value around its
smoothed prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kalman import SmootherOutput, kalman_smoother
from .linalg import NEG_RTOL, NumericalError, pinv_sqrt_psd, roundoff_floor, sym
from .model import ModelSpec, ObservationSet
from .ymoments import ConditionalYMoments, conditional_y_moments

CONVENTIONS = ("contemporaneous", "harvey")
MODES = ("full", "marginal")


def model_residual_variance(spec: ModelSpec, sm: SmootherOutput, ym: ConditionalYMoments, t: int) -> np.ndarray:
    """var of y_t - Z_t xhat_t - a_t: R - Z V Z' + S Z' + Z S'."""
    Z, R = spec.at("Z", t), spec.at("R", t)
    S = ym.S[t - 1]
    return sym(R - Z @ sm.Vsmooth[t] @ Z.T + S @ Z.T + Z @ S.T)


def state_residual_variance(spec: ModelSpec, sm: SmootherOutput, t: int) -> np.ndarray:
    """var of xhat_t - B_t xhat_{t-1} - u_t, for t = 1..T."""
    B, Q = spec.at("B", t), spec.at("Q", t)
    Vlag = sm.Vlag_at(t)
    return sym(Q - sm.Vsmooth[t] - B @ sm.Vsmooth[t - 1] @ B.T + Vlag @ B.T + B @ Vlag.T)


def cov_v_w_same(spec: ModelSpec, sm: SmootherOutput, ym: ConditionalYMoments, t: int) -> np.ndarray:
    """cov(vhat_t, what_t)."""
    Z, B = spec.at("Z", t), spec.at("B", t)
    return -ym.S[t - 1] + ym.Slagm[t - 1] @ B.T - Z @ sm.Vlag_at(t) @ B.T + Z @ sm.Vsmooth[t]


def cov_v_w_next(spec: ModelSpec, sm: SmootherOutput, ym: ConditionalYMoments, t: int) -> np.ndarray:
    """cov(vhat_t, what_{t+1}), for t = 1..T-1."""
    if not 1 <= t < spec.horizon:
        raise IndexError(f"cov(v_t, w_t+1) is defined for t = 1..T-1, got t={t}")
    Z, Bn = spec.at("Z", t), spec.at("B", t + 1)
    return -ym.Slagp[t - 1] + ym.S[t - 1] @ Bn.T + Z @ sm.Vlead_at(t) - Z @ sm.Vsmooth[t] @ Bn.T


@dataclass(frozen=True, eq=False)
class ResidualReport:
    v: np.ndarray  # n x T
    w: np.ndarray  # m x T, column t-1 holds what_t
    var_v: np.ndarray  # T x n x n
    var_w: np.ndarray  # T x m x m
    cov_vw_same: np.ndarray  # T x n x m
    cov_vw_next: np.ndarray  # (T-1) x n x m
    sigma_contemp: np.ndarray  # T x (n+m) x (n+m)
    sigma_harvey: np.ndarray  # T x (n+m) x (n+m); state part zero at t=T
    mask: np.ndarray  # n x T
    smoother: SmootherOutput
    ymoments: ConditionalYMoments

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def T(self) -> int:
        return self.v.shape[1]

    def eps(self, convention: str) -> np.ndarray:
        """Stacked residual vectors, T x (n+m).

        For ``harvey``, row t holds (vhat_t, what_{t+1}) with masked model rows
        and the absent state part at t=T set to 0.
        """
        n, T = self.n, self.T
        out = np.zeros((T, n + self.m))
        out[:, :n] = self.v.T
        if convention == "contemporaneous":
            out[:, n:] = self.w.T
        elif convention == "harvey":
            out[:, :n] *= self.mask.T
            out[: T - 1, n:] = self.w[:, 1:].T
        else:
            raise ValueError(f"unknown convention {convention!r}")
        return out

    def sigma(self, convention: str) -> np.ndarray:
        """Joint covariances; for ``harvey`` the masked rows/columns are zeroed."""
        if convention == "contemporaneous":
            return self.sigma_contemp
        if convention == "harvey":
            return harvey_masked(self.sigma_harvey, self.mask)
        raise ValueError(f"unknown convention {convention!r}")

    def defined(self, convention: str) -> np.ndarray:
        """T x (n+m) flags for entries that exist under the convention."""
        n, T = self.n, self.T
        out = np.ones((T, n + self.m), dtype=bool)
        if convention == "harvey":
            out[:, :n] = self.mask.T
            out[T - 1, n:] = False
        return out


def harvey_masked(sigma: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Zero the rows/columns of unobserved model residuals."""
    n = mask.shape[0]
    keep = np.ones(sigma.shape[1])
    out = sigma.copy()
    for i in range(sigma.shape[0]):
        keep[:n] = mask[:, i]
        out[i] *= np.outer(keep, keep)
    return out


def joint_residual_covariance(
    spec: ModelSpec, sm: SmootherOutput, ym: ConditionalYMoments, convention: str
) -> np.ndarray:
    """Per-t (n+m) x (n+m) covariance of the stacked residuals.

    Under ``harvey`` the state block at t is var(what_{t+1}); at t = T the
    state and cross blocks are absent and left zero.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    n, m, T = spec.num_obs, spec.num_states, spec.horizon
    out = np.zeros((T, n + m, n + m))
    for t in range(1, T + 1):
        out[t - 1, :n, :n] = model_residual_variance(spec, sm, ym, t)
        if convention == "contemporaneous":
            c = cov_v_w_same(spec, sm, ym, t)
            vw = state_residual_variance(spec, sm, t)
        elif t < T:
            c = cov_v_w_next(spec, sm, ym, t)
            vw = state_residual_variance(spec, sm, t + 1)
        else:
            continue
        out[t - 1, :n, n:] = c
        out[t - 1, n:, :n] = c.T
        out[t - 1, n:, n:] = vw
        out[t - 1] = sym(out[t - 1])
    return out


def residual_report(
    spec: ModelSpec,
    obs: ObservationSet,
    sm: SmootherOutput | None = None,
    ym: ConditionalYMoments | None = None,
    use_unobserved_values: bool = False,
) -> ResidualReport:
    """Residuals and all covariance blocks.

    Unobserved model residuals are E[V_t | y_obs] (built from E[Y_t | y_obs])
    unless ``use_unobserved_values`` is set, in which case the values stored
    under masked cells are taken as held-out truth.
    """
    sm = kalman_smoother(spec, obs) if sm is None else sm
    ym = conditional_y_moments(spec, obs, sm) if ym is None else ym
    n, m, T = spec.num_obs, spec.num_states, spec.horizon
    y = obs.y if use_unobserved_values else ym.yexp
    v = np.zeros((n, T))
    w = np.zeros((m, T))
    xs = sm.xsmooth
    for t in range(1, T + 1):
        v[:, t - 1] = y[:, t - 1] - spec.at("Z", t) @ xs[:, t] - spec.at("a", t)
        w[:, t - 1] = xs[:, t] - spec.at("B", t) @ xs[:, t - 1] - spec.at("u", t)
    var_v = np.stack([model_residual_variance(spec, sm, ym, t) for t in range(1, T + 1)])
    var_w = np.stack([state_residual_variance(spec, sm, t) for t in range(1, T + 1)])
    cov_same = np.stack([cov_v_w_same(spec, sm, ym, t) for t in range(1, T + 1)])
    if T > 1:
        cov_next = np.stack([cov_v_w_next(spec, sm, ym, t) for t in range(1, T)])
    else:
        cov_next = np.zeros((0, n, m))
    return ResidualReport(
        v=v,
        w=w,
        var_v=var_v,
        var_w=var_w,
        cov_vw_same=cov_same,
        cov_vw_next=cov_next,
        sigma_contemp=joint_residual_covariance(spec, sm, ym, "contemporaneous"),
        sigma_harvey=joint_residual_covariance(spec, sm, ym, "harvey"),
        mask=obs.mask.copy(),
        smoother=sm,
        ymoments=ym,
    )


@dataclass(frozen=True, eq=False)
class StandardizedResiduals:
    values: np.ndarray  # T x (n+m)
    valid: np.ndarray  # T x (n+m); False for masked, absent or zero-variance entries
    convention: str
    mode: str


def standardize_vectors(eps: np.ndarray, sigma: np.ndarray, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Standardize each row of ``eps`` by its covariance in ``sigma``.

    Returns (values, nonzero-variance flags).
    """
    if mode not in MODES:
        raise ValueError(f"unknown standardization mode {mode!r}")
    out = np.zeros_like(eps)
    ok = np.zeros(eps.shape, dtype=bool)
    floor = roundoff_floor(sigma)
    for i in range(eps.shape[0]):
        s = sym(sigma[i])
        d = np.diag(s)
        scale = float(np.max(np.abs(d))) if d.size else 0.0
        ok[i] = d > max(1e-12 * scale, floor)
        if mode == "full":
            out[i] = pinv_sqrt_psd(s, t=i + 1, floor=floor) @ eps[i]
        else:
            if np.any(d < -max(NEG_RTOL * scale, floor)):
                raise NumericalError("negative residual variance", t=i + 1, operation="standardize")
            out[i, ok[i]] = eps[i, ok[i]] / np.sqrt(d[ok[i]])
    return out, ok


def standardize(report: ResidualReport, convention: str, mode: str = "full") -> StandardizedResiduals:
    """Premultiply residuals by the pseudo-inverse square root of their covariance.

    ``marginal`` divides each entry by its own standard deviation instead.
    """
    eps = report.eps(convention)
    values, ok = standardize_vectors(eps, report.sigma(convention), mode)
    defined = report.defined(convention)
    values[~defined] = 0.0
    valid = ok & defined
    # unobserved model rows may carry values but are never flagged
    valid[:, : report.n] &= report.mask.T
    return StandardizedResiduals(values, valid, convention, mode)


def flag_outliers(std: StandardizedResiduals | np.ndarray, threshold: float = 1.96, valid=None) -> np.ndarray:
    """``|value| > threshold``; entries that are not valid are never flagged."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    if isinstance(std, StandardizedResiduals):
        values, valid = std.values, std.valid if valid is None else valid
    else:
        values = np.asarray(std, dtype=float)
    flags = np.abs(values) > threshold
    if valid is not None:
        flags &= np.asarray(valid, dtype=bool)
    return flags
