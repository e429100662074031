"""Compare every recursive quantity against the dense oracle for one model and mask."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import harvey, kalman, oracle, smoothations, ymoments
from .model import ModelSpec, ObservationSet


class Discrepancy(NamedTuple):
    quantity: str
    max_abs: float
    t: int | None
    index: tuple

    def __str__(self) -> str:
        where = "-" if self.t is None else f"t={self.t} idx={self.index}"
        return f"{self.quantity:<14s} {self.max_abs:.3e}  {where}"


class _Tracker:
    def __init__(self):
        self.worst: dict[str, Discrepancy] = {}

    def add(self, quantity: str, t: int, diff) -> None:
        diff = np.atleast_1d(np.abs(np.asarray(diff, dtype=float)))
        cur = self.worst.get(quantity)
        if diff.size == 0:
            if cur is None:
                self.worst[quantity] = Discrepancy(quantity, 0.0, None, ())
            return
        idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
        val = float(diff[idx])
        if cur is None or val > cur.max_abs:
            self.worst[quantity] = Discrepancy(quantity, val, t, tuple(int(i) for i in idx))


def verify(spec: ModelSpec, obs: ObservationSet) -> list[Discrepancy]:
    """Max absolute discrepancy per quantity, worst location included.

    Raises :class:`oracle.OracleSizeError` if the model is too large for
    dense conditioning.
    """
    jg = oracle.build_joint(spec)
    cg = oracle.condition(jg, obs)
    law = oracle.residual_law_exact(spec, jg, obs.mask)

    sm = kalman.kalman_smoother(spec, obs)
    ym = ymoments.conditional_y_moments(spec, obs, sm)
    rep = smoothations.residual_report(spec, obs, sm, ym)
    hv = harvey.harvey_backward(spec, obs, sm.filtered)
    T = spec.horizon

    tr = _Tracker()
    for t in range(T + 1):
        tr.add("xsmooth", t, sm.xsmooth[:, t] - cg.xhat(t))
        tr.add("Vsmooth", t, sm.Vsmooth[t] - cg.V(t))
    for t in range(1, T + 1):
        i = t - 1
        tr.add("Vlag", t, sm.Vlag_at(t) - cg.V(t, t - 1))
        tr.add("yexp", t, ym.yexp[:, i] - cg.yexp(t))
        tr.add("U", t, ym.U[i] - cg.U(t))
        tr.add("S", t, ym.S[i] - cg.S(t, t))
        tr.add("Slagm", t, ym.Slagm[i] - cg.S(t, t - 1))
        tr.add("Slagp", t, ym.Slagp[i] - cg.S(t, t + 1) if t < T else [])
        tr.add("var_v", t, rep.var_v[i] - law.var_v[i])
        tr.add("var_w", t, rep.var_w[i] - law.var_w[i])
        tr.add("cov_vw_same", t, rep.cov_vw_same[i] - law.cov_vw_same[i])
        tr.add("cov_vw_next", t, rep.cov_vw_next[i] - law.cov_vw_next[i] if t < T else [])
    sig_h = rep.sigma("harvey")
    eps_h = rep.eps("harvey")
    for t in range(1, T + 1):
        tr.add("harvey_Sigma", t, hv.Sigma[t - 1] - sig_h[t - 1])
        tr.add("harvey_eps", t, hv.eps[t - 1] - eps_h[t - 1])
    return list(tr.worst.values())
