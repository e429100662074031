"""Exit criteria.  Each test records one PASS/FAIL line, printed after the run."""

import shutil
from pathlib import Path

import numpy as np
import pytest

from marssresid import io
from marssresid.cli import main
from marssresid.harvey import harvey_backward
from marssresid.kalman import kalman_smoother
from marssresid.model import ObservationSet, random_mask, random_model, simulate
from marssresid.oracle import build_joint, condition, monte_carlo_check, residual_law_exact
from marssresid.smoothations import residual_report, standardize
from marssresid.ymoments import conditional_y_moments

from conftest import scalar_model

RESULTS: list[str] = []
GOLDEN = Path(__file__).parent / "golden"


def record(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


def suite(count: int, base: int, p_missing: float = 0.3, full: bool = False):
    for k in range(count):
        rng = np.random.default_rng(base + k)
        m, n, T = (int(rng.integers(1, hi + 1)) for hi in (3, 4, 6))
        spec = random_model(rng, m, n, T, time_varying=bool(k % 2), degenerate=k % 5 == 0)
        _, data = simulate(spec, rng)
        mask = np.ones((n, T), bool) if full else random_mask(rng, n, T, p_missing)
        yield spec, ObservationSet(data.y, mask), rng


def test_1_reduction_identities():
    worst_full = worst_missing = 0.0
    checked = 0
    for spec, obs, rng in suite(20, 100, full=True):
        rep = residual_report(spec, obs)
        for t in range(1, spec.horizon + 1):
            Z, R, V = spec.at("Z", t), spec.at("R", t), rep.smoother.Vsmooth[t]
            worst_full = max(worst_full, np.abs(rep.var_v[t - 1] - (R - Z @ V @ Z.T)).max())
        # hold out whole columns, always at least one
        drop = rng.random(spec.horizon) < 0.5
        drop[rng.integers(spec.horizon)] = True
        mask = np.ones_like(obs.mask)
        mask[:, drop] = False
        rep = residual_report(spec, ObservationSet(obs.y, mask))
        for t in np.flatnonzero(drop) + 1:
            Z, R, V = spec.at("Z", t), spec.at("R", t), rep.smoother.Vsmooth[t]
            worst_missing = max(worst_missing, np.abs(rep.var_v[t - 1] - (R + Z @ V @ Z.T)).max())
            checked += 1
    ok = worst_full <= 1e-10 and worst_missing <= 1e-10
    record(1, "reduction identities", ok,
           f"full-data max {worst_full:.2e}, all-missing max {worst_missing:.2e} ({checked} columns), tol 1e-10")


def _oracle_discrepancies(spec, obs):
    jg = build_joint(spec)
    cg = condition(jg, obs)
    law = residual_law_exact(spec, jg, obs.mask)
    sm = kalman_smoother(spec, obs)
    ym = conditional_y_moments(spec, obs, sm)
    rep = residual_report(spec, obs, sm, ym)
    T = spec.horizon
    d = {}

    def put(key, diff):
        diff = np.asarray(diff)
        if diff.size:
            d[key] = max(d.get(key, 0.0), float(np.abs(diff).max()))

    for t in range(T + 1):
        put("xsmooth", sm.xsmooth[:, t] - cg.xhat(t))
        put("Vsmooth", sm.Vsmooth[t] - cg.V(t))
    for t in range(1, T + 1):
        i = t - 1
        put("Vlag", sm.Vlag_at(t) - cg.V(t, t - 1))
        put("yexp", ym.yexp[:, i] - cg.yexp(t))
        put("U", ym.U[i] - cg.U(t))
        put("S", ym.S[i] - cg.S(t, t))
        put("Slagm", ym.Slagm[i] - cg.S(t, t - 1))
        if t < T:
            put("Slagp", ym.Slagp[i] - cg.S(t, t + 1))
    for name in ("var_v", "var_w", "cov_vw_same", "cov_vw_next"):
        put(name, getattr(rep, name) - getattr(law, name))
    return d, rep, sm


def test_2_oracle_equivalence():
    worst = {}
    for spec, obs, _ in suite(50, 200):
        d, _, _ = _oracle_discrepancies(spec, obs)
        for k, v in d.items():
            worst[k] = max(worst.get(k, 0.0), v)
    top = max(worst, key=worst.get)
    record(2, "oracle equivalence", worst[top] <= 1e-8,
           f"{len(worst)} quantities over 50 models, worst {top} {worst[top]:.2e}, tol 1e-8")


def test_3_cross_algorithm_equivalence():
    worst_eps = worst_sigma = 0.0
    for spec, obs, _ in suite(50, 200):
        rep = residual_report(spec, obs)
        hv = harvey_backward(spec, obs, rep.smoother.filtered)
        worst_eps = max(worst_eps, np.abs(hv.eps - rep.eps("harvey")).max())
        worst_sigma = max(worst_sigma, np.abs(hv.Sigma - rep.sigma("harvey")).max())
    ok = max(worst_eps, worst_sigma) <= 1e-8
    record(3, "harvey recursion vs formulas", ok,
           f"eps max {worst_eps:.2e}, Sigma max {worst_sigma:.2e}, tol 1e-8")


def test_4_m0_fixture():
    spec = scalar_model(T=1)
    rep = residual_report(spec, ObservationSet([[2.0]], [[True]]))
    std = standardize(rep, "contemporaneous", "full").values[0]
    got = {
        "v": rep.v[0, 0], "w": rep.w[0, 0], "var_v": rep.var_v[0, 0, 0], "var_w": rep.var_w[0, 0, 0],
        "cov": rep.cov_vw_same[0, 0, 0],
    }
    want = {"v": 1.0, "w": 1.0, "var_v": 0.5, "var_w": 0.5, "cov": 0.5}
    err = max(abs(got[k] - want[k]) for k in want)
    err = max(err, np.abs(rep.sigma_contemp[0] - np.full((2, 2), 0.5)).max(), np.abs(std - 1.0).max())
    record(4, "hand-worked M0", err <= 1e-12, f"max error {err:.2e}, tol 1e-12")


@pytest.mark.slow
def test_5_monte_carlo_law():
    spec = scalar_model(T=3, Lambda=1.0)
    mask = np.array([[True, False, True]])
    N = 10_000
    mc = monte_carlo_check(spec, mask, N, seed=20261014)
    rep = residual_report(spec, ObservationSet(np.zeros((1, 3)), mask))
    rel = 0.0
    for i in range(3):
        an, emp = rep.sigma_contemp[i], mc.cov[i]
        # variances: relative error; covariance: relative to sqrt(var_v var_w)
        scale = np.sqrt(np.outer(np.diag(an), np.diag(an)))
        rel = max(rel, float(np.max(np.abs(emp - an) / scale)))
    # standardized residuals, on the non-degenerate eigen-subspace of each Sigma_t
    zmax_mean = zmax_var = 0.0
    for i in range(3):
        w, V = np.linalg.eigh(rep.sigma_contemp[i])
        z = mc.std_eps[:, i, :] @ V[:, w > 1e-12 * w.max()]
        se_mean = z.std(axis=0, ddof=1) / np.sqrt(N)
        zmax_mean = max(zmax_mean, float(np.max(np.abs(z.mean(axis=0)) / se_mean)))
        var = z.var(axis=0, ddof=1)
        se_var = ((z - z.mean(axis=0)) ** 2).std(axis=0, ddof=1) / np.sqrt(N)
        zmax_var = max(zmax_var, float(np.max(np.abs(var - 1.0) / se_var)))
    ok = rel <= 0.05 and zmax_mean <= 3 and zmax_var <= 3
    record(5, "Monte Carlo law (M1, middle missing, 10k sims)", ok,
           f"max relative cov error {rel:.3f} (tol 0.05); std mean {zmax_mean:.2f} SE, "
           f"std variance {zmax_var:.2f} SE (tol 3)")


def test_6_parameter_only_dependence():
    identical = True
    count = 0
    for spec, obs, rng in suite(20, 300):
        a = residual_report(spec, obs)
        vals = obs.y[obs.mask]
        y = obs.y.copy()
        y[obs.mask] = rng.permutation(vals) + rng.standard_normal(vals.size)
        b = residual_report(spec, obs.with_values(y))
        for name in ("U", "S", "Slagm", "Slagp"):
            identical &= np.array_equal(getattr(a.ymoments, name), getattr(b.ymoments, name))
        for name in ("var_v", "var_w", "cov_vw_same", "cov_vw_next", "sigma_contemp", "sigma_harvey"):
            identical &= np.array_equal(getattr(a, name), getattr(b, name))
        count += 1
    record(6, "parameter-only dependence", bool(identical), f"{count} models, bit-identical U, S, Sigma blocks")


def test_7_cli_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    spec = random_model(rng, 2, 3, 5)
    io.save_model(spec, tmp_path / "m.json")
    codes = [
        main(["simulate", "--model", str(tmp_path / "m.json"), "--seed", "3", "--out", str(tmp_path)]),
        main(["residuals", "--model", str(tmp_path / "m.json"), "--data", str(tmp_path / "data.csv"),
              "--out", str(tmp_path / "res")]),
        main(["verify", "--model", str(tmp_path / "m.json"), "--data", str(tmp_path / "data.csv")]),
    ]
    for name in ("m0_model.json", "m0_data.csv"):
        shutil.copy(GOLDEN / name, tmp_path / name)
    codes.append(main(["residuals", "--model", str(tmp_path / "m0_model.json"),
                       "--data", str(tmp_path / "m0_data.csv"), "--out", str(tmp_path / "m0")]))
    got = io.read_residuals(tmp_path / "m0" / "residuals.csv")
    want = io.read_residuals(GOLDEN / "m0_residuals.csv")
    golden_ok = len(got) == len(want) and all(
        g[:3] == w[:3] and g[6] == w[6] and np.allclose(g[3:6], w[3:6], rtol=0, atol=1e-12)
        for g, w in zip(got, want)
    )
    ok = codes == [0, 0, 0, 0] and golden_ok
    record(7, "CLI round trip", ok, f"exit codes {codes}, golden M0 residuals.csv {'match' if golden_ok else 'differ'}")
