"""Command-line front end: ``marssresid residuals|simulate|verify``.

Exit codes: 0 success, 1 verification discrepancy above tolerance, 2 input
parse error, 3 invalid model, 4 numerical failure, 5 model too large for the
oracle.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, oracle, smoothations
from .linalg import NumericalError
from .model import ModelSpec, ObservationSet, simulate, validate_model
from .verify import verify

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC, EXIT_SIZE = 0, 1, 2, 3, 4, 5
VERIFY_TOL = 1e-6


@dataclass(frozen=True)
class RunConfig:
    model: Path
    data: Path | None = None
    convention: str = "contemporaneous"
    std: str = "full"
    threshold: float = 1.96
    out: Path = Path(".")
    seed: int = 0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.convention not in smoothations.CONVENTIONS:
            raise ValueError(f"convention must be one of {smoothations.CONVENTIONS}")
        if self.std not in smoothations.MODES:
            raise ValueError(f"std must be one of {smoothations.MODES}")


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _load_valid_model(path) -> ModelSpec:
    try:
        spec = io.load_model(path)
    except io.InputFormatError as exc:
        raise _Exit(EXIT_PARSE, str(exc)) from None
    violations = validate_model(spec)
    if violations:
        lines = "\n".join(f"  {v}" for v in violations)
        raise _Exit(EXIT_INVALID, f"{path}: invalid model\n{lines}")
    return spec


def _load_data(path, spec: ModelSpec) -> ObservationSet:
    try:
        return io.load_data(path, n=spec.num_obs, T=spec.horizon)
    except io.InputFormatError as exc:
        raise _Exit(EXIT_PARSE, str(exc)) from None


def labels(spec: ModelSpec) -> list[str]:
    return [f"v{i + 1}" for i in range(spec.num_obs)] + [f"w{j + 1}" for j in range(spec.num_states)]


def residual_rows(rep: smoothations.ResidualReport, convention: str, mode: str, threshold: float) -> list[tuple]:
    std = smoothations.standardize(rep, convention, mode)
    flags = smoothations.flag_outliers(std, threshold)
    eps = rep.eps(convention)
    sigma = rep.sigma(convention)
    n, m, T = rep.n, rep.m, rep.T
    rows = []
    for i in range(T):
        var = np.diag(sigma[i])
        for k in range(n + m):
            if convention == "harvey" and i == T - 1 and k >= n:
                continue
            series, kind = (f"y{k + 1}", "model") if k < n else (f"x{k - n + 1}", "state")
            rows.append((i + 1, series, kind, eps[i, k], var[k], std.values[i, k], bool(flags[i, k])))
    return rows


def cmd_residuals(cfg: RunConfig) -> int:
    spec = _load_valid_model(cfg.model)
    if cfg.data is None:
        raise _Exit(EXIT_PARSE, "residuals needs --data")
    obs = _load_data(cfg.data, spec)
    try:
        rep = smoothations.residual_report(spec, obs)
        rows = residual_rows(rep, cfg.convention, cfg.std, cfg.threshold)
    except NumericalError as exc:
        raise _Exit(EXIT_NUMERIC, f"numerical failure: {exc}") from None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_residuals(out / "residuals.csv", rows)
    present = None
    if cfg.convention == "harvey":
        present = [spec.num_obs + spec.num_states] * (spec.horizon - 1) + [spec.num_obs]
    io.write_sigma(out / "sigma_t.csv", rep.sigma(cfg.convention), labels(spec), present)
    n_out = sum(r[-1] for r in rows)
    print(f"wrote {out / 'residuals.csv'} and {out / 'sigma_t.csv'}; {n_out} outlier(s) at |std| > {cfg.threshold}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    spec = _load_valid_model(cfg.model)
    _, obs = simulate(spec, cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_data(obs, out / "data.csv")
    print(f"wrote {out / 'data.csv'}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    spec = _load_valid_model(cfg.model)
    if cfg.data is not None:
        obs = _load_data(cfg.data, spec)
    else:
        _, obs = simulate(spec, cfg.seed)
    try:
        report = verify(spec, obs)
    except oracle.OracleSizeError as exc:
        raise _Exit(EXIT_SIZE, str(exc)) from None
    except NumericalError as exc:
        raise _Exit(EXIT_NUMERIC, f"numerical failure: {exc}") from None
    print(f"{'quantity':<14s} {'max |diff|':>9s}  worst")
    for d in report:
        print(d)
    worst = max(report, key=lambda d: d.max_abs)
    ok = worst.max_abs <= VERIFY_TOL
    print(f"worst: {worst.quantity} {worst.max_abs:.3e}; {'PASS' if ok else 'FAIL'} at tolerance {VERIFY_TOL:g}")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marssresid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data_required=False):
        p.add_argument("--model", required=True, type=Path, help="model JSON file")
        p.add_argument("--data", required=data_required, type=Path, help="data CSV file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("residuals", help="compute and standardize residuals")
    common(p, data_required=True)
    p.add_argument("--convention", choices=smoothations.CONVENTIONS, default="contemporaneous")
    p.add_argument("--std", choices=smoothations.MODES, default="full")
    p.add_argument("--threshold", type=float, default=1.96)

    p = sub.add_parser("simulate", help="simulate a data set from the model")
    common(p)

    p = sub.add_parser("verify", help="check all quantities against the dense oracle")
    common(p)
    return parser


COMMANDS = {"residuals": cmd_residuals, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kw = {k: getattr(args, k) for k in ("model", "data", "out", "seed") if hasattr(args, k)}
    for k in ("convention", "std", "threshold"):
        if hasattr(args, k):
            kw[k] = getattr(args, k)
    try:
        cfg = RunConfig(**kw)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return COMMANDS[args.command](cfg)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
