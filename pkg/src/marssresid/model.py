"""MARSS model and data containers, validation and simulation.

The model is

    x_t = B_t x_{t-1} + u_t + w_t,   w_t ~ N(0, Q_t)
    y_t = Z_t x_t + a_t + v_t,       v_t ~ N(0, R_t)
    x_0 ~ N(xi, Lambda)

for t = 1..T.  Time indices in the public API are 1-based for t = 1..T
(``spec.at("B", t)``); arrays that also hold t = 0 put it in position 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .linalg import psd_factor

MATRIX_PARAMS = ("B", "Q", "Z", "R")
VECTOR_PARAMS = ("u", "a")
PARAMS = ("B", "u", "Q", "Z", "a", "R")

SYM_RTOL = 1e-12
PSD_RTOL = 1e-10


def _as_matrix(value, horizon: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 3 and arr.shape[0] == 1 and horizon != 1:
        return arr[0]
    if arr.ndim not in (2, 3):
        raise ValueError(f"matrix parameter has {arr.ndim} dimensions; expected 2 or 3")
    return arr


def _as_vector(value, length: int, horizon: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    if arr.ndim == 2 and arr.shape != (horizon, length) and arr.shape == (length, 1):
        # a single column vector
        arr = arr[:, 0]
    if arr.ndim == 2 and arr.shape[0] == 1 and horizon != 1:
        arr = arr[0]
    if arr.ndim not in (1, 2):
        raise ValueError(f"vector parameter has {arr.ndim} dimensions; expected 1 or 2")
    return arr


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Time-varying MARSS parameters.

    Each of ``B, u, Q, Z, a, R`` is either a single array (time-invariant,
    broadcast to every t) or a stack with leading axis of length T.
    """

    B: np.ndarray
    u: np.ndarray
    Q: np.ndarray
    Z: np.ndarray
    a: np.ndarray
    R: np.ndarray
    xi: np.ndarray
    Lambda: np.ndarray
    horizon: int
    num_states: int = field(init=False)
    num_obs: int = field(init=False)

    def __post_init__(self):
        T = int(self.horizon)
        if T < 1:
            raise ValueError("horizon must be a positive integer")
        object.__setattr__(self, "horizon", T)
        for name in MATRIX_PARAMS:
            object.__setattr__(self, name, _as_matrix(getattr(self, name), T))
        xi = np.array(self.xi, dtype=float).reshape(-1)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "u", _as_vector(self.u, xi.shape[0], T))
        object.__setattr__(self, "a", _as_vector(self.a, self.Z.shape[-2], T))
        object.__setattr__(self, "Lambda", np.atleast_2d(np.array(self.Lambda, dtype=float)))
        object.__setattr__(self, "num_states", xi.shape[0])
        object.__setattr__(self, "num_obs", self.Z.shape[-2])
        for name in PARAMS + ("xi", "Lambda"):
            getattr(self, name).setflags(write=False)

    @property
    def m(self) -> int:
        return self.num_states

    @property
    def n(self) -> int:
        return self.num_obs

    @property
    def T(self) -> int:
        return self.horizon

    def is_time_varying(self, name: str) -> bool:
        single = 1 if name in VECTOR_PARAMS else 2
        return getattr(self, name).ndim == single + 1

    def at(self, name: str, t: int) -> np.ndarray:
        """Parameter ``name`` at time ``t`` (1-based).

        ``t = T + 1`` is accepted and returns the time-T value, which the
        backward recursion uses as a placeholder past the end of the data.
        """
        if not 1 <= t <= self.horizon + 1:
            raise IndexError(f"t={t} outside 1..{self.horizon}")
        arr = getattr(self, name)
        if self.is_time_varying(name):
            return arr[min(t, self.horizon) - 1]
        return arr

    def expanded(self) -> "ModelSpec":
        """Copy with every parameter stored as an explicit length-T stack."""
        kw = {name: np.stack([self.at(name, t) for t in range(1, self.horizon + 1)]) for name in PARAMS}
        return ModelSpec(xi=self.xi, Lambda=self.Lambda, horizon=self.horizon, **kw)

    def replace(self, **changes) -> "ModelSpec":
        kw = {name: getattr(self, name) for name in PARAMS + ("xi", "Lambda", "horizon")}
        kw.update(changes)
        return ModelSpec(**kw)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """``y`` is n x T; ``mask`` is True where the cell was observed.

    Values under unobserved cells are carried along untouched but never used
    unless a caller explicitly asks for held-out values (see
    :func:`marssresid.smoothations.residual_report`).
    """

    y: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim == 1:
            y = y[None, :]
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != y.shape:
            raise ValueError(f"mask shape {mask.shape} does not match data shape {y.shape}")
        y.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, y) -> "ObservationSet":
        """Build from an array where NaN marks a missing cell."""
        y = np.array(y, dtype=float)
        if y.ndim == 1:
            y = y[None, :]
        mask = ~np.isnan(y)
        return cls(np.where(mask, y, 0.0), mask)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]

    def observed(self, t: int) -> np.ndarray:
        """Indices o(t) of the observed rows at time t (1-based)."""
        return np.flatnonzero(self.mask[:, t - 1])

    def missing(self, t: int) -> np.ndarray:
        """Indices m(t) of the unobserved rows at time t (1-based)."""
        return np.flatnonzero(~self.mask[:, t - 1])

    def with_values(self, y) -> "ObservationSet":
        return ObservationSet(y, self.mask)


class StateRealization(NamedTuple):
    x: np.ndarray  # m x (T+1), column 0 is x_0
    w: np.ndarray  # m x T
    v: np.ndarray  # n x T


class Violation(NamedTuple):
    name: str
    t: int | None  # None: a time-invariant parameter, i.e. all t
    kind: str
    detail: str = ""

    def __str__(self) -> str:
        where = "all" if self.t is None else str(self.t)
        text = f"{self.name} (t={where}): {self.kind}"
        return f"{text} [{self.detail}]" if self.detail else text


def _check_cov(name: str, t: int | None, a: np.ndarray) -> list[Violation]:
    out = []
    if not np.all(np.isfinite(a)):
        return [Violation(name, t, "non-finite entries")]
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > SYM_RTOL * scale:
        out.append(Violation(name, t, "asymmetry", f"max |A - A'| = {asym:.3e}"))
    w = np.linalg.eigvalsh(0.5 * (a + a.T))
    if w.size and w.min() < -PSD_RTOL * max(1.0, float(w.max())):
        out.append(Violation(name, t, "negative eigenvalue", f"min eigenvalue {w.min():.3e}"))
    return out


def validate_model(spec: ModelSpec) -> list[Violation]:
    """Every dimension and PSD violation in ``spec``; an empty list means valid."""
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    expected = {"B": (m, m), "u": (m,), "Q": (m, m), "Z": (n, m), "a": (n,), "R": (n, n)}
    out: list[Violation] = []
    for name, shape in expected.items():
        arr = getattr(spec, name)
        if spec.is_time_varying(name):
            if arr.shape[0] != T:
                out.append(Violation(name, None, "wrong number of time steps", f"{arr.shape[0]} != T={T}"))
                continue
            items: Iterable = ((t + 1, arr[t]) for t in range(T))
        else:
            items = [(None, arr)]
        for t, mat in items:
            if mat.shape != shape:
                out.append(Violation(name, t, "dimension mismatch", f"{mat.shape} != {shape}"))
                continue
            if not np.all(np.isfinite(mat)):
                out.append(Violation(name, t, "non-finite entries"))
                continue
            if name in ("Q", "R"):
                out.extend(_check_cov(name, t, mat))
    if spec.Lambda.shape != (m, m):
        out.append(Violation("Lambda", None, "dimension mismatch", f"{spec.Lambda.shape} != {(m, m)}"))
    else:
        out.extend(_check_cov("Lambda", None, spec.Lambda))
    if not np.all(np.isfinite(spec.xi)):
        out.append(Violation("xi", None, "non-finite entries"))
    return out


def simulate(spec: ModelSpec, seed=None) -> tuple[StateRealization, ObservationSet]:
    """Draw one realization; deterministic for a given seed (int, SeedSequence or Generator)."""
    rng = np.random.default_rng(seed)
    m, n, T = spec.num_states, spec.num_obs, spec.horizon
    x = np.zeros((m, T + 1))
    w = np.zeros((m, T))
    v = np.zeros((n, T))
    y = np.zeros((n, T))
    x[:, 0] = spec.xi + psd_factor(spec.Lambda) @ rng.standard_normal(m)
    for t in range(1, T + 1):
        w[:, t - 1] = psd_factor(spec.at("Q", t)) @ rng.standard_normal(m)
        v[:, t - 1] = psd_factor(spec.at("R", t)) @ rng.standard_normal(n)
        x[:, t] = spec.at("B", t) @ x[:, t - 1] + spec.at("u", t) + w[:, t - 1]
        y[:, t - 1] = spec.at("Z", t) @ x[:, t] + spec.at("a", t) + v[:, t - 1]
    return StateRealization(x, w, v), ObservationSet(y, np.ones((n, T), dtype=bool))


def apply_mask(obs: ObservationSet, drop) -> ObservationSet:
    """Clear the mask at the given (row, t) cells; rows are 0-based, t is 1-based."""
    mask = obs.mask.copy()
    for row, t in drop:
        if not (0 <= row < obs.n and 1 <= t <= obs.T):
            raise IndexError(f"cell (row={row}, t={t}) outside {obs.n} x {obs.T} data")
        mask[row, t - 1] = False
    return ObservationSet(obs.y, mask)


def random_psd(rng: np.random.Generator, k: int, rank: int | None = None, ridge: float = 0.0) -> np.ndarray:
    rank = k if rank is None else rank
    a = rng.standard_normal((k, rank)) / np.sqrt(max(rank, 1))
    return a @ a.T + ridge * np.eye(k)


def random_model(
    rng: np.random.Generator,
    m: int,
    n: int,
    T: int,
    time_varying: bool = True,
    degenerate: bool = False,
) -> ModelSpec:
    """Random well-conditioned test model.

    ``degenerate`` makes Q rank-deficient and Lambda zero, exercising the
    pseudo-inverse paths.
    """

    def draw(fn):
        return np.stack([fn() for _ in range(T)]) if time_varying else fn()

    B = draw(lambda: 0.8 * rng.standard_normal((m, m)) / np.sqrt(m))
    u = draw(lambda: 0.3 * rng.standard_normal(m))
    Z = draw(lambda: rng.standard_normal((n, m)))
    a = draw(lambda: 0.3 * rng.standard_normal(n))
    R = draw(lambda: random_psd(rng, n, ridge=0.2))
    if degenerate:
        Q = draw(lambda: random_psd(rng, m, rank=max(1, m - 1)))
        Lambda = np.zeros((m, m))
    else:
        Q = draw(lambda: random_psd(rng, m, ridge=0.1))
        Lambda = random_psd(rng, m)
    xi = rng.standard_normal(m)
    return ModelSpec(B=B, u=u, Q=Q, Z=Z, a=a, R=R, xi=xi, Lambda=Lambda, horizon=T)


def random_mask(rng: np.random.Generator, n: int, T: int, p_missing: float = 0.3) -> np.ndarray:
    return rng.random((n, T)) >= p_missing
