"""Symmetric eigenvalue helpers shared by the filter, smoother and residual code."""

from __future__ import annotations

import numpy as np

#: relative eigenvalue cutoff for pseudo-inverses
PINV_RTOL = 1e-12
#: negative eigenvalues above ``-NEG_RTOL * max`` are treated as round-off
NEG_RTOL = 1e-9


class NumericalError(ValueError):
    """Raised when a covariance computation breaks down at a given time step."""

    def __init__(self, message: str, t: int | None = None, operation: str | None = None):
        self.t = t
        self.operation = operation
        prefix = ""
        if operation is not None:
            prefix += f"{operation}: "
        if t is not None:
            prefix += f"t={t}: "
        super().__init__(prefix + message)


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    w, v = np.linalg.eigh(sym(a))
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    return w, v, scale


def pinv_psd(a: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues below ``rtol * max``."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.copy()
    w, v, scale = _eigh(a)
    if scale == 0.0:
        return np.zeros_like(a)
    keep = w > rtol * scale
    vk = v[:, keep]
    return sym((vk / w[keep]) @ vk.T)


def pinv_sqrt_psd(
    a: np.ndarray,
    rtol: float = PINV_RTOL,
    neg_rtol: float = NEG_RTOL,
    t: int | None = None,
    floor: float = 0.0,
) -> np.ndarray:
    """Symmetric pseudo-inverse square root ``A^{+1/2}``.

    Eigenvalues in ``[-neg_rtol*max, 0)`` are clipped to zero; anything more
    negative means the covariance was not PSD and raises :class:`NumericalError`.
    Structural zero directions map to zero.  ``floor`` is an absolute
    eigenvalue magnitude treated as zero, for matrices that are pure round-off.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return a.copy()
    w, v, scale = _eigh(a)
    if scale <= floor or scale == 0.0:
        return np.zeros_like(a)
    if w.min() < -max(neg_rtol * scale, floor):
        raise NumericalError(
            f"covariance has eigenvalue {w.min():.3e} (max {scale:.3e})",
            t=t,
            operation="standardize",
        )
    keep = w > max(rtol * scale, floor)
    vk = v[:, keep]
    return sym((vk / np.sqrt(w[keep])) @ vk.T)


def roundoff_floor(sigmas: np.ndarray) -> float:
    """Absolute zero level for a stack of covariances sharing one scale."""
    if sigmas.size == 0:
        return 0.0
    d = np.abs(np.diagonal(sigmas, axis1=-2, axis2=-1))
    return 1e-13 * float(d.max())


def psd_factor(a: np.ndarray) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == a`` for a PSD matrix; zero covariance gives ``L = 0``."""
    a = np.asarray(a, dtype=float)
    w, v, _ = _eigh(a)
    return v * np.sqrt(np.clip(w, 0.0, None))


def modified_inverse(
    f: np.ndarray, observed: np.ndarray, t: int | None = None, rtol: float = 1e-14
) -> np.ndarray:
    """Inverse of ``F`` restricted to the observed rows, embedded back with zeros.

    Equivalent to putting 1 on the zeroed diagonal of the missing rows,
    inverting, then putting the 0 back.
    """
    n = f.shape[0]
    out = np.zeros((n, n))
    idx = np.flatnonzero(observed)
    if idx.size == 0:
        return out
    foo = sym(f[np.ix_(idx, idx)])
    w = np.linalg.eigvalsh(foo)
    if w.max() <= 0.0 or w.min() <= rtol * w.max():
        raise NumericalError(
            "innovation covariance is singular on the observed rows",
            t=t,
            operation="filter",
        )
    out[np.ix_(idx, idx)] = sym(np.linalg.inv(foo))
    return out


def is_psd(a: np.ndarray, tol: float = NEG_RTOL) -> bool:
    w = np.linalg.eigvalsh(sym(np.asarray(a, dtype=float)))
    return bool(w.min() >= -tol * max(1.0, float(np.max(np.abs(w)))))
