"""Adaptive Gauss-Kronrod quadrature for the finite, semi-infinite and
nested integrals used by the analytic engine.

The integrator is vectorized two ways:
 - integrands receive a whole array of nodes per call, and
 - an integrand may return a 2-d array ``(n_nodes, n_columns)`` in which
   case every column is integrated simultaneously under a shared
   subdivision (the error test is enforced per column).

The column mode is what keeps the triply-nested outage integrals cheap:
an outer quadrature hands its node batch to an inner quadrature as
columns instead of looping in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

# 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 abscissae and
# weights, positive half).
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])          # 15, ascending
_W_KRONROD = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
_W_GAUSS = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])
_GAUSS_IDX = np.arange(1, 15, 2)


class QuadratureError(RuntimeError):
    """Raised when the subdivision budget is exhausted before convergence.

    Carries the best available estimate so callers can decide whether to
    salvage it.
    """

    def __init__(self, message: str, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for one adaptive integration.

    Convergence requires, for every column, ``err <= max(abs_tol,
    rel_tol * |value|)``.  `max_subdivisions` bounds the number of interval
    bisections.  `transform_scale` sets the characteristic length of the
    rational map used for semi-infinite domains (see
    `integrate_semi_infinite`); it only affects efficiency, not the result.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 4000
    transform_scale: float = 1.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("QuadratureSpec tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("QuadratureSpec.max_subdivisions must be >= 1")
        if self.transform_scale <= 0:
            raise ValueError("QuadratureSpec.transform_scale must be positive")

    def tightened(self, factor: float = 0.1) -> "QuadratureSpec":
        """Spec for an inner (nested) integral, one order tighter by default."""
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)

    def scaled(self, transform_scale: float) -> "QuadratureSpec":
        return replace(self, transform_scale=transform_scale)


DEFAULT_SPEC = QuadratureSpec()


class QuadResult(NamedTuple):
    value: float
    error: float


class _Panel(NamedTuple):
    lo: float
    hi: float
    value: np.ndarray   # (k,)
    error: np.ndarray   # (k,)


def _evaluate_panel(f, lo: float, hi: float) -> tuple[_Panel, bool]:
    """One Gauss-Kronrod 15/7 panel on [lo, hi]; per-column value and error."""
    center, halfw = 0.5 * (lo + hi), 0.5 * (hi - lo)
    y = np.asarray(f(center + halfw * _NODES), dtype=float)
    was_1d = y.ndim == 1
    if was_1d:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] != 15:
        raise ValueError("integrand must map an (n,) node array to (n,) or (n, k) values")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"integrand returned a non-finite value on [{lo!r}, {hi!r}]")
    resk = halfw * (_W_KRONROD @ y)
    resg = halfw * (_W_GAUSS @ y[_GAUSS_IDX])
    err = np.abs(resk - resg)
    # QUADPACK-style scaled error: sharper than |K - G| once the panel
    # resolves the integrand, conservative before that.
    resasc = halfw * (_W_KRONROD @ np.abs(y - resk / (hi - lo)))
    nz = resasc > 0.0
    err[nz] = resasc[nz] * np.minimum(1.0, (200.0 * err[nz] / resasc[nz]) ** 1.5)
    return _Panel(lo, hi, resk, err), was_1d


def integrate_finite(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None):
    """Adaptive integral of `f` over the finite interval [a, b].

    `f` is called with an ndarray of nodes (strictly inside (a, b), so
    integrable endpoint singularities are fine) and returns values of shape
    ``(n,)`` or ``(n, k)`` for k simultaneous integrands.  Returns a
    `QuadResult` for the scalar case or an ``(values, errors)`` array pair
    for the column case; the error entries are the engine's bound on the
    absolute error.

    Raises `QuadratureError` (carrying the best estimate) if the
    subdivision budget runs out, and `ValueError` on malformed limits or a
    non-finite integrand value.
    """
    spec = spec or DEFAULT_SPEC
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate_finite requires finite limits")
    if a > b:
        raise ValueError(f"integrate_finite: need a <= b, got a={a!r} > b={b!r}")
    if a == b:
        return QuadResult(0.0, 0.0)

    first, scalar = _evaluate_panel(f, a, b)
    panels = [first]
    exhausted = False
    for _ in range(spec.max_subdivisions):
        total = sum(p.value for p in panels)
        total_err = sum(p.error for p in panels)
        if np.all(total_err <= np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))):
            return _pack(total, total_err, scalar)
        worst = max(range(len(panels)), key=lambda i: panels[i].error.max())
        lo, hi, _, _ = panels[worst]
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:          # interval at floating-point resolution
            exhausted = True
            break
        panels[worst] = _evaluate_panel(f, lo, mid)[0]
        panels.append(_evaluate_panel(f, mid, hi)[0])
    total = sum(p.value for p in panels)
    total_err = sum(p.error for p in panels)
    best = _pack(total, total_err, scalar)
    reason = "hit floating-point interval resolution" if exhausted else (
        f"exhausted the budget of {spec.max_subdivisions} subdivisions")
    raise QuadratureError(
        f"quadrature did not converge ({reason}; error estimate {np.max(total_err):.3e})",
        best[0], best[1],
    )


def integrate_semi_infinite(f: Callable, a: float, spec: QuadratureSpec | None = None):
    """Adaptive integral of `f` over [a, inf).

    Uses the rational change of variable ``x = a + s*t/(1-t)`` mapping
    [a, inf) onto t in [0, 1), with ``s = spec.transform_scale`` the
    characteristic scale; the Jacobian is ``s/(1-t)^2``.  `f` must be
    absolutely integrable on [a, inf).  Requirements and return conventions
    match `integrate_finite`.
    """
    spec = spec or DEFAULT_SPEC
    s = spec.transform_scale

    def transformed(t):
        x = a + s * t / (1.0 - t)
        jac = s / (1.0 - t) ** 2
        y = np.asarray(f(x), dtype=float)
        return y * jac if y.ndim == 1 else y * jac[:, None]

    return integrate_finite(transformed, 0.0, 1.0, spec)


def _pack(value, error, scalar: bool):
    if scalar:
        return QuadResult(float(value[0]), float(error[0]))
    return np.asarray(value), np.asarray(error)
