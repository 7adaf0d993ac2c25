"""Sharpness probe for the x_N^gamma Hardy inequality on the half-space.

For gamma <= p - 1 the left side of the singular inequality,
integral of |u|^p x_N^(gamma - p), is infinite for any u that does not
vanish on the boundary while the right side stays finite.  The scan
measures this directly on {x_N > eps} for a shrinking sequence of eps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadParameters, FitAmbiguous, ParameterOutOfRange
from .geometry import make_domain
from .quad import SingularHandling, grading_for_exponent, integrate_interior, integrate_truncated
from .testfn import Plateau, TestFunction

__all__ = [
    "Regime",
    "Classification",
    "DivergenceReport",
    "classify_singular",
    "divergence_scan",
    "default_eps",
    "default_plateau",
]

SLOPE_BAND = 0.05
RESIDUAL_MAX = 0.05
CAUCHY_TOL = 1e-6
MAX_HALVINGS = 200
SCAN_TOL = 1e-8


class Regime(str, enum.Enum):
    INEQUALITY_HOLDS = "inequality_holds"
    FAILS_BY_DIVERGENCE = "fails_by_divergence"


class Classification(str, enum.Enum):
    CONVERGES_TO = "converges_to"
    POWER_DIVERGENCE = "power_divergence"
    LOG_DIVERGENCE = "log_divergence"


def classify_singular(gamma: float, p: float) -> Regime:
    """The inequality with weight x_N^gamma holds exactly when gamma > p - 1."""
    if not p > 1:
        raise ParameterOutOfRange(f"p > 1 required, got {p}")
    return Regime.INEQUALITY_HOLDS if gamma > p - 1 else Regime.FAILS_BY_DIVERGENCE


@dataclass
class DivergenceReport:
    gamma: float
    p: float
    eps_values: list
    integrals: list
    increments: list
    classification: Classification
    fitted_exponent: float
    fit_residual: float
    limit: float | None = None
    predicted_exponent: float | None = None
    rhs_value: float | None = None
    rhs_finite: bool | None = None
    regime: Regime | None = None
    agrees: bool | None = None
    u: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def label(self) -> str:
        if self.classification == Classification.POWER_DIVERGENCE:
            return f"PowerDivergence({self.fitted_exponent:.4g})"
        if self.classification == Classification.CONVERGES_TO:
            return f"ConvergesTo({self.limit:.6g})"
        return "LogDivergence"

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("classification", "regime"):
            if d[k] is not None:
                d[k] = d[k].value
        d["label"] = self.label()
        return d


def default_eps(k_min: int = 4, k_max: int = 14) -> np.ndarray:
    return 2.0 ** -np.arange(k_min, k_max + 1, dtype=float)


def default_plateau(N: int = 2) -> Plateau:
    """Plateau equal to 1 on the unit ball, centred on the boundary."""
    return Plateau(1.0, 2.0, tuple([0.0] * N))


def _loglog_fit(eps, incr):
    x = np.log(1.0 / np.asarray(eps))
    y = np.log(np.asarray(incr))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res * res)))


def _check_inputs(u, eps):
    if eps.ndim != 1 or eps.size < 5:
        raise ParameterOutOfRange("eps_seq needs at least 5 values")
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ParameterOutOfRange("eps_seq must be positive and strictly decreasing")
    if isinstance(u, Plateau) and abs(u.center[-1]) >= u.r_inner:
        raise BadParameters("the plateau must equal 1 on a boundary patch (|center_N| < r_inner)")


def divergence_scan(
    gamma: float,
    p: float,
    u: TestFunction | None = None,
    eps_seq=None,
    *,
    tol: float = SCAN_TOL,
    check_rhs: bool = True,
) -> DivergenceReport:
    """Track I(eps) = integral over {x_N > eps} of |u|^p x_N^(gamma - p).

    The fit uses the slab increments I(eps_{k+1}) - I(eps_k): for a
    plateau they scale like eps_k^-(p - gamma - 1), so the log-log slope
    is p - gamma - 1 without the offset that a fit of I itself would
    carry.  A slope within +-0.05 of zero is logarithmic growth.  A
    negative slope is followed by further halvings of eps until the
    increments fall below 1e-6, and the last partial integral is reported
    as the limit.

    Raises
    ------
    FitAmbiguous
        When no classification meets its threshold; the partial report is
        attached as ``.report``.
    """
    if not p > 1:
        raise ParameterOutOfRange(f"p > 1 required, got {p}")
    u = default_plateau() if u is None else u
    eps = default_eps() if eps_seq is None else np.asarray(eps_seq, dtype=float)
    _check_inputs(u, eps)
    N = u.N
    dom = make_domain("zero", N)
    b = u.support_box
    lo = np.asarray(b.lo, float)
    hi = np.asarray(b.hi, float)
    lo[-1] = max(lo[-1], 0.0)
    box = (lo, hi)

    def f(x):
        return np.abs(u.value(x)) ** p * x[:, -1] ** (gamma - p)

    def slab(a, c=None):
        return integrate_truncated(f, dom, box, a, c, tol=tol, abs_tol=1e-15)

    eps = list(eps)
    base = slab(eps[0])
    incr = [slab(eps[k + 1], eps[k]) for k in range(len(eps) - 1)]
    if min(incr) <= 0:
        raise BadParameters("u vanishes near the boundary; nothing to measure")
    slope, resid = _loglog_fit(eps[1:], incr)

    limit = None
    notes = []
    if resid < RESIDUAL_MAX and slope > SLOPE_BAND:
        cls = Classification.POWER_DIVERGENCE
    elif resid < RESIDUAL_MAX and abs(slope) <= SLOPE_BAND:
        cls = Classification.LOG_DIVERGENCE
    elif slope < -SLOPE_BAND:
        ratio = eps[-1] / eps[-2]
        n = 0
        while incr[-1] >= CAUCHY_TOL and n < MAX_HALVINGS:
            eps.append(eps[-1] * ratio)
            incr.append(slab(eps[-1], eps[-2]))
            n += 1
        cls = Classification.CONVERGES_TO
        tail = np.asarray(incr[-5:])
        if incr[-1] >= CAUCHY_TOL or np.any(np.diff(tail) > 0):
            cls = None
        else:
            limit = float(base + sum(incr))
            if n:
                notes.append(f"eps extended by {n} further steps to reach Cauchy differences < {CAUCHY_TOL:g}")
    else:
        cls = None

    integrals = list(base + np.concatenate([[0.0], np.cumsum(incr)]))
    rep = DivergenceReport(
        gamma=float(gamma),
        p=float(p),
        eps_values=[float(e) for e in eps],
        integrals=[float(v) for v in integrals],
        increments=[float(v) for v in incr],
        classification=cls,
        fitted_exponent=slope,
        fit_residual=resid,
        limit=limit,
        predicted_exponent=(p - gamma - 1.0) if gamma < p - 1 else None,
        regime=classify_singular(gamma, p),
        u=u.describe(),
        notes=notes,
    )
    if check_rhs:
        rep.rhs_value = _rhs(u, gamma, p, dom, box)
        rep.rhs_finite = bool(math.isfinite(rep.rhs_value))
    if cls is None:
        raise FitAmbiguous(f"slope {slope:.4g} with residual {resid:.3g} fits no regime", rep)
    diverges = cls != Classification.CONVERGES_TO
    rep.agrees = diverges == (rep.regime == Regime.FAILS_BY_DIVERGENCE)
    return rep


def _rhs(u, gamma, p, dom, box):
    """Integral of x_N^gamma |grad u|^p over the half-space."""
    hint, k = SingularHandling.NONE, None
    if gamma < 0:
        hint, k = SingularHandling.GRADED, grading_for_exponent(-gamma)

    def f(x):
        g = u.grad(x)
        return x[:, -1] ** gamma * np.sum(g * g, axis=-1) ** (0.5 * p)

    res = integrate_interior(f, dom, box, 1e-8, hint, grading=k)
    return float(res.value)
