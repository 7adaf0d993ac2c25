"""Weight families W(x', x_N) with exact x_N-derivatives and Hardy ratios.

Every family is evaluated from closed forms.  Arrays of points have shape
``(..., N)`` with the last coordinate playing the role of x_N.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyGrid,
    ParameterOutOfRange,
    SingularPoint,
    UnsupportedDimension,
)

__all__ = [
    "Family",
    "Monotonicity",
    "WeightSpec",
    "ConditionReport",
    "make_weight",
    "eval_weight",
    "check_conditions",
    "make_grid",
]

XPRIME_CUTOFF = 1e-8


class Family(str, enum.Enum):
    POWER = "power"  # x_N^gamma / |x'|^beta
    SHIFTED_POWER = "shifted_power"  # (eps0 + x_N)^gamma
    SHIFTED_POWER_OVER_PRIME = "shifted_power_over_prime"  # (1 + x_N)^gamma / |x'|^beta
    LOG = "log"  # log(e + x_N)
    EXP = "exp"  # exp(gamma x_N)
    EXP_NEG = "exp_neg"  # exp(-gamma x_N)
    ARCTAN = "arctan"  # arctan(x_N)
    DECREASING_SHIFTED_POWER = "decreasing_shifted_power"  # (1 + x_N)^(gamma - p + 1)


class Monotonicity(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


_DECREASING = {Family.EXP_NEG, Family.DECREASING_SHIFTED_POWER}
_XPRIME_FAMILIES = {Family.POWER, Family.SHIFTED_POWER_OVER_PRIME}


@dataclass(frozen=True)
class WeightSpec:
    family: Family
    N: int
    monotonicity: Monotonicity
    gamma: float = 0.0
    beta: float = 0.0
    eps0: float = 1.0
    p: float | None = None  # only used by DECREASING_SHIFTED_POWER

    # --- geometry of the family -------------------------------------------------
    @property
    def depends_on_xprime(self) -> bool:
        return self.family in _XPRIME_FAMILIES and self.beta != 0.0

    @property
    def min_xn(self) -> float:
        """Lowest x_N at which W is defined and nonnegative."""
        f = self.family
        if f in (Family.POWER, Family.ARCTAN):
            return 0.0
        if f == Family.SHIFTED_POWER:
            return -self.eps0
        if f in (Family.SHIFTED_POWER_OVER_PRIME, Family.DECREASING_SHIFTED_POWER):
            return -1.0
        if f == Family.LOG:
            return 1.0 - np.e
        return -np.inf

    @property
    def boundary_exponent(self) -> float:
        """a such that W_xN ~ x_N^(-a) as x_N -> 0+; 0 when W_xN is bounded."""
        if self.family == Family.POWER and self.gamma < 1.0:
            return 1.0 - self.gamma
        return 0.0

    def describe(self) -> dict:
        out = {"weight": self.family.value}
        if self.family in (
            Family.POWER,
            Family.SHIFTED_POWER,
            Family.SHIFTED_POWER_OVER_PRIME,
            Family.EXP,
            Family.EXP_NEG,
            Family.DECREASING_SHIFTED_POWER,
        ):
            out["gamma"] = self.gamma
        if self.family in _XPRIME_FAMILIES:
            out["beta"] = self.beta
        if self.family == Family.SHIFTED_POWER:
            out["eps0"] = self.eps0
        if self.family == Family.DECREASING_SHIFTED_POWER:
            out["p"] = self.p
        return out

    def label(self) -> str:
        parts = [f"{k}={v:g}" for k, v in self.describe().items() if k != "weight"]
        return self.family.value + ("(" + ",".join(parts) + ")" if parts else "")

    # --- evaluation ---------------------------------------------------------------
    def evaluate(self, x, p: float):
        """Vectorized (W, W_xN, hardy_ratio) without validity checks.

        hardy_ratio is W^p / |W_xN|^(p-1).
        """
        x = np.asarray(x, dtype=float)
        t = x[..., -1]
        g, b, f = self.gamma, self.beta, self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if f in _XPRIME_FAMILIES:
                r = np.linalg.norm(x[..., :-1], axis=-1)
                rb = r ** (-b) if b != 0.0 else np.ones_like(t)
                s = t if f == Family.POWER else 1.0 + t
                W = s**g * rb
                Wx = g * s ** (g - 1.0) * rb
                ratio = s ** (g + p - 1.0) * rb / g ** (p - 1.0)
            elif f == Family.SHIFTED_POWER:
                s = self.eps0 + t
                W = s**g
                Wx = g * s ** (g - 1.0)
                ratio = s ** (g + p - 1.0) / g ** (p - 1.0)
            elif f == Family.LOG:
                s = np.e + t
                W = np.log(s)
                Wx = 1.0 / s
                ratio = s ** (p - 1.0) * W**p
            elif f == Family.EXP:
                W = np.exp(g * t)
                Wx = g * W
                ratio = W / g ** (p - 1.0)
            elif f == Family.EXP_NEG:
                W = np.exp(-g * t)
                Wx = -g * W
                ratio = W / g ** (p - 1.0)
            elif f == Family.ARCTAN:
                W = np.arctan(t)
                q = 1.0 + t * t
                Wx = 1.0 / q
                ratio = W**p * q ** (p - 1.0)
            elif f == Family.DECREASING_SHIFTED_POWER:
                k = self.p - 1.0 - g
                s = 1.0 + t
                W = s ** (-k)
                Wx = -k * s ** (-k - 1.0)
                # W^p / (-W_xN)^(p-1) in closed form, valid for any evaluation p
                ratio = s ** (g + p - self.p) / k ** (p - 1.0)
            else:  # pragma: no cover
                raise AssertionError(f)
        return W, Wx, ratio

    def gradient_norm(self, x):
        """|grad W| including the x'-derivatives."""
        x = np.asarray(x, dtype=float)
        W, Wx, _ = self.evaluate(x, 2.0)
        if not self.depends_on_xprime:
            return np.abs(Wx)
        r = np.linalg.norm(x[..., :-1], axis=-1)
        gxp = np.abs(self.beta) * np.abs(W) / r
        return np.hypot(Wx, gxp)


def make_weight(family, N: int, **params) -> WeightSpec:
    """Build a validated WeightSpec.

    ``family`` is a :class:`Family` or its string identifier.  Recognised
    keyword parameters are ``gamma``, ``beta``, ``eps0`` and ``p``.
    """
    try:
        family = Family(family)
    except ValueError:
        raise ParameterOutOfRange(f"unknown weight family {family!r}") from None
    if int(N) != N or N < 2:
        raise UnsupportedDimension(f"N must be an integer >= 2, got {N}")
    N = int(N)
    unknown = set(params) - {"gamma", "beta", "eps0", "p"}
    if unknown:
        raise ParameterOutOfRange(f"unknown weight parameters {sorted(unknown)}")
    gamma = float(params.get("gamma", 1.0))
    beta = float(params.get("beta", 0.0))
    eps0 = float(params.get("eps0", 1.0))
    p = params.get("p")

    if family in (Family.POWER, Family.SHIFTED_POWER_OVER_PRIME):
        if not gamma > 0:
            raise ParameterOutOfRange(f"gamma > 0 required, got gamma={gamma}")
        if not beta < N - 1:
            raise ParameterOutOfRange(f"beta < N-1 = {N - 1} required, got beta={beta}")
    elif family == Family.SHIFTED_POWER:
        if not gamma > 0:
            raise ParameterOutOfRange(f"gamma > 0 required, got gamma={gamma}")
        if not eps0 > 0:
            raise ParameterOutOfRange(f"eps0 > 0 required, got eps0={eps0}")
    elif family in (Family.EXP, Family.EXP_NEG):
        if not gamma > 0:
            raise ParameterOutOfRange(f"gamma > 0 required, got gamma={gamma}")
    elif family == Family.DECREASING_SHIFTED_POWER:
        if p is None or not float(p) > 1:
            raise ParameterOutOfRange(f"p > 1 required, got p={p}")
        p = float(p)
        if not gamma < p - 1:
            raise ParameterOutOfRange(f"gamma < p-1 = {p - 1} required, got gamma={gamma}")

    if family not in _XPRIME_FAMILIES:
        beta = 0.0
    if family not in (Family.DECREASING_SHIFTED_POWER,):
        p = None
    if family in (Family.LOG, Family.ARCTAN):
        gamma = 0.0
    mono = Monotonicity.DECREASING if family in _DECREASING else Monotonicity.INCREASING
    spec = WeightSpec(family, N, mono, gamma=gamma, beta=beta, eps0=eps0, p=p)
    _verify_monotonicity(spec)
    return spec


def _verify_monotonicity(spec: WeightSpec):
    lo = max(spec.min_xn, -5.0) + 1e-3
    xn = np.linspace(lo, 10.0, 64)
    pts = np.concatenate([np.full((xn.size, spec.N - 1), 0.5), xn[:, None]], axis=1)
    _, Wx, _ = spec.evaluate(pts, 2.0)
    expected = 1.0 if spec.monotonicity == Monotonicity.INCREASING else -1.0
    if not np.all(np.sign(Wx) == expected):  # pragma: no cover - closed forms
        raise ParameterOutOfRange(f"{spec.label()}: W_xN sign does not match {spec.monotonicity.value}")


def _check_points(spec: WeightSpec, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] != spec.N:
        raise UnsupportedDimension(f"point has dimension {x.shape[-1]}, weight expects {spec.N}")
    t = x[..., -1]
    if spec.depends_on_xprime and spec.beta > 0:
        r = np.linalg.norm(x[..., :-1], axis=-1)
        if np.any(r < XPRIME_CUTOFF):
            raise SingularPoint(f"|x'| < {XPRIME_CUTOFF:g} with beta={spec.beta} > 0")
    if spec.family == Family.POWER and spec.gamma < 1 and np.any(t <= 0):
        raise SingularPoint("x_N = 0 is singular for the power weight with gamma < 1")
    if np.any(t < spec.min_xn):
        raise SingularPoint(f"x_N below {spec.min_xn:g}, outside the domain of {spec.label()}")


def eval_weight(spec: WeightSpec, x, p: float):
    """Checked evaluation of (W, W_xN, hardy_ratio) at one point or an array."""
    if not p > 1:
        raise ParameterOutOfRange(f"p > 1 required, got {p}")
    arr = np.asarray(x, dtype=float)
    _check_points(spec, arr)
    W, Wx, ratio = spec.evaluate(arr, p)
    if arr.ndim == 1:
        return float(W), float(Wx), float(ratio)
    return W, Wx, ratio


@dataclass(frozen=True)
class ConditionReport:
    w0_ok: bool
    w1_sign: str  # "positive" | "negative" | "mixed"
    w2_constant: float | None
    chuva_constant: float | None
    grid_descriptor: dict = field(default_factory=dict)


def check_conditions(spec: WeightSpec, p: float, grid) -> ConditionReport:
    """Grid-level witnesses for the structural conditions on W.

    w2_constant is the grid infimum of the Hardy ratio (when strictly
    positive) and chuva_constant the grid supremum of |grad W| / |W_xN|.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("grid has no points")
    grid = np.atleast_2d(grid)
    _check_points(spec, grid)
    W, Wx, ratio = spec.evaluate(grid, p)

    # local integrability: finite values plus integrable exponents of the family
    w0 = bool(np.all(np.isfinite(W)) and np.all(np.isfinite(Wx)) and np.all(W >= 0))
    if spec.family in _XPRIME_FAMILIES:
        w0 = w0 and spec.beta < spec.N - 1 and spec.gamma > 0

    if np.all(Wx > 0):
        sign = "positive"
    elif np.all(Wx < 0):
        sign = "negative"
    else:
        sign = "mixed"

    rmin = float(np.min(ratio))
    w2 = rmin if (np.isfinite(rmin) and rmin > 0) else None

    with np.errstate(divide="ignore", invalid="ignore"):
        q = spec.gradient_norm(grid) / np.abs(Wx)
    qmax = float(np.max(q))
    chuva = qmax if np.isfinite(qmax) else None

    desc = {
        "points": int(grid.shape[0]),
        "lower": grid.min(axis=0).tolist(),
        "upper": grid.max(axis=0).tolist(),
        "p": p,
    }
    return ConditionReport(w0, sign, w2, chuva, desc)


def make_grid(N: int, xn_values, xprime_values=None):
    """Tensor grid of points; x' defaults to the single point (0.5, ..., 0.5)."""
    xn_values = np.asarray(xn_values, dtype=float).ravel()
    if xprime_values is None:
        xprime_values = [0.5]
    axes = [np.asarray(xprime_values, dtype=float).ravel()] * (N - 1) + [xn_values]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)
