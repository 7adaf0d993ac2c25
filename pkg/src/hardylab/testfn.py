"""Compactly supported test functions with closed-form gradients.

All evaluators are vectorized over points of shape ``(..., N)``; values
have shape ``(...)`` and gradients ``(..., N)``.  Outside the support
both vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import BadParameters

__all__ = [
    "Box",
    "TestFunction",
    "RadialBump",
    "ProductBump",
    "Plateau",
    "SeparableTrial",
    "Scaled",
    "Dilated",
    "make_testfn",
    "eval_testfn",
    "bump_suite",
    "smoothstep",
]


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.asarray(self.lo)) & (x <= np.asarray(self.hi)), axis=-1)

    def volume(self):
        return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))


def _box(lo, hi):
    return Box(tuple(float(v) for v in lo), tuple(float(v) for v in hi))


def _bump_profile(s):
    """exp(1 - 1/(1-s)) for s in [0, 1), 0 elsewhere, together with d/ds."""
    inside = s < 1.0
    q = np.where(inside, 1.0 - s, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        val = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        dval = np.where(inside, -val / (q * q), 0.0)
    return val, dval


def smoothstep(t):
    """C^3 septic step from 0 to 1 on [0, 1] and its derivative."""
    t = np.clip(t, 0.0, 1.0)
    t2 = t * t
    s = t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t)
    ds = 140.0 * t2 * t * (1.0 - t) ** 3
    return s, ds


class TestFunction:
    """Base class: subclasses provide ``_eval(x) -> (value, grad)`` and ``support_box``."""

    __test__ = False  # keep pytest from collecting this class
    N: int
    support_box: Box

    def _eval(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self._eval(x)

    def value(self, x):
        return self.evaluate(x)[0]

    def grad(self, x):
        return self.evaluate(x)[1]

    def describe(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def scaled(self, lam: float) -> "TestFunction":
        return Scaled(self, float(lam))

    def dilated(self, R: float) -> "TestFunction":
        return Dilated(self, float(R))


@dataclass(frozen=True, eq=False)
class RadialBump(TestFunction):
    center: tuple
    R: float

    @property
    def N(self):
        return len(self.center)

    @property
    def support_box(self):
        c = np.asarray(self.center)
        return _box(c - self.R, c + self.R)

    def _eval(self, x):
        d = x - np.asarray(self.center)
        s = np.sum(d * d, axis=-1) / self.R**2
        val, dval = _bump_profile(s)
        grad = (2.0 * dval / self.R**2)[..., None] * d
        return val, grad

    def describe(self):
        return {"family": "bump", "center": list(self.center), "R": self.R}


@dataclass(frozen=True, eq=False)
class ProductBump(TestFunction):
    center: tuple
    radii: tuple

    @property
    def N(self):
        return len(self.center)

    @property
    def support_box(self):
        c, r = np.asarray(self.center), np.asarray(self.radii)
        return _box(c - r, c + r)

    def _eval(self, x):
        r = np.asarray(self.radii)
        t = (x - np.asarray(self.center)) / r
        f, df = _bump_profile(t * t)
        df = 2.0 * t * df / r  # derivative of each factor in its own variable
        val = np.prod(f, axis=-1)
        grad = np.empty_like(x)
        for i in range(x.shape[-1]):
            others = np.prod(np.delete(f, i, axis=-1), axis=-1)
            grad[..., i] = df[..., i] * others
        return val, grad

    def describe(self):
        return {"family": "product_bump", "center": list(self.center), "radii": list(self.radii)}


@dataclass(frozen=True, eq=False)
class Plateau(TestFunction):
    r_inner: float
    r_outer: float
    center: tuple

    @property
    def N(self):
        return len(self.center)

    @property
    def support_box(self):
        c = np.asarray(self.center)
        return _box(c - self.r_outer, c + self.r_outer)

    def _eval(self, x):
        d = x - np.asarray(self.center)
        r = np.sqrt(np.sum(d * d, axis=-1))
        width = self.r_outer - self.r_inner
        s, ds = smoothstep((r - self.r_inner) / width)
        val = 1.0 - s
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[..., None] > 0, d / r[..., None], 0.0)
        grad = (-ds / width)[..., None] * unit
        return val, grad

    def describe(self):
        return {"family": "plateau", "r_inner": self.r_inner, "r_outer": self.r_outer, "center": list(self.center)}


@dataclass(frozen=True, eq=False)
class SeparableTrial(TestFunction):
    """u(x) = g(x_N - offset) * chi(x'), g(tau) = tau^a S(sigma).

    S is a cubic B-spline with the given knots and coefficients
    (``len(coeffs) == len(knots) - 4``) that vanishes outside the knot
    span.  With ``log_knots`` the spline variable is sigma = log(tau), so
    the profile lives on [exp(k_0), exp(k_m)] in tau; otherwise sigma = tau
    and the envelope exponent must be 0.  chi is a radial bump of radius
    ``cutoff`` in x' (absent when N == 1).
    """

    coeffs: tuple
    knots: tuple
    N: int
    cutoff: float = 1.0
    log_knots: bool = False
    envelope: float = 0.0
    offset: float = 0.0
    xprime_center: tuple | None = None
    _spline: BSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # pad with three zero-weight basis functions on each side so that
        # scipy accepts any coefficient count; the padding does not change S
        k = np.asarray(self.knots, dtype=float)
        h0, h1 = k[1] - k[0], k[-1] - k[-2]
        k = np.r_[k[0] - h0 * np.arange(3, 0, -1), k, k[-1] + h1 * np.arange(1, 4)]
        c = np.r_[np.zeros(3), np.asarray(self.coeffs, dtype=float), np.zeros(3)]
        object.__setattr__(self, "_spline", BSpline(k, c, 3, extrapolate=False))
        object.__setattr__(self, "_dspline", self._spline.derivative())

    @property
    def tau_range(self):
        k0, k1 = self.knots[0], self.knots[-1]
        return (np.exp(k0), np.exp(k1)) if self.log_knots else (k0, k1)

    @property
    def _xc(self):
        return np.zeros(self.N - 1) if self.xprime_center is None else np.asarray(self.xprime_center)

    @property
    def support_box(self):
        t0, t1 = self.tau_range
        xc = self._xc
        return _box(np.r_[xc - self.cutoff, self.offset + t0], np.r_[xc + self.cutoff, self.offset + t1])

    def profile(self, tau):
        """(g, g') as functions of tau."""
        tau = np.asarray(tau, dtype=float)
        t0, t1 = self.tau_range
        inside = (tau > t0) & (tau < t1)
        ts = np.where(inside, tau, 0.5 * (t0 + t1))
        sig = np.log(ts) if self.log_knots else ts
        S = np.nan_to_num(self._spline(sig))
        dS = np.nan_to_num(self._dspline(sig))
        if self.log_knots:
            env = ts**self.envelope
            g = env * S
            dg = env / ts * (self.envelope * S + dS)
        else:
            g, dg = S, dS
        return np.where(inside, g, 0.0), np.where(inside, dg, 0.0)

    def _eval(self, x):
        g, dg = self.profile(x[..., -1] - self.offset)
        if self.N == 1:
            return g, dg[..., None]
        d = x[..., :-1] - self._xc
        chi, dchi = _bump_profile(np.sum(d * d, axis=-1) / self.cutoff**2)
        grad = np.empty_like(x)
        grad[..., :-1] = (g * 2.0 * dchi / self.cutoff**2)[..., None] * d
        grad[..., -1] = dg * chi
        return g * chi, grad

    def with_coeffs(self, coeffs, envelope=None):
        return SeparableTrial(
            tuple(float(c) for c in coeffs),
            self.knots,
            self.N,
            self.cutoff,
            self.log_knots,
            self.envelope if envelope is None else float(envelope),
            self.offset,
            self.xprime_center,
        )

    def describe(self):
        return {
            "family": "trial",
            "coeffs": list(self.coeffs),
            "knots": list(self.knots),
            "N": self.N,
            "cutoff": self.cutoff,
            "log_knots": self.log_knots,
            "envelope": self.envelope,
            "offset": self.offset,
        }


@dataclass(frozen=True, eq=False)
class Scaled(TestFunction):
    base: TestFunction
    lam: float

    @property
    def N(self):
        return self.base.N

    @property
    def support_box(self):
        return self.base.support_box

    def _eval(self, x):
        v, g = self.base._eval(x)
        return self.lam * v, self.lam * g

    def describe(self):
        return {"family": "scaled", "lam": self.lam, "base": self.base.describe()}


@dataclass(frozen=True, eq=False)
class Dilated(TestFunction):
    """x -> base(x / R)."""

    base: TestFunction
    R: float

    @property
    def N(self):
        return self.base.N

    @property
    def support_box(self):
        b = self.base.support_box
        lo, hi = np.asarray(b.lo) * self.R, np.asarray(b.hi) * self.R
        return _box(np.minimum(lo, hi), np.maximum(lo, hi))

    def _eval(self, x):
        v, g = self.base._eval(x / self.R)
        return v, g / self.R

    def describe(self):
        return {"family": "dilated", "R": self.R, "base": self.base.describe()}


def _vec(v, name):
    try:
        arr = np.atleast_1d(np.asarray(v, dtype=float))
    except (TypeError, ValueError):
        raise BadParameters(f"{name} must be numeric") from None
    if not np.all(np.isfinite(arr)):
        raise BadParameters(f"{name} must be finite")
    return tuple(float(a) for a in arr)


def make_testfn(desc: dict) -> TestFunction:
    """Build a test function from a descriptor such as
    ``{"family": "bump", "center": [0, 1], "R": 0.9}``.

    Families: ``bump``, ``product_bump``, ``plateau`` and ``trial``.
    """
    desc = dict(desc)
    fam = desc.pop("family", None)
    try:
        if fam == "bump":
            R = float(desc["R"])
            if not R > 0:
                raise BadParameters(f"R > 0 required, got {R}")
            return RadialBump(_vec(desc["center"], "center"), R)
        if fam == "product_bump":
            c, r = _vec(desc["center"], "center"), _vec(desc["radii"], "radii")
            if len(r) != len(c) or min(r) <= 0:
                raise BadParameters("radii must be positive, one per axis")
            return ProductBump(c, r)
        if fam == "plateau":
            ri, ro = float(desc["r_inner"]), float(desc["r_outer"])
            if not 0 <= ri < ro:
                raise BadParameters(f"need 0 <= r_inner < r_outer, got {ri}, {ro}")
            return Plateau(ri, ro, _vec(desc["center"], "center"))
        if fam == "trial":
            knots = _vec(desc["knots"], "knots")
            coeffs = _vec(desc["coeffs"], "coeffs")
            if np.any(np.diff(knots) <= 0):
                raise BadParameters("knots must be strictly increasing")
            if len(coeffs) != len(knots) - 4 or len(coeffs) < 1:
                raise BadParameters(f"need len(coeffs) == len(knots) - 4, got {len(coeffs)} and {len(knots)}")
            log_knots = bool(desc.get("log_knots", False))
            envelope = float(desc.get("envelope", 0.0))
            if envelope and not log_knots:
                raise BadParameters("an envelope exponent needs log_knots")
            cutoff = float(desc.get("cutoff", 1.0))
            if not cutoff > 0:
                raise BadParameters("cutoff > 0 required")
            xc = desc.get("xprime_center")
            return SeparableTrial(
                coeffs,
                knots,
                int(desc["N"]),
                cutoff,
                log_knots,
                envelope,
                float(desc.get("offset", 0.0)),
                None if xc is None else _vec(xc, "xprime_center"),
            )
    except KeyError as e:
        raise BadParameters(f"missing parameter {e.args[0]!r} for {fam}") from None
    raise BadParameters(f"unknown test-function family {fam!r}")


def eval_testfn(u: TestFunction, x):
    """(value, gradient) at a point or an array of points."""
    v, g = u.evaluate(x)
    if np.ndim(v) == 0:
        return float(v), np.asarray(g)
    return v, g


def bump_suite(N, count, seed, R_range=(0.5, 1.5), xprime_range=(-1.0, 1.0), xn_range=(-0.6, 1.2), xn_base=0.0):
    """Seeded list of radial bumps.

    The x_N coordinate of each centre is ``xn_base + f * R`` with f drawn
    from ``xn_range``, so negative fractions give bumps cut by the boundary.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        R = rng.uniform(*R_range)
        cp = rng.uniform(*xprime_range, size=N - 1)
        cn = xn_base + rng.uniform(*xn_range) * R
        out.append(RadialBump(tuple(np.r_[cp, cn].tolist()), float(R)))
    return out
