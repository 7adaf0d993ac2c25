"""Epigraph domains {x_N > psi(x')} and unions of a subgraph with an epigraph."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import GraphsCross, NotDifferentiable, ParameterOutOfRange, UnsupportedDimension

__all__ = [
    "Psi",
    "Direction",
    "GraphDomain",
    "TwoGraphDomain",
    "make_domain",
    "make_two_graph",
    "transform",
    "surface_factor",
]

GAP_POINTS = 10_000


class Psi(str, enum.Enum):
    ZERO = "zero"  # shift
    SINE = "sine"  # shift + a sin(k x'_1)
    PARABOLOID = "paraboloid"  # shift + a |x'|^2
    CONE = "cone"  # shift + a |x'_1|


class Direction(str, enum.Enum):
    FLATTEN = "flatten"
    UNFLATTEN = "unflatten"


@dataclass(frozen=True)
class GraphDomain:
    psi_kind: Psi
    N: int
    a: float = 0.0
    k: float = 1.0
    shift: float = 0.0

    def psi(self, xp):
        xp = np.asarray(xp, dtype=float)
        x1 = xp[..., 0]
        if self.psi_kind == Psi.ZERO:
            val = np.zeros_like(x1)
        elif self.psi_kind == Psi.SINE:
            val = self.a * np.sin(self.k * x1)
        elif self.psi_kind == Psi.PARABOLOID:
            val = self.a * np.sum(xp * xp, axis=-1)
        else:
            val = self.a * np.abs(x1)
        return val + self.shift

    def grad_psi(self, xp):
        """Gradient of psi; at the cone kink the one-sided value a is returned."""
        xp = np.asarray(xp, dtype=float)
        g = np.zeros_like(xp)
        if self.psi_kind == Psi.SINE:
            g[..., 0] = self.a * self.k * np.cos(self.k * xp[..., 0])
        elif self.psi_kind == Psi.PARABOLOID:
            g = 2.0 * self.a * xp
        elif self.psi_kind == Psi.CONE:
            g[..., 0] = self.a * np.where(xp[..., 0] < 0, -1.0, 1.0)
        return g

    @property
    def lipschitz_bound(self) -> float | None:
        if self.psi_kind == Psi.ZERO:
            return 0.0
        if self.psi_kind == Psi.SINE:
            return abs(self.a * self.k)
        if self.psi_kind == Psi.CONE:
            return abs(self.a)
        return 0.0 if self.a == 0 else None

    @property
    def is_flat(self) -> bool:
        return self.psi_kind == Psi.ZERO or self.a == 0

    def psi_range(self, lo, hi):
        """(min, max) of psi over the x'-box [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.is_flat:
            return self.shift, self.shift
        if self.psi_kind == Psi.SINE:
            x1 = np.linspace(lo[0], hi[0], 2001)
            v = self.a * np.sin(self.k * x1)
            # include exact extrema of sin inside the interval
            n0 = np.ceil((self.k * lo[0] - np.pi / 2) / np.pi)
            n1 = np.floor((self.k * hi[0] - np.pi / 2) / np.pi)
            ext = (np.pi / 2 + np.pi * np.arange(n0, n1 + 1)) / self.k
            v = np.concatenate([v, self.a * np.sin(self.k * ext)])
            return float(v.min()) + self.shift, float(v.max()) + self.shift
        if self.psi_kind == Psi.PARABOLOID:
            near = np.clip(0.0, lo, hi)
            far = np.where(np.abs(lo) > np.abs(hi), lo, hi)
            v = (self.a * np.sum(near**2), self.a * np.sum(far**2))
        else:
            near = float(np.clip(0.0, lo[0], hi[0]))
            far = max(abs(lo[0]), abs(hi[0]))
            v = (self.a * abs(near), self.a * far)
        return min(v) + self.shift, max(v) + self.shift

    def kinks(self):
        """x'_1 coordinates where psi fails to be differentiable."""
        return [0.0] if (self.psi_kind == Psi.CONE and self.a != 0) else []

    def reflected(self) -> "GraphDomain":
        """Epigraph of -psi: the image of the subgraph {x_N < psi} under x_N -> -x_N."""
        return GraphDomain(self.psi_kind, self.N, -self.a, self.k, -self.shift)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., -1] > self.psi(x[..., :-1])

    def describe(self) -> dict:
        out = {"psi": self.psi_kind.value}
        if self.psi_kind != Psi.ZERO:
            out["a"] = self.a
        if self.psi_kind == Psi.SINE:
            out["k"] = self.k
        if self.shift:
            out["shift"] = self.shift
        return out


def make_domain(psi="zero", N: int = 2, a: float = 0.0, k: float = 1.0, shift: float = 0.0) -> GraphDomain:
    try:
        kind = Psi(psi)
    except ValueError:
        raise ParameterOutOfRange(f"unknown psi family {psi!r}") from None
    if int(N) != N or N < 2:
        raise UnsupportedDimension(f"N must be an integer >= 2, got {N}")
    vals = np.array([a, k, shift], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ParameterOutOfRange("psi parameters must be finite")
    return GraphDomain(kind, int(N), float(a), float(k), float(shift))


def transform(domain: GraphDomain, x, direction) -> np.ndarray:
    """Flatten maps (x', x_N) to (x', x_N - psi(x')); Unflatten is the inverse."""
    direction = Direction(direction)
    x = np.array(x, dtype=float, copy=True)
    s = -1.0 if direction == Direction.FLATTEN else 1.0
    x[..., -1] = x[..., -1] + s * domain.psi(x[..., :-1])
    return x


def surface_factor(domain: GraphDomain, xp):
    """sqrt(1 + |grad psi|^2) at x'; rejects points on a kink of psi."""
    xp = np.asarray(xp, dtype=float)
    if domain.kinks() and np.any(np.isin(xp[..., 0], domain.kinks())):
        raise NotDifferentiable("psi is not differentiable at x'_1 = 0")
    g = domain.grad_psi(xp)
    out = np.sqrt(1.0 + np.sum(g * g, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TwoGraphDomain:
    """Omega_1 = {x_N < psi1} union Omega_2 = {x_N > psi2} with psi1 < psi2."""

    lower: GraphDomain
    upper: GraphDomain
    N: int

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        xp, t = x[..., :-1], x[..., -1]
        return (t < self.lower.psi(xp)) | (t > self.upper.psi(xp))

    def describe(self) -> dict:
        return {"psi1": self.lower.describe(), "psi2": self.upper.describe()}


def make_two_graph(psi1: GraphDomain, psi2: GraphDomain, N: int | None = None, box=None) -> TwoGraphDomain:
    """Validate psi1 < psi2 on quasi-random points of the x'-box.

    ``box`` is ``(lo, hi)`` in R^{N-1}; the default is [-5, 5]^{N-1}.
    """
    N = psi1.N if N is None else int(N)
    if psi1.N != N or psi2.N != N:
        raise UnsupportedDimension("both graphs must live in the same dimension")
    d = N - 1
    lo, hi = (np.full(d, -5.0), np.full(d, 5.0)) if box is None else map(np.asarray, box)
    pts = qmc.Halton(d=d, scramble=False).random(GAP_POINTS + 1)[1:]
    pts = qmc.scale(pts, lo, hi)
    gap = psi2.psi(pts) - psi1.psi(pts)
    if np.any(gap <= 0):
        i = int(np.argmin(gap))
        raise GraphsCross(f"psi2 - psi1 = {gap[i]:.3g} <= 0 at x' = {pts[i].tolist()}")
    return TwoGraphDomain(psi1, psi2, N)
