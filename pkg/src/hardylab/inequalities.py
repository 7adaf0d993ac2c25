"""Evaluate both sides of weighted Hardy, Sobolev and trace inequalities.

An :class:`InequalityCase` names the inequality and its parameters;
:func:`evaluate_case` computes every integral it involves for a concrete
weight, domain and test function and returns an :class:`InequalityReport`
with the terms, the constants, the margin (right side minus left side with
constants applied) and the constant-free ratio.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import IncompatibleCase, IncompatibleMonotonicity
from .geometry import GraphDomain, TwoGraphDomain
from .quad import (
    SingularHandling,
    grading_for_exponent,
    integrate_boundary,
    integrate_interior,
)
from .testfn import TestFunction
from .weights import Family, Monotonicity, WeightSpec

__all__ = [
    "Kind",
    "InequalityCase",
    "InequalityReport",
    "make_case",
    "evaluate_case",
    "dw_norms",
    "dw_norm",
    "q_of_s",
    "sobolev_exponent",
    "trace_exponent",
]

DEGENERATE = 1e-14


class Kind(str, enum.Enum):
    HARDY_I = "hardy_i"
    HARDY_II = "hardy_ii"
    HALF_SPACE_HARDY_I = "half_space_hardy_i"
    SINGULAR_HARDY = "singular_hardy"
    KATO = "kato"
    SOBOLEV = "sobolev"
    BORDERLINE_SOBOLEV = "borderline_sobolev"
    TRACE = "trace"
    TWO_GRAPH = "two_graph"
    HSM = "hsm"
    W1P = "w1p"


def q_of_s(s: float, N: int, p: float) -> float:
    """Interpolation exponent (N - s) p / (N - p)."""
    return (N - s) * p / (N - p)


def sobolev_exponent(N: int, p: float) -> float:
    return N * p / (N - p)


def trace_exponent(N: int, p: float) -> float:
    return p * (N - 1) / (N - p)


@dataclass(frozen=True)
class InequalityCase:
    kind: Kind
    params: dict = field(default_factory=dict)

    @property
    def needs_weight(self) -> bool:
        return self.kind not in (Kind.SINGULAR_HARDY, Kind.HSM)

    def exponents(self, N: int, p: float) -> dict:
        out = {}
        if p < N:
            out["p_star"] = sobolev_exponent(N, p)
            out["p_trace"] = trace_exponent(N, p)
        if self.kind == Kind.SOBOLEV:
            out["q"] = q_of_s(self.params["s"], N, p)
        elif self.kind in (Kind.BORDERLINE_SOBOLEV, Kind.TRACE):
            out["q"] = self.params["q"]
        return out

    def constants(self, p: float, weight: WeightSpec | None = None, domain=None) -> dict:
        """Constants attached to each term of the inequality."""
        k = self.kind
        if k in (Kind.HARDY_I, Kind.HALF_SPACE_HARDY_I):
            return {"gradient": p**p, "boundary": p}
        if k == Kind.HARDY_II:
            out = {"gradient": p**p, "boundary": p}
            if weight is not None and weight.family == Family.DECREASING_SHIFTED_POWER:
                # the same inequality divided through by p - 1 - gamma
                a = weight.p - 1.0 - weight.gamma
                out["normalized_gradient"] = (p / a) ** p
                out["normalized_boundary"] = p / a
            return out
        if k == Kind.TWO_GRAPH:
            return {"gradient": p**p, "boundary": p}
        if k == Kind.SINGULAR_HARDY:
            g = self.params["gamma"]
            return {"interior": abs((g - p + 1.0) / p) ** p}
        if k == Kind.KATO:
            return {"gradient": (p / weight.gamma) ** (p - 1.0)}
        if k == Kind.HSM:
            g = self.params["gamma"]
            if self.params.get("coefficient", "corrected") == "printed":
                return {"subtracted": 1.0 / (g - p + 1.0) ** p}
            return {"subtracted": ((g - p + 1.0) / p) ** p}
        if k == Kind.TRACE and self.params["q"] == p:
            lip = domain.lipschitz_bound
            c1 = math.sqrt(1.0 + lip * lip)
            if weight.monotonicity == Monotonicity.INCREASING:
                return {"dw": c1 * p ** (p - 1.0), "surface": c1}
            return {"dw": c1, "surface": c1}
        if k == Kind.W1P:
            return {"dw": p**p / self.params["C1"] + 1.0 / self.params["c1"]}
        return {}

    def ratio_bound(self, p, weight=None, domain=None) -> float | None:
        """Lower bound the constant-free ratio must respect, when the inequality fixes one."""
        c = self.constants(p, weight, domain)
        k = self.kind
        if k in (Kind.HARDY_I, Kind.HALF_SPACE_HARDY_I):
            return 1.0 / c["gradient"]
        if k == Kind.SINGULAR_HARDY:
            return c["interior"]
        if k in (Kind.KATO,):
            return 1.0 / c["gradient"]
        if k in (Kind.TRACE, Kind.W1P) and "dw" in c:
            return 1.0 / c["dw"]
        return None

    def describe(self) -> dict:
        return {"kind": self.kind.value, **self.params}


def make_case(kind, **params) -> InequalityCase:
    """Validated case constructor.

    Parameters by kind: ``singular_hardy(gamma)``, ``sobolev(s)``,
    ``borderline_sobolev(q)``, ``trace(q)``, ``two_graph(orientation)``
    with orientation ``"printed"`` (the lower-graph term on the left) or
    ``"derived"`` (the upper-graph term on the left), ``hsm(gamma,
    coefficient)`` with coefficient ``"corrected"`` or ``"printed"`` and
    ``w1p(C1, c1)``.
    """
    try:
        kind = Kind(kind)
    except ValueError:
        raise IncompatibleCase(f"unknown inequality kind {kind!r}") from None
    allowed = {
        Kind.SINGULAR_HARDY: {"gamma"},
        Kind.SOBOLEV: {"s"},
        Kind.BORDERLINE_SOBOLEV: {"q"},
        Kind.TRACE: {"q"},
        Kind.TWO_GRAPH: {"orientation"},
        Kind.HSM: {"gamma", "coefficient"},
        Kind.W1P: {"C1", "c1"},
    }.get(kind, set())
    extra = set(params) - allowed
    if extra:
        raise IncompatibleCase(f"{kind.value} takes no parameters {sorted(extra)}")
    params = dict(params)
    if kind in (Kind.SINGULAR_HARDY, Kind.HSM):
        if "gamma" not in params:
            raise IncompatibleCase(f"{kind.value} needs gamma")
        params["gamma"] = float(params["gamma"])
    if kind == Kind.HSM:
        params.setdefault("coefficient", "corrected")
        if params["coefficient"] not in ("corrected", "printed"):
            raise IncompatibleCase("coefficient must be 'corrected' or 'printed'")
    if kind == Kind.SOBOLEV:
        params["s"] = float(params.get("s", 0.0))
    if kind in (Kind.BORDERLINE_SOBOLEV, Kind.TRACE):
        if "q" not in params:
            raise IncompatibleCase(f"{kind.value} needs q")
        params["q"] = float(params["q"])
    if kind == Kind.TWO_GRAPH:
        params.setdefault("orientation", "printed")
        if params["orientation"] not in ("printed", "derived"):
            raise IncompatibleCase("orientation must be 'printed' or 'derived'")
    if kind == Kind.W1P:
        if not (params.get("C1", 0) > 0 and params.get("c1", 0) > 0):
            raise IncompatibleCase("w1p needs C1 > 0 and c1 > 0")
        params["C1"], params["c1"] = float(params["C1"]), float(params["c1"])
    return InequalityCase(kind, params)


@dataclass
class InequalityReport:
    kind: str
    params: dict
    terms: dict  # name -> {"value", "err"}
    constants: dict
    constant_used: float | str | dict
    lhs_total: float
    rhs_total: float
    margin: float | None
    ratio: float | None
    degenerate: bool
    error_bar: float
    settings: dict = field(default_factory=dict)
    seed: int | None = None
    evidence_only: bool = False
    notes: list = field(default_factory=list)

    def term(self, name) -> float:
        return self.terms[name]["value"]

    def violated(self, rel=1e-6) -> bool:
        """True when the margin is below -max(rel * RHS, error bar)."""
        if self.margin is None or self.degenerate:
            return False
        return self.margin < -max(rel * abs(self.rhs_total), self.error_bar)

    def to_dict(self) -> dict:
        d = asdict(self)
        return _jsonable(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# --------------------------------------------------------------------------
# integration helpers


@dataclass
class _Settings:
    tol: float = 1e-7
    abs_tol: float | None = None
    max_cells: int | None = None
    coordinates: str = "direct"

    @property
    def abs(self):
        return self.abs_tol if self.abs_tol is not None else 1e-3 * self.tol

    def as_dict(self):
        return {"tol": self.tol, "abs_tol": self.abs, "max_cells": self.max_cells, "coordinates": self.coordinates}


def _hint_for_weight(weight: WeightSpec | None):
    hint = SingularHandling.NONE
    k = None
    if weight is None:
        return hint, k
    if weight.boundary_exponent > 0:
        hint |= SingularHandling.GRADED
        k = grading_for_exponent(weight.boundary_exponent)
    if weight.family in (Family.POWER, Family.SHIFTED_POWER_OVER_PRIME) and weight.beta != 0:
        hint |= SingularHandling.POLAR
    return hint, k


def _box(u: TestFunction):
    b = u.support_box
    return np.asarray(b.lo, float), np.asarray(b.hi, float)


def _interior(components, domain, box, st: _Settings, hint=SingularHandling.NONE, grading=None, reflect=False):
    """Integrate several pointwise quantities at once.

    ``components`` maps each point array to an (n, m) array.  With
    ``reflect`` the region is the subgraph of ``domain`` and is integrated
    through x_N -> -x_N.
    """
    lo, hi = box
    if reflect:
        dom = domain.reflected()
        lo, hi = lo.copy(), hi.copy()
        lo[-1], hi[-1] = -box[1][-1], -box[0][-1]

        def f(y):
            x = y.copy()
            x[:, -1] = -y[:, -1]
            return components(x)

    else:
        dom, f = domain, components
    res = integrate_interior(
        f,
        dom,
        (lo, hi),
        st.tol,
        hint,
        grading=grading,
        abs_tol=st.abs,
        max_cells=st.max_cells,
        coordinates=st.coordinates,
    )
    return np.atleast_1d(res.value), np.atleast_1d(res.error_estimate)


def _boundary(fn, domain, box, st: _Settings, surface=False, hint=SingularHandling.NONE):
    """Integrate fn(x) over the graph, x = (x', psi(x'))."""
    lo, hi = box

    def f(xp):
        x = np.empty((xp.shape[0], xp.shape[1] + 1))
        x[:, :-1] = xp
        x[:, -1] = domain.psi(xp)
        return fn(x)

    bhint = hint & SingularHandling.POLAR
    res = integrate_boundary(f, domain, (lo[:-1], hi[:-1]), st.tol, surface, singular_hint=bhint, abs_tol=st.abs, max_cells=st.max_cells)
    return float(res.value), float(res.error_estimate)


def _grad_norm_p(g, p):
    return np.sum(g * g, axis=-1) ** (0.5 * p)


def _weight_terms(weight, u, p, exps=(), with_ratio=True, with_wx=True, extra=None):
    """Pointwise integrands |W_x||u|^p, ratio |grad u|^p and |W_x|^a |u|^q terms."""

    def comps(x):
        v, g = u.evaluate(x)
        W, Wx, ratio = weight.evaluate(x, p)
        aWx = np.abs(Wx)
        av = np.abs(v)
        cols = []
        if with_wx:
            cols.append(aWx * av**p)
        if with_ratio:
            gp = _grad_norm_p(g, p)
            cols.append(np.where(gp == 0.0, 0.0, ratio * gp))
        for a, q in exps:
            cols.append((aWx**a if a else 1.0) * av**q)
        if extra is not None:
            cols.extend(extra(x, v, g, W, Wx, ratio))
        return np.stack(cols, axis=-1)

    return comps


def _require_valid_region(weight: WeightSpec, domain: GraphDomain, box):
    pmin, _ = domain.psi_range(box[0][:-1], box[1][:-1])
    if pmin < weight.min_xn - 1e-12:
        raise IncompatibleCase(
            f"{weight.label()} is undefined below x_N = {weight.min_xn:g}, but psi reaches {pmin:g}"
        )


def _check_monotone(weight, want, kind):
    if weight.monotonicity != want:
        raise IncompatibleCase(f"{kind} needs a {want.value} weight, got {weight.label()}")


def _weight_boundary(weight, u, p, domain, box, st, hint, q=None, surface=False):
    q = p if q is None else q

    def fn(x):
        v = u.value(x)
        W = weight.evaluate(x, p)[0]
        return W * np.abs(v) ** q

    return _boundary(fn, domain, box, st, surface, hint)


# --------------------------------------------------------------------------
# per-kind evaluators


def evaluate_case(
    case: InequalityCase,
    weight: WeightSpec | None,
    domain,
    u: TestFunction,
    p: float,
    tol: float = 1e-7,
    *,
    abs_tol: float | None = None,
    max_cells: int | None = None,
    coordinates: str = "direct",
    seed: int | None = None,
) -> InequalityReport:
    """Compute every term of ``case`` for the given instance.

    ``coordinates="flattened"`` evaluates the interior integrals in the
    flattened coordinates (x', x_N - psi(x')) instead of with
    x'-dependent limits.
    """
    if not p > 1:
        raise IncompatibleCase(f"p > 1 required, got {p}")
    if case.needs_weight and weight is None:
        raise IncompatibleCase(f"{case.kind.value} needs a weight")
    if weight is not None and weight.N != domain.N:
        raise IncompatibleCase("weight and domain dimensions differ")
    if u.N != domain.N:
        raise IncompatibleCase("test function and domain dimensions differ")
    st = _Settings(tol, abs_tol, max_cells, coordinates)
    fn = _EVALUATORS[case.kind]
    rep = fn(case, weight, domain, u, p, st)
    rep.settings = st.as_dict()
    rep.seed = seed
    rep.params = {
        **case.params,
        "p": p,
        "N": domain.N,
        "weight": None if (weight is None or not case.needs_weight) else weight.describe(),
        "domain": domain.describe(),
        "u": u.describe(),
    }
    return rep


def _finish(case, terms, constants, constant_used, lhs, rhs, lhs_raw, rhs_raw, err_bar, margin=True, notes=None, evidence=False):
    degenerate = all(abs(t["value"]) < DEGENERATE for t in terms.values())
    if degenerate:
        m, r = (0.0 if margin else None), None
    else:
        m = float(rhs - lhs) if margin else None
        r = float(rhs_raw / lhs_raw) if lhs_raw != 0 else math.inf
    return InequalityReport(
        kind=case.kind.value,
        params={},
        terms=terms,
        constants=constants,
        constant_used=constant_used,
        lhs_total=float(lhs),
        rhs_total=float(rhs),
        margin=m,
        ratio=r,
        degenerate=degenerate,
        error_bar=float(err_bar),
        evidence_only=evidence,
        notes=list(notes or []),
    )


def _t(v, e):
    return {"value": float(v), "err": float(e)}


def _eval_hardy_i(case, weight, domain, u, p, st):
    _check_monotone(weight, Monotonicity.INCREASING, case.kind.value)
    if case.kind == Kind.HALF_SPACE_HARDY_I and not (domain.is_flat and domain.shift == 0):
        raise IncompatibleCase("half_space_hardy_i needs psi identically 0")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    comps = _weight_terms(weight, u, p)
    (A, G), (eA, eG) = _interior(comps, domain, box, st, hint, k)
    B, eB = _weight_boundary(weight, u, p, domain, box, st, hint)
    c = case.constants(p)
    terms = {"interior_lhs": _t(A, eA), "boundary_lhs": _t(B, eB), "gradient_rhs": _t(G, eG)}
    lhs = A + c["boundary"] * B
    rhs = c["gradient"] * G
    err = eA + c["boundary"] * eB + c["gradient"] * eG
    return _finish(case, terms, c, c["gradient"], lhs, rhs, lhs, G, err)


def _eval_hardy_ii(case, weight, domain, u, p, st):
    _check_monotone(weight, Monotonicity.DECREASING, "hardy_ii")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    comps = _weight_terms(weight, u, p)
    (A, G), (eA, eG) = _interior(comps, domain, box, st, hint, k)
    B, eB = _weight_boundary(weight, u, p, domain, box, st, hint)
    c = case.constants(p, weight)
    terms = {"interior_lhs": _t(A, eA), "gradient_rhs": _t(G, eG), "boundary_rhs": _t(B, eB)}
    rhs = c["gradient"] * G + c["boundary"] * B
    err = eA + c["boundary"] * eB + c["gradient"] * eG
    return _finish(case, terms, c, {"gradient": c["gradient"], "boundary": c["boundary"]}, A, rhs, A, G + B, err)


def _eval_singular(case, weight, domain, u, p, st):
    if not (domain.is_flat and domain.shift == 0):
        raise IncompatibleCase("singular_hardy lives on the half-space (psi identically 0)")
    g = case.params["gamma"]
    box = _box(u)
    a = p - g
    hint = SingularHandling.GRADED if a > 0 else SingularHandling.NONE
    k = grading_for_exponent(a) if a > 0 else None

    def comps(x):
        v, gr = u.evaluate(x)
        t = x[:, -1]
        return np.stack([np.abs(v) ** p * t ** (g - p), t**g * _grad_norm_p(gr, p)], axis=-1)

    (L, R), (eL, eR) = _interior(comps, domain, box, st, hint, k)
    c = case.constants(p)
    terms = {"interior_lhs": _t(L, eL), "gradient_rhs": _t(R, eR)}
    notes = [] if g > p - 1 else ["gamma <= p - 1: outside the range where the inequality is asserted"]
    return _finish(case, terms, c, c["interior"], c["interior"] * L, R, L, R, c["interior"] * eL + eR, notes=notes)


def _eval_kato(case, weight, domain, u, p, st):
    if weight.family != Family.SHIFTED_POWER_OVER_PRIME:
        raise IncompatibleCase("kato uses the (1+x_N)^gamma / |x'|^beta weight")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    comps = _weight_terms(weight, u, p, with_wx=False)
    (G,), (eG,) = _interior(comps, domain, box, st, hint, k)
    # raw gradient side without the 1/gamma^(p-1) factor of the Hardy ratio
    Graw, eGraw = G * weight.gamma ** (p - 1.0), eG * weight.gamma ** (p - 1.0)
    B, eB = _weight_boundary(weight, u, p, domain, box, st, hint)
    c = case.constants(p, weight)
    terms = {"boundary_lhs": _t(B, eB), "gradient_rhs": _t(Graw, eGraw)}
    return _finish(case, terms, c, c["gradient"], B, c["gradient"] * Graw, B, Graw, eB + c["gradient"] * eGraw)


def _dw_parts(weight, domain, u, p, st, box, hint, k, exps=()):
    comps = _weight_terms(weight, u, p, exps=exps, with_wx=False)
    vals, errs = _interior(comps, domain, box, st, hint, k)
    G, eG = vals[0], errs[0]
    B, eB = 0.0, 0.0
    if weight.monotonicity == Monotonicity.DECREASING:
        B, eB = _weight_boundary(weight, u, p, domain, box, st, hint)
    return G, eG, B, eB, vals[1:], errs[1:]


def _norm_err(v, e, q):
    # d(v^(1/q)) = v^(1/q - 1) / q dv
    if v <= 0:
        return 0.0, 0.0
    n = v ** (1.0 / q)
    return n, n * e / (q * v)


def _eval_sobolev(case, weight, domain, u, p, st):
    N = domain.N
    s = case.params["s"]
    if not 1 < p < N:
        raise IncompatibleCase(f"sobolev needs 1 < p < N, got p={p}, N={N}")
    if not 0 <= s <= p:
        raise IncompatibleCase(f"s must lie in [0, p], got {s}")
    q = q_of_s(s, N, p)
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    G, eG, B, eB, (E,), (eE,) = _dw_parts(weight, domain, u, p, st, box, hint, k, exps=[(s / p, q)])
    return _empirical(case, G, eG, B, eB, E, eE, q, p, {"q": q})


def _empirical(case, G, eG, B, eB, E, eE, q, p, extra):
    D = G + B
    dnorm, edn = _norm_err(D, eG + eB, p)
    lnorm, eln = _norm_err(E, eE, q)
    terms = {"gradient_rhs": _t(G, eG)}
    if B:
        terms["boundary_rhs"] = _t(B, eB)
    terms["embedding_lhs"] = _t(E, eE)
    terms["embedding_lhs_norm"] = _t(lnorm, eln)
    terms["dw_norm"] = _t(dnorm, edn)
    rep = _finish(case, terms, {}, "empirical", lnorm, dnorm, lnorm, dnorm, eln + edn, margin=False)
    rep.constants = extra
    return rep


def _eval_borderline(case, weight, domain, u, p, st):
    N = domain.N
    q = case.params["q"]
    if p != N:
        raise IncompatibleCase(f"borderline_sobolev needs p = N, got p={p}, N={N}")
    if q < N:
        raise IncompatibleCase(f"q >= N required, got {q}")
    if weight.depends_on_xprime:
        raise IncompatibleCase("borderline_sobolev needs a weight depending on x_N only")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    G, eG, B, eB, (E,), (eE,) = _dw_parts(weight, domain, u, p, st, box, hint, k, exps=[(1.0, q)])
    return _empirical(case, G, eG, B, eB, E, eE, q, p, {"q": q})


def _eval_trace(case, weight, domain, u, p, st):
    N = domain.N
    q = case.params["q"]
    if p < N:
        pt = trace_exponent(N, p)
        if not p <= q <= pt + 1e-12:
            raise IncompatibleCase(f"q must lie in [p, p_*] = [{p}, {pt:g}]")
    elif p == N:
        if q < N:
            raise IncompatibleCase(f"q >= N required, got {q}")
    else:
        raise IncompatibleCase(f"trace needs p <= N, got p={p}")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    G, eG, B, eB, _, _ = _dw_parts(weight, domain, u, p, st, box, hint, k)
    T, eT = _weight_boundary(weight, u, p, domain, box, st, hint, q=q, surface=True)
    D, eD = G + B, eG + eB
    if q == p:
        if domain.lipschitz_bound is None:
            raise IncompatibleCase("trace with q = p needs a globally Lipschitz psi")
        c = case.constants(p, weight, domain)
        terms = {"trace_lhs": _t(T, eT), "gradient_rhs": _t(G, eG)}
        if weight.monotonicity == Monotonicity.DECREASING:
            terms["boundary_rhs"] = _t(B, eB)
        return _finish(case, terms, c, c["dw"], T, c["dw"] * D, T, D, eT + c["dw"] * eD)
    tnorm, etn = _norm_err(T, eT, q)
    dnorm, edn = _norm_err(D, eD, p)
    terms = {"trace_lhs": _t(T, eT), "trace_norm": _t(tnorm, etn), "gradient_rhs": _t(G, eG), "dw_norm": _t(dnorm, edn)}
    rep = _finish(case, terms, {}, "empirical", tnorm, dnorm, tnorm, dnorm, etn + edn, margin=False)
    rep.constants = {"q": q}
    return rep


def _eval_two_graph(case, weight, domain, u, p, st):
    if not isinstance(domain, TwoGraphDomain):
        raise IncompatibleCase("two_graph needs a TwoGraphDomain")
    _check_monotone(weight, Monotonicity.INCREASING, "two_graph")
    box = _box(u)
    if box[0][-1] < weight.min_xn:
        raise IncompatibleCase(f"{weight.label()} is undefined below x_N = {weight.min_xn:g}")
    hint, k = _hint_for_weight(weight)
    comps = _weight_terms(weight, u, p)
    (A2, G2), (eA2, eG2) = _interior(comps, domain.upper, box, st, hint, k)
    (A1, G1), (eA1, eG1) = _interior(comps, domain.lower, box, st, hint, k, reflect=True)
    B1, eB1 = _weight_boundary(weight, u, p, domain.lower, box, st, hint)
    B2, eB2 = _weight_boundary(weight, u, p, domain.upper, box, st, hint)
    A, eA, G, eG = A1 + A2, eA1 + eA2, G1 + G2, eG1 + eG2
    c = case.constants(p)
    printed = case.params.get("orientation", "printed") == "printed"
    Bl, Br = (B1, B2) if printed else (B2, B1)
    terms = {
        "interior_lhs": _t(A, eA),
        "boundary_lower": _t(B1, eB1),
        "boundary_upper": _t(B2, eB2),
        "gradient_rhs": _t(G, eG),
    }
    lhs = A + c["boundary"] * Bl
    rhs = c["gradient"] * G + c["boundary"] * Br
    err = eA + c["boundary"] * (eB1 + eB2) + c["gradient"] * eG
    notes = [f"orientation={'printed' if printed else 'derived'}"]
    return _finish(case, terms, c, c, lhs, rhs, A + Bl, G + Br, err, notes=notes)


def _eval_hsm(case, weight, domain, u, p, st):
    N = domain.N
    g = case.params["gamma"]
    if not (domain.is_flat and domain.shift == 0):
        raise IncompatibleCase("hsm lives on the half-space (psi identically 0)")
    if not p < N:
        raise IncompatibleCase(f"hsm needs p < N, got p={p}, N={N}")
    if not g > p - 1:
        raise IncompatibleCase(f"hsm needs gamma > p - 1, got {g}")
    ps = sobolev_exponent(N, p)
    box = _box(u)
    a = p - g
    hint = SingularHandling.GRADED if a > 0 else SingularHandling.NONE
    k = grading_for_exponent(a) if a > 0 else None

    def comps(x):
        v, gr = u.evaluate(x)
        t = x[:, -1]
        av = np.abs(v)
        return np.stack([t ** (N * g / (N - p)) * av**ps, t**g * _grad_norm_p(gr, p), av**p * t ** (g - p)], axis=-1)

    (S, R, H), (eS, eR, eH) = _interior(comps, domain, box, st, hint, k)
    c = case.constants(p)
    lhs, elhs = _norm_err(S, eS, ps / p)
    rhs = R - c["subtracted"] * H
    terms = {
        "sobolev_lhs": _t(S, eS),
        "sobolev_lhs_norm": _t(lhs, elhs),
        "gradient_rhs": _t(R, eR),
        "singular_subtracted": _t(H, eH),
    }
    notes = ["empirical evidence only: the constant C0 is conjectural"]
    rep = _finish(case, terms, c, "empirical", lhs, rhs, lhs, rhs, elhs + eR + c["subtracted"] * eH, margin=False, notes=notes, evidence=True)
    return rep


def _eval_w1p(case, weight, domain, u, p, st):
    _check_monotone(weight, Monotonicity.INCREASING, "w1p")
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)

    def extra(x, v, g, W, Wx, ratio):
        return [np.abs(v) ** p, _grad_norm_p(g, p)]

    comps = _weight_terms(weight, u, p, with_wx=False, extra=extra)
    (G, U, DU), (eG, eU, eDU) = _interior(comps, domain, box, st, hint, k)
    c = case.constants(p)
    terms = {"gradient_rhs": _t(G, eG), "lp_lhs": _t(U, eU), "gradient_lp_lhs": _t(DU, eDU)}
    return _finish(case, terms, c, c["dw"], U + DU, c["dw"] * G, U + DU, G, eU + eDU + c["dw"] * eG)


_EVALUATORS = {
    Kind.HARDY_I: _eval_hardy_i,
    Kind.HALF_SPACE_HARDY_I: _eval_hardy_i,
    Kind.HARDY_II: _eval_hardy_ii,
    Kind.SINGULAR_HARDY: _eval_singular,
    Kind.KATO: _eval_kato,
    Kind.SOBOLEV: _eval_sobolev,
    Kind.BORDERLINE_SOBOLEV: _eval_borderline,
    Kind.TRACE: _eval_trace,
    Kind.TWO_GRAPH: _eval_two_graph,
    Kind.HSM: _eval_hsm,
    Kind.W1P: _eval_w1p,
}


# --------------------------------------------------------------------------
# D_W norms


def dw_norms(weight: WeightSpec, domain: GraphDomain, u: TestFunction, p: float, tol: float = 1e-8):
    """(norm_plus, norm_minus); the one that does not match the weight is None.

    norm_plus^p is the weighted gradient integral; norm_minus^p adds the
    boundary term W(x', psi) |u(x', psi)|^p.
    """
    st = _Settings(tol)
    box = _box(u)
    _require_valid_region(weight, domain, box)
    hint, k = _hint_for_weight(weight)
    G, _, B, _, _, _ = _dw_parts(weight, domain, u, p, st, box, hint, k)
    n = (G + B) ** (1.0 / p)
    if weight.monotonicity == Monotonicity.INCREASING:
        return n, None
    return None, n


def dw_norm(weight, domain, u, p, sign="+", tol=1e-8) -> float:
    want = Monotonicity.INCREASING if sign == "+" else Monotonicity.DECREASING
    if weight.monotonicity != want:
        raise IncompatibleMonotonicity(f"the {sign} norm needs a {want.value} weight, got {weight.label()}")
    plus, minus = dw_norms(weight, domain, u, p, tol)
    return plus if sign == "+" else minus
