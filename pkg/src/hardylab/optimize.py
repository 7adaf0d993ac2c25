"""Empirical best constants.

* :func:`minimize_ratio` searches a spline trial family for the smallest
  constant-free ratio RHS/LHS of an inequality.
* :func:`eig_best_constant_1d` solves the p = 2 one-dimensional quotient
  int V_right |u'|^2 / int V_left |u|^2 as a generalized eigenproblem.
* :func:`ab_pareto` estimates, for each A, the smallest B such that
  LHS <= A * gradient + B * boundary over a suite of test functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import (
    AllTrialsDegenerate,
    BadParameters,
    EmptySuite,
    IncompatibleCase,
    ParameterOutOfRange,
    SolverFailure,
)
from .inequalities import DEGENERATE, InequalityCase, Kind, evaluate_case
from .testfn import SeparableTrial, TestFunction
from .weights import WeightSpec

__all__ = [
    "Constraint",
    "RayleighProblem",
    "OptResult",
    "minimize_ratio",
    "hardy_1d_problem",
    "Weight1D",
    "BC",
    "eig_best_constant_1d",
    "fem_grid",
    "ParetoPoint",
    "ab_pareto",
    "UNBOUNDED_THRESHOLD",
]

RESTARTS = 8
MAX_RESAMPLES = 50
GL_POINTS = 24
UNBOUNDED_THRESHOLD = 1e6
_REDUCIBLE = (Kind.SINGULAR_HARDY, Kind.HARDY_I, Kind.HALF_SPACE_HARDY_I, Kind.HARDY_II)


class Constraint(str, enum.Enum):
    NONE = "none"
    VANISH_AT_BOUNDARY = "vanish_at_boundary"


@dataclass
class RayleighProblem:
    """Minimize RHS_raw / LHS_raw of ``case`` over the coefficients of ``trial``.

    With ``reduce_1d`` the trial is treated as a function of x_N alone and
    the integrals are one-dimensional (Gauss-Legendre on each knot
    interval); this is the x_N-core of every inequality whose weight
    depends on x_N only.  ``optimize_envelope`` adds the exponent a of
    the tau^a envelope of log-knot trials to the search variables.
    """

    case: InequalityCase
    trial: SeparableTrial
    p: float
    weight: WeightSpec | None = None
    domain: object = None
    constraint: Constraint = Constraint.NONE
    reduce_1d: bool = False
    optimize_envelope: bool = False
    tol: float = 1e-6

    def __post_init__(self):
        self.constraint = Constraint(self.constraint)
        if len(self.trial.coeffs) < 2:
            raise BadParameters("the trial family needs at least 2 coefficients")
        if self.constraint == Constraint.VANISH_AT_BOUNDARY and self.trial.offset + self.trial.tau_range[0] < 0:
            raise BadParameters("a vanishing trial must start on or above the boundary x_N = 0")
        if self.optimize_envelope and not self.trial.log_knots:
            raise BadParameters("envelope optimization needs log_knots")
        if self.reduce_1d:
            if self.case.kind not in _REDUCIBLE:
                raise IncompatibleCase(f"no one-dimensional reduction for {self.case.kind.value}")
            if self.weight is not None and self.weight.depends_on_xprime:
                raise IncompatibleCase("the one-dimensional reduction needs a weight of x_N only")
        elif self.domain is None:
            raise BadParameters("a domain is required unless reduce_1d is set")

    def describe(self) -> dict:
        return {
            "case": self.case.describe(),
            "p": self.p,
            "weight": None if self.weight is None else self.weight.describe(),
            "domain": None if self.domain is None else self.domain.describe(),
            "trial": self.trial.describe(),
            "constraint": self.constraint.value,
            "reduce_1d": self.reduce_1d,
            "optimize_envelope": self.optimize_envelope,
            "tol": self.tol,
        }

    # -- evaluation -------------------------------------------------------------

    def _bound(self):
        k = self.case.kind
        if k == Kind.SINGULAR_HARDY:
            g = self.case.params["gamma"]
            # the constant also holds below p - 1 for functions vanishing on the boundary
            if g > self.p - 1 or self.constraint == Constraint.VANISH_AT_BOUNDARY:
                return self.case.constants(self.p)["interior"]
            return None
        return self.case.ratio_bound(self.p, self.weight, self.domain)

    def trial_for(self, z) -> SeparableTrial:
        n = len(self.trial.coeffs)
        c = np.asarray(z[:n], dtype=float)
        nrm = np.linalg.norm(c)
        c = c / nrm if nrm > 0 else c
        env = float(z[n]) if self.optimize_envelope else None
        return self.trial.with_coeffs(c, env)

    def evaluate(self, z):
        """(ratio, relative error, lhs_raw); ratio is None for degenerate trials."""
        u = self.trial_for(z)
        if self.reduce_1d:
            return self._evaluate_1d(u)
        rep = evaluate_case(self.case, self.weight, self.domain, u, self.p, self.tol)
        if rep.degenerate or rep.ratio is None or not math.isfinite(rep.ratio):
            return None, 0.0, 0.0
        rel = sum(t["err"] for t in rep.terms.values()) / max(min(abs(rep.lhs_total), abs(rep.rhs_total)), DEGENERATE)
        return rep.ratio, rel, rep.lhs_total

    def _evaluate_1d(self, u: SeparableTrial):
        p = self.p
        k = np.asarray(u.knots, dtype=float)
        xg, wg = np.polynomial.legendre.leggauss(GL_POINTS)
        a, b = k[:-1, None], k[1:, None]
        sig = (0.5 * (b - a) * xg + 0.5 * (a + b)).ravel()
        wsig = (0.5 * (b - a) * wg).ravel()
        tau = np.exp(sig) if u.log_knots else sig
        dtau = wsig * (tau if u.log_knots else 1.0)
        g, dg = u.profile(tau)
        xN = u.offset + tau
        kind = self.case.kind
        bnd = 0.0
        if kind == Kind.SINGULAR_HARDY:
            gam = self.case.params["gamma"]
            with np.errstate(divide="ignore", invalid="ignore"):
                left = np.where(g == 0, 0.0, xN ** (gam - p) * np.abs(g) ** p)
                right = np.where(dg == 0, 0.0, xN**gam * np.abs(dg) ** p)
            if np.any(xN <= 0):
                raise IncompatibleCase("singular weights need the trial above x_N = 0")
        else:
            pts = np.column_stack([np.ones((xN.size, self.weight.N - 1)), xN])
            W, Wx, ratio = self.weight.evaluate(pts, p)
            left = np.abs(Wx) * np.abs(g) ** p
            right = ratio * np.abs(dg) ** p
            g0, _ = u.profile(np.array([-u.offset]))
            W0 = self.weight.evaluate(np.array([[1.0] * (self.weight.N - 1) + [0.0]]), p)[0][0]
            bnd = float(W0 * abs(g0[0]) ** p)
        L = float(np.dot(dtau, left))
        R = float(np.dot(dtau, right))
        if kind in (Kind.HARDY_I, Kind.HALF_SPACE_HARDY_I):
            L += self.case.constants(p)["boundary"] * bnd
        elif kind == Kind.HARDY_II:
            R += bnd
        if L < DEGENERATE:
            return None, 0.0, L
        return R / L, 1e-12, L


@dataclass
class OptResult:
    best_ratio: float
    best_coeffs: list
    evaluations: int
    history: list
    best_envelope: float | None = None
    restarts: int = 0
    seed: int | None = None
    flagged: bool = False
    notes: list = field(default_factory=list)
    problem: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class _BudgetExhausted(Exception):
    pass


class _BoundViolated(Exception):
    pass


class _Objective:
    def __init__(self, problem: RayleighProblem, budget: int):
        self.problem = problem
        self.budget = budget
        self.count = 0
        self.best = math.inf
        self.best_z = None
        self.history = []
        self.bound = problem._bound()
        self.violation = None

    def __call__(self, z):
        if self.count >= self.budget:
            raise _BudgetExhausted
        self.count += 1
        return self.record(z)

    def record(self, z):
        r, rel, _ = self.problem.evaluate(z)
        if r is None:
            if self.history:
                self.history.append(self.best)
            return math.inf
        if r < self.best:
            self.best, self.best_z = r, np.array(z, dtype=float)
        self.history.append(self.best)
        if self.bound is not None and r < self.bound * (1 - 1e-6) - r * rel:
            self.violation = r
            raise _BoundViolated
        return r


def _initial_vector(problem: RayleighProblem):
    z = list(problem.trial.coeffs)
    if problem.optimize_envelope:
        z.append(problem.trial.envelope)
    return np.asarray(z, dtype=float)


def _sample_start(problem, obj, rng, base):
    n = len(problem.trial.coeffs)
    scale = np.linalg.norm(base[:n]) / math.sqrt(n) or 1.0
    for _ in range(MAX_RESAMPLES):
        z = base.copy()
        z[:n] = base[:n] + 0.5 * scale * rng.standard_normal(n)
        if problem.optimize_envelope:
            z[n] = base[n] + 0.1 * rng.standard_normal()
        if problem.evaluate(z)[0] is not None:
            return z
    raise AllTrialsDegenerate(f"no non-degenerate trial in {MAX_RESAMPLES} samples")


def minimize_ratio(problem: RayleighProblem, budget: int, seed=0) -> OptResult:
    """Nelder-Mead with seeded restarts on the constant-free ratio.

    ``budget`` caps the number of ratio evaluations after the initial
    one; with budget 0 the initial trial is returned unchanged.  The
    first restart starts from the template coefficients, the others from
    random perturbations of them.  Degenerate trials (LHS below 1e-14)
    score +inf and are never incumbents.  An evaluated ratio below the
    proven lower bound stops the search and sets ``flagged``: it points
    at a quadrature problem.
    """
    if budget < 0:
        raise ParameterOutOfRange("budget >= 0 required")
    rng = np.random.default_rng(seed)
    obj = _Objective(problem, budget)
    z0 = _initial_vector(problem)
    notes = []
    restarts = 0
    try:
        r0 = obj.record(z0)
        if not math.isfinite(r0):
            z0 = _sample_start(problem, obj, rng, z0 if np.any(z0[: len(problem.trial.coeffs)]) else np.ones_like(z0))
            notes.append("initial trial degenerate; resampled")
            if budget == 0:
                obj.record(z0)
        per = max(budget // RESTARTS, 1)
        for i in range(RESTARTS):
            if obj.count >= budget:
                break
            start = z0 if i == 0 else _sample_start(problem, obj, rng, obj.best_z if obj.best_z is not None else z0)
            restarts += 1
            left = budget - obj.count
            minimize(
                obj,
                start,
                method="Nelder-Mead",
                options={"maxfev": min(per if i < RESTARTS - 1 else left, left), "xatol": 1e-10, "fatol": 1e-12, "adaptive": len(start) > 4},
            )
    except _BudgetExhausted:
        pass
    except _BoundViolated:
        notes.append(
            f"ratio {obj.violation:.6g} below the proven bound {obj.bound:.6g}: suspected quadrature error"
        )
    if obj.best_z is None:
        raise AllTrialsDegenerate("every evaluated trial was degenerate")
    u = problem.trial_for(obj.best_z)
    return OptResult(
        best_ratio=float(obj.best),
        best_coeffs=[float(c) for c in u.coeffs],
        evaluations=1 + obj.count,
        history=[float(h) for h in obj.history],
        best_envelope=float(u.envelope) if problem.trial.log_knots else None,
        restarts=restarts,
        seed=seed,
        flagged=obj.violation is not None,
        notes=notes,
        problem=problem.describe(),
    )


def hardy_1d_problem(p: float = 2.0, gamma: float = 0.0, n_coeffs: int = 14, span=(-20.0, 20.0)) -> RayleighProblem:
    """Dirichlet trials for int x^gamma |u'|^p / int x^(gamma - p) |u|^p on (0, inf).

    The profile is tau^a S(log tau) with S a cubic spline on uniform knots
    in log tau; a starts at (p - 1 - gamma)/p and is optimized along with
    the coefficients.
    """
    from .inequalities import make_case

    knots = tuple(np.linspace(span[0], span[1], n_coeffs + 4))
    arch = np.sin(np.pi * (np.arange(n_coeffs) + 0.5) / n_coeffs)
    trial = SeparableTrial(
        tuple(arch), knots, 1, log_knots=True, envelope=(p - 1.0 - gamma) / p
    )
    return RayleighProblem(
        make_case("singular_hardy", gamma=gamma),
        trial,
        p,
        constraint=Constraint.VANISH_AT_BOUNDARY,
        reduce_1d=True,
        optimize_envelope=True,
    )


# --------------------------------------------------------------------------
# one-dimensional generalized eigenproblem


class BC(str, enum.Enum):
    DIRICHLET_AT_ZERO = "dirichlet_at_zero"
    FREE = "free"


@dataclass(frozen=True)
class Weight1D:
    """Pair (V_left, V_right) of positive functions on (0, L).

    ``singular_at_zero`` selects a geometric grid by default.
    """

    left: Callable
    right: Callable
    singular_at_zero: bool = False
    name: str = "custom"

    @classmethod
    def hardy(cls):
        return cls(lambda t: t**-2.0, lambda t: np.ones_like(t), True, "hardy")

    @classmethod
    def constant(cls):
        return cls(lambda t: np.ones_like(t), lambda t: np.ones_like(t), False, "constant")

    @classmethod
    def power(cls, gamma: float):
        """x^(gamma - 2) against x^gamma, the p = 2 singular pair."""
        return cls(lambda t: t ** (gamma - 2.0), lambda t: t**gamma, True, f"power({gamma:g})")

    @classmethod
    def from_weight(cls, spec: WeightSpec):
        """|W_x| against the Hardy ratio, p = 2, for a weight of x_N only."""
        if spec.depends_on_xprime:
            raise IncompatibleCase("the weight must depend on x_N only")

        def pts(t):
            t = np.asarray(t, float)
            return np.column_stack([np.ones((t.size, spec.N - 1)), t])

        return cls(
            lambda t: np.abs(spec.evaluate(pts(t), 2.0)[1]),
            lambda t: spec.evaluate(pts(t), 2.0)[2],
            spec.boundary_exponent > 0,
            spec.label(),
        )


def fem_grid(L: float, M: int, grid: str = "uniform", log_step: float = 0.05) -> np.ndarray:
    """M + 1 nodes on [0, L].

    The geometric grid has t_i = L exp(-(M - i) log_step) for i >= 1, so it
    resolves log(L / t_1) = M log_step decades-worth of scale near 0.
    """
    if grid == "uniform":
        return np.linspace(0.0, L, M + 1)
    if grid == "geometric":
        t = L * np.exp(-log_step * np.arange(M - 1, -1, -1, dtype=float))
        return np.r_[0.0, t]
    raise ParameterOutOfRange(f"unknown grid {grid!r}")


def eig_best_constant_1d(
    weight1d: Weight1D,
    bc=BC.DIRICHLET_AT_ZERO,
    L: float = 50.0,
    M: int = 4000,
    grid: str = "auto",
    log_step: float = 0.05,
):
    """Smallest eigenvalue of int V_right u'^2 = lambda int V_left u^2 on (0, L).

    Piecewise-linear finite elements with three-point Gauss quadrature per
    element; Dirichlet at L and, for ``DIRICHLET_AT_ZERO``, at 0.  The
    matrices are scaled by diag(B)^(-1/2) before the shift-invert Lanczos
    solve so that geometric grids spanning many decades stay well
    conditioned.

    Returns
    -------
    (lambda_min, eigvector)
        The eigenvector holds nodal values on ``fem_grid(L, M, grid)``,
        normalized to unit V_left-weighted L^2 norm and positive near 0.
    """
    bc = BC(bc)
    if not L > 0:
        raise ParameterOutOfRange("L > 0 required")
    if M < 16:
        raise ParameterOutOfRange("M >= 16 required")
    if grid == "auto":
        grid = "geometric" if weight1d.singular_at_zero else "uniform"
    t = fem_grid(L, M, grid, log_step)
    h = np.diff(t)
    xg, wg = np.polynomial.legendre.leggauss(3)
    s = 0.5 * (xg + 1.0)  # local coordinate on [0, 1]
    q = t[:-1, None] + h[:, None] * s  # (M, 3)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vl = np.asarray(weight1d.left(q.ravel()), float).reshape(q.shape)
        vr = np.asarray(weight1d.right(q.ravel()), float).reshape(q.shape)
    if not (np.all(np.isfinite(vl)) and np.all(np.isfinite(vr)) and np.all(vl > 0) and np.all(vr > 0)):
        raise SolverFailure("V_left and V_right must be positive and finite on (0, L)")
    w = 0.5 * wg
    # element matrices: stiffness with phi' = -+1/h, mass with phi = (1 - s, s)
    kr = (vr @ w) / h
    m00 = (vl * (1 - s) ** 2) @ w * h
    m01 = (vl * (1 - s) * s) @ w * h
    m11 = (vl * s * s) @ w * h
    n = M + 1
    Kd = np.zeros(n)
    Bd = np.zeros(n)
    Kd[:-1] += kr
    Kd[1:] += kr
    Bd[:-1] += m00
    Bd[1:] += m11
    Ko, Bo = -kr, m01
    first = 1 if bc == BC.DIRICHLET_AT_ZERO else 0
    sl = slice(first, n - 1)
    Kd, Bd = Kd[sl], Bd[sl]
    Ko, Bo = Ko[first : n - 2], Bo[first : n - 2]
    if bc == BC.FREE:
        # a mass that does not shrink with the first cell means V_left is not integrable at 0
        h0 = h[0] * np.array([1.0, 2.0**-10])
        mass = [float(np.asarray(weight1d.left(hh * s), float) @ w * hh) for hh in h0]
        if not mass[1] < 0.5 * mass[0]:
            raise SolverFailure("V_left is not integrable at 0; a free end needs an integrable mass")
    if np.any(Bd <= 0) or not np.all(np.isfinite(Bd)):
        raise SolverFailure("mass matrix is not positive definite (is V_left integrable at 0?)")
    d = 1.0 / np.sqrt(Bd)
    Ks = sparse.diags([Ko * d[:-1] * d[1:], Kd * d * d, Ko * d[:-1] * d[1:]], [-1, 0, 1], format="csc")
    Bs = sparse.diags([Bo * d[:-1] * d[1:], np.ones_like(Bd), Bo * d[:-1] * d[1:]], [-1, 0, 1], format="csc")
    try:
        vals, vecs = eigsh(Ks, k=1, M=Bs, sigma=0.0, which="LM")
    except (ArpackNoConvergence, ArpackError, RuntimeError) as e:
        raise SolverFailure(f"eigen solve failed: {e}") from None
    lam = float(vals[0])
    if not (math.isfinite(lam) and lam > 0):
        raise SolverFailure(f"non-positive eigenvalue {lam}")
    v = vecs[:, 0] * d
    full = np.zeros(n)
    full[sl] = v
    nz = full[np.nonzero(full)[0][0]] if np.any(full) else 1.0
    full *= np.sign(nz)
    norm2 = float(v @ (sparse.diags([Bo, Bd, Bo], [-1, 0, 1]) @ v))
    full /= math.sqrt(norm2)
    return lam, full


# --------------------------------------------------------------------------
# (A, B) frontier


@dataclass
class ParetoPoint:
    A: float
    B_min: float
    flag: str  # "bounded" or "unbounded"


def ab_pareto(
    case: InequalityCase,
    A_grid: Sequence[float],
    trials: Sequence[TestFunction],
    weight: WeightSpec,
    domain,
    p: float,
    tol: float = 1e-7,
) -> list:
    """Empirical smallest B with LHS <= A * gradient + B * boundary.

    For each A the value is the running supremum over the trial suite of
    (LHS - A * gradient) / boundary, clamped below at 0.  It is flagged
    ``unbounded`` when it exceeds 1e6 (in particular when a trial has a
    positive excess and no boundary trace), or when it increases at every
    step over the second half of the suite and at least doubles there.
    Both rules are heuristics, not proofs that A is below the first best
    constant.
    """
    if case.kind != Kind.HARDY_II:
        raise IncompatibleCase("ab_pareto needs a gradient + boundary right-hand side (hardy_ii)")
    A_grid = [float(a) for a in A_grid]
    if any(a < 0 for a in A_grid) or any(np.diff(A_grid) <= 0):
        raise ParameterOutOfRange("A_grid must be nonnegative and increasing")
    terms = []
    for u in trials:
        rep = evaluate_case(case, weight, domain, u, p, tol)
        if rep.degenerate:
            continue
        terms.append((rep.term("interior_lhs"), rep.term("gradient_rhs"), rep.term("boundary_rhs")))
    if not terms:
        raise EmptySuite("no non-degenerate trial in the suite")
    out = []
    for A in A_grid:
        running = []
        sup = 0.0
        for lhs, G, B in terms:
            excess = lhs - A * G
            if excess > 0:
                need = excess / B if B > DEGENERATE else math.inf
                sup = max(sup, need)
            running.append(sup)
        flag = "bounded"
        if sup > UNBOUNDED_THRESHOLD:
            flag = "unbounded"
        elif len(running) >= 6:
            tail = np.asarray(running[len(running) // 2 - 1 :])
            if tail[0] > 0 and np.all(np.diff(tail) > 0) and tail[-1] >= 2 * tail[0]:
                flag = "unbounded"
        out.append(ParetoPoint(A, float(sup), flag))
    return out
