import math

import numpy as np
import pytest

from hardylab.errors import (
    AllTrialsDegenerate,
    BadParameters,
    EmptySuite,
    IncompatibleCase,
    ParameterOutOfRange,
    SolverFailure,
)
from hardylab.geometry import make_domain
from hardylab.inequalities import evaluate_case, make_case
from hardylab.optimize import (
    BC,
    Constraint,
    RayleighProblem,
    Weight1D,
    ab_pareto,
    eig_best_constant_1d,
    fem_grid,
    hardy_1d_problem,
    minimize_ratio,
)
from hardylab.testfn import RadialBump, SeparableTrial, bump_suite
from hardylab.weights import make_weight

Z2 = make_domain("zero", 2)


def small_hardy_1d(p=2.0):
    return hardy_1d_problem(p, n_coeffs=6, span=(-6.0, 6.0))


class TestMinimizeRatio:
    def test_classical_hardy_p2(self):
        r = minimize_ratio(hardy_1d_problem(2.0), 2000, seed=0)
        assert 0.25 <= r.best_ratio <= 0.27
        assert not r.flagged

    def test_classical_hardy_p3(self):
        r = minimize_ratio(hardy_1d_problem(3.0), 2000, seed=0)
        target = 8 / 27
        assert target <= r.best_ratio <= 1.1 * target

    def test_budget_zero_returns_initial(self):
        pr = small_hardy_1d()
        r = minimize_ratio(pr, 0, seed=0)
        assert len(r.history) == 1 and r.evaluations == 1
        assert r.best_ratio == pytest.approx(pr.evaluate(np.r_[pr.trial.coeffs, pr.trial.envelope])[0])
        arch = np.asarray(pr.trial.coeffs)
        np.testing.assert_allclose(r.best_coeffs, arch / np.linalg.norm(arch))

    def test_history_nonincreasing(self):
        r = minimize_ratio(small_hardy_1d(), 300, seed=2)
        assert np.all(np.diff(r.history) <= 0)
        assert r.history[-1] == r.best_ratio
        assert r.evaluations <= 301

    def test_best_coeffs_reproduce_ratio(self):
        pr = small_hardy_1d()
        r = minimize_ratio(pr, 300, seed=4)
        again = pr.evaluate(np.r_[r.best_coeffs, r.best_envelope])[0]
        assert again == pytest.approx(r.best_ratio, rel=1e-12)

    def test_deterministic(self):
        a = minimize_ratio(small_hardy_1d(), 200, seed=9)
        b = minimize_ratio(small_hardy_1d(), 200, seed=9)
        assert a.best_ratio == b.best_ratio and a.history == b.history

    def test_reduced_ratio_matches_quadrature(self):
        # exact integrals of x^-2 g^2 and g'^2 against the 1D reduction
        from scipy.integrate import quad

        pr = small_hardy_1d()
        u = pr.trial_for(np.r_[pr.trial.coeffs, 0.5])
        t0, t1 = u.tau_range
        brk = list(np.exp(u.knots[1:-1]))
        L = quad(lambda t: (u.profile(np.array([t]))[0][0] / t) ** 2, t0, t1, points=brk, limit=400)[0]
        R = quad(lambda t: u.profile(np.array([t]))[1][0] ** 2, t0, t1, points=brk, limit=400)[0]
        assert pr.evaluate(np.r_[pr.trial.coeffs, 0.5])[0] == pytest.approx(R / L, rel=1e-8)

    def test_hardy_i_exp_respects_bound(self):
        w = make_weight("exp", 2, gamma=1.0)
        tr = SeparableTrial((0.2, 1.0, 1.0, 0.5, 0.2), tuple(np.linspace(-0.5, 3.0, 9)), 2, cutoff=2.0)
        pr = RayleighProblem(make_case("hardy_i"), tr, 2.0, w, Z2)
        r = minimize_ratio(pr, 40, seed=1)
        assert r.best_ratio >= 2.0**-2 - 1e-3
        assert not r.flagged
        rep = evaluate_case(make_case("hardy_i"), w, Z2, tr.with_coeffs(r.best_coeffs), 2.0, 1e-6)
        assert rep.ratio == pytest.approx(r.best_ratio, rel=1e-6)

    def test_reduce_1d_hardy_i(self):
        w = make_weight("exp", 2, gamma=1.0)
        tr = SeparableTrial((0.2, 1.0, 1.0, 0.5, 0.2), tuple(np.linspace(-0.5, 3.0, 9)), 1)
        pr = RayleighProblem(make_case("hardy_i"), tr, 2.0, w, reduce_1d=True)
        r = minimize_ratio(pr, 400, seed=0)
        assert r.best_ratio >= 0.25

    def test_all_degenerate(self):
        # the trial lies entirely below the boundary, so every left side vanishes
        w = make_weight("exp", 2, gamma=1.0)
        tr = SeparableTrial((1.0, 1.0), tuple(np.linspace(-3.0, -1.0, 6)), 2)
        pr = RayleighProblem(make_case("hardy_i"), tr, 2.0, w, Z2, tol=1e-4)
        with pytest.raises(AllTrialsDegenerate):
            minimize_ratio(pr, 10, seed=0)

    def test_bound_violation_is_flagged(self):
        # pretend the proven bound is far above the true infimum
        bad = small_hardy_1d()
        bad._bound = lambda: 1e3
        r = minimize_ratio(bad, 50, seed=0)
        assert r.flagged and r.notes

    def test_negative_budget(self):
        with pytest.raises(ParameterOutOfRange):
            minimize_ratio(small_hardy_1d(), -1)


class TestProblemValidation:
    def test_needs_two_coefficients(self):
        with pytest.raises(BadParameters):
            RayleighProblem(make_case("hardy_i"), SeparableTrial((1.0,), (0, 1, 2, 3, 4), 2), 2.0,
                            make_weight("exp", 2), Z2)

    def test_vanishing_trial_above_boundary(self):
        tr = SeparableTrial((1.0, 1.0), (-1.0, 0.0, 1.0, 2.0, 3.0, 4.0), 2)
        with pytest.raises(BadParameters):
            RayleighProblem(make_case("hardy_i"), tr, 2.0, make_weight("exp", 2), Z2,
                            constraint=Constraint.VANISH_AT_BOUNDARY)

    def test_reduce_rejects_xprime_weight(self):
        tr = SeparableTrial((1.0, 1.0), (0.0, 1.0, 2.0, 3.0, 4.0, 5.0), 2)
        with pytest.raises(IncompatibleCase):
            RayleighProblem(make_case("hardy_i"), tr, 2.0, make_weight("power", 2, gamma=1.0, beta=0.5),
                            reduce_1d=True)

    def test_envelope_needs_log_knots(self):
        tr = SeparableTrial((1.0, 1.0), (0.0, 1.0, 2.0, 3.0, 4.0, 5.0), 2)
        with pytest.raises(BadParameters):
            RayleighProblem(make_case("hardy_i"), tr, 2.0, make_weight("exp", 2), Z2, optimize_envelope=True)


class TestEigen:
    def test_dirichlet_laplacian(self):
        lam, v = eig_best_constant_1d(Weight1D.constant(), BC.DIRICHLET_AT_ZERO, L=1.0, M=2000)
        assert lam == pytest.approx(math.pi**2, rel=5e-3)
        t = fem_grid(1.0, 2000)
        # eigenvector is sin(pi t), normalized in L^2
        np.testing.assert_allclose(v, math.sqrt(2) * np.sin(math.pi * t), atol=1e-5)

    def test_free_end(self):
        # u'(0) = 0, u(1) = 0: first mode cos(pi t / 2)
        lam, _ = eig_best_constant_1d(Weight1D.constant(), BC.FREE, L=1.0, M=1000)
        assert lam == pytest.approx(math.pi**2 / 4, rel=1e-5)

    def test_hardy_pair(self):
        lam, _ = eig_best_constant_1d(Weight1D.hardy(), BC.DIRICHLET_AT_ZERO, L=50.0, M=4000)
        assert 0.25 <= lam <= 0.2625

    def test_richardson_order(self):
        pair = Weight1D(lambda t: np.ones_like(t), lambda t: 1.0 + t)
        lam = [eig_best_constant_1d(pair, "dirichlet_at_zero", 1.0, M)[0] for M in (100, 200, 400)]
        assert 3.5 <= (lam[0] - lam[1]) / (lam[1] - lam[2]) <= 4.5

    @pytest.mark.parametrize("L1,L2", [(5.0, 50.0), (50.0, 500.0), (1.0, 2.0)])
    def test_monotone_in_L(self, L1, L2):
        a = eig_best_constant_1d(Weight1D.hardy(), L=L1, M=800)[0]
        b = eig_best_constant_1d(Weight1D.hardy(), L=L2, M=800)[0]
        assert b <= a + 1e-8

    def test_monotone_in_L_uniform_grid(self):
        pair = Weight1D(lambda t: np.ones_like(t), lambda t: 1.0 + t)
        a = eig_best_constant_1d(pair, L=1.0, M=400)[0]
        b = eig_best_constant_1d(pair, L=2.0, M=800)[0]
        assert b <= a + 1e-8

    def test_power_pair_constant(self):
        # int t^g u'^2 >= ((g - 1)/2)^2 int t^(g-2) u^2 for Dirichlet u
        lam, _ = eig_best_constant_1d(Weight1D.power(3.0), L=10.0, M=4000)
        assert 1.0 <= lam <= 1.0 + 5e-3

    def test_from_weight(self):
        w = make_weight("exp", 2, gamma=1.0)
        lam, _ = eig_best_constant_1d(Weight1D.from_weight(w), BC.FREE, L=10.0, M=1000)
        assert lam >= 0.25

    def test_nonpositive_weight(self):
        pair = Weight1D(lambda t: np.ones_like(t), lambda t: t - 0.5)
        with pytest.raises(SolverFailure):
            eig_best_constant_1d(pair, L=1.0, M=100)

    def test_free_end_with_singular_mass(self):
        with pytest.raises(SolverFailure):
            eig_best_constant_1d(Weight1D.hardy(), BC.FREE, L=1.0, M=100)

    def test_bad_sizes(self):
        with pytest.raises(ParameterOutOfRange):
            eig_best_constant_1d(Weight1D.constant(), L=1.0, M=8)
        with pytest.raises(ParameterOutOfRange):
            eig_best_constant_1d(Weight1D.constant(), L=0.0, M=100)


class TestPareto:
    W = make_weight("decreasing_shifted_power", 2, gamma=0.0, p=2.0)

    @pytest.fixture(scope="class")
    @staticmethod
    def suite():
        wide = [
            SeparableTrial((1.0, 1.0, 1.0, 0.6, 0.2), tuple(np.linspace(-1.0, 8.0 + k, 9)), 2, cutoff=4.0 + k)
            for k in range(3)
        ]
        return bump_suite(2, 12, seed=5) + wide

    def test_header_pair_feasible(self, suite):
        pts = ab_pareto(make_case("hardy_ii"), [1.0, 2.0, 4.0, 8.0], suite, self.W, Z2, 2.0)
        at4 = [pt for pt in pts if pt.A == 4.0][0]
        assert at4.B_min <= 2.0 + 1e-3
        assert at4.flag == "bounded"

    def test_nonincreasing(self, suite):
        pts = ab_pareto(make_case("hardy_ii"), [0.5, 1.0, 2.0, 4.0, 8.0], suite, self.W, Z2, 2.0)
        B = [pt.B_min for pt in pts]
        assert all(b2 <= b1 for b1, b2 in zip(B, B[1:]))

    def test_zero_A_unbounded(self):
        trials = [RadialBump((0.0, 2.0), 0.5), RadialBump((0.0, 0.0), 1.0)]
        pts = ab_pareto(make_case("hardy_ii"), [0.0, 4.0], trials, self.W, Z2, 2.0)
        assert pts[0].flag == "unbounded" and math.isinf(pts[0].B_min)

    def test_empty_suite(self):
        with pytest.raises(EmptySuite):
            ab_pareto(make_case("hardy_ii"), [1.0], [], self.W, Z2, 2.0)

    def test_needs_hardy_ii(self):
        with pytest.raises(IncompatibleCase):
            ab_pareto(make_case("hardy_i"), [1.0], [RadialBump((0.0, 0.0), 1.0)], make_weight("exp", 2), Z2, 2.0)

    def test_grid_increasing(self):
        with pytest.raises(ParameterOutOfRange):
            ab_pareto(make_case("hardy_ii"), [2.0, 1.0], [RadialBump((0.0, 0.0), 1.0)], self.W, Z2, 2.0)
