import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import NonIntegrableSingularity, TolNotReached
from hardylab.geometry import make_domain
from hardylab.quad import (
    GAUSS_W,
    KRONROD_W,
    NODES,
    SingularHandling,
    grading_for_exponent,
    integrate_box,
    integrate_boundary,
    integrate_interior,
    integrate_truncated,
    mc_oracle,
)
from hardylab.testfn import RadialBump

ZERO2 = make_domain("zero", 2)
ZERO3 = make_domain("zero", 3)
UNIT2 = ([0.0, 0.0], [1.0, 1.0])


def one(x):
    return np.ones(x.shape[0])


class TestRule:
    @pytest.mark.parametrize("k", range(23))
    def test_kronrod_exact(self, k):
        assert np.dot(KRONROD_W, NODES**k) == pytest.approx(1 / (k + 1), abs=1e-15)

    @pytest.mark.parametrize("k", range(14))
    def test_gauss_exact(self, k):
        assert np.dot(GAUSS_W, NODES**k) == pytest.approx(1 / (k + 1), abs=1e-15)

    def test_gauss_nodes_are_embedded(self):
        nz = NODES[GAUSS_W > 0]
        np.testing.assert_allclose(np.sort(nz), 0.5 * (1 + np.polynomial.legendre.leggauss(7)[0]), atol=1e-15)

    def test_grading(self):
        assert grading_for_exponent(0.5) == 2
        assert grading_for_exponent(0.9) == 10
        assert grading_for_exponent(0.0) == 2


class TestInterior:
    def test_constant(self):
        r = integrate_interior(one, ZERO2, UNIT2, tol=1e-10)
        assert r.value == pytest.approx(1.0, abs=1e-9)

    def test_graded_sqrt(self):
        r = integrate_interior(lambda x: x[:, -1] ** -0.5, ZERO2, UNIT2, tol=1e-8, singular_hint=SingularHandling.GRADED)
        assert r.value == pytest.approx(2.0, abs=1e-6)
        assert r.singular_handling == SingularHandling.GRADED

    def test_strong_singularity_graded(self):
        g = grading_for_exponent(0.9)
        r = integrate_interior(lambda x: x[:, -1] ** -0.9, ZERO2, UNIT2, 1e-8, SingularHandling.GRADED, grading=g)
        assert r.value == pytest.approx(10.0, rel=1e-7)

    def test_polar(self):
        # |x'|^(-1/2) over x' in [-1,1], x_N in [0,1]: 2 * 2
        f = lambda x: np.abs(x[:, 0]) ** -0.5
        r = integrate_interior(f, ZERO2, ([-1, 0], [1, 1]), 1e-9, SingularHandling.POLAR)
        assert r.value == pytest.approx(4.0, rel=1e-8)

    def test_polar_3d(self):
        # |x'|^(-1) over the unit disc-containing square [-1,1]^2 times [0,1]
        f = lambda x: np.hypot(x[:, 0], x[:, 1]) ** -1.0
        r = integrate_interior(f, ZERO3, ([-1, -1, 0], [1, 1, 1]), 1e-8, SingularHandling.POLAR)
        exact = 8 * np.arcsinh(1.0)  # 4 * integral over [0,1]^2 of 1/r
        assert r.value == pytest.approx(exact, rel=1e-7)

    def test_epigraph_limit(self):
        # region above x_N = x_1^2 inside [0,1]^2 has area 2/3
        d = make_domain("paraboloid", 2, a=1.0)
        assert integrate_interior(one, d, UNIT2, 1e-10).value == pytest.approx(2 / 3, abs=1e-9)

    def test_cone_kink(self):
        d = make_domain("cone", 2, a=1.0)
        r = integrate_interior(one, d, ([-1, 0], [1, 1]), 1e-10)
        assert r.value == pytest.approx(1.0, abs=1e-9)
        assert r.cells_used <= 4

    def test_non_integrable_graded(self):
        with pytest.raises(NonIntegrableSingularity):
            integrate_interior(lambda x: x[:, -1] ** -2.0, ZERO2, UNIT2, 1e-8, SingularHandling.GRADED)

    def test_non_integrable_plain(self):
        with pytest.raises(NonIntegrableSingularity):
            integrate_interior(lambda x: 1 / x[:, -1], ZERO2, UNIT2, 1e-8)

    def test_budget(self):
        u = RadialBump((0.0, 0.0), 1.0)
        with pytest.raises(TolNotReached) as ei:
            integrate_interior(lambda x: u.value(x) ** 2, ZERO2, ([-1, -1], [1, 1]), 1e-12, max_cells=5)
        assert ei.value.value is not None and ei.value.cells_used >= 5

    def test_vector_valued(self):
        f = lambda x: np.stack([np.ones(len(x)), x[:, 0], x[:, 1] ** 2], -1)
        r = integrate_interior(f, ZERO2, UNIT2, 1e-10)
        np.testing.assert_allclose(r.value, [1, 0.5, 1 / 3], atol=1e-12)
        assert r.error_estimate.shape == (3,)

    def test_flattened_route(self):
        d = make_domain("sine", 2, a=0.5, k=1.0)
        u = RadialBump((0.1, 0.2), 1.0)
        b = (u.support_box.lo, u.support_box.hi)
        f = lambda x: u.value(x) ** 2 * np.exp(x[:, -1])
        a = integrate_interior(f, d, b, 1e-10)
        c = integrate_interior(f, d, b, 1e-10, coordinates="flattened")
        assert a.value == pytest.approx(c.value, rel=1e-9)


class TestBoundary:
    @pytest.mark.parametrize("factor", [True, False])
    def test_flat_square(self, factor):
        r = integrate_boundary(one, ZERO3, ([-1, -1], [1, 1]), 1e-10, factor)
        assert r.value == pytest.approx(4.0, abs=1e-9)

    @pytest.mark.parametrize("factor,expect", [(True, np.sqrt(2)), (False, 1.0)])
    def test_cone_factor(self, factor, expect):
        d = make_domain("cone", 2, a=1.0)
        assert integrate_boundary(one, d, ([0.0], [1.0]), 1e-10, factor).value == pytest.approx(expect, abs=1e-9)

    def test_full_box_accepted(self):
        r = integrate_boundary(one, ZERO2, ([0.0, -3.0], [2.0, 3.0]), 1e-10)
        assert r.value == pytest.approx(2.0)

    def test_polar_boundary(self):
        r = integrate_boundary(lambda xp: np.abs(xp[:, 0]) ** -0.5, ZERO2, ([-1.0], [4.0]), 1e-10, singular_hint=SingularHandling.POLAR)
        assert r.value == pytest.approx(2 + 4, rel=1e-9)


class TestTruncated:
    def test_inverse_square(self):
        v = integrate_truncated(lambda x: x[:, -1] ** -2.0, ZERO2, UNIT2, 0.01)
        assert v == pytest.approx(99.0, abs=1e-4)

    def test_log(self):
        v = integrate_truncated(lambda x: 1 / x[:, -1], ZERO2, UNIT2, np.exp(-1))
        assert v == pytest.approx(1.0, abs=1e-6)

    def test_convergent_sequence(self):
        vals = [integrate_truncated(lambda x: x[:, -1] ** -0.5, ZERO2, UNIT2, 4.0**-k) for k in range(2, 12)]
        diffs = np.abs(np.diff(vals))
        assert np.all(np.diff(diffs) < 0)
        assert abs(vals[-1] - 2.0) < 2 * 2.0**-10

    def test_slab(self):
        v = integrate_truncated(lambda x: x[:, -1] ** -2.0, ZERO2, UNIT2, 0.1, 0.5)
        assert v == pytest.approx(10 - 2, rel=1e-9)

    def test_graph_offset(self):
        d = make_domain("sine", 2, a=0.3, k=2.0, shift=0.1)
        f = lambda x: (x[:, -1] - d.psi(x[:, :-1])) ** -2.0
        v = integrate_truncated(f, d, ([0, -1], [1, 10]), 0.01)
        exact = integrate_box(lambda xp: 1 / 0.01 - 1 / (10 - d.psi(xp)), [0.0], [1.0], 1e-12).value
        assert v == pytest.approx(exact, rel=1e-8)


class TestMonteCarlo:
    def test_constant(self):
        v, se = mc_oracle(one, ([0, 0], [1, 1]), 1000, seed=0)
        assert v == pytest.approx(1.0, abs=1e-15) and se == pytest.approx(0.0, abs=1e-15)

    def test_se_scaling(self):
        u = RadialBump((0.0, 0.0), 1.0)
        b = ([-1, -1], [1, 1])
        _, s1 = mc_oracle(lambda x: u.value(x) ** 2, b, 50_000, seed=3)
        _, s4 = mc_oracle(lambda x: u.value(x) ** 2, b, 200_000, seed=3)
        assert 0.4 <= s4 / s1 <= 0.6

    def test_deterministic(self):
        f = lambda x: np.sin(x[:, 0]) ** 2
        assert mc_oracle(f, UNIT2, 5000, seed=9) == mc_oracle(f, UNIT2, 5000, seed=9)

    def test_bump_squared_matches_quadrature(self):
        u = RadialBump((0.2, 0.3), 0.9)
        b = (u.support_box.lo, u.support_box.hi)
        f = lambda x: u.value(x) ** 2
        q = integrate_interior(f, ZERO2, b, 1e-10).value
        v, se = mc_oracle(f, b, 10**6, seed=1, domain=ZERO2)
        assert abs(v - q) < 3 * se

    def test_graded_and_folded_unbiased(self):
        f = lambda x: x[:, -1] ** -0.5 * np.abs(x[:, 0]) ** -0.5 * (1 + x[:, 0] ** 2)
        v, se = mc_oracle(f, ([-1, 0], [1, 1]), 200_000, seed=2, domain=ZERO2, graded=True, fold_xprime=True)
        assert abs(v - 9.6) < 4 * se and 0 < se < 0.01


class TestProperties:
    @settings(max_examples=15, deadline=None)
    @given(cx=st.floats(-3, 3), cy=st.floats(-3, 3))
    def test_translation_invariance(self, cx, cy):
        u = RadialBump((0.0, 0.0), 1.0)
        f = lambda x: u.value(x) ** 3 * (1 + x[:, 0] ** 2)
        c = np.array([cx, cy])
        g = lambda x: f(x - c)
        a = integrate_box(f, [-1, -1], [1, 1], 1e-12).value
        b = integrate_box(g, c - 1, c + 1, 1e-12).value
        assert b == pytest.approx(a, rel=1e-10)

    @pytest.mark.parametrize("N", [2, 3])
    def test_fubini(self, N):
        g = lambda xp: np.exp(-np.sum(xp**2, axis=-1)) * (1 + xp[..., 0])
        h = lambda t: np.cos(t) ** 2 / (1 + t)
        d = make_domain("zero", N)
        lo, hi = np.r_[np.full(N - 1, -1.0), 0.0], np.r_[np.full(N - 1, 1.5), 2.0]
        full = integrate_interior(lambda x: g(x[:, :-1]) * h(x[:, -1]), d, (lo, hi), 1e-12).value
        gx = integrate_box(g, lo[:-1], hi[:-1], 1e-13).value
        hx = integrate_box(lambda t: h(t[:, 0]), [0.0], [2.0], 1e-13).value
        assert full == pytest.approx(gx * hx, rel=1e-8)

    def test_refinement_consistency(self):
        u = RadialBump((0.1, 0.25), 1.1)
        f = lambda x: u.value(x) ** 2 * np.exp(x[:, -1])
        b = (u.support_box.lo, u.support_box.hi)
        prev = integrate_interior(f, ZERO2, b, 1e-4)
        for tol in [5e-5, 2.5e-5, 1.25e-5, 6e-6, 3e-6]:
            cur = integrate_interior(f, ZERO2, b, tol)
            assert abs(cur.value - prev.value) <= prev.error_estimate
            prev = cur

    def test_error_decreases_under_refinement(self):
        u = RadialBump((0.0, 0.0, 0.4), 1.0)
        f = lambda x: u.value(x) ** 2
        b = (u.support_box.lo, u.support_box.hi)
        e1 = integrate_interior(f, ZERO3, b, 1e-2, initial=2).error_estimate
        e4 = integrate_interior(f, ZERO3, b, 1e-2, initial=4).error_estimate
        assert e4 <= e1 / 2
