import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import GraphsCross, NotDifferentiable
from hardylab.geometry import make_domain, make_two_graph, surface_factor, transform


class TestTransform:
    def test_zero_is_identity(self):
        d = make_domain("zero", 3)
        x = np.array([0.3, -1.2, 4.0])
        np.testing.assert_array_equal(transform(d, x, "flatten"), x)

    def test_sine(self):
        d = make_domain("sine", 2, a=1, k=1)
        np.testing.assert_allclose(transform(d, [np.pi / 2, 3.0], "flatten"), [np.pi / 2, 2.0], atol=1e-15)

    @pytest.mark.parametrize("psi", ["zero", "sine", "paraboloid", "cone"])
    def test_round_trip(self, psi):
        d = make_domain(psi, 3, a=0.7, k=1.3, shift=0.2)
        x = np.random.default_rng(0).uniform(-5, 5, size=(1000, 3))
        back = transform(d, transform(d, x, "flatten"), "unflatten")
        assert np.max(np.abs(back - x)) < 1e-12

    def test_flatten_maps_to_half_space(self):
        d = make_domain("sine", 3, a=0.5, k=2)
        rng = np.random.default_rng(1)
        xp = rng.uniform(-3, 3, size=(200, 2))
        interior = np.column_stack([xp, d.psi(xp) + rng.uniform(1e-3, 2, 200)])
        assert np.all(transform(d, interior, "flatten")[:, -1] > 0)
        bdry = np.column_stack([xp, d.psi(xp)])
        assert np.max(np.abs(transform(d, bdry, "flatten")[:, -1])) < 1e-12


class TestSurfaceFactor:
    def test_flat(self):
        assert surface_factor(make_domain("zero", 3), [0.4, 2.0]) == 1.0

    def test_sine_crest(self):
        assert surface_factor(make_domain("sine", 2, a=1, k=1), [np.pi / 2]) == pytest.approx(1.0, abs=1e-15)

    def test_sine_origin(self):
        assert surface_factor(make_domain("sine", 2, a=1, k=1), [0.0]) == pytest.approx(np.sqrt(2))

    def test_cone_kink(self):
        with pytest.raises(NotDifferentiable):
            surface_factor(make_domain("cone", 2, a=1), [0.0])

    def test_cone_away_from_kink(self):
        assert surface_factor(make_domain("cone", 3, a=1), [0.5, 1.0]) == pytest.approx(np.sqrt(2))


class TestLipschitz:
    def test_bounds(self):
        assert make_domain("zero", 2).lipschitz_bound == 0
        assert make_domain("sine", 2, a=-0.5, k=3).lipschitz_bound == pytest.approx(1.5)
        assert make_domain("paraboloid", 2, a=1).lipschitz_bound is None

    @pytest.mark.parametrize("psi", ["sine", "cone"])
    @settings(max_examples=50, deadline=None)
    @given(x=st.lists(st.floats(-10, 10), min_size=2, max_size=2), y=st.lists(st.floats(-10, 10), min_size=2, max_size=2))
    def test_lipschitz_pairs(self, psi, x, y):
        d = make_domain(psi, 3, a=0.8, k=1.7)
        x, y = np.array(x), np.array(y)
        assert abs(d.psi(x) - d.psi(y)) <= d.lipschitz_bound * np.linalg.norm(x - y) + 1e-12

    @pytest.mark.parametrize("psi", ["sine", "paraboloid", "cone"])
    def test_psi_range_brackets(self, psi):
        d = make_domain(psi, 3, a=-0.9, k=2.3, shift=0.1)
        lo, hi = np.array([-1.3, 0.2]), np.array([0.7, 1.9])
        m, M = d.psi_range(lo, hi)
        pts = np.random.default_rng(2).uniform(lo, hi, size=(5000, 2))
        corners = np.array([[a, b] for a in (lo[0], hi[0]) for b in (lo[1], hi[1])])
        pts = np.vstack([pts, corners])
        v = d.psi(pts)
        assert m <= v.min() + 1e-12 and v.max() <= M + 1e-12
        assert v.min() - m < 0.05 and M - v.max() < 0.05


class TestTwoGraph:
    def test_valid(self):
        tg = make_two_graph(make_domain("zero", 2), make_domain("zero", 2, shift=1.0))
        assert tg.upper.shift == 1.0

    def test_cross(self):
        with pytest.raises(GraphsCross):
            make_two_graph(make_domain("zero", 2), make_domain("zero", 2, shift=-1.0))

    def test_sine_below_constant(self):
        make_two_graph(make_domain("sine", 3, a=1, k=1), make_domain("zero", 3, shift=2.0))

    def test_contains(self):
        tg = make_two_graph(make_domain("zero", 2), make_domain("zero", 2, shift=1.0))
        np.testing.assert_array_equal(tg.contains(np.array([[0, -1.0], [0, 0.5], [0, 2.0]])), [True, False, True])

    def test_reflection(self):
        d = make_domain("sine", 2, a=0.5, k=1, shift=0.3)
        r = d.reflected()
        xp = np.linspace(-3, 3, 7)[:, None]
        np.testing.assert_allclose(r.psi(xp), -d.psi(xp))
