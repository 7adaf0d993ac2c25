import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardylab.errors import BadParameters
from hardylab.testfn import bump_suite, eval_testfn, make_testfn, smoothstep

TRIAL = {"family": "trial", "knots": [-0.5, 0.0, 0.4, 0.9, 1.3, 1.8, 2.5], "coeffs": [0.3, 1.0, -0.4], "N": 3, "cutoff": 1.2}
LOG_TRIAL = {"family": "trial", "knots": list(np.linspace(-3, 3, 9)), "coeffs": [1, 2, 0.5, -1, 0.7], "N": 2, "log_knots": True, "envelope": 0.5}
DESCRIPTORS = [
    {"family": "bump", "center": [0.2, -0.1, 0.3], "R": 0.8},
    {"family": "product_bump", "center": [0.1, 0.5], "radii": [0.7, 1.1]},
    {"family": "plateau", "r_inner": 0.6, "r_outer": 1.4, "center": [0.0, 0.2]},
    TRIAL,
    LOG_TRIAL,
]


def _fd_grad(u, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = h
        g[:, i] = (u.value(x + e) - u.value(x - e)) / (2 * h)
    return g


class TestExamples:
    def test_bump_center(self):
        u = make_testfn({"family": "bump", "center": [0, 0], "R": 1})
        v, g = eval_testfn(u, [0.0, 0.0])
        assert v == 1.0
        np.testing.assert_array_equal(g, 0.0)

    def test_bump_support_edge(self):
        u = make_testfn({"family": "bump", "center": [0, 0], "R": 1})
        v, g = eval_testfn(u, [0.6, 0.8])
        assert v == 0.0
        np.testing.assert_array_equal(g, 0.0)

    def test_plateau_inside(self):
        u = make_testfn({"family": "plateau", "r_inner": 1, "r_outer": 2, "center": [0, 0]})
        v, g = eval_testfn(u, [0.3, 0.4])
        assert v == 1.0
        np.testing.assert_array_equal(g, 0.0)

    def test_plateau_bad(self):
        with pytest.raises(BadParameters):
            make_testfn({"family": "plateau", "r_inner": 2, "r_outer": 1, "center": [0, 0]})

    @pytest.mark.parametrize(
        "desc",
        [
            {"family": "bump", "center": [0, 0], "R": 0},
            {"family": "trial", "knots": [0, 1, 1, 2, 3], "coeffs": [1], "N": 2},
            {"family": "trial", "knots": [0, 1, 2, 3, 4], "coeffs": [1, 2], "N": 2},
            {"family": "heaviside"},
            {"family": "bump", "center": [0, 0]},
        ],
    )
    def test_bad(self, desc):
        with pytest.raises(BadParameters):
            make_testfn(desc)


class TestProperties:
    @pytest.mark.parametrize("desc", DESCRIPTORS)
    def test_gradient_matches_finite_differences(self, desc):
        u = make_testfn(desc)
        b = u.support_box
        x = np.random.default_rng(3).uniform(b.lo, b.hi, size=(100, u.N))
        g = u.grad(x)
        fd = _fd_grad(u, x)
        scale = np.max(np.abs(g))
        assert np.max(np.abs(g - fd)) < 1e-6 * scale

    @pytest.mark.parametrize("desc", DESCRIPTORS)
    def test_vanishes_outside_box(self, desc):
        u = make_testfn(desc)
        b = u.support_box
        lo, hi = np.asarray(b.lo), np.asarray(b.hi)
        rng = np.random.default_rng(4)
        x = rng.uniform(lo - 2, hi + 2, size=(4000, u.N))
        out = ~u.support_box.contains(x)
        v, g = u.evaluate(x[out])
        assert np.all(v == 0) and np.all(g == 0)

    def test_plateau_range(self):
        u = make_testfn(DESCRIPTORS[2])
        x = np.random.default_rng(5).uniform(-2, 2, size=(5000, 2))
        v = u.value(x)
        assert v.min() >= 0 and v.max() <= 1
        r = np.linalg.norm(x - np.array([0.0, 0.2]), axis=1)
        assert np.all(v[r <= 0.6] == 1) and np.all(v[r >= 1.4] == 0)

    def test_continuity_at_support_boundary(self):
        u = make_testfn({"family": "bump", "center": [0, 0], "R": 1})
        r = 1 - np.logspace(-1, -4, 4)
        v, g = u.evaluate(np.column_stack([r, 0 * r]))
        assert np.all(np.diff(v) < 0) and v[-1] < 1e-100 and np.abs(g).max() < 1.0

    def test_smoothstep_endpoints(self):
        s, ds = smoothstep(np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(s, [0, 0.5, 1])
        np.testing.assert_allclose(ds[[0, 2]], 0)

    def test_zero_coeffs(self):
        u = make_testfn({**TRIAL, "coeffs": [0, 0, 0]})
        x = np.random.default_rng(6).uniform(-1, 3, size=(200, 3))
        v, g = u.evaluate(x)
        assert np.all(v == 0) and np.all(g == 0)

    @settings(max_examples=30, deadline=None)
    @given(alpha=st.floats(-5, 5), t=st.floats(-0.4, 2.4))
    def test_linear_in_coeffs(self, alpha, t):
        u = make_testfn(TRIAL)
        ua = make_testfn({**TRIAL, "coeffs": [alpha * c for c in TRIAL["coeffs"]]})
        x = np.array([0.2, -0.3, t])
        assert ua.value(x) == pytest.approx(alpha * u.value(x), rel=1e-12, abs=1e-14)

    def test_scaled_and_dilated(self):
        u = make_testfn(DESCRIPTORS[0])
        x = np.random.default_rng(7).uniform(-1, 1, size=(50, 3))
        np.testing.assert_allclose(u.scaled(-2).value(x), -2 * u.value(x))
        d = u.dilated(2.0)
        np.testing.assert_allclose(d.value(x), u.value(x / 2))
        np.testing.assert_allclose(d.grad(x), u.grad(x / 2) / 2)

    def test_suite_is_seeded(self):
        a = bump_suite(3, 5, seed=11)
        b = bump_suite(3, 5, seed=11)
        assert [s.describe() for s in a] == [s.describe() for s in b]
