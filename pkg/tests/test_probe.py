import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad as squad
from scipy.special import gamma as Gamma

from hardylab.errors import BadParameters, FitAmbiguous, ParameterOutOfRange
from hardylab.probe import (
    Classification,
    Regime,
    classify_singular,
    default_eps,
    default_plateau,
    divergence_scan,
)
from hardylab.testfn import Plateau, smoothstep


def sin_moment(a):
    """Integral of sin(theta)^a over (0, pi)."""
    return math.sqrt(math.pi) * Gamma((a + 1) / 2) / Gamma(a / 2 + 1)


def plateau_radial(r):
    s, ds = smoothstep(np.array([(r - 1.0) / 1.0]))
    return 1.0 - float(s[0]), -float(ds[0])


def polar_oracle(weight_exp, p, use_grad):
    """Half-plane integral of x_2^a |u|^p (or |grad u|^p) for the default plateau."""
    def radial(r):
        v, dv = plateau_radial(r)
        return (abs(dv) if use_grad else abs(v)) ** p * r ** (weight_exp + 1)

    return sin_moment(weight_exp) * squad(radial, 0, 2, points=[1.0], epsabs=1e-13, epsrel=1e-12)[0]


class TestClassify:
    @pytest.mark.parametrize("g,p,expected", [
        (3.0, 2.0, Regime.INEQUALITY_HOLDS),
        (1.0, 2.0, Regime.FAILS_BY_DIVERGENCE),
        (0.0, 2.0, Regime.FAILS_BY_DIVERGENCE),
        (2.0001, 3.0, Regime.INEQUALITY_HOLDS),
    ])
    def test_examples(self, g, p, expected):
        assert classify_singular(g, p) == expected

    def test_p_range(self):
        with pytest.raises(ParameterOutOfRange):
            classify_singular(1.0, 1.0)

    @given(g=st.floats(-5, 10), p=st.floats(1.01, 6))
    def test_threshold(self, g, p):
        assert (classify_singular(g, p) == Regime.INEQUALITY_HOLDS) == (g > p - 1)


class TestScan:
    def test_power_divergence_classical(self):
        r = divergence_scan(0.0, 2.0)
        assert r.classification == Classification.POWER_DIVERGENCE
        assert r.fitted_exponent == pytest.approx(1.0, rel=0.1)
        assert r.fit_residual < 0.05
        assert r.agrees and r.rhs_finite

    def test_log_divergence(self):
        r = divergence_scan(1.0, 2.0)
        assert r.classification == Classification.LOG_DIVERGENCE
        # near the boundary each halving adds ln 2 times the integral of u^2 along x_N = 0
        line = 2 * squad(lambda r: plateau_radial(r)[0] ** 2, 0, 2, points=[1.0])[0]
        assert r.increments[-1] / math.log(2.0) == pytest.approx(line, rel=1e-4)

    def test_converges_to_polar_oracle(self):
        r = divergence_scan(1.5, 2.0)
        assert r.classification == Classification.CONVERGES_TO
        assert r.increments[-1] < 1e-6
        assert r.limit == pytest.approx(polar_oracle(-0.5, 2.0, False), abs=1e-5)
        assert r.notes

    @pytest.mark.parametrize("g", [0.0, 1.5])
    def test_rhs_polar_oracle(self, g):
        r = divergence_scan(g, 2.0)
        assert r.rhs_value == pytest.approx(polar_oracle(g, 2.0, True), rel=1e-7)

    @pytest.mark.parametrize("p", [2.0, 3.0])
    @pytest.mark.parametrize("shift", [2.0, 1.5, 1.25])
    def test_fitted_exponent(self, p, shift):
        r = divergence_scan(p - shift, p)
        assert r.classification == Classification.POWER_DIVERGENCE
        assert r.fitted_exponent == pytest.approx(shift - 1.0, rel=0.1)
        assert r.predicted_exponent == pytest.approx(shift - 1.0)

    @pytest.mark.parametrize("p", [2.0, 3.0])
    @pytest.mark.parametrize("shift", [2.0, 1.5, 1.0, 0.75, 0.5, -1.0])
    def test_agreement_with_classifier(self, p, shift):
        r = divergence_scan(p - shift, p)
        assert r.agrees
        assert r.rhs_finite

    def test_integrals_increase_as_eps_shrinks(self):
        r = divergence_scan(0.5, 2.0)
        assert np.all(np.diff(r.integrals) > 0)
        assert len(r.integrals) == len(r.eps_values)

    def test_three_dimensions(self):
        r = divergence_scan(0.0, 2.0, default_plateau(3))
        assert r.classification == Classification.POWER_DIVERGENCE
        assert r.fitted_exponent == pytest.approx(1.0, rel=0.1)

    def test_report_dict(self):
        d = divergence_scan(0.0, 2.0, check_rhs=False).to_dict()
        assert d["classification"] == "power_divergence"
        assert d["label"].startswith("PowerDivergence(")
        assert d["rhs_value"] is None


class TestScanInputs:
    def test_default_eps(self):
        e = default_eps()
        assert e[0] == 2.0**-4 and e[-1] == 2.0**-14 and e.size == 11

    def test_too_few_eps(self):
        with pytest.raises(ParameterOutOfRange):
            divergence_scan(0.0, 2.0, eps_seq=[0.1, 0.05, 0.02])

    def test_eps_not_decreasing(self):
        with pytest.raises(ParameterOutOfRange):
            divergence_scan(0.0, 2.0, eps_seq=[0.1, 0.2, 0.05, 0.02, 0.01])

    def test_plateau_off_boundary(self):
        with pytest.raises(BadParameters):
            divergence_scan(0.0, 2.0, Plateau(0.5, 1.0, (0.0, 3.0)))

    def test_irregular_sequence_is_ambiguous(self):
        # eps spread over two very different scales: the increment curve is
        # not a single power law, so no regime passes its threshold
        eps = [0.9, 0.8, 0.7, 1e-3, 1e-6, 1e-9]
        with pytest.raises(FitAmbiguous) as exc:
            divergence_scan(0.0, 2.0, Plateau(0.2, 1.0, (0.0, 0.0)), eps_seq=eps)
        assert exc.value.report.classification is None
