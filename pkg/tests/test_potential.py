import math

import numpy as np
import pytest

from scmn import channel as ch
from scmn import potential as P
from scmn.de_core import DegreeProfile
from scmn.errors import DomainError, ExcludedPointError, ValidationError

D422 = DegreeProfile(4, 2, 2)
D633 = DegreeProfile(6, 3, 3)

# 40-digit mpmath values at x1 = 1/8 for (4,2,2)
X2_EIGHTH = 0.2440710539815455
PSI_EIGHTH = 0.1774447389092416
PB_EIGHTH = 0.5794083009626592
EPS_DEC_EIGHTH = 0.7438926694898562


def eps_dec_closed(d, x1):
    x2 = np.asarray(P.x2_of_x1(d, x1))
    psi = np.asarray(P.psi_of_x1(d, x1))
    r = np.sqrt(x2 / psi ** ((d.d_g - 1) / d.d_g))
    return (2 - psi) * r / (2 - psi * r)


class TestPotentialU:
    def test_zero_at_origin(self, model, profile):
        assert P.potential_U(profile, model, 0.0, 0.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_trivial_point_formula(self, model, profile):
        for e in (0.1, 0.5, 0.9):
            x2 = float(ch.phi(model, 1.0, e))
            assert P.potential_U(profile, model, 1.0, x2, e) == pytest.approx(
                P.trivial_U(profile, model, e), abs=1e-14
            )

    def test_two_forms_agree(self, model, profile):
        rng = np.random.default_rng(20150125)
        x1, x2, e = rng.random((3, 10_000))
        a = P.potential_U(profile, model, x1, x2, e)
        b = P.potential_U_general(profile, model, x1, x2, e)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            P.potential_U(D422, ch.bec(), 1.1, 0.5, 0.5)

    def test_stationary_at_fixed_points(self, model):
        # fixed points of f(g(.)) are critical points of U
        x1 = 0.3
        x2 = P.x2_of_x1(D422, x1)
        e = P.eps_of_x1(D422, model, x1)
        h = 1e-6
        d1 = (P.potential_U(D422, model, x1 + h, x2, e) - P.potential_U(D422, model, x1 - h, x2, e)) / (2 * h)
        d2 = (P.potential_U(D422, model, x1, x2 + h, e) - P.potential_U(D422, model, x1, x2 - h, e)) / (2 * h)
        assert abs(d1) < 1e-8 and abs(d2) < 1e-8


class TestCurve:
    def test_frozen_values(self):
        assert P.x2_of_x1(D422, 0.125) == pytest.approx(X2_EIGHTH, abs=1e-15)
        assert P.psi_of_x1(D422, 0.125) == pytest.approx(PSI_EIGHTH, abs=1e-15)
        assert P.phi_bracket_of_x1(D422, 0.125) == pytest.approx(PB_EIGHTH, abs=1e-15)
        assert P.eps_of_x1(D422, ch.dec(), 0.125) == pytest.approx(EPS_DEC_EIGHTH, abs=1e-11)
        assert P.eps_of_x1(D422, ch.bec(), 0.125) == pytest.approx(PB_EIGHTH, abs=1e-11)

    def test_limit_near_one(self):
        # x2 -> 1 - 1/sqrt(3) as x1 -> 1 for (4,2,2)
        assert P.x2_of_x1(D422, 1 - 1e-9) == pytest.approx(1 - 1 / math.sqrt(3), abs=1e-8)

    def test_first_equation_by_construction(self, profile):
        x1 = P.x1_grid(500)
        x2 = P.x2_of_x1(profile, x1)
        ok = (x2 >= 0) & (x2 <= 1)
        lhs = (1 - (1 - x1[ok]) ** (profile.d_r - 1) * (1 - x2[ok]) ** profile.d_g) ** (profile.d_l - 1)
        assert np.max(np.abs(lhs - x1[ok])) < 1e-12

    def test_dec_matches_closed_form(self, profile):
        c = P.curve_arrays(profile, ch.dec(), 1000)
        v = c.valid
        assert v.sum() > 100
        assert np.max(np.abs(c.eps[v] - eps_dec_closed(profile, c.x1[v]))) < 1e-8

    def test_bec_eps_is_bracket(self, profile):
        c = P.curve_arrays(profile, ch.bec(), 1000)
        assert np.max(np.abs(c.eps[c.valid] - c.phi_bracket[c.valid])) < 1e-10

    def test_residuals(self, model, profile):
        c = P.curve_arrays(profile, model, 2000)
        r1, r2 = P.fixed_point_residuals(profile, model, c.x1[c.valid], c.x2[c.valid], c.eps[c.valid])
        assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-9

    def test_excluded_points(self):
        c = P.curve_arrays(D633, ch.bec(), 1000)
        # bracket above phi(psi; 1): psi exists but no eps solves the equation
        assert not c.valid[0] and c.phi_bracket[0] > 1.0
        assert P.eps_of_x1(D633, ch.bec(), float(c.x1[0])) is None
        # x2[x1] < 0: not a fixed point at all
        k = int(np.argmax(c.x2 < 0))
        assert c.x2[k] < 0 and not c.valid[k]
        with pytest.raises(ExcludedPointError):
            P.psi_of_x1(D633, float(c.x1[k]))
        with pytest.raises(ExcludedPointError):
            P.phi_bracket_of_x1(D633, float(c.x1[k]))

    def test_open_interval(self):
        for bad in (0.0, 1.0):
            with pytest.raises(DomainError):
                P.x2_of_x1(D422, bad)

    def test_samples(self):
        s = P.potential_curve(D633, ch.pr2(), 64)
        assert len(s) == 64
        assert set(s[0].as_dict()) == {"x1", "x2", "psi", "phi_bracket", "eps", "U", "valid"}
        assert any(p.valid for p in s) and any(not p.valid for p in s)
        assert all((p.U is None) == (not p.valid) for p in s)

    def test_solve_eps_out_of_range(self):
        e = P.solve_eps(ch.dec(), np.array([0.5, 0.5]), np.array([0.3, 1.5]))
        assert np.isfinite(e[0]) and np.isnan(e[1])

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            P.x1_grid(1)


class TestCurveProperties:
    def test_trivial_sign_change(self, model, profile):
        es = ch.sir_limit(model, profile.design_rate)
        assert abs(P.trivial_U(profile, model, es)) < 1e-8
        assert np.all(P.trivial_U(profile, model, np.linspace(0, es, 50, endpoint=False)) > 0)
        assert np.all(P.trivial_U(profile, model, np.linspace(es, 1, 51)[1:]) < 0)

    def test_bec_positive(self, profile):
        c = P.curve_arrays(profile, ch.bec(), 10_000)
        assert np.min(c.U[c.valid]) > 0

    def test_bec_positive_322(self):
        c = P.curve_arrays(DegreeProfile(3, 2, 2), ch.bec(), 10_000)
        assert np.min(c.U[c.valid]) > 0

    @pytest.mark.parametrize("name", ["dec", "pr2"])
    def test_gec_domination(self, profile, name):
        cg = P.curve_arrays(profile, ch.builtin(name), 10_000)
        cb = P.curve_arrays(profile, ch.bec(), 10_000)
        v = cg.valid
        assert np.all(cb.valid[v])
        assert np.min(cg.U[v] - cb.U[v]) >= -1e-12


class TestThresholds:
    def test_potential_threshold_equals_sir_limit(self, model, profile):
        rep = P.potential_threshold(profile, model)
        assert abs(rep.eps_star - ch.sir_limit(model, profile.design_rate)) < 1e-5
        assert rep.min_nontrivial_U > 0 and rep.eps_nonpositive is None

    def test_threshold_grid_validation(self):
        with pytest.raises(ValidationError):
            P.potential_threshold(D422, ch.bec(), 50)

    def test_fixed_points_bec(self):
        c = P.curve_arrays(D422, ch.bec(), 1024)
        pts = P.fixed_point_potentials(D422, ch.bec(), 0.4, c)
        assert pts[0][0] == 1.0
        for x1, x2, _ in pts[1:]:
            assert P.eps_of_x1(D422, ch.bec(), x1) == pytest.approx(0.4, abs=1e-9)

    def test_energy_gap(self):
        # grid-aligned eps below eps* = 0.5
        es = np.linspace(0, 1, 129)[:64:8]
        gaps = [P.energy_gap(D422, ch.bec(), float(e), 512) for e in es]
        assert all(g >= 0 for g in gaps)
        assert np.all(np.diff(gaps) <= 0.0)
        assert P.energy_gap(D422, ch.bec(), 0.4, 512) > 0

    def test_energy_gap_resolution(self):
        a = P.energy_gap(D422, ch.bec(), 0.4, 512)
        b = P.energy_gap(D422, ch.bec(), 0.4, 1024, eps_grid_size=129)
        assert abs(a - b) < 1e-3

    def test_energy_gap_domain(self):
        with pytest.raises(DomainError):
            P.energy_gap(D422, ch.bec(), 1.2)

    def test_channel_independence(self):
        x1 = P.x1_grid(777)
        a = P.curve_arrays(D422, ch.dec(), 777)
        b = P.curve_arrays(D422, ch.pr2(), 777)
        assert np.array_equal(a.x2, b.x2) and np.array_equal(P.x2_of_x1(D422, x1), a.x2)
        assert np.array_equal(a.psi, b.psi, equal_nan=True)
        assert np.array_equal(a.phi_bracket, b.phi_bracket, equal_nan=True)

    def test_uncoupled_threshold_zero(self):
        assert P.uncoupled_threshold(D422, ch.bec(), 1e-2) == 0.0
