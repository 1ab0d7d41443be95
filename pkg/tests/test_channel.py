import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmn import channel as ch
from scmn.errors import ChannelConfigError, DomainError, NoSolutionError

unit = st.floats(0.0, 1.0, allow_nan=False)
DEC_SIR_LIMIT_HALF = (1.0 + math.sqrt(17.0)) / 8.0


def dec_Phi_shifted_antiderivative(x, e):
    # closed-form antiderivative minus its value at x = 0
    return 4 * e * e / ((1 - e) * (2 - (1 - e) * x)) - 2 * e * e / (1 - e)


class TestPhi:
    def test_bec_is_constant(self):
        assert ch.phi(ch.bec(), 0.3, 0.45) == 0.45

    def test_dec_at_one(self):
        assert ch.phi(ch.dec(), 1.0, 0.5) == pytest.approx(4.0 / 9.0, abs=1e-15)

    def test_erasure_free(self, model):
        x = np.linspace(0, 1, 33)
        assert np.all(np.asarray(ch.phi(model, x, 0.0)) == 0.0)

    def test_fully_erased(self, model):
        assert np.allclose(ch.phi(model, np.linspace(0, 1, 33), 1.0), 1.0)

    @pytest.mark.parametrize("x, eps", [(-0.1, 0.5), (1.1, 0.5), (0.5, -1e-9), (0.5, 1.5), (float("nan"), 0.2)])
    def test_domain(self, model, x, eps):
        with pytest.raises(DomainError):
            ch.phi(model, x, eps)

    def test_monotone_on_grid(self, model):
        g = np.linspace(0, 1, 201)
        table = np.asarray(ch.phi(model, g[None, :], g[:, None]))
        assert np.all(np.diff(table, axis=1) >= 0.0)
        assert np.all(np.diff(table[:, 1:], axis=0) > 0.0)
        assert np.all((table >= 0) & (table <= 1))

    @given(x=unit, e=unit)
    def test_range(self, x, e):
        for name in ch.BUILTIN_NAMES:
            v = ch.phi(ch.builtin(name), x, e)
            assert 0.0 <= v <= 1.0


class TestPhiIntegral:
    def test_bec(self):
        assert ch.phi_integral(ch.bec(), 0.7, 0.4) == pytest.approx(0.28, abs=1e-15)

    def test_dec_definite_integral(self):
        assert ch.phi_integral(ch.dec(), 1.0, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_zero_at_origin(self, model):
        assert ch.phi_integral(model, 0.0, 0.7) == 0.0

    def test_dec_matches_shifted_antiderivative(self):
        for e in np.arange(1, 10) * 0.1:
            for x in np.arange(1, 11) * 0.1:
                assert float(ch.phi_integral(ch.dec(), x, e)) == pytest.approx(
                    dec_Phi_shifted_antiderivative(x, e), abs=1e-12
                )

    def test_dec_at_eps_one(self):
        # removable (1 - eps) singularity of the unsimplified antiderivative
        assert ch.phi_integral(ch.dec(), 0.6, 1.0) == pytest.approx(0.6, abs=1e-15)
        assert ch.phi_integral_quad(ch.dec(), 0.6, 1.0) == pytest.approx(0.6, abs=1e-10)

    def test_quadrature_matches_closed_form_fine_grid(self, model):
        for e in np.round(np.arange(0, 101) * 0.01, 12):
            for x in np.round(np.arange(1, 11) * 0.1, 12):
                assert ch.phi_integral_quad(model, x, e) == pytest.approx(
                    float(ch.phi_integral(model, x, e)), abs=1e-8
                )


class TestSir:
    def test_bec(self):
        assert ch.sir(ch.bec(), 0.3) == pytest.approx(0.7, abs=1e-15)

    def test_dec_values(self):
        assert ch.sir(ch.dec(), 1.0) == pytest.approx(0.0, abs=1e-15)
        assert ch.sir(ch.dec(), 0.5) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_dec_sir_closed_form(self):
        e = np.linspace(0, 1, 51)
        assert np.allclose(ch.sir(ch.dec(), e), 1 - 2 * e**2 / (1 + e), atol=1e-14)

    def test_pr2_internal_consistency(self):
        # I = 1 - Phi(1), evaluated from the closed-form Phi
        for e in np.linspace(0.05, 0.95, 19):
            quad = ch.phi_integral_quad(ch.pr2(), 1.0, e)
            assert ch.sir(ch.pr2(), e) == pytest.approx(1 - quad, abs=1e-9)

    def test_non_increasing(self, model):
        vals = np.asarray(ch.sir(model, np.linspace(0, 1, 101)))
        assert np.all(np.diff(vals) <= 0.0)


class TestSirLimit:
    def test_bec(self):
        assert ch.sir_limit(ch.bec(), 0.5) == pytest.approx(0.5, abs=1e-9)
        assert ch.sir_limit(ch.bec(), 2.0 / 3.0) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_dec_quadratic_root(self):
        assert ch.sir_limit(ch.dec(), 0.5) == pytest.approx(DEC_SIR_LIMIT_HALF, abs=1e-9)

    @pytest.mark.parametrize("rate", [0.0, 1.0, -0.2, 1.3])
    def test_rate_domain(self, rate):
        with pytest.raises(DomainError):
            ch.sir_limit(ch.bec(), rate)

    def test_no_solution(self):
        # a channel whose SIR never drops below 0.5
        spec = ch.tabulate(ch.bec(), np.array([0.0, 1.0]), 64)
        rows = np.asarray(spec.phi_tables) * 0.4
        half = ch.CustomChannelSpec("half", spec.eps_grid, 64, tuple(map(tuple, rows)))
        with pytest.raises(NoSolutionError):
            ch.sir_limit(half.to_model(), 0.5)

    @given(e=st.floats(0.01, 0.99))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip(self, e):
        for name in ch.BUILTIN_NAMES:
            m = ch.builtin(name)
            assert ch.sir_limit(m, float(ch.sir(m, e))) == pytest.approx(e, abs=1e-8)


class TestCustomChannel:
    def spec(self, n_eps=21, n_x=64):
        return ch.tabulate(ch.dec(), np.linspace(0, 1, n_eps), n_x, name="dec-table")

    def test_interpolation_at_nodes(self):
        model = self.spec().to_model()
        x = np.linspace(0, 1, 64)
        for e in np.linspace(0, 1, 21):
            assert np.allclose(ch.phi(model, x, e), ch.phi(ch.dec(), x, e), atol=1e-14)

    def test_interpolation_close_between_nodes(self):
        model = ch.tabulate(ch.dec(), np.linspace(0, 1, 201), 256).to_model()
        x = np.linspace(0, 1, 37)
        assert np.allclose(ch.phi(model, x, 0.4321), ch.phi(ch.dec(), x, 0.4321), atol=1e-4)

    def test_integral_exact_for_piecewise_linear(self):
        # trapezoid over the kink set is exact; Simpson is not across kinks
        model = self.spec().to_model()
        nodes = np.linspace(0, 1, 64)
        for e in (0.0, 0.37, 0.5, 1.0):
            for x in (0.0, 0.013, 0.5, 0.99, 1.0):
                xs = np.union1d(nodes[nodes < x], [0.0, x])
                ys = np.asarray(ch.phi(model, xs, e))
                ref = float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2))
                assert float(ch.phi_integral(model, x, e)) == pytest.approx(ref, abs=1e-12)

    def test_json_and_toml_roundtrip(self, tmp_path):
        spec = self.spec()
        data = {
            "name": spec.name,
            "eps_grid": list(spec.eps_grid),
            "x_grid_size": spec.x_grid_size,
            "phi_tables": [list(r) for r in spec.phi_tables],
        }
        p = tmp_path / "c.json"
        p.write_text(json.dumps(data))
        m1 = ch.load_custom_channel(p)
        toml = tmp_path / "c.toml"
        lines = [f'name = "{spec.name}"', f"x_grid_size = {spec.x_grid_size}"]
        lines.append("eps_grid = [" + ", ".join(repr(v) for v in spec.eps_grid) + "]")
        lines.append("phi_tables = [")
        lines += ["  [" + ", ".join(repr(v) for v in row) + "]," for row in spec.phi_tables]
        lines.append("]")
        toml.write_text("\n".join(lines) + "\n")
        m2 = ch.resolve_channel(str(toml))
        for m in (m1, m2):
            assert m.kind is ch.ChannelKind.CUSTOM
            assert m.name == "dec-table"
            assert ch.phi(m, 0.5, 0.35) == pytest.approx(ch.phi(self.spec().to_model(), 0.5, 0.35))

    def test_rejects_non_monotone_x_with_cell(self):
        spec = self.spec()
        rows = [list(r) for r in spec.phi_tables]
        rows[7][30] = rows[7][29] - 0.01
        bad = ch.CustomChannelSpec("bad", spec.eps_grid, 64, tuple(map(tuple, rows)))
        with pytest.raises(ChannelConfigError, match=r"\(eps=7, x=30\)"):
            bad.to_model()

    def test_rejects_non_increasing_eps(self):
        spec = self.spec()
        rows = [list(r) for r in spec.phi_tables]
        rows[5] = list(rows[4])
        bad = ch.CustomChannelSpec("bad", spec.eps_grid, 64, tuple(map(tuple, rows)))
        with pytest.raises(ChannelConfigError, match=r"eps=5, x=1"):
            bad.to_model()

    def test_rejects_out_of_range(self):
        spec = self.spec()
        rows = [list(r) for r in spec.phi_tables]
        rows[20][63] = 1.5
        with pytest.raises(ChannelConfigError, match=r"eps=20, x=63"):
            ch.CustomChannelSpec("bad", spec.eps_grid, 64, tuple(map(tuple, rows))).to_model()

    @pytest.mark.parametrize(
        "patch, message",
        [
            ({"x_grid_size": 32}, "x_grid_size"),
            ({"eps_grid": [0.0, 0.5, 0.4, 1.0]}, "strictly increasing"),
            ({"eps_grid": [0.1, 1.0]}, "start at 0"),
        ],
    )
    def test_rejects_bad_grids(self, patch, message):
        data = {"name": "x", "eps_grid": [0.0, 1.0], "x_grid_size": 64, "phi_tables": [[0.0] * 64, [1.0] * 64]}
        data.update(patch)
        with pytest.raises(ChannelConfigError, match=message):
            ch.custom_spec_from_mapping(data).to_model()

    def test_missing_field(self):
        with pytest.raises(ChannelConfigError, match="phi_tables"):
            ch.custom_spec_from_mapping({"eps_grid": [0, 1], "x_grid_size": 64})

    def test_unknown_name(self):
        with pytest.raises(ChannelConfigError, match="unknown channel"):
            ch.resolve_channel("pr3")
