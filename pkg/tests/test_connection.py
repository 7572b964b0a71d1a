import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoholo.connection import (ROW_INITIAL, GaugeTransform, connection_many, gauge_transform,
                                gauge_transform_many, iontrap_connection_closed_form,
                                iontrap_north_gauge, iontrap_south_gauge, mixed_connection,
                                mixed_connection_many, shift_sum, wilczek_zee)
from isoholo.errors import AntiHermiticityDefect, ChartDomainViolation, NonUnitaryGauge
from isoholo.frames import THETA, PHI, ControlPoint, IsoEntangledFrame, custom_frame, iontrap_dark_frame
from isoholo.holonomy import constant_frame
from isoholo.numerics import SIGMA_Y, max_abs
from isoholo.statekit import SpectralWeights

DARK = iontrap_dark_frame()


def q(t, p, chart="equatorial"):
    return ControlPoint(chart, (t, p))


class TestWilczekZee:
    @pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
    def test_phi_component(self, t):
        s = wilczek_zee(DARK, q(t, 0.7), PHI)
        assert s.convention == ROW_INITIAL
        assert max_abs(s.matrix - 1j * SIGMA_Y * np.cos(t)) < 1e-10

    def test_theta_component_vanishes(self):
        assert max_abs(wilczek_zee(DARK, q(1.1, 0.2), THETA).matrix) < 1e-10

    def test_constant_frame(self):
        s = wilczek_zee(constant_frame(np.eye(3)), ControlPoint("point", (0.0,)), 0)
        assert max_abs(s.matrix) == 0

    def test_row_initial_index_order(self):
        # A[a, b] = <xi_b | d xi_a>: entry (0, 1) is <D1|d_phi D0> = cos(theta)
        s = wilczek_zee(DARK, q(0.4, 0.0), PHI)
        assert s.matrix[0, 1].real == pytest.approx(np.cos(0.4), abs=1e-10)

    def test_defect_limit(self):
        # a frame whose vectors rotate fast enough to defeat the finite difference
        charts = DARK.charts

        def jumpy(c):
            t = 1e5 * c[:, 1] ** 3
            out = np.zeros((len(c), 2, 2), dtype=complex)
            out[:, 0, 0] = out[:, 1, 1] = np.cos(t)
            out[:, 0, 1], out[:, 1, 0] = np.sin(t), -np.sin(t)
            return out

        f = custom_frame(evaluator=jumpy, n=2, dim=2, charts=charts, vectorized=True)
        with pytest.raises(AntiHermiticityDefect):
            wilczek_zee(f, q(1.0, 3.0), PHI, h=1e-1)

    def test_domain(self):
        with pytest.raises(ChartDomainViolation):
            wilczek_zee(DARK, q(0.02, 0.0), PHI)


class TestMixed:
    def test_pure_weights_equal_pure(self, rng):
        coords = np.column_stack([rng.uniform(0.1, 3.0, 100), rng.uniform(0, 6.3, 100)])
        for mu in (THETA, PHI):
            assert max_abs(mixed_connection_many(DARK, (1.0, 0.0), "equatorial", coords, mu)
                           - connection_many(DARK, "equatorial", coords, mu)) <= 1e-12

    def test_equal_weights_vanish(self):
        assert max_abs(mixed_connection(DARK, SpectralWeights.from_r(0.0), q(1.0, 0.3), PHI).matrix) < 1e-12

    def test_paper_value(self):
        m = mixed_connection(DARK, SpectralWeights.from_r(0.5), q(np.pi / 3, 0.0), PHI).matrix
        assert m[0, 1] == pytest.approx(0.25, abs=1e-10)
        assert m[1, 0] == pytest.approx(-0.25, abs=1e-10)

    def test_shift_sum_identity(self, rng):
        coords = rng.uniform(0.2, 2.5, size=(20, 2))
        w = SpectralWeights((0.7, 0.3))
        pure = connection_many(DARK, "equatorial", coords, PHI)
        assert np.array_equal(mixed_connection_many(DARK, w, "equatorial", coords, PHI), shift_sum(pure, w))

    def test_matches_lifted_frame(self, rng):
        coords = rng.uniform(0.2, 2.5, size=(20, 2))
        w = SpectralWeights((0.7, 0.3))
        lifted = connection_many(IsoEntangledFrame(DARK, w), "equatorial", coords, PHI)
        # different rounding path through the finite difference (eps / h ~ 1e-11)
        assert max_abs(lifted - mixed_connection_many(DARK, w, "equatorial", coords, PHI)) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, np.pi - 0.1), st.floats(0, 2 * np.pi), st.floats(-1, 1))
    def test_closed_form(self, t, p, r):
        w = SpectralWeights.from_r(r)
        for mu in (THETA, PHI):
            num = mixed_connection(DARK, w, q(t, p), mu)
            exact = iontrap_connection_closed_form("equatorial", r, q(t, p), mu)
            assert max_abs(num.matrix - exact.matrix) <= 1e-8
            assert num.defect <= 1e-9


class TestGauge:
    def test_identity_gauge(self):
        ident = GaugeTransform(lambda c: np.broadcast_to(np.eye(2), (len(c), 2, 2)), 2)
        samples = [wilczek_zee(DARK, q(1.0, 0.5), PHI)]
        assert max_abs(gauge_transform(samples, ident)[0].matrix - samples[0].matrix) < 1e-15

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, np.pi - 0.1), st.floats(0, 2 * np.pi), st.floats(-1, 1))
    def test_north_gauge_closed_form(self, t, p, r):
        a = iontrap_connection_closed_form("equatorial", r, q(t, p), PHI).matrix
        out = gauge_transform_many(a[None], iontrap_north_gauge(r), [(t, p)], PHI)[0]
        assert max_abs(out - iontrap_connection_closed_form("north", r, q(t, p, "north"), PHI).matrix) < 1e-9

    def test_south_gauge_closed_form(self):
        r, t = 0.7, 2.0
        a = iontrap_connection_closed_form("equatorial", r, q(t, 0.3), PHI).matrix
        out = gauge_transform_many(a[None], iontrap_south_gauge(r), [(t, 0.3)], PHI)[0]
        assert max_abs(out - 1j * r * SIGMA_Y * (1 + np.cos(t))) < 1e-9

    def test_equator_values(self):
        r = 0.5
        assert max_abs(iontrap_connection_closed_form("equatorial", r, q(np.pi / 2, 0), PHI).matrix) < 1e-16
        a = np.zeros((1, 2, 2), dtype=complex)
        out = gauge_transform_many(a, iontrap_north_gauge(r), [(np.pi / 2, 0.0)], PHI)[0]
        assert max_abs(out + 1j * r * SIGMA_Y) < 1e-9

    def test_non_unitary(self):
        bad = GaugeTransform(lambda c: np.broadcast_to(2 * np.eye(2), (len(c), 2, 2)), 2)
        with pytest.raises(NonUnitaryGauge):
            bad(q(1.0, 0.0))


class TestClosedForm:
    def test_equatorial_near_pole(self):
        m = iontrap_connection_closed_form("equatorial", 1.0, q(0.05, 0.0), PHI).matrix
        assert max_abs(m - 1j * SIGMA_Y) < 2e-3

    def test_north_regular_at_pole(self):
        assert max_abs(iontrap_connection_closed_form("north", 0.4, q(0.0, 1.0, "north"), PHI).matrix) == 0

    def test_theta_component(self):
        assert max_abs(iontrap_connection_closed_form("north", 0.4, q(1.0, 1.0, "north"), THETA).matrix) == 0

    def test_patch_domains(self):
        with pytest.raises(ChartDomainViolation):
            iontrap_connection_closed_form("equatorial", 0.5, q(0.0, 0.0), PHI)
        with pytest.raises(ChartDomainViolation):
            iontrap_connection_closed_form("north", 0.5, q(np.pi, 0.0), PHI)
        with pytest.raises(ChartDomainViolation):
            iontrap_connection_closed_form("west", 0.5, q(1.0, 0.0), PHI)
