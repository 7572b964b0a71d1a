import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_hermitian, random_unitary
from isoholo.errors import DimensionMismatch, NoConvergence, NotHermitian
from isoholo.numerics import (SIGMA_Y, expm, hermitian_eigensystem, max_abs, unitarity_defect,
                              unitary_polar_factor)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def complex_square(n):
    return arrays(np.float64, (2, n, n), elements=finite).map(lambda a: a[0] + 1j * a[1])


class TestEigensystem:
    def test_diagonal(self):
        w, v = hermitian_eigensystem(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [1, 2, 3], atol=0)
        assert np.array_equal(np.abs(v), np.eye(3)[:, [1, 2, 0]])

    def test_sigma_y(self):
        w, v = hermitian_eigensystem(SIGMA_Y)
        assert max_abs(w - [-1, 1]) < 1e-14
        assert max_abs(SIGMA_Y @ v - v * w) < 1e-14

    def test_iontrap_spectrum(self):
        t = np.pi / 4
        h = np.zeros((4, 4))
        h[3, :3] = h[:3, 3] = [np.sin(t), 0.0, np.cos(t)]
        w, _ = hermitian_eigensystem(h)
        assert max_abs(w - [-1, 0, 0, 1]) < 1e-14

    def test_thousand_random_matrices(self, rng):
        worst = 0.0
        for i in range(1000):
            n = 2 + i % 7
            m = random_hermitian(rng, n, scale=10 ** rng.uniform(-3, 3))
            w, v = hermitian_eigensystem(m)
            scale = max(1.0, max_abs(m))
            worst = max(worst, max_abs(m - (v * w) @ v.conj().T) / scale)
            assert np.all(np.diff(w) >= 0)
            assert max_abs(v.conj().T @ v - np.eye(n)) < 1e-12
        assert worst <= 1e-11

    def test_matches_numpy(self, rng):
        for n in range(2, 9):
            m = random_hermitian(rng, n)
            assert max_abs(hermitian_eigensystem(m)[0] - np.linalg.eigvalsh(m)) < 1e-12

    def test_degenerate_cluster_is_deterministic(self, rng):
        u = random_unitary(rng, 4)
        m = u @ np.diag([1.0, 1.0, 2.0, 2.0]) @ u.conj().T
        m = (m + m.conj().T) / 2
        w1, v1 = hermitian_eigensystem(m)
        w2, v2 = hermitian_eigensystem(m.copy())
        assert np.array_equal(v1, v2)
        for col in v1.T:
            lead = np.argmax(np.abs(col) > np.abs(col).max() * (1 - 1e-12))
            assert abs(col[lead].imag) < 1e-12 and col[lead].real > 0

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            hermitian_eigensystem(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_not_square(self):
        with pytest.raises(DimensionMismatch):
            hermitian_eigensystem(np.zeros((2, 3)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 8).flatmap(complex_square))
    def test_reconstruction_property(self, a):
        m = (a + a.conj().T) / 2
        w, v = hermitian_eigensystem(m)
        assert max_abs(m - (v * w) @ v.conj().T) <= 1e-11 * max(1.0, max_abs(m))


class TestExpm:
    def test_zero(self):
        assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))

    def test_quarter_turn(self):
        assert max_abs(expm(1j * np.pi / 2 * SIGMA_Y) - np.array([[0, 1], [-1, 0]])) < 1e-15

    def test_pole_artifact_value(self):
        assert max_abs(expm(-2j * np.pi * 0.5 * SIGMA_Y) + np.eye(2)) < 1e-15

    def test_matches_scipy(self, rng):
        for n in range(1, 9):
            m = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * 3
            ref = scipy.linalg.expm(m)
            assert max_abs(expm(m) - ref) <= 1e-13 * max(1.0, max_abs(ref))

    def test_batched(self, rng):
        ms = rng.normal(size=(5, 3, 3)) + 1j * rng.normal(size=(5, 3, 3))
        out = expm(ms)
        for m, e in zip(ms, out):
            assert max_abs(e - scipy.linalg.expm(m)) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8).flatmap(complex_square))
    def test_anti_hermitian_gives_unitary(self, a):
        m = (a - a.conj().T) / 2
        u = expm(m)
        assert unitarity_defect(u) <= 1e-12
        assert max_abs(u @ expm(-m) - np.eye(len(m))) <= 1e-12


class TestPolar:
    def test_unitary_fixed_point(self, rng):
        u = random_unitary(rng, 3)
        assert max_abs(unitary_polar_factor(u) - u) < 1e-14

    def test_scaled_identity(self):
        assert max_abs(unitary_polar_factor(2 * np.eye(2)) - np.eye(2)) < 1e-15

    def test_skew_perturbation(self):
        u = unitary_polar_factor(np.eye(2) + 0.01j * SIGMA_Y)
        assert unitarity_defect(u) <= 1e-14
        assert max_abs(u - scipy.linalg.polar(np.eye(2) + 0.01j * SIGMA_Y)[0]) < 1e-14

    def test_matches_scipy(self, rng):
        for n in range(1, 7):
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            assert max_abs(unitary_polar_factor(m) - scipy.linalg.polar(m)[0]) < 1e-12

    def test_idempotent(self, rng):
        u = unitary_polar_factor(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        assert max_abs(unitary_polar_factor(u) - u) < 1e-14

    def test_singular(self):
        with pytest.raises(NoConvergence):
            unitary_polar_factor(np.array([[1.0, 0.0], [0.0, 0.0]]))
