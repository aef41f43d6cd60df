import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellchsh import linalg as la
from bellchsh.errors import ConvergenceError, DimensionError, NotHermitianError, NumericalError
from bellchsh.linalg import SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z
from bellchsh.scenario import random_dichotomic, singlet

from .conftest import close, random_hermitian, random_matrix


class TestTensor:
    def test_identity(self):
        assert np.array_equal(la.tensor(SIGMA_I, SIGMA_I), np.eye(4))

    def test_blocks(self):
        zero = np.zeros((2, 2))
        expected = np.block([[SIGMA_X, zero], [zero, -SIGMA_X]])
        assert np.array_equal(la.tensor(SIGMA_Z, SIGMA_X), expected)

    def test_annihilator(self):
        assert np.array_equal(la.tensor(np.zeros((2, 2)), SIGMA_X), np.zeros((4, 4)))

    def test_block_structure_rectangular(self, rng):
        a, b = random_matrix(rng, 2, 3), random_matrix(rng, 3, 2)
        out = la.tensor(a, b)
        assert out.shape == (6, 6)
        for i in range(2):
            for j in range(3):
                assert np.array_equal(out[3 * i:3 * i + 3, 2 * j:2 * j + 2], a[i, j] * b)

    def test_overflow(self):
        with pytest.raises(DimensionError):
            la.tensor(np.eye(8), np.eye(16))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
    @settings(max_examples=30, deadline=None)
    def test_associative_and_bilinear(self, seed, n, m, k):
        rng = np.random.default_rng(seed)
        a, b, c = random_matrix(rng, n), random_matrix(rng, m), random_matrix(rng, k)
        assert close(la.tensor(la.tensor(a, b), c), la.tensor(a, la.tensor(b, c)), 1e-12)
        a2 = random_matrix(rng, n)
        s = complex(*rng.standard_normal(2))
        assert close(la.tensor(a + s * a2, b), la.tensor(a, b) + s * la.tensor(a2, b), 1e-11)


class TestCommutatorMatmulAdjoint:
    def test_self(self):
        assert np.array_equal(la.commutator(SIGMA_Z, SIGMA_Z), np.zeros((2, 2)))

    def test_pauli(self):
        assert np.array_equal(la.commutator(SIGMA_Z, SIGMA_X), 2j * SIGMA_Y)

    def test_identity_commutes(self, rng):
        m = random_matrix(rng, 5)
        assert close(la.commutator(m, np.eye(5)), 0, 1e-15)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            la.commutator(np.eye(2), np.eye(3))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_antisymmetry_exact(self, seed, n):
        rng = np.random.default_rng(seed)
        a, b = random_matrix(rng, n), random_matrix(rng, n)
        assert np.array_equal(la.commutator(a, b), -la.commutator(b, a))

    def test_matmul_examples(self, rng):
        assert np.array_equal(la.matmul(SIGMA_X, SIGMA_X), np.eye(2))
        assert np.array_equal(la.matmul(SIGMA_Z, SIGMA_X), 1j * SIGMA_Y)
        m = random_matrix(rng, 4)
        assert np.array_equal(la.matmul(np.eye(4), m), m)
        with pytest.raises(DimensionError):
            la.matmul(np.eye(2), np.eye(3))

    def test_adjoint(self, rng):
        assert np.array_equal(la.adjoint(np.eye(3)), np.eye(3))
        assert np.array_equal(la.adjoint(SIGMA_Y), np.array([[0, -1j], [1j, 0]]))
        m = random_matrix(rng, 3, 5)
        assert np.array_equal(la.adjoint(la.adjoint(m)), m)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            la.as_matrix([[np.nan, 0], [0, 1]])


class TestHermitianCheck:
    def test_report(self):
        r = la.check_hermitian(SIGMA_Y)
        assert r.is_hermitian and r.max_asymmetry == 0
        r = la.check_hermitian(np.array([[0, 1], [0, 0]]))
        assert not r.is_hermitian
        assert r.max_asymmetry == pytest.approx(np.sqrt(2))

    def test_tolerance_override(self):
        m = np.array([[0, 1e-8], [0, 0]])
        assert not la.check_hermitian(m).is_hermitian
        assert la.check_hermitian(m, tol=1e-6).is_hermitian


class TestEigensystem:
    def test_sigma_z(self):
        vals, _ = la.hermitian_eigensystem(SIGMA_Z)
        assert np.array_equal(vals, [-1, 1])

    def test_sigma_x_vectors(self):
        vals, vecs = la.hermitian_eigensystem(SIGMA_X)
        assert np.allclose(vals, [-1, 1], atol=1e-15)
        minus = np.array([1, -1]) / np.sqrt(2)
        plus = np.array([1, 1]) / np.sqrt(2)
        assert abs(abs(np.vdot(minus, vecs[:, 0])) - 1) < 1e-14
        assert abs(abs(np.vdot(plus, vecs[:, 1])) - 1) < 1e-14

    def test_chsh_operator_top_eigenvalue(self):
        r = 1 / np.sqrt(2)
        b, b2 = (SIGMA_Z + SIGMA_X) * r, (SIGMA_Z - SIGMA_X) * r
        c = la.tensor(SIGMA_Z, b + b2) + la.tensor(SIGMA_X, b - b2)
        # Oracle: LAPACK, independent of the Jacobi path.
        assert la.eigvalsh(c)[-1] == pytest.approx(np.linalg.eigvalsh(c)[-1], abs=1e-12)
        assert la.eigvalsh(c)[-1] == pytest.approx(2 * np.sqrt(2), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 32])
    def test_against_lapack(self, rng, n):
        m = random_hermitian(rng, n)
        vals, vecs = la.hermitian_eigensystem(m)
        assert np.all(np.diff(vals) >= 0)
        assert np.allclose(vals, np.linalg.eigvalsh(m), atol=1e-11 * max(1, np.abs(vals).max()))
        assert la.frobenius(vecs @ vecs.conj().T - np.eye(n)) <= 1e-10
        recon = (vecs * vals) @ vecs.conj().T
        assert la.frobenius(m - recon) <= 1e-10 * la.frobenius(m)
        assert abs(vals.sum() - np.trace(m).real) <= 1e-10

    def test_degenerate_cluster(self, rng):
        obs = random_dichotomic(6, rng)
        vals, vecs = la.hermitian_eigensystem(obs.matrix)
        assert np.allclose(np.abs(vals), 1, atol=1e-12)
        assert la.frobenius(vecs.conj().T @ vecs - np.eye(6)) <= 1e-10

    def test_dimension_64(self, rng):
        m = random_hermitian(rng, 64)
        vals, vecs = la.hermitian_eigensystem(m)
        assert la.frobenius((vecs * vals) @ vecs.conj().T - m) <= 1e-10 * la.frobenius(m)

    def test_zero_and_diagonal(self):
        vals, vecs = la.hermitian_eigensystem(np.zeros((3, 3)))
        assert np.array_equal(vals, [0, 0, 0])
        vals, _ = la.hermitian_eigensystem(np.diag([3.0, -1.0, 2.0]))
        assert np.array_equal(vals, [-1, 2, 3])

    def test_non_hermitian_reports_asymmetry(self):
        with pytest.raises(NotHermitianError) as info:
            la.hermitian_eigensystem(np.array([[0, 1], [0, 0]]))
        assert info.value.max_asymmetry == pytest.approx(np.sqrt(2))

    def test_sweep_cap(self, rng, monkeypatch):
        monkeypatch.setattr(la, "JACOBI_MAX_SWEEPS", 0)
        with pytest.raises(ConvergenceError):
            la.hermitian_eigensystem(random_hermitian(rng, 4))

    @given(st.integers(0, 2**32 - 1), st.integers(2, 10))
    @settings(max_examples=25, deadline=None)
    def test_trace_and_unitarity(self, seed, n):
        m = random_hermitian(np.random.default_rng(seed), n)
        vals, vecs = la.hermitian_eigensystem(m)
        assert abs(vals.sum() - np.trace(m).real) <= 1e-10
        assert la.frobenius(la.matmul(vecs, la.adjoint(vecs)) - np.eye(n)) <= 1e-10


class TestExpectation:
    def test_examples(self):
        assert la.expectation(np.array([1, 0]), SIGMA_Z) == 1
        assert la.expectation(np.array([1, 1]) / np.sqrt(2), SIGMA_Z) == pytest.approx(0, abs=1e-15)
        assert la.expectation(singlet(), la.tensor(SIGMA_Z, SIGMA_Z)) == pytest.approx(-1, abs=1e-15)

    def test_density_matches_pure(self, rng):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        m = random_hermitian(rng, 4)
        assert la.expectation(np.outer(v, v.conj()), m) == pytest.approx(la.expectation(v, m), abs=1e-12)

    def test_errors(self):
        with pytest.raises(DimensionError):
            la.expectation(np.array([1, 0, 0]), SIGMA_Z)
        with pytest.raises(NotHermitianError):
            la.expectation(np.array([1, 0]), np.array([[0, 1], [0, 0]]))

    def test_imaginary_residue_rejected(self):
        # Hermitian within a loose tolerance but with a visible anti-Hermitian part.
        m = np.array([[0, 1e-6], [0, 0]], dtype=complex)
        psi = np.array([1, 1j]) / np.sqrt(2)
        with pytest.raises(NumericalError):
            la.expectation(psi, m, tol=1e-3)
