"""Core qubit algebra: Pauli operators, MUB states, Bloch round trips."""
import numpy as np
import pytest

from tempsteer.qubit import (
    BASES,
    OUTCOMES,
    DensityMatrix,
    ValidationError,
    bloch_vector,
    density_from_bloch,
    fidelity_to_pure,
    hermitian_eigvals,
    mub_ket,
    mub_projector,
    mub_state,
    pauli,
)


def random_density(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = z @ z.conj().T
    return DensityMatrix(m / np.trace(m).real)


class TestPauli:
    def test_sigma_z_is_diag(self):
        assert np.array_equal(pauli(3), np.diag([1.0, -1.0]))

    def test_involution(self):
        for i in BASES:
            assert np.allclose(pauli(i) @ pauli(i), np.eye(2))

    def test_traceless_and_orthogonal(self):
        for i in BASES:
            assert abs(np.trace(pauli(i))) == 0
        assert np.trace(pauli(1) @ pauli(2)) == 0

    @pytest.mark.parametrize("bad", [0, 4, -1, "x"])
    def test_out_of_range_index(self, bad):
        with pytest.raises(ValidationError):
            pauli(bad)


class TestMubStates:
    def test_z_plus_is_ground_projector(self):
        assert np.allclose(mub_state(3, 1).matrix, np.diag([1.0, 0.0]))

    def test_x_minus_bloch(self):
        assert np.allclose(mub_state(1, -1).bloch, [-1.0, 0.0, 0.0])

    def test_eigenvalue_relation(self):
        for i in BASES:
            for a in OUTCOMES:
                expectation = np.trace(mub_state(i, a).matrix @ pauli(i)).real
                assert expectation == pytest.approx(a, abs=1e-14)

    def test_mutual_unbiasedness(self):
        for i in BASES:
            for j in BASES:
                if i == j:
                    continue
                for a in OUTCOMES:
                    for b in OUTCOMES:
                        overlap = abs(np.vdot(mub_ket(i, a), mub_ket(j, b))) ** 2
                        assert overlap == pytest.approx(0.5, abs=1e-14)

    def test_projector_matches_ket(self):
        for i in BASES:
            for a in OUTCOMES:
                k = mub_ket(i, a)
                assert np.allclose(mub_projector(i, a), np.outer(k, k.conj()))

    def test_bad_outcome(self):
        with pytest.raises(ValidationError):
            mub_state(1, 0)


class TestBloch:
    def test_maximally_mixed(self):
        assert np.allclose(density_from_bloch([0, 0, 0]).matrix, np.eye(2) / 2)
        assert np.allclose(bloch_vector(DensityMatrix(np.eye(2) / 2)), np.zeros(3))

    def test_pole(self):
        assert np.allclose(bloch_vector(mub_state(3, 1)), [0, 0, 1])

    def test_halfway_point_eigenvalues(self):
        # |r| = 0.5, so the closed-form eigenvalues are (1 +/- 0.5)/2.
        rho = density_from_bloch([0.3, 0.0, 0.4])
        lo, hi = rho.eigenvalues()
        assert lo == pytest.approx(0.25, abs=1e-14)
        assert hi == pytest.approx(0.75, abs=1e-14)

    def test_roundtrip_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            rho = random_density(rng)
            again = density_from_bloch(bloch_vector(rho))
            assert np.abs(again.matrix - rho.matrix).max() < 1e-12

    def test_vector_outside_ball_rejected(self):
        with pytest.raises(ValidationError):
            density_from_bloch([0.8, 0.8, 0.8])


class TestFidelity:
    def test_self_fidelity(self):
        for i in BASES:
            for a in OUTCOMES:
                assert fidelity_to_pure(mub_state(i, a), i, a) == pytest.approx(1.0)

    def test_maximally_mixed_half(self):
        mixed = DensityMatrix(np.eye(2) / 2)
        for i in BASES:
            for a in OUTCOMES:
                assert fidelity_to_pure(mixed, i, a) == pytest.approx(0.5)

    def test_cross_basis_half(self):
        assert fidelity_to_pure(mub_state(3, 1), 1, 1) == pytest.approx(0.5)

    def test_outcomes_sum_to_one_exactly(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            rho = random_density(rng)
            for i in BASES:
                total = fidelity_to_pure(rho, i, 1) + fidelity_to_pure(rho, i, -1)
                assert total == 1.0

    def test_range(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            rho = random_density(rng)
            for i in BASES:
                for a in OUTCOMES:
                    assert 0.0 <= fidelity_to_pure(rho, i, a) <= 1.0


class TestDensityMatrixValidation:
    def test_non_hermitian(self):
        with pytest.raises(ValidationError, match="Hermitian"):
            DensityMatrix([[0.5, 0.5], [0.0, 0.5]])

    def test_wrong_trace(self):
        with pytest.raises(ValidationError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_negative_eigenvalue(self):
        with pytest.raises(ValidationError, match="eigenvalue"):
            DensityMatrix([[1.2, 0.0], [0.0, -0.2]])

    def test_nan_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            DensityMatrix([[np.nan, 0.0], [0.0, 1.0]])

    def test_wrong_shape(self):
        with pytest.raises(ValidationError, match="2x2"):
            DensityMatrix(np.eye(3) / 3)

    def test_tolerance_override(self):
        slightly_off = np.diag([0.5 + 5e-9, 0.5])
        with pytest.raises(ValidationError):
            DensityMatrix(slightly_off)
        DensityMatrix(slightly_off, trace_tol=1e-7)

    def test_matrix_is_readonly(self):
        rho = mub_state(3, 1)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 2.0


class TestEigvals:
    def test_against_numpy(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            h = z + z.conj().T
            lo, hi = hermitian_eigvals(h)
            ref = np.linalg.eigvalsh(h)
            assert lo == pytest.approx(ref[0], abs=1e-10)
            assert hi == pytest.approx(ref[1], abs=1e-10)


class TestJson:
    def test_roundtrip(self):
        rho = density_from_bloch([0.2, -0.3, 0.1])
        again = DensityMatrix.from_json(rho.to_json())
        assert np.allclose(again.matrix, rho.matrix)

    def test_encoding_shape(self):
        data = mub_state(2, 1).to_json()
        assert data[0][1] == [0.0, -0.5]  # (I + sigma_y)/2 upper-right entry
