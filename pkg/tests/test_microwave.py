from fractions import Fraction

import numpy as np
import pytest

from conftest import random_scattering

from milac_sim import (
    ReferenceImpedance,
    ScatteringMatrix,
    SusceptanceMatrix,
    assemble_susceptance,
    beamforming_from_scattering,
    partition_scattering,
    scattering_from_susceptance,
    susceptance_from_scattering,
    synthesize_branches,
    validate_lossless_reciprocal,
)
from milac_sim.errors import DimensionMismatch, NoFiniteRealization, NotSymmetric
from milac_sim.microwave import _negate_offdiag_colsum_diag


def random_susceptance(rng, n, scale=1.0):
    b = rng.normal(size=(n, n)) * scale
    return SusceptanceMatrix((b + b.T) / 2)


class TestAssembly:
    def test_single_interconnection(self):
        b = assemble_susceptance(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.array_equal(b.b, [[1.0, -1.0], [-1.0, 1.0]])

    def test_grounds_only(self):
        b = assemble_susceptance(np.diag([5.0, 7.0]))
        assert np.array_equal(b.b, np.diag([5.0, 7.0]))

    def test_three_port(self):
        branch = np.array([[0.0, 2.0, 1.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        b = assemble_susceptance(branch)
        assert np.array_equal(b.b, [[3.0, -2.0, -1.0], [-2.0, 2.0, 0.0], [-1.0, 0.0, 1.0]])

    def test_rejects_asymmetric(self, rng):
        with pytest.raises(NotSymmetric):
            assemble_susceptance(rng.normal(size=(3, 3)))

    def test_synthesis_inverts_first_example(self):
        branch = synthesize_branches(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert np.array_equal(branch, [[0.0, 1.0], [1.0, 0.0]])
        assert np.array_equal(synthesize_branches(np.diag([5.0, 7.0])), np.diag([5.0, 7.0]))

    def test_float_round_trip(self, rng):
        b = random_susceptance(rng, 6)
        rebuilt = assemble_susceptance(synthesize_branches(b))
        assert np.linalg.norm(rebuilt.b - b.b) <= 1e-12 * np.linalg.norm(b.b)

    def test_round_trip_exact_in_rational_arithmetic(self, rng):
        # The assembly/synthesis formulas are mutually inverse exactly when
        # evaluated in exact arithmetic on the same float values.
        branch = rng.normal(size=(5, 5))
        branch = (branch + branch.T) / 2
        exact = np.array([[Fraction(x) for x in row] for row in branch.tolist()], dtype=object)
        network = _negate_offdiag_colsum_diag(exact)
        recovered = _negate_offdiag_colsum_diag(network)
        assert np.array_equal(recovered, exact)


class TestScatteringConversions:
    def test_zero_susceptance_is_identity(self):
        theta = scattering_from_susceptance(SusceptanceMatrix(np.zeros((3, 3))), k=1)
        assert np.allclose(theta.theta, np.eye(3))

    def test_scalar_value(self):
        theta = scattering_from_susceptance(
            SusceptanceMatrix(np.array([[1.0, 0.0], [0.0, 0.0]])), ReferenceImpedance(1.0), k=1
        )
        # (1 - j) / (1 + j) = -j on the port loaded with unit susceptance
        assert theta.theta[0, 0] == pytest.approx(-1j)
        assert theta.theta[1, 1] == pytest.approx(1.0)

    def test_output_is_lossless_reciprocal(self, rng):
        for n in (2, 5, 11):
            theta = scattering_from_susceptance(random_susceptance(rng, n, scale=0.02), k=1)
            report = validate_lossless_reciprocal(theta.theta)
            assert report.passed

    def test_identity_maps_to_zero(self):
        theta = ScatteringMatrix(np.eye(4, dtype=complex), k=2, l=2)
        b = susceptance_from_scattering(theta)
        assert np.allclose(b.b, 0.0)

    def test_minus_identity_unrealizable(self):
        theta = ScatteringMatrix(-np.eye(4, dtype=complex), k=2, l=2)
        with pytest.raises(NoFiniteRealization):
            susceptance_from_scattering(theta)

    def test_round_trip_b_theta_b(self, rng):
        for n in (2, 6, 13, 20):
            b0 = random_susceptance(rng, n)
            theta = scattering_from_susceptance(b0, k=1)
            b1 = susceptance_from_scattering(theta)
            assert np.linalg.norm(b1.b - b0.b) <= 1e-9 * max(np.linalg.norm(b0.b), 1.0)

    def test_round_trip_many_instances(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 21))
            b0 = random_susceptance(rng, n)
            theta = scattering_from_susceptance(b0, k=1)
            b1 = susceptance_from_scattering(theta)
            assert np.linalg.norm(b1.b - b0.b) <= 1e-8 * max(np.linalg.norm(b0.b), 1.0)
            theta2 = scattering_from_susceptance(b1, k=1)
            assert np.linalg.norm(theta2.theta - theta.theta) <= 1e-8 * n


class TestPartition:
    def test_identity_blocks(self):
        theta = ScatteringMatrix(np.eye(3, dtype=complex), k=1, l=2)
        t11, t21, t22 = partition_scattering(theta)
        assert t11.shape == (1, 1) and np.allclose(t11, 1.0)
        assert np.allclose(t21, 0.0)
        assert np.allclose(t22, np.eye(2))

    def test_antidiagonal_example(self):
        theta = ScatteringMatrix(np.fliplr(np.eye(4)).astype(complex), k=2, l=2)
        t11, t21, _ = partition_scattering(theta)
        assert np.allclose(t11, 0.0)
        assert np.allclose(t21, [[0.0, 1.0], [1.0, 0.0]])
        f = beamforming_from_scattering(theta)
        assert np.allclose(f.f, [[0.0, 0.5], [0.5, 0.0]])

    def test_block_unitarity(self, rng):
        for _ in range(10):
            theta = random_scattering(rng, 3, 5)
            t11, t21, _ = partition_scattering(theta)
            gram = t11.conj().T @ t11 + t21.conj().T @ t21
            assert np.linalg.norm(gram - np.eye(3)) <= 1e-9
            # upper-right block is the transposed lower-left one
            assert np.allclose(theta.theta[:3, 3:], t21.T)

    def test_beamforming_column_norm_bound(self, rng):
        for _ in range(10):
            theta = random_scattering(rng, 2, 6)
            f = beamforming_from_scattering(theta)
            assert np.linalg.norm(f.f, axis=0).max() <= 0.5 + 1e-9

    def test_identity_beamforming_is_zero(self):
        theta = ScatteringMatrix(np.eye(3, dtype=complex), k=1, l=2)
        assert np.allclose(beamforming_from_scattering(theta).f, 0.0)


class TestValidation:
    def test_identity_passes(self):
        report = validate_lossless_reciprocal(np.eye(4, dtype=complex))
        assert report.passed and report.unitary_residual == 0.0 and report.symmetric_residual == 0.0

    def test_nonunitary_fails(self):
        report = validate_lossless_reciprocal(np.diag([2.0, 1.0]).astype(complex))
        assert not report.passed and report.unitary_residual > 0 and report.symmetric_residual == 0.0

    def test_antisymmetric_fails(self):
        report = validate_lossless_reciprocal(np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex))
        assert not report.passed and report.unitary_residual <= 1e-12 and report.symmetric_residual > 0

    def test_constructor_rejects_invalid(self):
        with pytest.raises(ValueError):
            ScatteringMatrix(np.diag([2.0, 1.0]).astype(complex), k=1, l=1)
        with pytest.raises(DimensionMismatch):
            ScatteringMatrix(np.eye(4, dtype=complex), k=1, l=2)
