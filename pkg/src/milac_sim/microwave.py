"""N-port microwave network model for the analog beamformer.

A lossless reciprocal N-port is described equivalently by a real symmetric
susceptance matrix B (admittance Y = jB) or by a symmetric unitary
scattering matrix theta. The first K ports face the RF chains, the last
L ports feed the antennas; the beamforming matrix is the lower-left
scattering block halved, F = theta_21 / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoFiniteRealization, NotSymmetric, NumericalFailure, SingularSystem

UNITARY_RTOL = 1e-8
SYMMETRIC_RTOL = 1e-10


@dataclass(frozen=True)
class ReferenceImpedance:
    """Reference impedance Z0 in ohms (Y0 = 1/Z0)."""

    z0: float = 50.0

    def __post_init__(self):
        if not (np.isfinite(self.z0) and self.z0 > 0):
            raise ValueError(f"reference impedance must be positive, got {self.z0}")


DEFAULT_Z0 = ReferenceImpedance(50.0)


@dataclass(frozen=True)
class SusceptanceMatrix:
    """Real symmetric network susceptance matrix (siemens)."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "b", b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionMismatch(f"susceptance matrix must be square, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("susceptance matrix has non-finite entries")
        norm = np.linalg.norm(b)
        if norm > 0 and np.linalg.norm(b - b.T) > 1e-12 * norm:
            raise NotSymmetric("susceptance matrix is not symmetric")

    @property
    def n(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class ScatteringMatrix:
    """Symmetric unitary scattering matrix with a (K input, L output) port split."""

    theta: np.ndarray
    k: int
    l: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=complex)
        object.__setattr__(self, "theta", theta)
        n = self.k + self.l
        if self.k < 1 or self.l < 1:
            raise DimensionMismatch(f"port counts must be >= 1, got k={self.k}, l={self.l}")
        if theta.shape != (n, n):
            raise DimensionMismatch(f"expected shape ({n}, {n}), got {theta.shape}")
        report = validate_lossless_reciprocal(theta)
        if not report.passed:
            raise ValueError(
                "scattering matrix is not lossless reciprocal: "
                f"unitary residual {report.unitary_residual:.3e}, "
                f"symmetric residual {report.symmetric_residual:.3e}"
            )

    @property
    def n(self) -> int:
        return self.k + self.l


@dataclass(frozen=True)
class BeamformingMatrix:
    """L x K gain matrix from RF-chain signals to antenna signals (F = theta_21 / 2)."""

    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        object.__setattr__(self, "f", f)
        if f.ndim != 2:
            raise DimensionMismatch("beamforming matrix must be 2-D")
        norms = np.linalg.norm(f, axis=0)
        if norms.size and norms.max() > 0.5 + 1e-9:
            raise ValueError(f"beamforming column norm {norms.max()} exceeds 1/2")


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    unitary_residual: float
    symmetric_residual: float


def validate_lossless_reciprocal(
    theta: np.ndarray,
    tol_unitary: float = UNITARY_RTOL,
    tol_symmetric: float = SYMMETRIC_RTOL,
) -> ValidationReport:
    """Report unitarity and symmetry residuals of a square matrix.

    Passes iff ||theta^H theta - I||_F <= tol_unitary * N and
    ||theta - theta.T||_F <= tol_symmetric * N. Never raises.
    """
    theta = np.asarray(theta, dtype=complex)
    n = theta.shape[0]
    r_u = float(np.linalg.norm(theta.conj().T @ theta - np.eye(n)))
    r_s = float(np.linalg.norm(theta - theta.T))
    return ValidationReport(
        passed=(r_u <= tol_unitary * n and r_s <= tol_symmetric * n),
        unitary_residual=r_u,
        symmetric_residual=r_s,
    )


def _negate_offdiag_colsum_diag(mat: np.ndarray) -> np.ndarray:
    # Shared formula of assembly and synthesis; dtype-agnostic so the
    # round-trip identity can be checked in exact (Fraction) arithmetic.
    out = -mat.copy()
    np.fill_diagonal(out, mat.sum(axis=0))
    return out


def assemble_susceptance(branch: np.ndarray) -> SusceptanceMatrix:
    """Build the network susceptance matrix from branch susceptances.

    branch[i][v] (i != v) is the susceptance between ports i and v;
    branch[v][v] is the ground branch at port v. The network matrix has
    -branch[i][v] off the diagonal and column sums of branch on it.
    """
    branch = np.asarray(branch, dtype=float)
    if branch.ndim != 2 or branch.shape[0] != branch.shape[1]:
        raise DimensionMismatch(f"branch matrix must be square, got {branch.shape}")
    if not np.all(np.isfinite(branch)):
        raise ValueError("branch matrix has non-finite entries")
    norm = np.linalg.norm(branch)
    if norm > 0 and np.linalg.norm(branch - branch.T) > 1e-12 * norm:
        raise NotSymmetric("branch matrix is not symmetric")
    return SusceptanceMatrix(_negate_offdiag_colsum_diag(branch))


def synthesize_branches(b: SusceptanceMatrix | np.ndarray) -> np.ndarray:
    """Recover branch susceptances from a network susceptance matrix.

    Inverse of assemble_susceptance: off-diagonal branches are the negated
    network entries, ground branches the network column sums.
    """
    mat = b.b if isinstance(b, SusceptanceMatrix) else np.asarray(b)
    return _negate_offdiag_colsum_diag(mat)


def scattering_from_susceptance(
    b: SusceptanceMatrix,
    z0: ReferenceImpedance = DEFAULT_Z0,
    *,
    k: int,
) -> ScatteringMatrix:
    """Scattering matrix of a lossless reciprocal network.

    theta = 2 (I + j Z0 B)^{-1} - I; symmetric and unitary because B is
    real symmetric. k fixes the input-port count (l = N - k).
    """
    n = b.n
    if not 1 <= k < n:
        raise DimensionMismatch(f"need 1 <= k < N={n}, got k={k}")
    system = np.eye(n) + 1j * z0.z0 * b.b
    try:
        theta = 2.0 * np.linalg.solve(system, np.eye(n)) - np.eye(n)
    except np.linalg.LinAlgError as exc:  # cannot occur for real symmetric b
        raise SingularSystem("I + j Z0 B is numerically singular") from exc
    theta = (theta + theta.T) / 2.0
    return ScatteringMatrix(theta=theta, k=k, l=n - k)


def susceptance_from_scattering(
    theta: ScatteringMatrix,
    z0: ReferenceImpedance = DEFAULT_Z0,
) -> SusceptanceMatrix:
    """Susceptance matrix realizing a symmetric unitary scattering matrix.

    B = (2 (I + theta)^{-1} - I) / (j Z0). Raises NoFiniteRealization when
    I + theta is singular (theta eigenvalue -1 has no finite susceptance).
    """
    n = theta.n
    system = np.eye(n) + theta.theta
    smallest = np.linalg.svd(system, compute_uv=False)[-1]
    if smallest < 1e-10 * n:
        raise NoFiniteRealization(
            f"I + theta is singular (smallest singular value {smallest:.3e})"
        )
    b_complex = (2.0 * np.linalg.solve(system, np.eye(n)) - np.eye(n)) / (1j * z0.z0)
    norm = np.linalg.norm(b_complex)
    imag_residue = np.linalg.norm(b_complex.imag)
    if norm > 0 and imag_residue > 1e-9 * norm:
        raise NumericalFailure(
            f"susceptance has imaginary residue {imag_residue:.3e} (relative to {norm:.3e})"
        )
    b = b_complex.real
    return SusceptanceMatrix((b + b.T) / 2.0)


def partition_scattering(theta: ScatteringMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split theta into (theta_11, theta_21, theta_22) blocks.

    theta_11 is K x K (RF-chain side), theta_21 is L x K, theta_22 is
    L x L (antenna side); the upper-right block equals theta_21.T by
    symmetry and is not returned.
    """
    k, n = theta.k, theta.n
    if theta.theta.shape != (n, n):
        raise DimensionMismatch("stored port counts disagree with matrix shape")
    t = theta.theta
    return t[:k, :k], t[k:, :k], t[k:, k:]


def beamforming_from_scattering(theta: ScatteringMatrix) -> BeamformingMatrix:
    """Beamforming matrix F = theta_21 / 2."""
    _, theta_21, _ = partition_scattering(theta)
    return BeamformingMatrix(theta_21 / 2.0)
