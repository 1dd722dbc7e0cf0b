"""Dense complex-matrix kernels: Takagi factorization, symmetric-unitary
projection, and a monotone bisection root-finder.

These are the numerical primitives behind the scattering-matrix update.
All functions are pure and safe to call from concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import BracketInvalid, DimensionMismatch, NotSymmetric

# Singular values below ZERO_CLUSTER_RTOL * sigma_max form an exactly
# degenerate block whose unitary completion is arbitrary; the identity is
# used for determinism.
ZERO_CLUSTER_RTOL = 1e-12
# Adjacent singular values closer than GAP_CLUSTER_RTOL * sigma_max share a
# phase-correction block. The off-block mismatch left behind is O(eps/gap),
# negligible once gaps exceed this threshold.
GAP_CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class TakagiFactorization:
    """Factorization a = q @ diag(sigma) @ q.T with q unitary, sigma >= 0.

    sigma is sorted non-increasing; q columns follow that order.
    """

    q: np.ndarray
    sigma: np.ndarray


def _sqrt_unitary_symmetric(z: np.ndarray) -> np.ndarray:
    """Principal square root of a (numerically) unitary symmetric matrix.

    Eigenvalues are snapped to the unit circle so the result is exactly
    unitary up to the Schur basis accuracy; the principal branch maps
    exp(j*theta) -> exp(j*theta/2) with theta in (-pi, pi].
    """
    z = (z + z.T) / 2.0
    if z.shape[0] == 1:
        return np.array([[np.exp(0.5j * np.angle(z[0, 0]))]])
    t, w = scipy.linalg.schur(z, output="complex")
    half = np.exp(0.5j * np.angle(np.diagonal(t)))
    return (w * half) @ w.conj().T


def takagi(a: np.ndarray, *, sym_rtol: float = 1e-9) -> TakagiFactorization:
    """Takagi factorization of a complex symmetric matrix.

    Computes the SVD of the (exactly symmetrized) input and corrects the
    left singular basis by the principal square root of the unitary
    mismatch z = u^H conj(v) between the left and conjugated-right bases.
    The correction is applied blockwise over clusters of (near-)equal
    singular values; z is block-diagonal across well-separated clusters.

    Raises NotSymmetric if ||a - a.T||_F > sym_rtol * ||a||_F and
    DimensionMismatch if a is not square.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"takagi needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("takagi input has non-finite entries")
    norm = np.linalg.norm(a)
    if norm > 0 and np.linalg.norm(a - a.T) > sym_rtol * norm:
        raise NotSymmetric("input is not complex symmetric within tolerance")
    a = (a + a.T) / 2.0

    u, sigma, vh = np.linalg.svd(a)
    n = a.shape[0]
    # Unitary mismatch between the left and conjugated-right singular bases:
    # a = u @ diag(sigma) @ z.T @ u.T with z = u^H conj(v).
    z = u.conj().T @ vh.T

    sigma_max = sigma[0] if n else 0.0
    gap_tol = GAP_CLUSTER_RTOL * sigma_max
    zero_tol = ZERO_CLUSTER_RTOL * sigma_max

    correction = np.zeros((n, n), dtype=complex)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and sigma[stop - 1] - sigma[stop] <= gap_tol:
            stop += 1
        block = slice(start, stop)
        if sigma[start] <= zero_tol:
            correction[block, block] = np.eye(stop - start)
        else:
            correction[block, block] = _sqrt_unitary_symmetric(z[block, block])
        start = stop

    return TakagiFactorization(q=u @ correction, sigma=sigma)


def sym_unitary_project(x: np.ndarray) -> np.ndarray:
    """Project a square complex matrix onto {theta : theta^H theta = I, theta = theta.T}.

    Returns the symmetric unitary theta maximizing Re tr(theta^H x),
    namely theta = q @ q.T from the Takagi factorization of (x + x.T)/2;
    the symmetric part suffices because Re tr(theta^H x) only sees it when
    theta is symmetric. Degenerate or zero singular values are resolved
    deterministically inside the factorization (the objective is flat
    across the nonunique completions).
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"projection needs a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("projection input has non-finite entries")
    fac = takagi((x + x.T) / 2.0)
    theta = fac.q @ fac.q.T
    return (theta + theta.T) / 2.0


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    *,
    max_iterations: int = 500,
) -> float:
    """Root of a monotone nonincreasing scalar function by bisection.

    Requires f(lo) >= 0 >= f(hi). Returns mu with |f(mu)| <= tol or with
    the bracket width reduced below tol * max(1, |hi|).
    """
    if tol <= 0:
        raise BracketInvalid("tolerance must be positive")
    if not hi > lo:
        raise BracketInvalid(f"need hi > lo, got [{lo}, {hi}]")
    f_lo = f(lo)
    f_hi = f(hi)
    if not (f_lo >= 0.0 >= f_hi):
        raise BracketInvalid(f"sign condition failed: f(lo)={f_lo}, f(hi)={f_hi}")
    if abs(f_hi) <= tol:
        return hi
    if abs(f_lo) <= tol:
        return lo

    width_tol = tol * max(1.0, abs(hi))
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol:
            return mid
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width_tol:
            break
    return 0.5 * (lo + hi)
