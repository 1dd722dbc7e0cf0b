"""Joint power-allocation / scattering-matrix sum-rate maximization.

Block coordinate descent over three blocks:

1. auxiliary variables (alpha, beta) of the fractional-programming
   reformulation, updated in closed form;
2. per-chain powers, a nonnegative quadratic maximization over a ball
   solved through the dual variable of the power constraint (bisection);
3. the scattering matrix, ascended by an inner minorize-maximize loop
   whose every step is a symmetric-unitary projection.

The inner surrogate exists in two variants. ``consistent_gradient``
(default) uses the update direction that is the actual gradient of the
shifted quadratic surrogate with shift lambda = max_k p_k, for which the
surrogate is convex and ascent is guaranteed. ``paper_literal`` applies
the alternative direction G = L2 + (lambda I - X2) theta X1 with
lambda = lambda_max(X2) + 1e-9, the smallest shift making that variant's
implicit surrogate convex as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet, NoisePowers
from .errors import DimensionMismatch, InfeasibleInit, InfeasibleStart, NonmonotoneObjective
from .evaluation import PowerAllocation, power_account, sinr, sum_rate
from .linalg import bisect_root, sym_unitary_project
from .microwave import (
    BeamformingMatrix,
    ScatteringMatrix,
    beamforming_from_scattering,
    validate_lossless_reciprocal,
)

VARIANT_CONSISTENT = "consistent_gradient"
VARIANT_LITERAL = "paper_literal"
_VARIANTS = (VARIANT_CONSISTENT, VARIANT_LITERAL)

# Below this Frobenius norm the projection argument carries no signal and
# the current iterate is kept (the surrogate is flat).
_ZERO_GRADIENT_NORM = 1e-14

# Tolerated float noise in the guaranteed-ascent variant before the run is
# declared buggy.
_MONOTONE_SLACK = 1e-7


@dataclass(frozen=True)
class FpState:
    """Auxiliary variables of the rate reformulation (alpha real >= 0, beta complex)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=complex))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ValueError("alpha must be finite and nonnegative")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        if alpha.shape != beta.shape:
            raise DimensionMismatch("alpha and beta must have equal length")


@dataclass(frozen=True)
class OptimizerConfig:
    inner_iterations: int = 50
    outer_tolerance: float = 1e-4
    max_outer_iterations: int = 300
    surrogate_variant: str = VARIANT_CONSISTENT
    bisection_tolerance: float = 1e-10

    def __post_init__(self):
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be >= 1")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")
        if self.outer_tolerance <= 0 or self.bisection_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.surrogate_variant not in _VARIANTS:
            raise ValueError(f"surrogate_variant must be one of {_VARIANTS}")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    sum_rate_bits: float
    objective_nats: float
    fp_objective_nats: float
    radiated_power: float
    reflected_power: float
    radiated_fraction: float
    unitary_residual: float
    symmetric_residual: float
    power_total: float


@dataclass
class ConvergenceTrace:
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False

    @property
    def final_rate_bits(self) -> float:
        return self.rows[-1].sum_rate_bits

    @property
    def outer_iterations(self) -> int:
        return self.rows[-1].iteration

    def rates_bits(self) -> np.ndarray:
        return np.array([row.sum_rate_bits for row in self.rows])


def fp_objective(
    state: FpState,
    p: PowerAllocation,
    theta: ScatteringMatrix,
    h: ChannelSet,
    sigma2: NoisePowers,
) -> float:
    """Reformulated objective (nats) at the given block values.

    sum_k [ log(1+alpha_k) - alpha_k
            + 2 sqrt(1+alpha_k) sqrt(p_k) Re{h_k^H f_k conj(beta_k)}
            - |beta_k|^2 (sum_i p_i |h_k^H f_i|^2 + sigma_k^2) ]

    with f = theta_21 / 2. Equals the true sum rate (nats) whenever
    (alpha, beta) are at their closed-form optimum.
    """
    k = h.k
    if state.alpha.shape[0] != k or p.k != k or sigma2.sigma2.shape[0] != k or theta.k != k:
        raise DimensionMismatch("state/power/noise/scattering sizes disagree")
    if theta.l != h.l:
        raise DimensionMismatch(f"antenna counts disagree: theta has {theta.l}, channel has {h.l}")
    f = beamforming_from_scattering(theta).f
    hhf = h.h.conj().T @ f  # (k, i) entry: h_k^H f_i
    sig1 = np.sqrt(1.0 + state.alpha) * state.beta
    sig2 = np.abs(state.beta) ** 2
    linear = 2.0 * float(np.real(np.sum(np.sqrt(p.p) * np.conj(sig1) * np.diagonal(hhf))))
    quad = float(np.sum(sig2 * (np.abs(hhf) ** 2 @ p.p)))
    const = float(np.sum(np.log1p(state.alpha) - state.alpha) - np.sum(sig2 * sigma2.sigma2))
    return const + linear - quad


def update_auxiliaries(
    h: ChannelSet,
    f: BeamformingMatrix,
    p: PowerAllocation,
    sigma2: NoisePowers,
) -> FpState:
    """Closed-form optimum of the auxiliary block.

    alpha_k is the current SINR; beta_k = sqrt(1+alpha_k) sqrt(p_k)
    h_k^H f_k / (sum_i p_i |h_k^H f_i|^2 + sigma_k^2), reusing the freshly
    updated alpha.
    """
    hhf = h.h.conj().T @ f.f
    gains = np.abs(hhf) ** 2
    direct = np.diagonal(hhf)
    signal = p.p * np.diagonal(gains)
    denom = gains @ p.p + sigma2.sigma2  # includes the own-signal term
    alpha = signal / (denom - signal)
    beta = np.sqrt(1.0 + alpha) * np.sqrt(p.p) * direct / denom
    return FpState(alpha=alpha, beta=beta)


def update_power(
    h: ChannelSet,
    f: BeamformingMatrix,
    state: FpState,
    p_t: float,
    *,
    bisection_tolerance: float = 1e-10,
) -> PowerAllocation:
    """Optimal power block: maximize 2 z^T m - z^T diag(n) z over z >= 0, |z|^2 <= p_t.

    m_k = Re{sqrt(1+alpha_k) conj(beta_k) h_k^H f_k} and
    n_k = sum_i |beta_i|^2 |h_i^H f_k|^2. The solution is
    z_k = [m_k]^+ / (n_k + mu) with mu >= 0 the dual variable of the
    budget, found by bisection when the unconstrained point is infeasible.
    Entries with m_k <= 0 are clipped to zero; n_k = 0 with m_k > 0 makes
    the budget bind.
    """
    hhf = h.h.conj().T @ f.f
    sig1 = np.sqrt(1.0 + state.alpha) * state.beta
    sig2 = np.abs(state.beta) ** 2
    m = np.real(np.conj(sig1) * np.diagonal(hhf))
    n = np.abs(hhf) ** 2
    n = sig2 @ n  # n_k = sum_i |beta_i|^2 |h_i^H f_k|^2
    m_pos = np.maximum(m, 0.0)

    if not np.any(m_pos > 0):
        return PowerAllocation(p=np.zeros_like(m), p_t=p_t)

    binding = bool(np.any((n == 0) & (m_pos > 0)))
    if not binding:
        z = np.where(m_pos > 0, m_pos / np.where(n > 0, n, 1.0), 0.0)
        if float(z @ z) <= p_t:
            return PowerAllocation(p=z**2, p_t=p_t)

    def excess(mu: float) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            z_mu = np.where(m_pos > 0, m_pos / (n + mu), 0.0)
        return float(np.sum(z_mu**2)) - p_t

    hi = float(np.linalg.norm(m) / np.sqrt(p_t))
    mu = bisect_root(excess, 0.0, hi, bisection_tolerance * max(1.0, p_t))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(m_pos > 0, m_pos / (n + mu), 0.0)
    total = float(z @ z)
    if total > p_t:
        z *= np.sqrt(p_t / total)
    return PowerAllocation(p=z**2, p_t=p_t)


def build_surrogate_matrices(
    h: ChannelSet,
    state: FpState,
    p: PowerAllocation,
    *,
    variant: str = VARIANT_CONSISTENT,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Constant matrices of the scattering-matrix subproblem.

    Embeds F = S1 theta S2 (S1 selecting the halved antenna rows, S2 the
    RF-chain columns) so the subproblem reads
    2 Re tr(L2^H theta) - tr(theta X1 theta^H X2) with

      L2 = lower-left block 0.5 * H Sigma1 P^{1/2}, zeros elsewhere,
      X1 = blockdiag(diag(p), 0),
      X2 = blockdiag(0, 0.25 * H Sigma2 H^H).

    The returned shift lambda makes the shifted surrogate convex:
    max_k p_k for the consistent-gradient variant, lambda_max(X2) + 1e-9
    for the literal variant.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown surrogate variant {variant!r}")
    k, l = h.k, h.l
    n = k + l
    sig1 = np.sqrt(1.0 + state.alpha) * state.beta
    sig2 = np.abs(state.beta) ** 2

    l2 = np.zeros((n, n), dtype=complex)
    l2[k:, :k] = 0.5 * (h.h * (sig1 * np.sqrt(p.p)))
    x1 = np.zeros((n, n))
    x1[:k, :k] = np.diag(p.p)
    x2 = np.zeros((n, n), dtype=complex)
    x2[k:, k:] = 0.25 * ((h.h * sig2) @ h.h.conj().T)

    if variant == VARIANT_CONSISTENT:
        lam = float(p.p.max()) if p.k else 0.0
    else:
        eigs = np.linalg.eigvalsh(x2[k:, k:])
        lam = float(max(eigs[-1], 0.0)) + 1e-9
    return l2, x1, x2, lam


def update_scattering(
    theta0: ScatteringMatrix,
    l2: np.ndarray,
    x1: np.ndarray,
    x2: np.ndarray,
    lam: float,
    i1: int,
    *,
    variant: str = VARIANT_CONSISTENT,
) -> ScatteringMatrix:
    """Run i1 minorize-maximize steps theta <- project(G(theta)).

    G is the gradient of the convex shifted surrogate at the current
    iterate: L2 + X2 theta (lambda I - X1) for the consistent-gradient
    variant, or L2 + (lambda I - X2) theta X1 for the literal variant.
    Every step maximizes the tangent minorant over the symmetric-unitary
    set, so the surrogate (hence the subproblem objective) never
    decreases in the consistent variant. A gradient with negligible norm
    leaves the iterate unchanged.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown surrogate variant {variant!r}")
    if i1 < 1:
        raise ValueError("i1 must be >= 1")
    report = validate_lossless_reciprocal(theta0.theta)
    if not report.passed:
        raise InfeasibleStart(
            f"starting point infeasible: unitary residual {report.unitary_residual:.3e}, "
            f"symmetric residual {report.symmetric_residual:.3e}"
        )
    n = theta0.n
    shift = lam * np.eye(n)
    phi = theta0.theta
    for _ in range(i1):
        if variant == VARIANT_CONSISTENT:
            grad = l2 + x2 @ phi @ (shift - x1)
        else:
            grad = l2 + (shift - x2) @ phi @ x1
        if np.linalg.norm(grad) <= _ZERO_GRADIENT_NORM:
            break
        phi = sym_unitary_project(grad)
    return ScatteringMatrix(theta=phi, k=theta0.k, l=theta0.l)


def default_initialization(k: int, l: int, p_t: float, seed: int) -> tuple[ScatteringMatrix, PowerAllocation]:
    """Feasible nonzero starting point: projected complex Gaussian + uniform powers.

    The random projection avoids the degenerate identity start whose
    beamforming block is zero; the draw is decorrelated from the channel
    stream sharing the same seed.
    """
    n = k + l
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(1,))))
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    theta = ScatteringMatrix(theta=sym_unitary_project(raw), k=k, l=l)
    p = PowerAllocation(p=np.full(k, p_t / k), p_t=p_t)
    return theta, p


def run_bcd(
    h: ChannelSet,
    sigma2: NoisePowers,
    p_t: float,
    cfg: OptimizerConfig,
    theta_init: ScatteringMatrix,
    p_init: PowerAllocation,
) -> tuple[ScatteringMatrix, PowerAllocation, BeamformingMatrix, ConvergenceTrace]:
    """Outer loop: auxiliaries -> powers -> scattering until the rate settles.

    Terminates when the traced sum rate changes by at most
    outer_tolerance * max(1, previous rate) or the iteration cap is hit.
    In the consistent-gradient variant a rate drop beyond float noise
    raises NonmonotoneObjective, since ascent is guaranteed there.
    """
    k, l = h.k, h.l
    if theta_init.k != k or theta_init.l != l:
        raise DimensionMismatch(
            f"initial scattering split ({theta_init.k}, {theta_init.l}) != channel ({k}, {l})"
        )
    if sigma2.sigma2.shape[0] != k:
        raise DimensionMismatch("noise vector length disagrees with user count")
    report = validate_lossless_reciprocal(theta_init.theta)
    if not report.passed:
        raise InfeasibleInit("initial scattering matrix fails feasibility validation")
    if p_init.p.shape[0] != k:
        raise InfeasibleInit("initial power vector has wrong length")
    if float(p_init.p.sum()) > p_t * (1 + 1e-12) or float(p_init.p.sum()) <= 0:
        raise InfeasibleInit("initial powers must be nonzero and within budget")
    if np.linalg.norm(theta_init.theta[k:, :k]) == 0:
        raise InfeasibleInit("initial beamforming block theta_21 is zero; the iteration cannot move")

    theta = theta_init
    power = PowerAllocation(p=p_init.p, p_t=p_t)
    f = beamforming_from_scattering(theta)
    trace = ConvergenceTrace()

    def record(iteration: int, fp_nats: float | None) -> float:
        gamma = sinr(h, f, power, sigma2)
        report_rates = sum_rate(gamma)
        nats = float(np.sum(np.log1p(gamma)))
        account = power_account(theta, power)
        val = validate_lossless_reciprocal(theta.theta)
        trace.rows.append(
            TraceRow(
                iteration=iteration,
                sum_rate_bits=report_rates.sum_rate,
                objective_nats=nats,
                fp_objective_nats=nats if fp_nats is None else fp_nats,
                radiated_power=account.radiated,
                reflected_power=account.reflected,
                radiated_fraction=account.radiated_fraction,
                unitary_residual=val.unitary_residual,
                symmetric_residual=val.symmetric_residual,
                power_total=float(power.p.sum()),
            )
        )
        return report_rates.sum_rate

    previous_rate = record(0, None)
    for iteration in range(1, cfg.max_outer_iterations + 1):
        state = update_auxiliaries(h, f, power, sigma2)
        power = update_power(h, f, state, p_t, bisection_tolerance=cfg.bisection_tolerance)
        l2, x1, x2, lam = build_surrogate_matrices(h, state, power, variant=cfg.surrogate_variant)
        theta = update_scattering(
            theta, l2, x1, x2, lam, cfg.inner_iterations, variant=cfg.surrogate_variant
        )
        f = beamforming_from_scattering(theta)
        rate = record(iteration, fp_objective(state, power, theta, h, sigma2))
        if cfg.surrogate_variant == VARIANT_CONSISTENT and rate < previous_rate - _MONOTONE_SLACK:
            raise NonmonotoneObjective(
                f"sum rate fell from {previous_rate} to {rate} at outer iteration {iteration}"
            )
        if abs(rate - previous_rate) <= cfg.outer_tolerance * max(1.0, previous_rate):
            trace.converged = True
            break
        previous_rate = rate

    return theta, power, f, trace
