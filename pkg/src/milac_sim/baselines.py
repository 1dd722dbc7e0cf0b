"""Comparison oracles: fully digital FP beamforming and the single-user closed form.

The digital beamformer shares the auxiliary-variable machinery of the
analog optimizer but optimizes an unconstrained-direction matrix W under
tr(W W^H) <= budget, so it upper-bounds what the analog network can do
(its feasible set contains every analog solution at a quarter of the
source budget).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, NoisePowers
from .errors import DimensionMismatch
from .evaluation import RateReport, sum_rate
from .linalg import bisect_root
from .optimizer import ConvergenceTrace, TraceRow


@dataclass(frozen=True)
class DigitalBeamformer:
    """L x K beamforming matrix with tr(w w^H) <= budget."""

    w: np.ndarray
    budget: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=complex)
        object.__setattr__(self, "w", w)
        if w.ndim != 2:
            raise DimensionMismatch("beamformer must be 2-D")
        used = float(np.sum(np.abs(w) ** 2))
        if used > self.budget * (1 + 1e-12):
            raise ValueError(f"beamformer power {used} exceeds budget {self.budget}")


def _digital_sinr(h: np.ndarray, w: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    gains = np.abs(h.conj().T @ w) ** 2
    signal = np.diagonal(gains)
    return signal / (gains.sum(axis=1) - signal + sigma2)


def _digital_fp_value(h, w, alpha, beta, sigma2) -> float:
    hhw = h.conj().T @ w
    linear = 2.0 * float(np.real(np.sum(np.sqrt(1.0 + alpha) * np.conj(beta) * np.diagonal(hhw))))
    quad = float(np.sum(np.abs(beta) ** 2 * (np.sum(np.abs(hhw) ** 2, axis=1) + sigma2)))
    return float(np.sum(np.log1p(alpha) - alpha)) + linear - quad


def fp_digital(
    h: ChannelSet,
    sigma2: NoisePowers,
    budget: float,
    tolerance: float = 1e-4,
    max_iters: int = 300,
    *,
    w_init: np.ndarray | None = None,
    bisection_tolerance: float = 1e-10,
) -> tuple[DigitalBeamformer, RateReport, ConvergenceTrace]:
    """Fully digital sum-rate maximization by alternating closed-form updates.

    Auxiliaries follow the same closed forms as the analog optimizer with
    w_k in place of sqrt(p_k) f_k; the beamformer block is
    w_k = sqrt(1+alpha_k) beta_k (sum_i |beta_i|^2 h_i h_i^H + mu I)^{-1} h_k
    with mu >= 0 bisected so the power constraint holds with complementary
    slackness. Starts from a matched filter with equal power split unless
    w_init is given.
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    hm = h.h
    l, k = hm.shape
    s2 = sigma2.sigma2
    if s2.shape[0] != k:
        raise DimensionMismatch("noise vector length disagrees with user count")

    if w_init is None:
        w = hm / np.linalg.norm(hm, axis=0) * np.sqrt(budget / k)
    else:
        w = np.asarray(w_init, dtype=complex)
        if w.shape != (l, k):
            raise DimensionMismatch(f"w_init must have shape ({l}, {k})")
        used = float(np.sum(np.abs(w) ** 2))
        if used > budget:
            w = w * np.sqrt(budget / used)

    trace = ConvergenceTrace()

    def record(iteration: int, fp_nats: float | None) -> float:
        gamma = _digital_sinr(hm, w, s2)
        rate_bits = float(np.sum(np.log2(1.0 + gamma)))
        nats = float(np.sum(np.log1p(gamma)))
        used = float(np.sum(np.abs(w) ** 2))
        trace.rows.append(
            TraceRow(
                iteration=iteration,
                sum_rate_bits=rate_bits,
                objective_nats=nats,
                fp_objective_nats=nats if fp_nats is None else fp_nats,
                radiated_power=used,
                reflected_power=0.0,
                radiated_fraction=used / budget,
                unitary_residual=0.0,
                symmetric_residual=0.0,
                power_total=used,
            )
        )
        return rate_bits

    previous_rate = record(0, None)
    for iteration in range(1, max_iters + 1):
        hhw = hm.conj().T @ w
        gains = np.abs(hhw) ** 2
        signal = np.diagonal(gains)
        denom = gains.sum(axis=1) + s2
        alpha = signal / (denom - signal)
        beta = np.sqrt(1.0 + alpha) * np.diagonal(hhw) / denom

        # Shared eigenbasis of sum_i |beta_i|^2 h_i h_i^H makes the dual
        # search a scalar function of mu. The Gram matrix is singular
        # whenever L > K, so the mu = 0 candidate is the pseudo-inverse
        # solution (h_k components in the null space vanish analytically).
        weights = np.abs(beta) ** 2
        gram = (hm * weights) @ hm.conj().T
        eigvals, eigvecs = np.linalg.eigh(gram)
        eigvals = np.maximum(eigvals, 0.0)
        proj = eigvecs.conj().T @ hm  # (l, k): coordinates of each h_k
        proj_sq = np.abs(proj) ** 2
        scale = (1.0 + alpha) * weights  # |sqrt(1+alpha_k) beta_k|^2
        coeffs = np.sqrt(1.0 + alpha) * beta

        floor = eigvals[-1] * 1e-12
        inv0 = np.where(eigvals > floor, 1.0 / np.where(eigvals > floor, eigvals, 1.0), 0.0)
        used_pinv = float(np.sum(scale * (proj_sq * inv0[:, None] ** 2).sum(axis=0)))

        if used_pinv <= budget:
            w = (eigvecs * inv0) @ proj * coeffs
        else:

            def excess(mu: float) -> float:
                if mu == 0.0:
                    return used_pinv - budget
                inv_sq = 1.0 / (eigvals + mu) ** 2
                return float(np.sum(scale * (proj_sq * inv_sq[:, None]).sum(axis=0))) - budget

            hi = float(np.sqrt(np.sum(scale * np.sum(np.abs(hm) ** 2, axis=0)) / budget))
            mu = bisect_root(excess, 0.0, hi, bisection_tolerance * max(1.0, budget))
            if mu == 0.0:
                w = (eigvecs * inv0) @ proj * coeffs
            else:
                w = (eigvecs / (eigvals + mu)) @ proj * coeffs
        used = float(np.sum(np.abs(w) ** 2))
        if used > budget:
            w = w * np.sqrt(budget / used)

        rate = record(iteration, _digital_fp_value(hm, w, alpha, beta, s2))
        if abs(rate - previous_rate) <= tolerance * max(1.0, previous_rate):
            trace.converged = True
            break
        previous_rate = rate

    gamma = _digital_sinr(hm, w, s2)
    return DigitalBeamformer(w=w, budget=budget), sum_rate(gamma), trace


def mrt_single_user_rate(h_col: np.ndarray, p_t: float, sigma2: float) -> float:
    """Single-user analog-network optimum log2(1 + p_t |h|^2 / (4 sigma^2)).

    The factor 4 is the network's structural halving of the beamforming
    block applied to the power |f|^2 <= 1/4.
    """
    if p_t < 0 or sigma2 <= 0:
        raise ValueError("need p_t >= 0 and sigma2 > 0")
    h_col = np.asarray(h_col, dtype=complex)
    return float(np.log2(1.0 + p_t * np.linalg.norm(h_col) ** 2 / (4.0 * sigma2)))
