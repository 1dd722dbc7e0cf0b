"""Per-user SINR, sum rate and the radiated/reflected power split.

The rate report is in bits (base-2 logs); the optimizer works internally
in nats because the fractional-programming identities are native to the
natural log, and the argmax is base-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, NoisePowers
from .errors import DimensionMismatch, NegativeSinr, ZeroColumn
from .microwave import BeamformingMatrix, ScatteringMatrix, partition_scattering


@dataclass(frozen=True)
class PowerAllocation:
    """Per-RF-chain transmit powers with budget sum(p) <= p_t."""

    p: np.ndarray
    p_t: float

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        object.__setattr__(self, "p", p)
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("powers must be finite and nonnegative")
        if not (np.isfinite(self.p_t) and self.p_t > 0):
            raise ValueError(f"power budget must be positive, got {self.p_t}")
        if p.sum() > self.p_t * (1 + 1e-12):
            raise ValueError(f"allocated power {p.sum()} exceeds budget {self.p_t}")

    @property
    def k(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class RateReport:
    """Linear SINRs, per-user rates (bits) and their sum."""

    sinr: np.ndarray
    per_user_rate: np.ndarray
    sum_rate: float


@dataclass(frozen=True)
class PowerAccount:
    """Split of the network input power 0.25 * sum(p) into radiated and reflected."""

    input_power: float
    radiated: float
    reflected: float

    @property
    def radiated_fraction(self) -> float:
        return self.radiated / self.input_power if self.input_power > 0 else 0.0


def sinr(
    h: ChannelSet,
    f: BeamformingMatrix,
    p: PowerAllocation,
    sigma2: NoisePowers,
) -> np.ndarray:
    """Per-user SINR p_k |h_k^H f_k|^2 / (sum_{i != k} p_i |h_k^H f_i|^2 + sigma_k^2)."""
    k = h.k
    if f.f.shape != (h.l, k) or p.k != k or sigma2.sigma2.shape[0] != k:
        raise DimensionMismatch(
            f"inconsistent shapes: h {h.h.shape}, f {f.f.shape}, p {p.k}, sigma2 {sigma2.sigma2.shape[0]}"
        )
    gains = np.abs(h.h.conj().T @ f.f) ** 2  # gains[k, i] = |h_k^H f_i|^2
    signal = p.p * np.diagonal(gains)
    total = gains @ p.p
    return signal / (total - signal + sigma2.sigma2)


def sum_rate(sinr_values: np.ndarray) -> RateReport:
    """Rate report log2(1 + sinr) per user, summed."""
    sinr_values = np.atleast_1d(np.asarray(sinr_values, dtype=float))
    if np.any(sinr_values < 0):
        raise NegativeSinr(f"sinr must be nonnegative, got min {sinr_values.min()}")
    per_user = np.log2(1.0 + sinr_values)
    return RateReport(sinr=sinr_values, per_user_rate=per_user, sum_rate=float(per_user.sum()))


def power_account(theta: ScatteringMatrix, p: PowerAllocation) -> PowerAccount:
    """Input/radiated/reflected power accounting of the analog network.

    radiated = tr(theta_21^H theta_21 diag(p)) / 4 reaches the antennas,
    reflected = tr(theta_11^H theta_11 diag(p)) / 4 returns into the RF
    chains; unitarity of theta forces their sum to the input power.
    """
    theta_11, theta_21, _ = partition_scattering(theta)
    if p.k != theta.k:
        raise DimensionMismatch(f"power vector length {p.k} != input ports {theta.k}")
    radiated = 0.25 * float(np.sum(p.p * np.sum(np.abs(theta_21) ** 2, axis=0)))
    reflected = 0.25 * float(np.sum(p.p * np.sum(np.abs(theta_11) ** 2, axis=0)))
    return PowerAccount(input_power=0.25 * float(p.p.sum()), radiated=radiated, reflected=reflected)


def channel_orthogonality(h: ChannelSet) -> float:
    """Largest normalized cross-correlation max_{i != k} |h_i^H h_k| / (|h_i| |h_k|).

    Zero means exactly orthogonal channel directions; 1 means two users
    share a direction.
    """
    norms = np.linalg.norm(h.h, axis=0)
    if np.any(norms == 0):
        raise ZeroColumn("channel has a zero column")
    if h.k == 1:
        return 0.0
    gram = np.abs(h.h.conj().T @ h.h) / np.outer(norms, norms)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())
