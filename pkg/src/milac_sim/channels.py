"""Channel generation and persistence.

Rayleigh draws use an explicit polar Box-Muller transform of two uniform
streams, so the distribution is pinned by the documented transform rather
than by a library's Gaussian sampler. Orthogonalized sets keep the left
singular basis scaled by the singular values, which preserves the spectrum
while making the column Gram matrix diagonal.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MalformedFile, RankDeficient

MODEL_RAYLEIGH = "rayleigh"
MODEL_ORTHOGONAL = "orthogonal"
_MODELS = (MODEL_RAYLEIGH, MODEL_ORTHOGONAL)

_MAGIC = "MILAC-CHAN v1"


@dataclass(frozen=True)
class ChannelSet:
    """L x K matrix of complex downlink gains, column k serving user k."""

    h: np.ndarray
    model_tag: str
    seed: int

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        object.__setattr__(self, "h", h)
        if h.ndim != 2:
            raise DimensionMismatch("channel matrix must be 2-D")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel matrix has non-finite entries")
        if self.model_tag not in _MODELS:
            raise ValueError(f"unknown channel model {self.model_tag!r}")
        if self.model_tag == MODEL_ORTHOGONAL:
            gram = h.conj().T @ h
            off = gram - np.diag(np.diagonal(gram))
            if np.linalg.norm(off) > 1e-9 * np.linalg.norm(h) ** 2:
                raise ValueError("orthogonal channel set has non-diagonal Gram matrix")

    @property
    def k(self) -> int:
        return self.h.shape[1]

    @property
    def l(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class NoisePowers:
    """Per-user noise variances (watts), all positive."""

    sigma2: np.ndarray

    def __post_init__(self):
        sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        object.__setattr__(self, "sigma2", sigma2)
        if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
            raise ValueError("noise powers must be positive and finite")


def unit_noise(k: int) -> NoisePowers:
    return NoisePowers(np.ones(k))


def generate_rayleigh(k: int, l: int, seed: int) -> ChannelSet:
    """i.i.d. unit-variance complex Gaussian channel, deterministic in seed.

    Each entry is sqrt(-ln(1 - u1)) * exp(2j pi u2) for two uniforms drawn
    from a fresh PCG64 stream; real and imaginary parts are N(0, 1/2).
    """
    if k < 1 or l < 1:
        raise DimensionMismatch(f"need k >= 1 and l >= 1, got k={k}, l={l}")
    rng = np.random.Generator(np.random.PCG64(seed))
    u1 = rng.random((l, k))
    u2 = rng.random((l, k))
    h = np.sqrt(-np.log1p(-u1)) * np.exp(2j * np.pi * u2)
    return ChannelSet(h=h, model_tag=MODEL_RAYLEIGH, seed=seed)


def orthogonalize(channels: ChannelSet) -> ChannelSet:
    """Replace the channel by (left singular basis) x (singular values).

    The result spans the same column space with the same singular values,
    but its columns are mutually orthogonal.
    """
    h = channels.h
    if h.shape[0] < h.shape[1]:
        raise DimensionMismatch("orthogonalization needs L >= K")
    u, s, _ = np.linalg.svd(h, full_matrices=False)
    if s[-1] < 1e-12 * s[0]:
        raise RankDeficient(f"channel matrix is rank deficient (sigma_min/sigma_max = {s[-1] / s[0]:.3e})")
    return ChannelSet(h=u * s, model_tag=MODEL_ORTHOGONAL, seed=channels.seed)


def save_channels(path: str | os.PathLike, channels: ChannelSet) -> None:
    """Write a channel set as UTF-8 text; bit-exact round trip with load_channels."""
    lines = [_MAGIC, f"{channels.k} {channels.l} {channels.seed} {channels.model_tag}"]
    for col in range(channels.k):  # column-major: user k's vector is contiguous
        for row in range(channels.l):
            v = channels.h[row, col]
            lines.append(f"{v.real:.16e} {v.imag:.16e}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channels(path: str | os.PathLike) -> ChannelSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != _MAGIC:
        raise MalformedFile(f"missing magic line {_MAGIC!r}")
    try:
        k_str, l_str, seed_str, model_tag = lines[1].split()
        k, l, seed = int(k_str), int(l_str), int(seed_str)
    except (IndexError, ValueError) as exc:
        raise MalformedFile("header line must be 'K L seed model_tag'") from exc
    entries = lines[2:]
    if len(entries) != k * l:
        raise MalformedFile(f"expected {k * l} entries, found {len(entries)}")
    h = np.empty((l, k), dtype=complex)
    for idx, line in enumerate(entries):
        parts = line.split()
        if len(parts) != 2:
            raise MalformedFile(f"entry line {idx + 3} must be 're im'")
        try:
            h[idx % l, idx // l] = complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise MalformedFile(f"cannot parse entry line {idx + 3}") from exc
    try:
        return ChannelSet(h=h, model_tag=model_tag, seed=seed)
    except ValueError as exc:
        raise MalformedFile(str(exc)) from exc
