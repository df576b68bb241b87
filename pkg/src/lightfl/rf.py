"""RF uplink: Rician channel draws, receive beamforming and rate/power/energy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)


class BeamformingError(RuntimeError):
    """Raised when the interference-plus-noise system cannot be solved."""


@dataclass(frozen=True)
class RicianModel:
    """Large- and small-scale statistics of the uplink.

    ``reference_gain`` is the linear power gain at 1 m, so the pathloss at
    distance d is ``reference_gain * d**-pathloss_exponent``.
    """

    rician_factor_db: float = 8.0
    pathloss_exponent: float = 2.6
    reference_gain: float = 1.0

    def __post_init__(self):
        if not self.pathloss_exponent > 0:
            raise ValueError("pathloss_exponent must be positive")
        if not self.reference_gain > 0:
            raise ValueError("reference_gain must be positive")

    @property
    def k_linear(self) -> float:
        return 10.0 ** (self.rician_factor_db / 10.0)

    def pathloss(self, distance):
        return self.reference_gain * np.asarray(distance, dtype=float) ** (-self.pathloss_exponent)


@dataclass(frozen=True)
class UplinkChannelSet:
    """One realization of all device-to-AP channels, shape (J, M)."""

    channels: np.ndarray
    noise_variance: float
    bandwidth: float

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=complex)
        if ch.ndim != 2 or ch.shape[1] < 1 or ch.shape[0] < 1:
            raise ValueError(f"channels must have shape (J, M) with J, M >= 1, got {ch.shape}")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be positive")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "channels", ch)

    @property
    def n_devices(self) -> int:
        return self.channels.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.channels.shape[1]


@dataclass(frozen=True)
class Beamformer:
    weights: np.ndarray
    sinr_coefficient: float


def draw_channel_array(model: RicianModel, distances, n_antennas: int, size: int, rng) -> np.ndarray:
    """Draw ``size`` independent channel sets, returned with shape (size, J, M).

    The LOS component is the all-ones vector (broadside array); the scatter
    component is CN(0, 1) per entry.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 1 or np.any(d <= 0):
        raise ValueError("distances must be a 1-D sequence of positive values")
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    k = model.k_linear
    if math.isinf(k):
        los_w, nlos_w = 1.0, 0.0
    else:
        los_w, nlos_w = math.sqrt(k / (k + 1)), math.sqrt(1 / (k + 1))
    shape = (size, d.size, n_antennas)
    scatter = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    amplitude = np.sqrt(model.pathloss(d))[None, :, None]
    return amplitude * (los_w + nlos_w * scatter)


def draw_channels(
    model: RicianModel,
    distances,
    n_antennas: int,
    rng_seed: int,
    noise_variance: float = 1e-10,
    bandwidth: float = 1e6,
) -> UplinkChannelSet:
    rng = np.random.default_rng(rng_seed)
    ch = draw_channel_array(model, distances, n_antennas, 1, rng)[0]
    return UplinkChannelSet(ch, noise_variance, bandwidth)


def interference_covariance(channels: UplinkChannelSet, device: int) -> np.ndarray:
    """Sum of the other devices' outer products plus sigma^2 I."""
    g = channels.channels
    others = np.delete(g, device, axis=0)
    cov = others.T @ others.conj()
    cov += channels.noise_variance * np.eye(channels.n_antennas)
    return cov


def rayleigh_quotient(g: np.ndarray, cov: np.ndarray, w: np.ndarray) -> float:
    """|g^H w|^2 / (w^H cov w) for one or many columns of ``w``."""
    num = np.abs(g.conj() @ w) ** 2
    den = np.real(np.einsum("i...,ij,j...->...", w.conj(), cov, w))
    return num / den


def optimal_beamformer(channels: UplinkChannelSet, device: int) -> Beamformer:
    """Unit-norm SINR-maximizing combiner for ``device``.

    The numerator matrix g g^H is rank one, so the dominant generalized
    eigenvector is proportional to cov^{-1} g and the maximum quotient is
    g^H cov^{-1} g.
    """
    if not 0 <= device < channels.n_devices:
        raise IndexError(f"device {device} out of range for {channels.n_devices} devices")
    g = channels.channels[device]
    cov = interference_covariance(channels, device)
    try:
        v = np.linalg.solve(cov, g)
    except np.linalg.LinAlgError as exc:
        raise BeamformingError(f"interference covariance solve failed for device {device}") from exc
    if not np.all(np.isfinite(v)):
        raise BeamformingError(f"non-finite beamformer for device {device}")
    w = v / np.linalg.norm(v)
    gamma = float(rayleigh_quotient(g, cov, w))
    return Beamformer(w, gamma)


def uplink_rate(bf: Beamformer, tx_power: float, t_trans: float, bandwidth: float) -> float:
    """Bits delivered in ``t_trans`` seconds: T B log2(1 + Gamma P)."""
    if tx_power < 0:
        raise ValueError("tx_power must be nonnegative")
    if not t_trans > 0:
        raise ValueError("t_trans must be positive")
    return t_trans * bandwidth * math.log1p(bf.sinr_coefficient * tx_power) / LN2


def required_uplink_power(bf: Beamformer, rate_threshold: float, t_trans: float, bandwidth: float) -> float:
    """Smallest transmit power that delivers ``rate_threshold`` bits in ``t_trans``; +inf past float range."""
    if not t_trans > 0:
        raise ValueError("t_trans must be positive")
    try:
        return math.expm1(LN2 * rate_threshold / (t_trans * bandwidth)) / bf.sinr_coefficient
    except OverflowError:
        return math.inf


def transmission_energy(t_trans: float, tx_power: float) -> float:
    if t_trans < 0 or tx_power < 0:
        raise ValueError("t_trans and tx_power must be nonnegative")
    return t_trans * tx_power
