"""Optical downlink: Lambertian LOS channel gain and solar-panel harvesting.

Band index 0 is visible light (VL), index 1 is infrared light (IRL). Both
bands share the same formulas; only their link parameters differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VL = 0
IRL = 1


@dataclass(frozen=True)
class OpticalLink:
    """Geometry and receiver optics of one transmitter-to-panel link.

    Angles are in radians, area in m^2 and distance in m.
    """

    active_area: float
    distance: float
    irradiation_angle: float
    incidence_angle: float
    fov: float
    semi_angle_half_power: float
    filter_gain: float = 1.0
    concentrator_index: float = 1.5

    def __post_init__(self):
        if not self.active_area > 0:
            raise ValueError(f"active_area must be positive, got {self.active_area}")
        if not self.distance > 0:
            raise ValueError(f"distance must be positive, got {self.distance}")
        if not 0 <= self.fov <= math.pi / 2:
            raise ValueError(f"fov must lie in [0, pi/2], got {self.fov}")
        if not 0 < self.semi_angle_half_power < math.pi / 2:
            raise ValueError(
                f"semi_angle_half_power must lie in (0, pi/2), got {self.semi_angle_half_power}"
            )
        if self.filter_gain < 0:
            raise ValueError("filter_gain must be nonnegative")
        if not self.concentrator_index > 0:
            raise ValueError("concentrator_index must be positive")


@dataclass(frozen=True)
class HarvesterParams:
    """Solar-cell parameters in SI units (A/W, A, V)."""

    fill_factor: float = 0.75
    responsivity: float = 0.4
    dark_current: float = 1e-12
    thermal_voltage: float = 0.02585

    def __post_init__(self):
        for name in ("fill_factor", "responsivity", "dark_current", "thermal_voltage"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.fill_factor > 1:
            raise ValueError(f"fill_factor must not exceed 1, got {self.fill_factor}")


def lambertian_order(semi_angle_half_power: float) -> float:
    """Lambertian mode number m = -ln 2 / ln cos(phi_1/2)."""
    if not 0 < semi_angle_half_power < math.pi / 2:
        raise ValueError(
            f"semi-angle at half power must lie in (0, pi/2), got {semi_angle_half_power}"
        )
    c = math.cos(semi_angle_half_power)
    # cos rounds to exactly 1.0 for tiny angles; the order is unbounded there
    if c >= 1.0:
        raise ValueError("semi-angle too small: Lambertian order overflows")
    return -math.log(2.0) / math.log(c)


def concentrator_gain(link: OpticalLink) -> float:
    """Non-imaging concentrator gain n^2 / sin^2(fov), zero outside the field of view."""
    if link.incidence_angle > link.fov or link.fov == 0.0:
        return 0.0
    return link.concentrator_index**2 / math.sin(link.fov) ** 2


def channel_gain(link: OpticalLink) -> float:
    """DC gain of the line-of-sight optical channel."""
    g = concentrator_gain(link)
    cos_in = math.cos(link.incidence_angle)
    if g == 0.0 or cos_in <= 0.0:
        return 0.0
    m = lambertian_order(link.semi_angle_half_power)
    radiant = (m + 1) / (2 * math.pi * link.distance**2) * math.cos(link.irradiation_angle) ** m
    return link.active_area * radiant * link.filter_gain * g * cos_in


def photocurrent(link: OpticalLink, hp: HarvesterParams, transmit_power):
    """Generated DC current I_G = responsivity * P * h (broadcasts over P)."""
    return hp.responsivity * np.asarray(transmit_power, dtype=float) * channel_gain(link)


def harvested_power(link: OpticalLink, hp: HarvesterParams, transmit_power, gain=None):
    """Maximum electrical power the panel delivers for a given optical transmit power.

    ``f_opt * I_G * V_t * ln(1 + I_G / I_d)``. Accepts scalars or arrays for
    ``transmit_power``. ``gain`` lets callers pass a precomputed channel gain.
    """
    h = channel_gain(link) if gain is None else gain
    if isinstance(transmit_power, (int, float)):
        if transmit_power < 0:
            raise ValueError("transmit_power must be nonnegative")
        i_g = hp.responsivity * transmit_power * h
        return hp.fill_factor * i_g * hp.thermal_voltage * math.log1p(i_g / hp.dark_current)
    p = np.asarray(transmit_power, dtype=float)
    if np.any(p < 0):
        raise ValueError("transmit_power must be nonnegative")
    i_g = hp.responsivity * p * h
    out = hp.fill_factor * i_g * hp.thermal_voltage * np.log1p(i_g / hp.dark_current)
    return float(out) if out.ndim == 0 else out


def total_harvested_energy(
    vl: OpticalLink,
    irl: OpticalLink,
    hp: HarvesterParams,
    p_vl: float,
    p_irl: float,
    frame: float,
) -> float:
    """Energy harvested from both bands over one frame, in J."""
    if not frame > 0:
        raise ValueError(f"frame must be positive, got {frame}")
    return frame * (harvested_power(vl, hp, p_vl) + harvested_power(irl, hp, p_irl))
