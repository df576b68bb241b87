"""Scenario configuration: YAML parsing, unit normalization and problem assembly.

Keys carry their unit as a suffix (``frame_s``, ``active_area_cm2``,
``dark_current_ma``...). Everything is converted to SI on load.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from ..compute import ComputeParams
from ..optics import HarvesterParams, OpticalLink
from ..rf import Beamformer, RicianModel
from ..solver import DeviceProblem


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BandOptics:
    """Per-band optical template; geometry comes from the device position."""

    semi_angle_half_power: float
    fov: float
    active_area: float
    filter_gain: float = 1.0
    concentrator_index: float = 1.5


@dataclass(frozen=True)
class OpticalConfig:
    transmitter_height: float
    vl: BandOptics
    irl: BandOptics
    harvester: HarvesterParams
    p_vl: float


@dataclass(frozen=True)
class DeviceConfig:
    distance_to_ap: float
    distance_to_optical: float
    compute: ComputeParams
    rate_threshold: float
    power_budget: float


@dataclass(frozen=True)
class ScenarioConfig:
    devices: tuple
    antennas: int
    bandwidth: float
    noise_variance: float
    rician: RicianModel
    optical: OpticalConfig
    frame: float
    realizations: int
    rng_seed: int
    los_vector: str = "ones"

    def __post_init__(self):
        if not self.devices:
            raise ConfigError("at least one device is required")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if not self.frame > 0:
            raise ConfigError("frame_s must be positive")
        if self.antennas < 1:
            raise ConfigError("antennas must be >= 1")
        if not self.bandwidth > 0 or not self.noise_variance > 0:
            raise ConfigError("bandwidth_hz and noise_variance_w must be positive")
        if self.los_vector != "ones":
            raise ConfigError(f"unsupported los_vector {self.los_vector!r}; only 'ones' is implemented")
        for d in self.devices:
            if d.distance_to_optical < self.optical.transmitter_height:
                raise ConfigError(
                    f"optical distance {d.distance_to_optical} m is shorter than the "
                    f"transmitter height {self.optical.transmitter_height} m"
                )

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    def with_devices(self, **changes) -> "ScenarioConfig":
        """Copy with the same field changes applied to every device."""
        return replace(self, devices=tuple(replace(d, **changes) for d in self.devices))

    def with_compute(self, **changes) -> "ScenarioConfig":
        return replace(
            self, devices=tuple(replace(d, compute=replace(d.compute, **changes)) for d in self.devices)
        )

    def with_irl_semi_angle(self, radians: float) -> "ScenarioConfig":
        optical = replace(self.optical, irl=replace(self.optical.irl, semi_angle_half_power=radians))
        return replace(self, optical=optical)


DEFAULT_CONFIG = {
    "frame_s": 1.0,
    "realizations": 10000,
    "rng_seed": 2021,
    "uplink": {
        "antennas": 4,
        "bandwidth_hz": 1.0e6,
        "noise_variance_w": 1.0e-10,
        "rician_factor_db": 8.0,
        "pathloss_exponent": 2.6,
        "reference_gain_db": -100.0,
        "los_vector": "ones",
    },
    "optical": {
        "transmitter_height_m": 2.1,
        "p_vl_w": 28.0,
        "harvester": {
            "fill_factor": 0.75,
            "responsivity_a_per_w": 0.4,
            "dark_current_ma": 1.0e-9,
            "thermal_voltage_v": 0.02585,
        },
        "vl": {
            "semi_angle_deg": 60.0,
            "fov_deg": 70.0,
            "active_area_cm2": 85.0,
            "filter_gain": 1.0,
            "concentrator_index": 1.5,
        },
        "irl": {
            "semi_angle_deg": 60.0,
            "fov_deg": 70.0,
            "active_area_cm2": 85.0,
            "filter_gain": 1.0,
            "concentrator_index": 1.5,
        },
    },
    "compute": {
        "capacitance_coeff": 2.0e-28,
        "cycles_per_sample": 20.0,
        "dataset_size_samples": 1.0e7,
        "f_min_hz": 0.3e9,
        "f_max_hz": 1.5e9,
        "local_iterations": 1,
    },
    "device_defaults": {
        "rate_threshold_bits": 36000.0,
        "power_budget_w": 10000.0,
    },
    "devices": [
        {"distance_to_ap_m": 3.3, "distance_to_optical_m": 2.3},
        {"distance_to_ap_m": 3.0, "distance_to_optical_m": 2.2},
        {"distance_to_ap_m": 2.7, "distance_to_optical_m": 2.1},
    ],
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


_DATASET_KEYS = ("dataset_size_samples", "dataset_size_mbit")


def _merge_compute(base: dict, override: dict) -> dict:
    """Merge where the two dataset-size keys replace each other instead of stacking."""
    given = [k for k in _DATASET_KEYS if k in override]
    if len(given) == 1:
        base = {k: v for k, v in base.items() if k not in _DATASET_KEYS}
    return _merge(base, override)


def _take(section: dict, key: str, where: str):
    try:
        return section.pop(key)
    except KeyError:
        raise ConfigError(f"missing key {where}.{key}") from None


def _reject_leftovers(section: dict, where: str):
    if section:
        raise ConfigError(f"unknown keys in {where}: {sorted(section)}")


def _band(raw: dict, where: str) -> BandOptics:
    raw = dict(raw)
    band = BandOptics(
        semi_angle_half_power=math.radians(float(_take(raw, "semi_angle_deg", where))),
        fov=math.radians(float(_take(raw, "fov_deg", where))),
        active_area=float(_take(raw, "active_area_cm2", where)) * 1e-4,
        filter_gain=float(raw.pop("filter_gain", 1.0)),
        concentrator_index=float(raw.pop("concentrator_index", 1.5)),
    )
    _reject_leftovers(raw, where)
    return band


def _compute(raw: dict, where: str) -> ComputeParams:
    raw = dict(raw)
    if "dataset_size_samples" in raw and "dataset_size_mbit" in raw:
        raise ConfigError(f"{where}: give dataset_size_samples or dataset_size_mbit, not both")
    if "dataset_size_mbit" in raw:
        # cycles_per_sample is then read as cycles per bit
        dataset = float(raw.pop("dataset_size_mbit")) * 1e6
    else:
        dataset = float(_take(raw, "dataset_size_samples", where))
    params = ComputeParams(
        capacitance_coeff=float(_take(raw, "capacitance_coeff", where)),
        cycles_per_sample=float(_take(raw, "cycles_per_sample", where)),
        dataset_size=dataset,
        f_min=float(_take(raw, "f_min_hz", where)),
        f_max=float(_take(raw, "f_max_hz", where)),
        local_iterations=int(_take(raw, "local_iterations", where)),
    )
    _reject_leftovers(raw, where)
    return params


def parse_config(raw: dict | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from a mapping merged over the defaults."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    merged = _merge(DEFAULT_CONFIG, raw)
    if isinstance(raw.get("compute"), dict):
        merged["compute"] = _merge_compute(DEFAULT_CONFIG["compute"], raw["compute"])
    try:
        return _parse(merged)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse(cfg: dict) -> ScenarioConfig:
    cfg = copy.deepcopy(cfg)
    up = cfg.pop("uplink")
    opt = cfg.pop("optical")
    harv = opt.pop("harvester")
    compute_defaults = cfg.pop("compute")
    device_defaults = cfg.pop("device_defaults")

    rician = RicianModel(
        rician_factor_db=float(_take(up, "rician_factor_db", "uplink")),
        pathloss_exponent=float(_take(up, "pathloss_exponent", "uplink")),
        reference_gain=10.0 ** (float(_take(up, "reference_gain_db", "uplink")) / 10.0),
    )
    harvester = HarvesterParams(
        fill_factor=float(_take(harv, "fill_factor", "optical.harvester")),
        responsivity=float(_take(harv, "responsivity_a_per_w", "optical.harvester")),
        dark_current=float(_take(harv, "dark_current_ma", "optical.harvester")) * 1e-3,
        thermal_voltage=float(_take(harv, "thermal_voltage_v", "optical.harvester")),
    )
    _reject_leftovers(harv, "optical.harvester")
    optical = OpticalConfig(
        transmitter_height=float(_take(opt, "transmitter_height_m", "optical")),
        vl=_band(_take(opt, "vl", "optical"), "optical.vl"),
        irl=_band(_take(opt, "irl", "optical"), "optical.irl"),
        harvester=harvester,
        p_vl=float(_take(opt, "p_vl_w", "optical")),
    )
    _reject_leftovers(opt, "optical")

    devices = []
    for i, raw_dev in enumerate(cfg.pop("devices")):
        where = f"devices[{i}]"
        dev = dict(raw_dev)
        comp = _compute(_merge_compute(compute_defaults, dev.pop("compute", {})), f"{where}.compute")
        defaults = dict(device_defaults)
        devices.append(
            DeviceConfig(
                distance_to_ap=float(_take(dev, "distance_to_ap_m", where)),
                distance_to_optical=float(_take(dev, "distance_to_optical_m", where)),
                compute=comp,
                rate_threshold=float(dev.pop("rate_threshold_bits", defaults["rate_threshold_bits"])),
                power_budget=float(dev.pop("power_budget_w", defaults["power_budget_w"])),
            )
        )
        _reject_leftovers(dev, where)

    scenario = ScenarioConfig(
        devices=tuple(devices),
        antennas=int(_take(up, "antennas", "uplink")),
        bandwidth=float(_take(up, "bandwidth_hz", "uplink")),
        noise_variance=float(_take(up, "noise_variance_w", "uplink")),
        rician=rician,
        optical=optical,
        frame=float(_take(cfg, "frame_s", "<root>")),
        realizations=int(_take(cfg, "realizations", "<root>")),
        rng_seed=int(_take(cfg, "rng_seed", "<root>")),
        los_vector=str(up.pop("los_vector", "ones")),
    )
    _reject_leftovers(up, "uplink")
    _reject_leftovers(cfg, "<root>")
    return scenario


def load_config(path: str | Path | None = None) -> ScenarioConfig:
    """Read a YAML scenario file; missing keys fall back to the defaults."""
    if path is None:
        return parse_config()
    try:
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return parse_config(raw)


def default_config() -> ScenarioConfig:
    return parse_config()


def optical_link(band: BandOptics, height: float, distance: float) -> OpticalLink:
    """Link for a downward-facing transmitter and an upward-facing panel.

    Both irradiation and incidence angles equal arccos(height / distance).
    """
    angle = math.acos(min(height / distance, 1.0))
    return OpticalLink(
        active_area=band.active_area,
        distance=distance,
        irradiation_angle=angle,
        incidence_angle=angle,
        fov=band.fov,
        semi_angle_half_power=band.semi_angle_half_power,
        filter_gain=band.filter_gain,
        concentrator_index=band.concentrator_index,
    )


@dataclass(frozen=True)
class DeviceTemplate:
    """Everything about a device except its uplink beamformer."""

    compute: ComputeParams
    rate_threshold: float
    frame: float
    power_budget: float
    vl_link: OpticalLink
    irl_link: OpticalLink
    harvester: HarvesterParams
    p_vl: float
    bandwidth: float

    def problem(self, beamformer: Beamformer) -> DeviceProblem:
        return DeviceProblem(
            compute=self.compute,
            beamformer=beamformer,
            rate_threshold=self.rate_threshold,
            frame=self.frame,
            power_budget=self.power_budget,
            vl_link=self.vl_link,
            irl_link=self.irl_link,
            harvester=self.harvester,
            p_vl=self.p_vl,
            bandwidth=self.bandwidth,
        )


def device_templates(cfg: ScenarioConfig) -> list[DeviceTemplate]:
    opt = cfg.optical
    out = []
    for dev in cfg.devices:
        out.append(
            DeviceTemplate(
                compute=dev.compute,
                rate_threshold=dev.rate_threshold,
                frame=cfg.frame,
                power_budget=dev.power_budget,
                vl_link=optical_link(opt.vl, opt.transmitter_height, dev.distance_to_optical),
                irl_link=optical_link(opt.irl, opt.transmitter_height, dev.distance_to_optical),
                harvester=opt.harvester,
                p_vl=opt.p_vl,
                bandwidth=cfg.bandwidth,
            )
        )
    return out
