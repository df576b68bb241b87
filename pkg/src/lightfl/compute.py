"""On-device FL computation: CPU energy and time per local iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComputeParams:
    """CPU workload of one device.

    ``capacitance_coeff`` is alpha; the chipset's effective switched
    capacitance is alpha / 2. ``dataset_size`` times ``cycles_per_sample`` is
    the cycle count of one pass over the local data, so D may be counted in
    samples or bits as long as c uses the same unit.
    """

    capacitance_coeff: float = 2e-28
    cycles_per_sample: float = 20.0
    dataset_size: float = 1e7
    f_min: float = 0.3e9
    f_max: float = 1.5e9
    local_iterations: int = 1

    def __post_init__(self):
        for name in ("capacitance_coeff", "cycles_per_sample", "dataset_size", "f_min"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.f_min <= self.f_max:
            raise ValueError(f"f_min ({self.f_min}) exceeds f_max ({self.f_max})")
        if int(self.local_iterations) != self.local_iterations or self.local_iterations < 1:
            raise ValueError(f"local_iterations must be an integer >= 1, got {self.local_iterations}")

    @property
    def cycles(self) -> float:
        """CPU cycles for one local iteration (c * D)."""
        return self.cycles_per_sample * self.dataset_size


def computation_time(p: ComputeParams, f_cpu: float) -> float:
    if not p.f_min <= f_cpu <= p.f_max:
        raise ValueError(f"CPU frequency {f_cpu} outside [{p.f_min}, {p.f_max}]")
    return p.cycles / f_cpu


def cpu_frequency(p: ComputeParams, t_comp: float) -> float:
    """Frequency needed to finish one local iteration in ``t_comp`` seconds (unchecked)."""
    return p.cycles / t_comp


def computation_energy(p: ComputeParams, t_comp):
    """Energy of one local iteration finished in ``t_comp`` seconds."""
    t = np.asarray(t_comp, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t_comp must be positive")
    out = 0.5 * p.capacitance_coeff * p.cycles**3 / t**2
    return float(out) if out.ndim == 0 else out


def computation_energy_at_frequency(p: ComputeParams, f_cpu):
    """Same energy written in terms of the CPU frequency: (alpha/2) c D f^2."""
    return 0.5 * p.capacitance_coeff * p.cycles * np.asarray(f_cpu, dtype=float) ** 2


def total_compute_energy(p: ComputeParams, t_trans, frame: float):
    """Compute energy charged per frame when K iterations share the time left after transmission.

    This is the per-iteration energy at t_comp = (frame - t_trans) / K, which
    grows as K^2 through the shorter iteration time.
    """
    k = p.local_iterations
    if isinstance(t_trans, (int, float)):
        if t_trans >= frame:
            raise ValueError(f"t_trans must be shorter than the frame ({frame} s)")
        return 0.5 * p.capacitance_coeff * p.cycles**3 * k**2 / (frame - t_trans) ** 2
    t = np.asarray(t_trans, dtype=float)
    if np.any(t >= frame):
        raise ValueError(f"t_trans must be shorter than the frame ({frame} s)")
    out = 0.5 * p.capacitance_coeff * p.cycles**3 * k**2 / (frame - t) ** 2
    return float(out) if out.ndim == 0 else out
