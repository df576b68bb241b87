"""Per-device minimum-IRL-power allocation.

The joint problem separates across devices. For each device the energy demand
of compute plus uplink depends only on the transmission time, so the solver
first minimizes that demand over the feasible time window (golden-section
search on a convex function) and then finds the smallest IRL power whose
harvested energy covers it (bisection on a strictly increasing function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import compute, optics, rf
from .compute import ComputeParams
from .optics import HarvesterParams, OpticalLink
from .rf import LN2, Beamformer

GOLDEN_RHO = (3.0 - math.sqrt(5.0)) / 2.0
AUDIT_TOL = 1e-8


class InfeasibleError(ValueError):
    """A device problem has no feasible point.

    ``constraint`` names the violated constraint; ``deficit`` carries the
    missing energy in J when the power budget is the cause.
    """

    def __init__(self, message: str, constraint: str, deficit: float | None = None):
        super().__init__(message)
        self.constraint = constraint
        self.deficit = deficit


@dataclass(frozen=True)
class DeviceProblem:
    compute: ComputeParams
    beamformer: Beamformer
    rate_threshold: float
    frame: float
    power_budget: float
    vl_link: OpticalLink
    irl_link: OpticalLink
    harvester: HarvesterParams
    p_vl: float
    bandwidth: float

    def __post_init__(self):
        if not self.frame > 0:
            raise ValueError("frame must be positive")
        if not self.power_budget > 0:
            raise ValueError("power_budget must be positive")
        if self.rate_threshold < 0:
            raise ValueError("rate_threshold must be nonnegative")
        if self.p_vl < 0:
            raise ValueError("p_vl must be nonnegative")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.beamformer.sinr_coefficient > 0:
            raise ValueError("beamformer SINR coefficient must be positive")

    @property
    def gamma(self) -> float:
        return self.beamformer.sinr_coefficient


@dataclass
class DeviceSolution:
    t_trans: float
    t_comp: float
    f_cpu: float
    p_uplink: float
    p_irl: float
    energy_required: float
    harvested_energy: float
    feasible: bool
    constraint_report: dict = field(default_factory=dict)


def transmission_window(dp: DeviceProblem) -> tuple[float, float]:
    """Range of transmission times allowed by the CPU frequency limits.

    When even f_min finishes all local iterations within the frame, the lower
    limit is 0 rather than negative: the f_min constraint is then inactive.
    """
    p = dp.compute
    work = p.cycles * p.local_iterations
    hi = dp.frame - work / p.f_max
    if not hi > 0:
        raise InfeasibleError(
            f"{p.local_iterations} local iterations need {work / p.f_max:.6g} s at f_max, "
            f"frame is {dp.frame:.6g} s",
            constraint="cpu_max_frequency",
        )
    lo = max(dp.frame - work / p.f_min, 0.0)
    return lo, hi


def _transmit_energy(dp: DeviceProblem, t):
    """Uplink energy at the rate-tight power; +inf at t = 0 unless nothing is sent."""
    if isinstance(t, (int, float)):
        if dp.rate_threshold == 0:
            return 0.0
        if t <= 0:
            return math.inf
        p_u = rf.required_uplink_power(dp.beamformer, dp.rate_threshold, t, dp.bandwidth)
        return rf.transmission_energy(t, p_u)
    if dp.rate_threshold == 0:
        return np.zeros_like(t)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        e = t * np.expm1(LN2 * dp.rate_threshold / (t * dp.bandwidth)) / dp.gamma
    return np.where(t > 0, e, np.inf)


def _demand(dp: DeviceProblem, t):
    return compute.total_compute_energy(dp.compute, t, dp.frame) + _transmit_energy(dp, t)


def _check_window(dp: DeviceProblem, t):
    lo, hi = transmission_window(dp)
    slack = 1e-12 * dp.frame
    if np.min(t) < lo - slack or np.max(t) > hi + slack:
        raise ValueError(f"t_trans outside the feasible window [{lo}, {hi}]")


def psi(dp: DeviceProblem, t_trans):
    """Per-frame energy demand (compute + uplink) at transmission time ``t_trans``.

    Scalars give a float, arrays are evaluated elementwise.
    """
    if isinstance(t_trans, (int, float)):
        _check_window(dp, t_trans)
        return _demand(dp, float(t_trans))
    t = np.asarray(t_trans, dtype=float)
    _check_window(dp, t)
    out = _demand(dp, t)
    return float(out) if out.ndim == 0 else out


def psi_second_derivative(dp: DeviceProblem, t_trans):
    t = np.asarray(t_trans, dtype=float)
    _check_window(dp, t)
    p = dp.compute
    comp = 3.0 * p.capacitance_coeff * p.cycles**3 * p.local_iterations**2 / (dp.frame - t) ** 4
    a = dp.rate_threshold / dp.bandwidth
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        trans = LN2**2 * a**2 * np.exp2(a / t) / (t**3 * dp.gamma)
    if dp.rate_threshold == 0:
        trans = np.zeros_like(t)
    out = comp + trans
    return float(out) if out.ndim == 0 else out


def golden_section_search(f, lo: float, hi: float, tol: float, callback=None):
    """Minimize a unimodal ``f`` on [lo, hi]; returns (x, f(x)).

    Interior points sit at fractions rho and 1 - rho of the bracket with
    rho = (3 - sqrt 5) / 2, so one of them is reused every iteration. The
    search stops once the bracket is narrower than ``tol``. The result is the
    best of the last interior point and the two original endpoints, ties going
    to the smaller x. ``callback(a, b)`` sees every bracket.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if hi - lo <= tol:
        return lo, f(lo)
    a, b = lo, hi
    x1 = a + GOLDEN_RHO * (b - a)
    x2 = a + (1.0 - GOLDEN_RHO) * (b - a)
    f1, f2 = f(x1), f(x2)
    if callback is not None:
        callback(a, b)
    while b - a >= tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = a + GOLDEN_RHO * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + (1.0 - GOLDEN_RHO) * (b - a)
            f2 = f(x2)
        if callback is not None:
            callback(a, b)
    candidates = [(lo, f(lo)), (x1, f1), (x2, f2), (hi, f(hi))]
    best = min(candidates, key=lambda c: (c[1], c[0]))
    return best


def solve_transmission_time(dp: DeviceProblem, tol: float | None = None) -> float:
    """Transmission time minimizing the energy demand over the feasible window."""
    if tol is None:
        tol = 1e-8 * dp.frame
    lo, hi = transmission_window(dp)
    if hi - lo <= tol:
        return lo
    t, _ = golden_section_search(lambda t: _demand(dp, t), lo, hi, tol)
    return t


def solve_irl_power(dp: DeviceProblem, energy_required: float, tol: float | None = None) -> float:
    """Smallest IRL power in [0, budget] whose harvest covers ``energy_required``.

    Bisection keeps the upper end on the feasible side, so the returned power
    always satisfies the energy constraint and lies within ``tol`` of the
    exact threshold.
    """
    if tol is None:
        tol = 1e-9 * dp.power_budget
    if not tol > 0:
        raise ValueError("tol must be positive")
    eh_vl = optics.harvested_power(dp.vl_link, dp.harvester, dp.p_vl)
    residual = energy_required / dp.frame - eh_vl
    if residual <= 0:
        return 0.0
    gain = optics.channel_gain(dp.irl_link)

    def eh_irl(p):
        return optics.harvested_power(dp.irl_link, dp.harvester, p, gain=gain)

    top = eh_irl(dp.power_budget)
    if top < residual:
        deficit = dp.frame * (residual - top)
        raise InfeasibleError(
            f"IRL budget {dp.power_budget:.6g} W leaves an energy deficit of {deficit:.6g} J",
            constraint="power_budget",
            deficit=deficit,
        )
    p_min, p_max = 0.0, dp.power_budget
    while p_max - p_min > tol:
        mid = 0.5 * (p_min + p_max)
        if eh_irl(mid) >= residual:
            p_max = mid
        else:
            p_min = mid
    return p_max


def audit(dp: DeviceProblem, t_trans: float, p_uplink: float, f_cpu: float, p_irl: float) -> dict:
    """Normalized slack of every constraint; nonnegative means satisfied.

    Equality constraints report minus their absolute normalized residual.
    """
    p = dp.compute
    t_comp = p.cycles / f_cpu
    rate = rf.uplink_rate(dp.beamformer, p_uplink, t_trans, dp.bandwidth)
    theta = dp.rate_threshold
    # the energy constraint charges one local iteration run at f_cpu
    e_comp = compute.computation_energy_at_frequency(p, f_cpu)
    e_trans = rf.transmission_energy(t_trans, p_uplink)
    harvested = optics.total_harvested_energy(
        dp.vl_link, dp.irl_link, dp.harvester, dp.p_vl, p_irl, dp.frame
    )
    demand = float(e_comp + e_trans)
    w = dp.beamformer.weights
    return {
        "rate": (rate - theta) / theta if theta > 0 else rate,
        "energy": (harvested - demand) / demand,
        "irl_power_min": p_irl / dp.power_budget,
        "irl_power_max": (dp.power_budget - p_irl) / dp.power_budget,
        "time_budget": -abs(p.local_iterations * t_comp + t_trans - dp.frame) / dp.frame,
        "cpu_min": (f_cpu - p.f_min) / p.f_min,
        "cpu_max": (p.f_max - f_cpu) / p.f_max,
        "beamformer_norm": -abs(float(np.vdot(w, w).real) - 1.0),
    }


def solve_device(
    dp: DeviceProblem, time_tol: float | None = None, power_tol: float | None = None
) -> DeviceSolution:
    """Optimal transmission time, CPU frequency, uplink power and IRL power for one device.

    Raises InfeasibleError when the CPU limits or the IRL budget cannot be met.
    """
    t_trans = solve_transmission_time(dp, time_tol)
    energy = psi(dp, t_trans)
    if not math.isfinite(energy):
        raise InfeasibleError("energy demand is unbounded on the window", constraint="rate")
    p_irl = solve_irl_power(dp, energy, power_tol)
    k = dp.compute.local_iterations
    t_comp = (dp.frame - t_trans) / k
    f_cpu = compute.cpu_frequency(dp.compute, t_comp)
    p_uplink = rf.required_uplink_power(dp.beamformer, dp.rate_threshold, t_trans, dp.bandwidth)
    report = audit(dp, t_trans, p_uplink, f_cpu, p_irl)
    harvested = optics.total_harvested_energy(
        dp.vl_link, dp.irl_link, dp.harvester, dp.p_vl, p_irl, dp.frame
    )
    return DeviceSolution(
        t_trans=t_trans,
        t_comp=t_comp,
        f_cpu=f_cpu,
        p_uplink=p_uplink,
        p_irl=p_irl,
        energy_required=energy,
        harvested_energy=harvested,
        feasible=all(v >= -AUDIT_TOL for v in report.values()),
        constraint_report=report,
    )
