"""Brute-force checks used to certify the solver.

Nothing here calls the golden-section or bisection routines. The grids only
share the energy formulas with the solver, never the search logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import compute, optics, rf
from .rf import LN2, UplinkChannelSet
from .solver import DeviceProblem, InfeasibleError, psi, transmission_window


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid; ``axes`` maps 't_trans' / 'p_irl' to explicit (lo, hi) ranges.

    Axes left out default to the problem's feasible window and [0, budget].
    """

    points_per_axis: int = 100_000
    axes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be >= 2")


def _time_axis(dp: DeviceProblem, grid: GridSpec) -> np.ndarray:
    lo, hi = grid.axes.get("t_trans", transmission_window(dp))
    return np.linspace(lo, hi, grid.points_per_axis)


def grid_min_psi(dp: DeviceProblem, grid: GridSpec | None = None) -> tuple[float, float]:
    """Grid argmin and minimum of the energy demand over the transmission window."""
    grid = grid or GridSpec()
    t = _time_axis(dp, grid)
    values = psi(dp, t)
    i = int(np.argmin(values))
    return float(t[i]), float(values[i])


def grid_min(f, lo: float, hi: float, points: int) -> tuple[float, float]:
    """Grid minimum of an arbitrary vectorized ``f``."""
    x = np.linspace(lo, hi, points)
    y = f(x)
    i = int(np.argmin(y))
    return float(x[i]), float(y[i])


def joint_feasible_min_power(dp: DeviceProblem, grid: GridSpec | None = None) -> float | None:
    """Smallest grid IRL power for which some grid transmission time is feasible.

    For each transmission time the CPU frequency follows from the time budget
    and the uplink power is the least one meeting the rate target; the energy
    check then compares compute plus uplink energy with the harvest at each
    grid power. Returns None when no grid point is feasible.
    """
    grid = grid or GridSpec(points_per_axis=300)
    p = dp.compute
    try:
        t = _time_axis(dp, grid)
    except InfeasibleError:
        return None
    t = t[t > 0]
    k = p.local_iterations
    f_cpu = p.cycles * k / (dp.frame - t)
    # relative slack absorbs rounding at the window edges
    ok_cpu = (f_cpu >= p.f_min * (1 - 1e-12)) & (f_cpu <= p.f_max * (1 + 1e-12))
    t, f_cpu = t[ok_cpu], f_cpu[ok_cpu]
    if t.size == 0:
        return None
    with np.errstate(over="ignore"):
        p_u = np.expm1(LN2 * dp.rate_threshold / (t * dp.bandwidth)) / dp.gamma
    e_comp = compute.computation_energy_at_frequency(p, f_cpu)
    demand = np.min(e_comp + t * p_u)

    lo, hi = grid.axes.get("p_irl", (0.0, dp.power_budget))
    powers = np.linspace(lo, hi, grid.points_per_axis)
    harvest = dp.frame * (
        optics.harvested_power(dp.vl_link, dp.harvester, dp.p_vl)
        + optics.harvested_power(dp.irl_link, dp.harvester, powers)
    )
    feasible = harvest >= demand
    if not feasible.any():
        return None
    return float(powers[np.argmax(feasible)])


def random_unit_vectors(m: int, n: int, rng) -> np.ndarray:
    """``n`` complex unit vectors of length ``m`` as columns, isotropically drawn."""
    v = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return v / np.linalg.norm(v, axis=0)


def beamformer_probe(channels: UplinkChannelSet, device: int, w: np.ndarray, probes: int = 1000, rng=None):
    """Rayleigh quotient at ``w`` and the best quotient over random unit probes."""
    rng = rng if rng is not None else np.random.default_rng(0)
    g = channels.channels[device]
    cov = rf.interference_covariance(channels, device)
    probe = random_unit_vectors(channels.n_antennas, probes, rng)
    return float(rf.rayleigh_quotient(g, cov, w)), float(np.max(rf.rayleigh_quotient(g, cov, probe)))


def dominant_generalized_eigenvector(channels: UplinkChannelSet, device: int) -> np.ndarray:
    """Dominant generalized eigenvector of (g g^H, cov) by explicit eigendecomposition.

    Whitens with the Cholesky factor cov = L L^H, takes the top eigenvector u
    of L^{-1} g g^H L^{-H} and maps it back as w = L^{-H} u.
    """
    g = channels.channels[device]
    cov = rf.interference_covariance(channels, device)
    chol = np.linalg.cholesky(cov)
    gw = np.linalg.solve(chol, g)
    vals, vecs = np.linalg.eigh(np.outer(gw, gw.conj()))
    u = vecs[:, np.argmax(vals)]
    w = np.linalg.solve(chol.conj().T, u)
    return w / np.linalg.norm(w)


def principal_cosine(u: np.ndarray, v: np.ndarray) -> float:
    """|<u, v>| / (|u| |v|): 1 means parallel up to a complex phase."""
    return float(abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))


def central_second_difference(f, x: float, h: float) -> float:
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def certify_device(dp: DeviceProblem, solution, points_1d: int = 100_000, points_2d: int = 300) -> list[str]:
    """Compare a solved device against both grid oracles; returns discrepancy messages."""
    problems = []
    lo, hi = transmission_window(dp)
    t_grid, psi_grid = grid_min_psi(dp, GridSpec(points_1d))
    step = (hi - lo) / (points_1d - 1)
    if abs(solution.t_trans - t_grid) > max(1e-8 * dp.frame, step):
        problems.append(f"t_trans {solution.t_trans:.9g} vs grid {t_grid:.9g}")
    if psi(dp, solution.t_trans) > psi_grid * (1 + 1e-9):
        problems.append(f"psi {solution.energy_required:.9g} above grid minimum {psi_grid:.9g}")
    p_grid = joint_feasible_min_power(dp, GridSpec(points_2d))
    p_step = dp.power_budget / (points_2d - 1)
    if p_grid is None:
        problems.append("joint grid found no feasible point for a solved device")
    elif p_grid < solution.p_irl - p_step:
        problems.append(f"joint grid power {p_grid:.9g} below solver {solution.p_irl:.9g}")
    if not math.isfinite(solution.energy_required):
        problems.append("non-finite energy demand")
    return problems
