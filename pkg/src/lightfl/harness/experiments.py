"""Monte-Carlo runner and the four trend experiments.

Every experiment draws one set of channel realizations from the scenario seed
and reuses it across all sweep values, so differences between sweep points
come from the swept parameter only.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import oracle, rf
from ..solver import InfeasibleError, solve_device
from .config import ScenarioConfig, device_templates

log = logging.getLogger(__name__)

CSV_FIELDS = [
    "experiment",
    "sweep_name",
    "sweep_value",
    "device",
    "metric",
    "mean",
    "std",
    "q05",
    "q95",
    "n_feasible",
    "n_total",
]

DEVICE_METRICS = {
    "p_irl_w": "p_irl",
    "t_trans_s": "t_trans",
    "t_comp_s": "t_comp",
    "t_comp_total_s": "t_comp_total",
    "trans_comp_ratio": "ratio",
    "energy_required_j": "energy",
    "p_uplink_w": "p_uplink",
    "f_cpu_hz": "f_cpu",
}


@dataclass(frozen=True)
class MetricRow:
    experiment: str
    sweep_name: str
    sweep_value: float
    device: str
    metric: str
    mean: float
    std: float
    q05: float
    q95: float
    n_feasible: int
    n_total: int


@dataclass
class ExperimentResult:
    experiment: str
    sweep_name: str
    rows: list = field(default_factory=list)
    discrepancies: list = field(default_factory=list)

    def select(self, metric: str, device: str = "all", experiment: str | None = None) -> list:
        return [
            r
            for r in self.rows
            if r.metric == metric and r.device == device and (experiment is None or r.experiment == experiment)
        ]

    def series(self, metric: str, device: str = "all", experiment: str | None = None):
        """(sweep values, means) sorted by sweep value."""
        rows = sorted(self.select(metric, device, experiment), key=lambda r: r.sweep_value)
        return np.array([r.sweep_value for r in rows]), np.array([r.mean for r in rows])

    @property
    def all_infeasible(self) -> bool:
        return bool(self.rows) and all(r.n_feasible == 0 for r in self.rows)

    def extend(self, other: "ExperimentResult"):
        self.rows.extend(other.rows)
        self.discrepancies.extend(other.discrepancies)


@dataclass
class Outcome:
    """Per-realization solver outputs with shape (R, J); NaN where infeasible."""

    p_irl: np.ndarray
    t_trans: np.ndarray
    t_comp: np.ndarray
    t_comp_total: np.ndarray
    ratio: np.ndarray
    energy: np.ndarray
    p_uplink: np.ndarray
    f_cpu: np.ndarray
    feasible: np.ndarray
    infeasible_reasons: dict = field(default_factory=dict)
    discrepancies: list = field(default_factory=list)

    @property
    def total_p_irl(self) -> np.ndarray:
        return self.p_irl.sum(axis=1)


def draw_realizations(cfg: ScenarioConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.rng_seed)
    distances = [d.distance_to_ap for d in cfg.devices]
    return rf.draw_channel_array(cfg.rician, distances, cfg.antennas, cfg.realizations, rng)


def compute_beamformers(cfg: ScenarioConfig, channels: np.ndarray) -> list:
    """Optimal combiner of every device in every realization, indexed [r][j]."""
    out = []
    for g in channels:
        ch = rf.UplinkChannelSet(g, cfg.noise_variance, cfg.bandwidth)
        out.append([rf.optimal_beamformer(ch, j) for j in range(cfg.n_devices)])
    return out


def solve_realizations(cfg: ScenarioConfig, beamformers: list, certify: int = 0) -> Outcome:
    """Solve every device of every realization; the first ``certify`` are oracle-checked."""
    templates = device_templates(cfg)
    n, j_count = len(beamformers), len(templates)
    arrays = {name: np.full((n, j_count), np.nan) for name in DEVICE_METRICS.values()}
    feasible = np.ones(n, dtype=bool)
    reasons: dict = {}
    discrepancies = []
    for r, bfs in enumerate(beamformers):
        for j, (tpl, bf) in enumerate(zip(templates, bfs)):
            dp = tpl.problem(bf)
            try:
                sol = solve_device(dp)
            except InfeasibleError as exc:
                feasible[r] = False
                reasons[exc.constraint] = reasons.get(exc.constraint, 0) + 1
                continue
            if not sol.feasible:
                log.warning("realization %d device %d failed its audit: %s", r, j + 1, sol.constraint_report)
                feasible[r] = False
                reasons["audit"] = reasons.get("audit", 0) + 1
                continue
            k = tpl.compute.local_iterations
            arrays["p_irl"][r, j] = sol.p_irl
            arrays["t_trans"][r, j] = sol.t_trans
            arrays["t_comp"][r, j] = sol.t_comp
            arrays["t_comp_total"][r, j] = k * sol.t_comp
            arrays["ratio"][r, j] = sol.t_trans / sol.t_comp
            arrays["energy"][r, j] = sol.energy_required
            arrays["p_uplink"][r, j] = sol.p_uplink
            arrays["f_cpu"][r, j] = sol.f_cpu
            if r < certify:
                for msg in oracle.certify_device(dp, sol):
                    discrepancies.append(f"realization {r} device {j + 1}: {msg}")
    for a in arrays.values():
        a[~feasible] = np.nan
    return Outcome(**arrays, feasible=feasible, infeasible_reasons=reasons, discrepancies=discrepancies)


def aggregate(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, population std and 5 / 95 % quantiles of the finite entries."""
    v = values[np.isfinite(values)]
    if v.size == 0:
        return (math.nan,) * 4
    q05, q95 = np.quantile(v, [0.05, 0.95])
    return float(v.mean()), float(v.std()), float(q05), float(q95)


def _row(experiment, sweep_name, sweep_value, device, metric, values, n_feasible, n_total) -> MetricRow:
    mean, std, q05, q95 = aggregate(values)
    return MetricRow(experiment, sweep_name, float(sweep_value), device, metric, mean, std, q05, q95, n_feasible, n_total)


def outcome_rows(experiment: str, sweep_name: str, sweep_value: float, out: Outcome) -> list:
    n_total = out.feasible.size
    n_ok = int(out.feasible.sum())
    mask = out.feasible
    rows = [
        _row(experiment, sweep_name, sweep_value, "all", "total_p_irl_w", out.total_p_irl[mask], n_ok, n_total),
        _row(experiment, sweep_name, sweep_value, "all", "mean_t_comp_s", out.t_comp[mask].mean(axis=1), n_ok, n_total),
    ]
    for j in range(out.p_irl.shape[1]):
        for metric, attr in DEVICE_METRICS.items():
            values = getattr(out, attr)[mask, j]
            rows.append(_row(experiment, sweep_name, sweep_value, str(j + 1), metric, values, n_ok, n_total))
    return rows


def _prepare(cfg: ScenarioConfig):
    return compute_beamformers(cfg, draw_realizations(cfg))


def run_monte_carlo(cfg: ScenarioConfig, certify: int = 0, beamformers=None) -> ExperimentResult:
    """Solve the scenario as configured over all channel realizations."""
    bfs = beamformers if beamformers is not None else _prepare(cfg)
    out = solve_realizations(cfg, bfs, certify)
    if out.infeasible_reasons:
        log.info("infeasible devices by constraint: %s", out.infeasible_reasons)
    return ExperimentResult(
        "single", "none", outcome_rows("single", "none", 0.0, out), list(out.discrepancies)
    )


def experiment_fig2(cfg: ScenarioConfig, theta_values, irl_semi_angles_deg, certify: int = 0) -> ExperimentResult:
    """Total IRL power against the rate threshold, one series per IRL semi-angle."""
    bfs = _prepare(cfg)
    result = ExperimentResult("fig2", "rate_threshold_bits")
    for angle in irl_semi_angles_deg:
        label = f"fig2[irl_semi_angle_deg={angle:g}]"
        angled = cfg.with_irl_semi_angle(math.radians(angle))
        for theta in theta_values:
            out = solve_realizations(angled.with_devices(rate_threshold=float(theta)), bfs, certify)
            result.rows.extend(outcome_rows(label, result.sweep_name, theta, out))
            result.discrepancies.extend(out.discrepancies)
    return result


def experiment_fig3(cfg: ScenarioConfig, theta_values, certify: int = 0) -> ExperimentResult:
    """Per-device transmission/computation time ratio against the rate threshold."""
    bfs = _prepare(cfg)
    result = ExperimentResult("fig3", "rate_threshold_bits")
    for theta in theta_values:
        out = solve_realizations(cfg.with_devices(rate_threshold=float(theta)), bfs, certify)
        result.rows.extend(outcome_rows("fig3", result.sweep_name, theta, out))
        result.discrepancies.extend(out.discrepancies)
    return result


def experiment_fig4_fig5(
    cfg: ScenarioConfig,
    k_values,
    frames,
    theta: float = 40e3,
    baseline_k: int = 1,
    certify: int = 0,
) -> ExperimentResult:
    """Computation time and additional IRL power against the local iteration count.

    Rows labelled ``fig4[...]`` carry per-iteration and total computation time;
    rows labelled ``fig5[...]`` carry the IRL power above the ``baseline_k``
    solution, differenced realization by realization.
    """
    bfs = _prepare(cfg)
    base_cfg = cfg.with_devices(rate_threshold=float(theta))
    result = ExperimentResult("fig4_fig5", "local_iterations")
    for frame in frames:
        framed = replace(base_cfg, frame=float(frame))
        baseline = solve_realizations(framed.with_compute(local_iterations=int(baseline_k)), bfs)
        for k in k_values:
            out = solve_realizations(framed.with_compute(local_iterations=int(k)), bfs, certify)
            result.discrepancies.extend(out.discrepancies)
            fig4 = f"fig4[frame_s={frame:g}]"
            for row in outcome_rows(fig4, result.sweep_name, k, out):
                if row.metric in ("mean_t_comp_s", "t_comp_s", "t_comp_total_s"):
                    result.rows.append(row)
            both = out.feasible & baseline.feasible
            n_ok, n_total = int(both.sum()), both.size
            fig5 = f"fig5[frame_s={frame:g}]"
            extra_total = (out.total_p_irl - baseline.total_p_irl)[both]
            result.rows.append(_row(fig5, result.sweep_name, k, "all", "additional_total_p_irl_w", extra_total, n_ok, n_total))
            for j in range(cfg.n_devices):
                extra = (out.p_irl[:, j] - baseline.p_irl[:, j])[both]
                result.rows.append(_row(fig5, result.sweep_name, k, str(j + 1), "additional_p_irl_w", extra, n_ok, n_total))
    return result


def _device_key(device: str):
    return (0, 0) if device == "all" else (1, int(device))


def sorted_rows(rows) -> list:
    """Deterministic order: experiment, sweep value ascending, device index, metric."""
    return sorted(rows, key=lambda r: (r.experiment, r.sweep_value, _device_key(r.device), r.metric))


def _fmt(x) -> str:
    # repr round-trips exactly and never depends on the locale
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(result: ExperimentResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in sorted_rows(result.rows):
            writer.writerow([_fmt(getattr(r, name)) for name in CSV_FIELDS])
    return path


def read_csv(path) -> list:
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                MetricRow(
                    experiment=rec["experiment"],
                    sweep_name=rec["sweep_name"],
                    sweep_value=float(rec["sweep_value"]),
                    device=rec["device"],
                    metric=rec["metric"],
                    mean=float(rec["mean"]),
                    std=float(rec["std"]),
                    q05=float(rec["q05"]),
                    q95=float(rec["q95"]),
                    n_feasible=int(rec["n_feasible"]),
                    n_total=int(rec["n_total"]),
                )
            )
    return rows
