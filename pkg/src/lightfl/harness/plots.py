"""SVG line plots of experiment results (matplotlib, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "lightfl"
import matplotlib.pyplot as plt  # noqa: E402

PLOT_SPECS = {
    "fig2": ("total_p_irl_w", "all", "rate threshold (bits)", "total IRL power (W)"),
    "fig3": ("trans_comp_ratio", None, "rate threshold (bits)", "T_trans / T_comp"),
    "fig4": ("mean_t_comp_s", "all", "local iterations K", "computation time per iteration (s)"),
    "fig5": ("additional_total_p_irl_w", "all", "local iterations K", "additional IRL power (W)"),
    "single": ("p_irl_w", None, "", "IRL power (W)"),
}


def plot_experiment(result, name: str, path) -> Path:
    """One line per experiment label, or per device when the entry names no device."""
    metric, device, xlabel, ylabel = PLOT_SPECS[name]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    labels = sorted({r.experiment for r in result.rows if r.experiment.startswith(name)})
    for label in labels:
        if device is None:
            devices = sorted({r.device for r in result.rows if r.metric == metric and r.experiment == label})
            for dev in devices:
                x, y = result.series(metric, dev, label)
                ax.plot(x, y, marker="o", label=f"device {dev}")
        else:
            x, y = result.series(metric, device, label)
            ax.plot(x, y, marker="o", label=label.partition("[")[2].rstrip("]") or label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = Path(path)
    # fixed hash salt and no date keep the SVG byte-stable
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
