"""``simulate`` command line entry point.

Exit codes: 0 success, 1 configuration error, 2 every realization infeasible,
3 oracle discrepancy (only with --certify).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (
    ExperimentResult,
    emit_csv,
    experiment_fig2,
    experiment_fig3,
    experiment_fig4_fig5,
    run_monte_carlo,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_DISCREPANCY = 3

log = logging.getLogger("lightfl")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="simulate", description="Lightwave-powered FL resource allocation simulator")
    ap.add_argument("--config", type=Path, help="YAML scenario file (defaults to the built-in scenario)")
    ap.add_argument("--experiment", choices=["fig2", "fig3", "fig4", "fig5", "single"], default="single")
    ap.add_argument("--seed", type=int, help="RNG seed, overrides rng_seed in the config")
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--realizations", type=int, help="override the number of channel realizations")
    ap.add_argument("--certify", action="store_true", help="check solutions against brute-force oracles")
    ap.add_argument("--certify-realizations", type=int, default=10, metavar="N",
                    help="realizations per sweep point checked by --certify (default 10)")
    ap.add_argument("--plot", action="store_true", help="also write an SVG plot")
    ap.add_argument("--theta-bits", type=_floats, default=[20e3, 36e3, 40e3, 60e3, 80e3, 100e3],
                    help="rate thresholds for fig2/fig3 (bits per frame)")
    ap.add_argument("--semi-angles-deg", type=_floats, default=[20.0, 45.0, 60.0],
                    help="IRL semi-angles at half power for fig2")
    ap.add_argument("--k-values", type=_ints, default=[1, 2, 3, 4, 5], help="local iterations for fig4/fig5")
    ap.add_argument("--frames-s", type=_floats, default=[1.0, 5.0], help="frame lengths for fig4/fig5")
    ap.add_argument("--fig45-theta-bits", type=float, default=40e3)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(args) -> tuple[ExperimentResult, str]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    if args.realizations is not None:
        if args.realizations < 1:
            raise ConfigError("--realizations must be >= 1")
        cfg = replace(cfg, realizations=args.realizations)
    certify = args.certify_realizations if args.certify else 0
    name = args.experiment
    if name == "single":
        result = run_monte_carlo(cfg, certify=certify)
    elif name == "fig2":
        result = experiment_fig2(cfg, args.theta_bits, args.semi_angles_deg, certify=certify)
    elif name == "fig3":
        result = experiment_fig3(cfg, args.theta_bits, certify=certify)
    else:
        full = experiment_fig4_fig5(cfg, args.k_values, args.frames_s, theta=args.fig45_theta_bits, certify=certify)
        result = ExperimentResult(name, full.sweep_name, [r for r in full.rows if r.experiment.startswith(name)],
                                  full.discrepancies)
    return result, name


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        result, name = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    csv_path = emit_csv(result, args.out / f"{name}.csv")
    print(f"wrote {csv_path}")
    if args.plot:
        from .plots import plot_experiment

        print(f"wrote {plot_experiment(result, name, args.out / f'{name}.svg')}")
    if args.certify:
        report = args.out / f"{name}_certify.txt"
        report.write_text("".join(f"{m}\n" for m in result.discrepancies), encoding="utf-8")
        if result.discrepancies:
            print(f"{len(result.discrepancies)} oracle discrepancies, see {report}", file=sys.stderr)
            return EXIT_DISCREPANCY
        print("certify: solver agrees with the oracles")
    if result.all_infeasible:
        print("every realization was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
