import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightfl import oracle
from lightfl.harness import cli, experiments
from lightfl.harness.config import ConfigError, default_config, device_templates, load_config, parse_config
from lightfl.harness.experiments import (
    CSV_FIELDS,
    ExperimentResult,
    MetricRow,
    compute_beamformers,
    draw_realizations,
    emit_csv,
    experiment_fig2,
    experiment_fig3,
    read_csv,
    run_monte_carlo,
)
from lightfl.solver import solve_device


def small(realizations=5, **changes):
    return replace(default_config(), realizations=realizations, **changes)


class TestConfig:
    def test_defaults(self):
        cfg = default_config()
        assert cfg.n_devices == 3
        assert cfg.antennas == 4
        assert cfg.bandwidth == 1e6
        assert cfg.noise_variance == 1e-10
        assert cfg.frame == 1.0
        assert cfg.realizations == 10_000
        assert cfg.rician.k_linear == pytest.approx(10**0.8)
        assert cfg.rician.pathloss_exponent == 2.6
        assert [d.distance_to_ap for d in cfg.devices] == [3.3, 3.0, 2.7]
        assert [d.distance_to_optical for d in cfg.devices] == [2.3, 2.2, 2.1]
        dev = cfg.devices[0]
        assert dev.rate_threshold == 36e3
        c = dev.compute
        assert (c.capacitance_coeff, c.cycles_per_sample, c.dataset_size) == (2e-28, 20, 1e7)
        assert (c.f_min, c.f_max, c.local_iterations) == (0.3e9, 1.5e9, 1)
        opt = cfg.optical
        assert opt.p_vl == 28.0
        assert opt.vl.active_area == pytest.approx(85e-4)
        assert opt.vl.fov == pytest.approx(math.radians(70))
        assert opt.vl.semi_angle_half_power == pytest.approx(math.radians(60))
        hp = opt.harvester
        assert (hp.fill_factor, hp.responsivity, hp.thermal_voltage) == (0.75, 0.4, 0.02585)
        assert hp.dark_current == pytest.approx(1e-12)

    def test_units_converted(self):
        cfg = parse_config(
            {
                "uplink": {"reference_gain_db": -30.0},
                "optical": {"irl": {"semi_angle_deg": 45.0, "active_area_cm2": 1.0}},
            }
        )
        assert cfg.rician.reference_gain == pytest.approx(1e-3)
        assert cfg.optical.irl.semi_angle_half_power == pytest.approx(math.pi / 4)
        assert cfg.optical.irl.active_area == pytest.approx(1e-4)

    def test_dataset_in_mbit(self):
        cfg = parse_config({"compute": {"dataset_size_mbit": 10.0}})
        assert cfg.devices[0].compute.dataset_size == 1e7

    def test_dataset_given_twice(self):
        with pytest.raises(ConfigError):
            parse_config({"compute": {"dataset_size_mbit": 10.0, "dataset_size_samples": 1e7}})

    def test_per_device_overrides(self):
        devices = [{"distance_to_ap_m": 3.0, "distance_to_optical_m": 2.2, "compute": {"local_iterations": 3}}]
        cfg = parse_config({"devices": devices})
        assert cfg.n_devices == 1
        assert cfg.devices[0].compute.local_iterations == 3

    @pytest.mark.parametrize(
        "raw",
        [
            {"bogus": 1},
            {"uplink": {"antenas": 4}},
            {"realizations": 0},
            {"frame_s": -1.0},
            {"devices": []},
            {"devices": [{"distance_to_ap_m": 3.0}]},
            {"devices": [{"distance_to_ap_m": 3.0, "distance_to_optical_m": 1.0}]},
            {"uplink": {"los_vector": "random"}},
            {"compute": {"f_min_hz": 2e9}},
            {"optical": {"harvester": {"fill_factor": 2.0}}},
        ],
    )
    def test_invalid(self, raw):
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("frame_s: 2.0\nuplink:\n  antennas: 2\n", encoding="utf-8")
        cfg = load_config(path)
        assert cfg.frame == 2.0 and cfg.antennas == 2

    @pytest.mark.parametrize("text", ["frame_s: [1, 2\n", "- 1\n- 2\n"])
    def test_bad_yaml(self, tmp_path, text):
        path = tmp_path / "bad.yaml"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")

    def test_shipped_example_matches_defaults(self):
        from pathlib import Path

        path = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"
        assert load_config(path) == default_config()


class TestMonteCarlo:
    def test_single_realization_is_single_solve(self):
        cfg = small(1)
        result = run_monte_carlo(cfg)
        bfs = compute_beamformers(cfg, draw_realizations(cfg))[0]
        for j, (tpl, bf) in enumerate(zip(device_templates(cfg), bfs)):
            sol = solve_device(tpl.problem(bf))
            (row,) = result.select("p_irl_w", str(j + 1))
            assert row.mean == sol.p_irl
            assert row.std == 0.0 and row.q05 == row.q95 == sol.p_irl
            assert row.n_feasible == row.n_total == 1

    def test_same_seed_same_bytes(self, tmp_path):
        cfg = small(20)
        a = emit_csv(run_monte_carlo(cfg), tmp_path / "a.csv").read_bytes()
        b = emit_csv(run_monte_carlo(cfg), tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_seed_changes_result(self):
        a = run_monte_carlo(small(20)).select("total_p_irl_w")[0].mean
        b = run_monte_carlo(small(20, rng_seed=7)).select("total_p_irl_w")[0].mean
        assert a != b

    def test_total_is_sum_of_devices(self):
        result = run_monte_carlo(small(1))
        total = result.select("total_p_irl_w")[0].mean
        assert total == pytest.approx(sum(result.select("p_irl_w", str(j))[0].mean for j in (1, 2, 3)))

    def test_infeasible_realizations_counted(self):
        cfg = small(4).with_devices(power_budget=1e-3)
        result = run_monte_carlo(cfg)
        assert result.all_infeasible
        row = result.select("total_p_irl_w")[0]
        assert row.n_feasible == 0 and math.isnan(row.mean)

    def test_identical_devices_identical_ratio(self):
        cfg = small(10).with_devices(distance_to_ap=3.0, distance_to_optical=2.2)
        # identical distances still see independent fading, so compare in the LOS limit
        cfg = replace(cfg, rician=replace(cfg.rician, rician_factor_db=math.inf))
        result = run_monte_carlo(cfg)
        ratios = [result.select("trans_comp_ratio", str(j))[0].mean for j in (1, 2, 3)]
        assert ratios[0] == pytest.approx(ratios[1], rel=1e-12)
        assert ratios[1] == pytest.approx(ratios[2], rel=1e-12)

    def test_certify_clean(self):
        assert run_monte_carlo(small(3), certify=3).discrepancies == []

    def test_aggregate(self):
        mean, std, q05, q95 = experiments.aggregate(np.array([1.0, np.nan, 3.0]))
        assert (mean, std) == (2.0, 1.0)
        assert q05 == pytest.approx(1.1) and q95 == pytest.approx(2.9)
        assert all(math.isnan(x) for x in experiments.aggregate(np.array([np.nan])))


class TestSweeps:
    def test_single_theta_fig2_reduces_to_monte_carlo(self):
        cfg = small(5)
        fig2 = experiment_fig2(cfg, [36e3], [60.0])
        single = run_monte_carlo(cfg)
        for a, b in zip(sorted(fig2.rows, key=lambda r: (r.device, r.metric)),
                        sorted(single.rows, key=lambda r: (r.device, r.metric))):
            assert (a.device, a.metric, a.mean, a.q95) == (b.device, b.metric, b.mean, b.q95)

    def test_empty_sweep_header_only(self, tmp_path):
        result = experiment_fig3(small(2), [])
        path = emit_csv(result, tmp_path / "empty.csv")
        assert path.read_text(encoding="utf-8") == ",".join(CSV_FIELDS) + "\n"
        assert not result.all_infeasible

    def test_fig4_fig5_baseline_has_zero_additional_power(self):
        res = experiments.experiment_fig4_fig5(small(3), [1, 2], [1.0])
        rows = [r for r in res.select("additional_total_p_irl_w") if r.sweep_value == 1]
        assert rows and rows[0].mean == 0.0
        assert res.select("t_comp_total_s", "1")

    def test_rows_sorted_in_csv(self, tmp_path):
        res = experiment_fig3(small(2), [60e3, 20e3])
        rows = read_csv(emit_csv(res, tmp_path / "f3.csv"))
        values = [r.sweep_value for r in rows]
        assert values == sorted(values)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
name = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\x00"), max_size=12)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.builds(
            MetricRow,
            experiment=name,
            sweep_name=name,
            sweep_value=finite,
            device=st.sampled_from(["all", "1", "2", "12"]),
            metric=name,
            mean=st.floats(allow_nan=True, width=64),
            std=finite,
            q05=finite,
            q95=finite,
            n_feasible=st.integers(0, 10**6),
            n_total=st.integers(0, 10**6),
        ),
        max_size=8,
    )
)
def test_csv_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    emit_csv(ExperimentResult("x", "y", rows), path)
    back = read_csv(path)
    expected = experiments.sorted_rows(rows)
    assert len(back) == len(expected)
    for a, b in zip(back, expected):
        for f in CSV_FIELDS:
            va, vb = getattr(a, f), getattr(b, f)
            if isinstance(vb, float) and math.isnan(vb):
                assert math.isnan(va)
            else:
                assert va == vb


class TestCli:
    def test_success_writes_csv(self, tmp_path):
        assert cli.main(["--realizations", "3", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "single.csv")
        assert {r.device for r in rows} == {"all", "1", "2", "3"}

    def test_bad_flag_is_config_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--experiment", "fig9", "--out", str(tmp_path)])
        assert exc.value.code == 1

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("nonsense_key: 1\n", encoding="utf-8")
        assert cli.main(["--config", str(cfg), "--out", str(tmp_path)]) == 1

    def test_nonpositive_realizations(self, tmp_path):
        assert cli.main(["--realizations", "0", "--out", str(tmp_path)]) == 1

    def test_all_infeasible(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("device_defaults:\n  power_budget_w: 0.001\n", encoding="utf-8")
        assert cli.main(["--config", str(cfg), "--realizations", "2", "--out", str(tmp_path)]) == 2

    def test_certify_clean(self, tmp_path):
        code = cli.main(["--realizations", "2", "--certify", "--certify-realizations", "2", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "single_certify.txt").read_text(encoding="utf-8") == ""

    def test_certify_discrepancy_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr(oracle, "certify_device", lambda dp, sol: ["forced mismatch"])
        code = cli.main(["--realizations", "2", "--certify", "--out", str(tmp_path)])
        assert code == 3
        assert "forced mismatch" in (tmp_path / "single_certify.txt").read_text(encoding="utf-8")

    @pytest.mark.parametrize("exp", ["fig2", "fig3", "fig4", "fig5"])
    def test_plot_each_experiment(self, tmp_path, exp):
        args = ["--experiment", exp, "--realizations", "2", "--plot", "--out", str(tmp_path),
                "--theta-bits", "20000,40000", "--semi-angles-deg", "30,60", "--k-values", "1,2"]
        assert cli.main(args) == 0
        svg = (tmp_path / f"{exp}.svg").read_text(encoding="utf-8")
        assert svg.startswith("<?xml") and "<svg" in svg
        rows = read_csv(tmp_path / f"{exp}.csv")
        assert rows and all(r.experiment.startswith(exp) for r in rows)

    def test_plot_is_byte_stable(self, tmp_path):
        args = ["--experiment", "fig3", "--realizations", "2", "--plot", "--theta-bits", "20000,40000"]
        cli.main(args + ["--out", str(tmp_path / "a")])
        cli.main(args + ["--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "fig3.svg").read_bytes() == (tmp_path / "b" / "fig3.svg").read_bytes()
