"""Experiment specs, config parsing, the scan runner and the comparison
table writer."""

import csv
import json

import numpy as np
import pytest

from gateflow import (CSV_COLUMNS, DEFAULT_GRANULARITY, DEFAULT_SCAN_CAP,
                      ExperimentSpec, FlowConfig, RunRecord, build_initial_grid,
                      compare_methods, execute_experiment, gate_target,
                      load_experiment, rhs_corrected, run_experiment,
                      write_comparison)


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def fast_spec(order=1, s_max=50.0, n_slices=50):
    return ExperimentSpec(gate="cnot", t_final=5.0, n_slices=n_slices, order=order,
                          cfg=FlowConfig(s_max=s_max))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def rows_without_wall_time(path):
    rows = read_rows(path)
    wall = CSV_COLUMNS.index("wall_time_s")
    return [row[:wall] + row[wall + 1:] for row in rows]


class TestExperimentSpec:
    def test_defaults(self):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150)
        assert spec.order == 1
        assert spec.s_granularity == DEFAULT_GRANULARITY
        assert spec.cfg.s_max == DEFAULT_SCAN_CAP
        assert spec.initial_controls == "zero"
        assert spec.sine_amplitude == 1e-5

    def test_swap_defaults_to_sine_seed(self):
        spec = ExperimentSpec(gate="swap", t_final=5.0, n_slices=300)
        assert spec.initial_controls == "sine_seed"

    def test_explicit_seed_mode_wins(self):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150,
                              initial_controls="sine_seed")
        assert spec.initial_controls == "sine_seed"

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown gate"):
            ExperimentSpec(gate="toffoli", t_final=5.0, n_slices=150)
        with pytest.raises(ValueError, match="T must be positive"):
            ExperimentSpec(gate="cnot", t_final=0.0, n_slices=150)
        with pytest.raises(ValueError, match="L must be a positive integer"):
            ExperimentSpec(gate="cnot", t_final=5.0, n_slices=0)
        with pytest.raises(ValueError, match="L must be a positive integer"):
            ExperimentSpec(gate="cnot", t_final=5.0, n_slices=2.5)
        with pytest.raises(ValueError, match="correction order"):
            ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150, order=9)
        with pytest.raises(ValueError, match="initial_controls"):
            ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150,
                           initial_controls="random")
        with pytest.raises(ValueError, match="sine_amplitude"):
            ExperimentSpec(gate="swap", t_final=5.0, n_slices=300,
                           sine_amplitude=0.0)


class TestInitialGrid:
    def test_zero_grid(self):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150)
        grid = build_initial_grid(spec)
        assert grid.t_final == 5.0
        assert grid.amplitudes.shape == (2, 150)
        assert not grid.amplitudes.any()

    def test_sine_seed_samples_slice_midpoints(self):
        spec = ExperimentSpec(gate="swap", t_final=5.0, n_slices=300)
        grid = build_initial_grid(spec)
        t_mid = (np.arange(1, 301) - 0.5) * (5.0 / 300)
        expected = 1e-5 * np.sin(t_mid / 5.0)
        assert np.array_equal(grid.amplitudes[0], expected)
        assert np.array_equal(grid.amplitudes[0], grid.amplitudes[1])

    def test_swap_zero_grid_is_stationary(self, benchmark_system):
        # This is why the swap runs default to the sine seed: at zero
        # controls the swap velocities vanish identically and the flow
        # would sit still forever.
        spec = ExperimentSpec(gate="swap", t_final=5.0, n_slices=40,
                              initial_controls="zero")
        grid = build_initial_grid(spec)
        values = rhs_corrected(benchmark_system, grid, gate_target("swap"),
                               order=1).values
        assert np.all(values == 0.0)
        seeded = build_initial_grid(ExperimentSpec(gate="swap", t_final=5.0,
                                                   n_slices=40))
        values = rhs_corrected(benchmark_system, seeded, gate_target("swap"),
                               order=1).values
        assert np.abs(values).max() > 0.0

    def test_cnot_zero_grid_is_not_stationary(self, benchmark_system):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=40)
        grid = build_initial_grid(spec)
        values = rhs_corrected(benchmark_system, grid, gate_target("cnot"),
                               order=1).values
        assert np.abs(values).max() > 1e-3


class TestConfigParsing:
    def test_minimal_block(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: 5\nL: 150\n")
        (spec,) = load_experiment(path)
        assert spec.gate == "cnot"
        assert spec.t_final == 5.0
        assert spec.n_slices == 150
        assert spec.order == 1
        assert spec.cfg.s_max == DEFAULT_SCAN_CAP

    def test_comments_and_blank_lines(self, tmp_path):
        text = ("# comparison pair\n\n"
                "gate: cnot   # the gate\n"
                "T: 5\nL: 150\norder: 0\n\n\n"
                "gate: swap\nT: 5\nL: 300\norder: exact\n")
        specs = load_experiment(write_cfg(tmp_path, text))
        assert [s.gate for s in specs] == ["cnot", "swap"]
        assert specs[0].order == 0
        assert specs[1].order == "exact"
        assert specs[1].initial_controls == "sine_seed"

    def test_flow_config_keys(self, tmp_path):
        text = ("gate: cnot\nT: 5\nL: 150\ns_max: 250\nabs_tol: 1e-5\n"
                "rel_tol: 2e-5\nj_stop: 1e-8\nh_init: 0.5\nh_min: 1e-10\n"
                "max_rhs_evals: 500\ns_granularity: 50\n"
                "initial_controls: sine_seed\nsine_amplitude: 1e-4\n")
        (spec,) = load_experiment(write_cfg(tmp_path, text))
        assert spec.cfg == FlowConfig(s_max=250.0, abs_tol=1e-5, rel_tol=2e-5,
                                      j_stop=1e-8, h_init=0.5, h_min=1e-10,
                                      max_rhs_evals=500)
        assert spec.s_granularity == 50.0
        assert spec.initial_controls == "sine_seed"
        assert spec.sine_amplitude == 1e-4

    def test_unknown_key_names_the_line(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: 5\nL: 150\nslices: 10\n")
        with pytest.raises(ValueError, match=r"exp\.cfg line 4: unknown key 'slices'"):
            load_experiment(path)

    def test_duplicate_key_names_the_line(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: 5\nT: 10\nL: 150\n")
        with pytest.raises(ValueError, match=r"line 3: duplicate key 'T'"):
            load_experiment(path)

    def test_malformed_line(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT = 5\nL: 150\n")
        with pytest.raises(ValueError, match=r"line 2: expected 'key: value'"):
            load_experiment(path)

    def test_missing_required_key(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: 5\n")
        with pytest.raises(ValueError, match="missing required key 'L'"):
            load_experiment(path)

    def test_non_numeric_value(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: fast\nL: 150\n")
        with pytest.raises(ValueError, match="T must be a number"):
            load_experiment(path)

    def test_fractional_slice_count(self, tmp_path):
        path = write_cfg(tmp_path, "gate: cnot\nT: 5\nL: 2.5\n")
        with pytest.raises(ValueError, match="L must be a number"):
            load_experiment(path)

    def test_spec_errors_carry_location(self, tmp_path):
        path = write_cfg(tmp_path, "gate: toffoli\nT: 5\nL: 150\n")
        with pytest.raises(ValueError, match=r"line 1: unknown gate 'toffoli'"):
            load_experiment(path)

    def test_empty_file(self, tmp_path):
        path = write_cfg(tmp_path, "# nothing here\n")
        with pytest.raises(ValueError, match="no experiments found"):
            load_experiment(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_experiment(tmp_path / "absent.cfg")

    def test_json_list(self, tmp_path):
        payload = [{"gate": "cnot", "T": 5, "L": 150, "order": 0},
                   {"gate": "swap", "T": 5, "L": 300, "order": "exact",
                    "s_max": 250}]
        path = write_cfg(tmp_path, json.dumps(payload), name="exp.json")
        specs = load_experiment(path)
        assert [s.gate for s in specs] == ["cnot", "swap"]
        assert specs[0].order == 0
        assert specs[1].order == "exact"
        assert specs[1].cfg.s_max == 250.0

    def test_json_single_object(self, tmp_path):
        path = write_cfg(tmp_path, json.dumps({"gate": "cnot", "T": 5, "L": 150}),
                         name="one.json")
        (spec,) = load_experiment(path)
        assert spec.n_slices == 150

    def test_json_bad_entry(self, tmp_path):
        path = write_cfg(tmp_path, json.dumps([42]), name="bad.json")
        with pytest.raises(ValueError, match="entry 1: expected an object"):
            load_experiment(path)

    def test_json_fractional_slice_count(self, tmp_path):
        path = write_cfg(tmp_path, json.dumps({"gate": "cnot", "T": 5, "L": 2.5}),
                         name="frac.json")
        with pytest.raises(ValueError, match="L must be a number"):
            load_experiment(path)

    def test_shipped_comparison_grid(self):
        specs = load_experiment("configs/table1.cfg")
        assert [(s.gate, s.t_final, s.n_slices, s.order) for s in specs] == [
            ("cnot", 10.0, 300, 0), ("cnot", 10.0, 300, 1),
            ("cnot", 10.0, 150, 0), ("cnot", 10.0, 150, 1),
            ("cnot", 5.0, 300, 0), ("cnot", 5.0, 300, 1),
            ("cnot", 5.0, 150, 0), ("cnot", 5.0, 150, 1),
        ]

    def test_shipped_method_pair(self):
        specs = load_experiment("configs/cnot_t5.cfg")
        assert [(s.gate, s.t_final, s.n_slices, s.order) for s in specs] == [
            ("cnot", 5.0, 150, 0), ("cnot", 5.0, 150, 1),
        ]


class TestRunner:
    def test_corrected_cnot_run(self):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150, order=1)
        record, result = execute_experiment(spec)
        assert record.stop_reason == "j_reached"
        assert record.s_reported == 400.0
        assert record.final_j <= 1e-7
        assert record.s_reported >= result.s_stop
        assert record.rhs_evals == result.rhs_evals
        assert record.wall_time_s > 0
        assert record.gate == "cnot" and record.order == 1

    def test_scan_extends_horizon_until_convergence(self):
        # The run converges near s = 354, so a horizon of 300 forces one
        # scan extension; the report quotes the same granularity multiple
        # either way.
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150, order=1,
                              cfg=FlowConfig(s_max=300.0))
        record, result = execute_experiment(spec, scan_cap=600.0)
        assert record.stop_reason == "j_reached"
        assert record.s_reported == 400.0
        assert 300.0 < result.s_stop <= 400.0

    def test_scan_cap_limits_extension(self):
        spec = ExperimentSpec(gate="cnot", t_final=5.0, n_slices=150, order=1,
                              cfg=FlowConfig(s_max=300.0))
        record = run_experiment(spec, scan_cap=300.0)
        assert record.stop_reason == "horizon"
        assert record.s_reported == 300.0
        assert record.final_j > 1e-7

    def test_reported_horizon_is_granularity_multiple(self):
        spec = fast_spec(s_max=50.0)
        record = run_experiment(spec, scan_cap=50.0)
        assert record.stop_reason == "horizon"
        assert record.s_reported == 100.0
        assert record.s_reported % spec.s_granularity == 0


class TestComparisonTable:
    def sample_records(self):
        return [
            RunRecord(gate="cnot", t_final=5.0, n_slices=150, order=0,
                      s_reported=1200.0, final_j=8.9230000000000004e-08,
                      rhs_evals=337, wall_time_s=np.pi, stop_reason="j_reached"),
            RunRecord(gate="swap", t_final=10.0, n_slices=300, order="exact",
                      s_reported=100.0, final_j=1 / 3, rhs_evals=55,
                      wall_time_s=0.25, stop_reason="horizon"),
        ]

    def test_header_and_rows(self, tmp_path):
        out = tmp_path / "table.csv"
        write_comparison(self.sample_records(), out)
        rows = read_rows(out)
        assert rows[0] == list(CSV_COLUMNS)
        assert len(rows) == 3
        assert rows[1][0] == "cnot"
        assert rows[2][3] == "exact"
        assert rows[2][8] == "horizon"

    def test_floats_round_trip(self, tmp_path):
        out = tmp_path / "table.csv"
        records = self.sample_records()
        write_comparison(records, out)
        rows = read_rows(out)
        for row, record in zip(rows[1:], records):
            assert float(row[5]) == record.final_j
            assert float(row[7]) == record.wall_time_s

    def test_empty_records_write_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        write_comparison([], out)
        assert read_rows(out) == [list(CSV_COLUMNS)]
        assert json.loads((tmp_path / "empty.json").read_text()) == []

    def test_json_mirror_default_path(self, tmp_path):
        out = tmp_path / "table.csv"
        write_comparison(self.sample_records(), out)
        data = json.loads((tmp_path / "table.json").read_text())
        assert len(data) == 2
        assert data[0]["gate"] == "cnot"
        assert data[0]["S_reported"] == 1200.0
        assert data[0]["final_J"] == 8.9230000000000004e-08
        assert data[1]["order"] == "exact"
        assert set(data[0]) == set(CSV_COLUMNS)

    def test_json_explicit_path(self, tmp_path):
        out = tmp_path / "table.csv"
        mirror = tmp_path / "elsewhere.json"
        write_comparison(self.sample_records(), out, json_path=mirror)
        assert mirror.exists()
        assert not (tmp_path / "table.json").exists()

    def test_compare_methods_deterministic_modulo_wall_time(self, tmp_path):
        specs = [fast_spec(order=0), fast_spec(order=1)]
        first = tmp_path / "first.csv"
        second = tmp_path / "second.csv"
        compare_methods(specs, first, scan_cap=50.0)
        compare_methods(specs, second, scan_cap=50.0)
        assert rows_without_wall_time(first) == rows_without_wall_time(second)
        wall = CSV_COLUMNS.index("wall_time_s")
        for row in read_rows(first)[1:]:
            assert float(row[wall]) > 0

    def test_parallel_matches_sequential(self, tmp_path):
        specs = [fast_spec(order=0), fast_spec(order=1)]
        seq = tmp_path / "seq.csv"
        par = tmp_path / "par.csv"
        compare_methods(specs, seq, scan_cap=50.0)
        compare_methods(specs, par, parallel=2, scan_cap=50.0)
        assert rows_without_wall_time(seq) == rows_without_wall_time(par)
