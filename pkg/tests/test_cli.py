"""CLI commands, file formats, report schema and exit codes."""

import json
import math

import numpy as np
import pytest

from valvefit.cli import main
from valvefit.io import (CSV_HEADER, EVAL_HEADER, PLOT_DATA_HEADER,
                         dumps_report, parse_report, read_dataset_csv,
                         write_dataset_csv)
from valvefit.model import Dataset


def run(*argv):
    return main(list(argv))


class TestSimulate:
    def test_triangular_example(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert run("simulate", "--n", "8", "--alpha", "1", "--beta", "0",
                   "--noise-std", "0", "--profile", "triangular",
                   "--reversals", "1", "--seed", "7", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 9
        modes = [int(line.split(",")[3]) for line in lines[1:]]
        assert modes == [1, 1, 1, 1, 0, 0, 0, 0]
        assert "achieved SNR: inf dB" in capsys.readouterr().out

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        flags = ["simulate", "--n", "50", "--noise-std", "0.05",
                 "--seed", "3", "--out"]
        assert run(*flags, str(a)) == 0
        assert run(*flags, str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_reports_finite_snr(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert run("simulate", "--n", "100", "--noise-std", "0.05",
                   "--out", str(out)) == 0
        line = [l for l in capsys.readouterr().out.splitlines()
                if "achieved SNR" in l][0]
        db = float(line.split(":")[1].split()[0])
        assert math.isfinite(db)

    def test_too_few_samples_is_usage_error(self, tmp_path):
        assert run("simulate", "--n", "2", "--out", str(tmp_path / "x.csv")) == 1

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert run("simulate", "--frobnicate", "--out",
                   str(tmp_path / "x.csv")) == 1


class TestFit:
    def simulate(self, tmp_path, *extra):
        data = tmp_path / "t.csv"
        assert run("simulate", "--n", "200", "--alpha", "2", "--beta", "-0.1",
                   "--noise-std", "0", "--reversals", "3", "--seed", "11",
                   "--out", str(data), *extra) == 0
        return data

    def test_roundtrip_recovers_simulate_flags(self, tmp_path):
        data = self.simulate(tmp_path)
        report_path = tmp_path / "r.json"
        assert run("fit", str(data), "--report", str(report_path)) == 0
        report = json.loads(report_path.read_text())
        assert report["schema_version"] == "1"
        assert abs(report["alpha"] - 2.0) / 2.0 <= 1e-8
        assert abs(report["beta"] + 0.1) / 0.1 <= 1e-8
        assert report["hysteresis_width"] == pytest.approx(0.05, rel=1e-8)
        assert report["converged"] is True
        assert report["warnings"] == []
        assert len(report["labels"]) == 200
        assert report["switch_epochs"] is not None
        assert len(report["singular_values"]) == 2
        assert report["config"]["time_ordered"] is True

    def test_not_time_ordered_gives_null_epochs(self, tmp_path):
        data = self.simulate(tmp_path)
        report_path = tmp_path / "r.json"
        assert run("fit", str(data), "--report", str(report_path),
                   "--time-ordered", "false") == 0
        assert json.loads(report_path.read_text())["switch_epochs"] is None

    def test_malformed_flow_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        rows = [CSV_HEADER] + [f"{i},0.{i},0.{i}," for i in range(1, 15)]
        rows[11] = "11,0.11,oops,"  # file line 12
        bad.write_text("\n".join(rows) + "\n")
        assert run("fit", str(bad), "--report", str(tmp_path / "r.json")) == 1
        assert "line 12" in capsys.readouterr().err

    def test_wrong_header_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("opening,flow\n0.1,0.2\n")
        assert run("fit", str(bad), "--report", str(tmp_path / "r.json")) == 1

    def test_missing_input_is_io_error(self, tmp_path):
        assert run("fit", str(tmp_path / "nope.csv"),
                   "--report", str(tmp_path / "r.json")) == 1

    def test_estimation_failure_exits_2_with_error_report(self, tmp_path, capsys):
        # all openings zero: the flow gain is unidentifiable
        bad = tmp_path / "flat.csv"
        bad.write_text(CSV_HEADER + "\n" +
                       "\n".join(f"{i},0.0,{0.1 * i}," for i in range(1, 9)) + "\n")
        report_path = tmp_path / "r.json"
        assert run("fit", str(bad), "--report", str(report_path)) == 2
        report = json.loads(report_path.read_text())
        assert "error" in report
        assert capsys.readouterr().err != ""

    def test_plot_data_and_figure(self, tmp_path):
        data = self.simulate(tmp_path)
        plot = tmp_path / "p.csv"
        assert run("fit", str(data), "--report", str(tmp_path / "r.json"),
                   "--plot-data", str(plot)) == 0
        lines = plot.read_text().splitlines()
        assert lines[0] == PLOT_DATA_HEADER
        assert len(lines) == 201
        # figure rendered alongside the delimited output
        assert (tmp_path / "p.png").stat().st_size > 0
        # fitted flow equals measured flow on noiseless data
        _, opening, flow, fitted, label = lines[1].split(",")
        assert float(fitted) == pytest.approx(float(flow), abs=1e-9)
        assert label in ("0", "1")

    def test_no_figure_flag(self, tmp_path):
        data = self.simulate(tmp_path)
        plot = tmp_path / "p.csv"
        assert run("fit", str(data), "--report", str(tmp_path / "r.json"),
                   "--plot-data", str(plot), "--no-figure") == 0
        assert not (tmp_path / "p.png").exists()

    def test_cv_scale_readout(self, tmp_path, capsys):
        data = self.simulate(tmp_path)
        assert run("fit", str(data), "--report", str(tmp_path / "r.json"),
                   "--cv-scale", "3.5") == 0
        out = capsys.readouterr().out
        assert "Cv = 7" in out  # 3.5 * alpha with alpha == 2

    def test_shuffled_simulate_fits_with_explicit_flag(self, tmp_path):
        data = self.simulate(tmp_path, "--shuffle")
        report_path = tmp_path / "r.json"
        assert run("fit", str(data), "--report", str(report_path),
                   "--time-ordered", "false") == 0
        report = json.loads(report_path.read_text())
        assert abs(report["alpha"] - 2.0) / 2.0 <= 1e-8
        assert report["switch_epochs"] is None

    def test_roundtrip_over_twenty_seeds(self, tmp_path):
        for seed in range(20):
            data = tmp_path / f"t{seed}.csv"
            report_path = tmp_path / f"r{seed}.json"
            assert run("simulate", "--n", "120", "--alpha", "1.8",
                       "--beta", "-0.25", "--noise-std", "0",
                       "--reversals", "2", "--seed", str(seed),
                       "--out", str(data)) == 0
            assert run("fit", str(data), "--report", str(report_path)) == 0
            report = json.loads(report_path.read_text())
            assert abs(report["alpha"] - 1.8) / 1.8 <= 1e-8
            assert abs(report["beta"] + 0.25) / 0.25 <= 1e-8

    def test_out_of_range_openings_warned_on_ingestion(self, tmp_path):
        path = tmp_path / "odd.csv"
        rows = [CSV_HEADER]
        for i in range(1, 41):
            mu = 1.1 * i / 40  # tops out above 1
            q = 2.0 * mu - (0.2 if i % 2 else 0.0)
            rows.append(f"{i},{mu!r},{q!r},")
        path.write_text("\n".join(rows) + "\n")
        report_path = tmp_path / "r.json"
        assert run("fit", str(path), "--report", str(report_path)) == 0
        report = json.loads(report_path.read_text())
        assert "OutOfRangeOpenings" in report["warnings"]

    def test_tol_and_max_iter_flags_accepted(self, tmp_path):
        data = self.simulate(tmp_path)
        report_path = tmp_path / "r.json"
        assert run("fit", str(data), "--report", str(report_path),
                   "--tol", "1e-9", "--max-iter", "50") == 0
        report = json.loads(report_path.read_text())
        assert report["config"]["tol"] == 1e-9
        assert report["config"]["max_iter"] == 50


class TestEval:
    def test_row_count_and_columns(self, tmp_path):
        out = tmp_path / "e.csv"
        assert run("eval", "--n", "80", "--beta", "-0.3", "--snr-grid", "40",
                   "--trials", "1", "--seed", "4", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == EVAL_HEADER
        assert len(lines) == 4  # header + pipeline, naive, kmeans
        assert (tmp_path / "e.png").stat().st_size > 0

    def test_inf_grid_entry_noiseless(self, tmp_path):
        out = tmp_path / "e.csv"
        assert run("eval", "--n", "80", "--beta", "-0.3", "--snr-grid", "inf",
                   "--trials", "2", "--seed", "4", "--out", str(out),
                   "--no-figure") == 0
        for line in out.read_text().splitlines()[1:]:
            cells = line.split(",")
            assert cells[0] == "inf"
            assert float(cells[4]) == 0.0  # misclassification_mean

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        flags = ["eval", "--n", "60", "--beta", "-0.3", "--snr-grid", "30,20",
                 "--trials", "2", "--seed", "9", "--no-figure", "--out"]
        assert run(*flags, str(a)) == 0
        assert run(*flags, str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_grid_is_usage_error(self, tmp_path):
        assert run("eval", "--snr-grid", "40,abc",
                   "--out", str(tmp_path / "e.csv")) == 1


class TestIoRoundTrips:
    def test_dataset_csv_roundtrip(self, tmp_path):
        ds = Dataset(np.array([0.1, 0.25, 1.0 / 3.0]),
                     np.array([0.2, -0.5, 1e-17]),
                     true_modes=np.array([0, 1, 1]))
        path = tmp_path / "ds.csv"
        write_dataset_csv(path, ds)
        back = read_dataset_csv(path)
        np.testing.assert_array_equal(back.openings, ds.openings)
        np.testing.assert_array_equal(back.flows, ds.flows)
        np.testing.assert_array_equal(back.true_modes, ds.true_modes)

    def test_blank_mode_column(self, tmp_path):
        path = tmp_path / "ds.csv"
        path.write_text(CSV_HEADER + "\n1,0.1,0.2,\n2,0.2,0.4,\n")
        ds = read_dataset_csv(path)
        assert ds.true_modes is None

    def test_mixed_mode_column_rejected(self, tmp_path):
        path = tmp_path / "ds.csv"
        path.write_text(CSV_HEADER + "\n1,0.1,0.2,1\n2,0.2,0.4,\n")
        with pytest.raises(ValueError):
            read_dataset_csv(path)

    def test_out_of_order_index_rejected(self, tmp_path):
        path = tmp_path / "ds.csv"
        path.write_text(CSV_HEADER + "\n1,0.1,0.2,\n3,0.2,0.4,\n")
        with pytest.raises(ValueError, match="line 3"):
            read_dataset_csv(path)

    def test_report_json_roundtrip_is_lossless(self):
        report = {
            "schema_version": "1",
            "alpha": 2.0000000000000004,
            "beta": -0.1,
            "hysteresis_width": 1.0 / 3.0,
            "labels": [0, 1, 1],
            "switch_epochs": None,
            "residual_rms": 6.172e-17,
            "singular_values": [1.2856836234242423, 0.08377123212123211],
            "warnings": ["NoHysteresisDetected"],
            "converged": True,
            "iterations": 3,
            "config": {"input": "t.csv", "time_ordered": True,
                       "tol": 1e-10, "max_iter": 100},
        }
        assert parse_report(dumps_report(report)) == report

    def test_report_floats_carry_17_significant_digits(self):
        text = dumps_report({"alpha": 1.0 / 3.0})
        assert "0.33333333333333331" in text

    def test_non_finite_report_float_rejected(self):
        with pytest.raises(ValueError):
            dumps_report({"alpha": math.inf})
