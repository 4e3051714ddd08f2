"""Tests for report plumbing (manifests, CSV/JSON-lines, comparison tables)
and the command-line front end, including the exit-code contract."""

import csv
import io
import json

import pytest

from quantcap import cli
from quantcap.cli import UsageError, _merge_negative_values, _snr_values, main
from quantcap.optimize import onebit_capacity
from quantcap.quantopt import benchmark_mutual_information
from quantcap.reference import REFERENCE_TABLES
from quantcap.report import (
    INFEASIBLE,
    ReportTable,
    RunManifest,
    format_value,
    read_manifest_line,
    render_report,
    write_csv,
    write_jsonl,
)
from quantcap.verify import CheckResult


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = text.splitlines()
    manifest = read_manifest_line(lines[0])
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    return manifest, rows[0], rows[1:]


class TestRunManifest:
    def test_json_roundtrip(self):
        m = RunManifest("sweep", {"snr_db": [0.0, 5.0], "bits": 2})
        assert RunManifest.from_json(m.to_json()) == m

    def test_serialization_is_stable(self):
        m = RunManifest("capacity", {"b": 1, "a": 2})
        assert m.to_json() == m.to_json()
        assert '"a": 2' in m.to_json()

    def test_timestamp_honors_source_date_epoch(self, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        m = RunManifest("verify", {})
        assert m.timestamp == "1970-01-01T00:00:00Z"

    def test_read_manifest_line_rejects_other_lines(self):
        with pytest.raises(ValueError):
            read_manifest_line("snr_db,capacity")


class TestWriters:
    MANIFEST = RunManifest("test", {"x": 1}, timestamp="1970-01-01T00:00:00Z")

    def test_csv_layout(self):
        buf = io.StringIO()
        write_csv(buf, ["a", "b"], [[1.5, None], ["x,y", 2]], self.MANIFEST)
        lines = buf.getvalue().splitlines()
        assert read_manifest_line(lines[0]) == self.MANIFEST
        assert lines[1] == "a,b"
        assert lines[2] == "1.5000000000000000e+00,-"
        # RFC-4180 quoting for cells containing the delimiter
        assert lines[3] == '"x,y",2'

    def test_jsonl_layout(self):
        buf = io.StringIO()
        write_jsonl(buf, ["a", "b"], [[1.5, None]], self.MANIFEST)
        lines = buf.getvalue().splitlines()
        head = json.loads(lines[0])
        assert head["manifest"]["command"] == "test"
        assert json.loads(lines[1]) == {"a": 1.5, "b": None}

    def test_float_precision_at_least_12_digits(self):
        third = 1.0 / 3.0
        assert format_value(third) == f"{third:.16e}"
        assert float(format_value(third)) == third

    def test_render_report_rejects_unknown_format(self):
        with pytest.raises(ValueError):
            render_report(["a"], [[1.0]], "xml", self.MANIFEST)


class TestReportTable:
    @staticmethod
    def table():
        return ReportTable(
            name="X",
            column_label="snr_db",
            columns=(0.0, 5.0),
            computed=(("rate", (0.4551, None)),),
            reference=(("rate", (0.4552, 1.0)),),
        )

    def test_rejects_ragged_rows(self):
        with pytest.raises(ValueError):
            ReportTable("X", "snr_db", (0.0, 5.0), (("rate", (1.0,)),), ())

    def test_deviations_skip_infeasible_cells(self):
        (label, devs), = self.table().deviations()
        assert label == "rate"
        assert devs[0] == pytest.approx(1e-4, abs=1e-12)
        assert devs[1] is None

    def test_max_deviation(self):
        assert self.table().max_deviation() == pytest.approx(1e-4, abs=1e-12)

    def test_to_human_rounds_and_marks_infeasible(self):
        text = self.table().to_human()
        assert "0.4551" in text and "0.4552" in text
        assert "rate (reference)" in text
        assert "rate (deviation)" in text
        assert INFEASIBLE in text
        # full precision never leaks into the human view
        assert "0.45510" not in text

    def test_machine_rows_provenance(self):
        rows = list(self.table().machine_rows())
        tags = {r[1] for r in rows}
        assert tags == {"computed", "reference", "deviation"}
        assert len(rows) == 6


class TestReferenceTables:
    def test_all_five_present(self):
        assert sorted(REFERENCE_TABLES) == ["I", "II", "III", "IV", "V"]

    def test_spot_values(self):
        t1 = REFERENCE_TABLES["I"]
        mi = dict(zip(t1.columns, t1.row("Mutual information")))
        assert mi[5.0] == 0.8668

    def test_infeasible_cells_marked_none(self):
        t5 = REFERENCE_TABLES["V"]
        assert None in t5.row("1-bit")
        assert None not in t5.row("Unquantized")

    def test_unknown_row_label(self):
        with pytest.raises(KeyError):
            REFERENCE_TABLES["I"].row("nope")


class TestSnrParsing:
    def test_single_value(self):
        assert _snr_values("5", 1.0) == [5.0]
        assert _snr_values("-7.5", 1.0) == [-7.5]

    def test_range_is_inclusive(self):
        assert _snr_values("-20..20", 10.0) == [-20.0, -10.0, 0.0, 10.0, 20.0]
        assert _snr_values("0..1", 0.3) == [0.0, 0.3, 0.6, 0.9]

    def test_bad_values_raise_usage_error(self):
        with pytest.raises(UsageError):
            _snr_values("abc", 1.0)
        with pytest.raises(UsageError):
            _snr_values("5..0", 1.0)
        with pytest.raises(UsageError):
            _snr_values("0..5", 0.0)

    def test_negative_value_merge(self):
        merged = _merge_negative_values(
            ["capacity", "--snr-db", "-20..20", "--thresholds", "-2,0,2"]
        )
        assert merged == ["capacity", "--snr-db=-20..20", "--thresholds=-2,0,2"]
        # bare '-' (stdout marker) and non-negative values pass through
        assert _merge_negative_values(["--snr-db", "5"]) == ["--snr-db", "5"]
        assert _merge_negative_values(["--out", "-"]) == ["--out", "-"]


class TestCapacityCommand:
    def test_reference_cell(self, capsys):
        code, out, _ = run_cli(
            ["capacity", "--snr-db", "5", "--thresholds", "-2,0,2"], capsys
        )
        assert code == 0
        cap = float(out.split("capacity ")[1].split()[0])
        assert cap == pytest.approx(0.8668, abs=5e-4)
        assert "point " in out

    def test_onebit_matches_closed_form(self, capsys):
        code, out, _ = run_cli(["capacity", "--snr-db", "0", "--onebit"], capsys)
        assert code == 0
        cap = float(out.split("capacity ")[1].split()[0])
        assert cap == pytest.approx(onebit_capacity(1.0), abs=1e-6)

    def test_bound_flag_appends_dominating_bound(self, capsys):
        code, out, _ = run_cli(
            ["capacity", "--snr-db", "0", "--thresholds", "-2,0,2", "--bound"],
            capsys,
        )
        assert code == 0
        cap = float(out.split("capacity ")[1].split()[0])
        bound = float(out.split("symmetric_upper_bound ")[1].split()[0])
        assert bound >= cap - 1e-9

    def test_unordered_thresholds_usage_error(self, capsys):
        code, _, err = run_cli(
            ["capacity", "--snr-db", "0", "--thresholds", "1,0"], capsys
        )
        assert code == 1
        assert "usage error" in err

    def test_duplicate_thresholds_usage_error(self, capsys):
        code, _, err = run_cli(
            ["capacity", "--snr-db", "0", "--thresholds", "0,0"], capsys
        )
        assert code == 1

    def test_missing_quantizer_usage_error(self, capsys):
        code, _, err = run_cli(["capacity", "--snr-db", "0"], capsys)
        assert code == 1
        assert "quantizer" in err

    def test_conflicting_quantizer_flags(self, capsys):
        code, _, err = run_cli(
            ["capacity", "--snr-db", "0", "--onebit", "--bits", "2"], capsys
        )
        assert code == 1

    def test_unknown_flag_is_usage_error(self, capsys):
        code, _, _ = run_cli(["capacity", "--nope"], capsys)
        assert code == 1

    def test_missing_command_is_usage_error(self, capsys):
        code, _, _ = run_cli([], capsys)
        assert code == 1

    def test_help_exits_zero(self, capsys):
        assert run_cli(["--help"], capsys)[0] == 0

    def test_computation_error_exit_code(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("solver blew up")

        monkeypatch.setattr(cli, "optimize_input_cutting_plane", boom)
        code, _, err = run_cli(["capacity", "--snr-db", "0", "--onebit"], capsys)
        assert code == 2
        assert "computation error" in err


class TestBenchmarkAndBoundCommands:
    def test_benchmark_values(self, capsys):
        code, out, _ = run_cli(
            ["benchmark", "--snr-db", "0", "--bits", "2", "--out", "-"], capsys
        )
        assert code == 0
        manifest, header, rows = parse_csv(out)
        assert manifest.command == "benchmark"
        assert header[2] == "mutual_information"
        assert float(rows[0][2]) == pytest.approx(
            benchmark_mutual_information(4, 1.0), rel=1e-12
        )

    def test_benchmark_requires_bits(self, capsys):
        code, _, _ = run_cli(["benchmark", "--snr-db", "0"], capsys)
        assert code == 1

    def test_bound_command(self, capsys):
        code, out, _ = run_cli(
            ["bound", "--snr-db", "0", "--thresholds", "-2,0,2"], capsys
        )
        assert code == 0
        val = float(out.split("bound ")[1].split()[0])
        assert val == pytest.approx(0.4046, abs=2e-3)


class TestSweepCommand:
    def test_onebit_curve_nondecreasing(self, capsys):
        code, out, _ = run_cli(
            ["sweep", "--snr-db=-20..20", "--step", "10", "--bits", "1", "--out", "-"],
            capsys,
        )
        assert code == 0
        manifest, header, rows = parse_csv(out)
        caps = [float(r[2]) for r in rows]
        assert caps == sorted(caps)
        assert manifest.parameters["snr_db"] == [-20.0, -10.0, 0.0, 10.0, 20.0]

    def test_precision_ordering_at_zero_db(self, capsys):
        code, out, _ = run_cli(["sweep", "--snr-db", "0", "--out", "-"], capsys)
        assert code == 0
        _, _, rows = parse_csv(out)
        caps = {r[0]: float(r[2]) for r in rows}
        assert caps["1"] <= caps["2"] <= caps["3"] <= caps["inf"]

    def test_csv_deterministic_and_jobs_invariant(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        argv = ["sweep", "--snr-db=-5..5", "--step", "5", "--bits", "1"]
        paths = [tmp_path / f"r{i}.csv" for i in range(3)]
        for path, extra in zip(paths, ([], [], ["--jobs", "2"])):
            code, _, _ = run_cli(argv + extra + ["--out", str(path)], capsys)
            assert code == 0
        blobs = [p.read_bytes() for p in paths]
        assert blobs[0] == blobs[1]  # rerun
        assert blobs[0] == blobs[2]  # worker count

    def test_threshold_curve_endpoints_approach_onebit(self, capsys):
        code, out, _ = run_cli(
            ["sweep", "--curve", "q", "--snr-db", "10", "--out", "-"], capsys
        )
        assert code == 0
        _, header, rows = parse_csv(out)
        assert header == ["snr_db", "q", "capacity"]
        assert len(rows) == 200
        caps = [float(r[2]) for r in rows]
        onebit = onebit_capacity(10.0)
        # q -> 0 merges the outer bins into the sign quantizer
        assert caps[0] == pytest.approx(onebit, abs=0.02)
        # every q refines the sign quantizer, and past the optimum the curve
        # decays toward the 1-bit value (the limit sits beyond the scan range
        # at this SNR: sub-power-budget mass beyond q stays informative)
        assert min(caps) >= onebit - 1e-9
        tail = caps[-10:]
        assert all(a > b for a, b in zip(tail, tail[1:]))
        assert caps[-1] < max(caps) - 0.3

    def test_dump_dist_support_points(self, capsys):
        code, out, _ = run_cli(
            [
                "sweep",
                "--dump-dist",
                "--snr-db",
                "5",
                "--thresholds",
                "-2,0,2",
                "--out",
                "-",
            ],
            capsys,
        )
        assert code == 0
        _, _, rows = parse_csv(out)
        locs = sorted(float(r[1]) for r in rows)
        assert locs == pytest.approx([-2.86, -0.52, 0.52, 2.86], abs=0.05)
        assert sum(float(r[2]) for r in rows) == pytest.approx(1.0, abs=1e-9)

    def test_curve_and_dump_conflict(self, capsys):
        code, _, _ = run_cli(
            ["sweep", "--curve", "q", "--dump-dist", "--snr-db", "0"], capsys
        )
        assert code == 1


class TestVerifyCommand:
    def test_convexity_passes(self, capsys):
        code, out, _ = run_cli(["verify", "convexity"], capsys)
        assert code == 0
        assert "3/3 checks passed" in out
        assert "FAIL" not in out

    def test_failure_exits_three(self, capsys, monkeypatch):
        monkeypatch.setattr(
            cli,
            "run_suite",
            lambda name, cache=None: [CheckResult("broken", False, -1.0, "")],
        )
        code, out, _ = run_cli(["verify", "kkt"], capsys)
        assert code == 3
        assert "FAIL" in out

    def test_unknown_suite_is_usage_error(self, capsys):
        code, _, _ = run_cli(["verify", "nope"], capsys)
        assert code == 1

    def test_json_report(self, capsys):
        code, out, _ = run_cli(
            ["verify", "convexity", "--out", "-", "--format", "json"], capsys
        )
        assert code == 0
        lines = out.splitlines()
        assert json.loads(lines[0])["manifest"]["parameters"]["suite"] == "convexity"
        records = [json.loads(line) for line in lines[1:]]
        assert all(r["passed"] is True for r in records)


class TestReproduceCommand:
    def test_table_i_machine_report(self, capsys):
        code, out, _ = run_cli(["reproduce", "--table", "I", "--out", "-"], capsys)
        assert code == 0
        manifest, header, rows = parse_csv(out)
        assert manifest.parameters["table"] == "I"
        assert header == ["row", "provenance", "column", "value"]
        # 2 computed + 2 reference + 2 deviation rows, 6 columns each
        assert len(rows) == 36
        mi_devs = [
            float(r[3])
            for r in rows
            if r[0] == "Mutual information" and r[1] == "deviation"
        ]
        assert len(mi_devs) == 6
        assert max(mi_devs) <= 0.005

    def test_unknown_table_is_usage_error(self, capsys):
        code, _, _ = run_cli(["reproduce", "--table", "VI"], capsys)
        assert code == 1
