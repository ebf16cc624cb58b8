"""End-to-end command-line chains, driven through main()."""

import json
import os

import numpy as np
import pytest

from desing import PointCloud
from desing.cli import main
from desing.io import read_raw, write_csv
from desing.report import load_report, strip_timing

CENTER = "800"  # crossing-lines pinned intersection, 400 + 400 samples


@pytest.fixture(scope="module")
def crossing_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    rc = main(
        [
            "synth",
            "--kind",
            "crossinglines",
            "--n",
            "2",
            "--dims",
            "1,1",
            "--samples",
            "400,400",
            "--sigma",
            "0.0",
            "--seed",
            "6",
            "--out-dir",
            str(out),
        ]
    )
    assert rc == 0
    return out


def verify_args(cloud, out, epsilon):
    return [
        "verify-theorem1",
        "--input",
        cloud,
        "--out-dir",
        out,
        "--center-index",
        CENTER,
        "--epsilon",
        epsilon,
        "--r-max",
        "0.9",
        "--v-min",
        "10",
        "--r-loc",
        "2.5",
        "--lambda",
        "1.0",
    ]


class TestArgHandling:
    def test_version_exits_zero(self):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_synth_seed_is_required(self):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--kind", "flatpatch", "--n", "4", "--dims", "2", "--samples", "10"])
        assert exc.value.code == 2

    def test_missing_input_file_is_exit_two(self, tmp_path, capsys):
        rc = main(["detect", "--input", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_estimator_is_exit_two(self, crossing_dir, tmp_path, capsys):
        rc = main(
            [
                "detect",
                "--input",
                str(crossing_dir / "cloud.csv"),
                "--out-dir",
                str(tmp_path),
                "--estimator",
                "cubic",
            ]
        )
        assert rc == 2
        assert "estimator" in capsys.readouterr().err


class TestSynth:
    def test_outputs_and_report(self, crossing_dir):
        assert (crossing_dir / "cloud.csv").exists()
        report = load_report(crossing_dir / "report.json")
        assert report["command"] == "synth"
        assert report["schema_version"] == "1"
        assert report["payload"]["n_points"] == 801
        truth = json.loads((crossing_dir / "truth.json").read_text())
        assert truth["center_index"] == 800
        assert truth["dims"] == [1, 1]

    def test_same_seed_reruns_byte_identical(self, crossing_dir, tmp_path):
        rc = main(
            [
                "synth",
                "--kind",
                "crossinglines",
                "--n",
                "2",
                "--dims",
                "1,1",
                "--samples",
                "400,400",
                "--sigma",
                "0.0",
                "--seed",
                "6",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert rc == 0
        assert (tmp_path / "cloud.csv").read_bytes() == (
            crossing_dir / "cloud.csv"
        ).read_bytes()
        a = strip_timing(load_report(tmp_path / "report.json"))
        b = strip_timing(load_report(crossing_dir / "report.json"))
        # out-dir appears nowhere in the payload, so even reports from
        # different directories agree
        assert a == b


class TestDetect:
    def test_flags_and_profiles(self, crossing_dir, tmp_path):
        rc = main(
            [
                "detect",
                "--input",
                str(crossing_dir / "cloud.csv"),
                "--out-dir",
                str(tmp_path),
                "--epsilon",
                "1.7",
                "--r-max",
                "0.9",
                "--v-min",
                "30",
            ]
        )
        assert rc == 0
        report = load_report(tmp_path / "report.json")
        payload = report["payload"]
        counts = payload["counts"]
        assert sum(counts.values()) == 801
        assert counts["singular"] == len(payload["singular_ids"]) > 0
        for i in payload["singular_ids"]:
            csv_path = tmp_path / "profiles" / f"point_{i}.csv"
            assert csv_path.exists()
            assert csv_path.read_text().startswith("r,V,dim")


class TestVerifyTheorem:
    def test_regularization_passes_at_unit_epsilon(self, crossing_dir, tmp_path):
        rc = main(verify_args(str(crossing_dir / "cloud.csv"), str(tmp_path), "1.0"))
        assert rc == 0
        payload = load_report(tmp_path / "report.json")["payload"]
        assert payload["passed"] is True
        assert payload["cone"]["k"] == 2
        statuses = [v["status"] for v in payload["exceptional_verdicts"]]
        assert statuses == ["regular", "regular"]

    def test_tight_epsilon_fails_with_exit_three(self, crossing_dir, tmp_path):
        rc = main(verify_args(str(crossing_dir / "cloud.csv"), str(tmp_path), "0.01"))
        assert rc == 3
        payload = load_report(tmp_path / "report.json")["payload"]
        assert payload["passed"] is False

    def test_blowup_writes_strict_transform_artifacts(self, crossing_dir, tmp_path):
        args = verify_args(str(crossing_dir / "cloud.csv"), str(tmp_path), "1.0")
        args[0] = "blowup"
        rc = main(args)
        assert rc == 0  # blowup reports, never gates
        bases = read_raw(tmp_path / "strict_bases.rawf64")
        dirs = read_raw(tmp_path / "strict_dirs.rawf64")
        assert len(bases) == len(dirs) == 800  # every non-center point lifts
        assert (tmp_path / "profiles" / "center.csv").exists()
        assert (tmp_path / "profiles" / "exceptional_0.csv").exists()
        assert (tmp_path / "profiles" / "exceptional_1.csv").exists()


class TestContextMap:
    @pytest.fixture()
    def table_and_sequence(self, tmp_path, rng):
        table = tmp_path / "table.csv"
        write_csv(PointCloud(rng.standard_normal((8, 2))), table)
        seq = tmp_path / "seq.json"
        seq.write_text(json.dumps(list(range(8))))
        return table, seq

    def test_divisor_point_report(self, table_and_sequence, tmp_path):
        table, seq = table_and_sequence
        rc = main(
            [
                "context-map",
                "--table",
                str(table),
                "--sequence",
                str(seq),
                "--position",
                "3",
                "--window-k",
                "2",
                "--out-dir",
                str(tmp_path / "cm"),
            ]
        )
        assert rc == 0
        payload = load_report(tmp_path / "cm" / "report.json")["payload"]
        rep = np.asarray(payload["divisor_point"])
        assert rep.shape == (2,)
        assert float(np.hypot(*rep)) == pytest.approx(1.0, abs=1e-12)
        assert payload["token_id"] == 3

    def test_component_and_hybrid_lookups(
        self, table_and_sequence, crossing_dir, tmp_path
    ):
        table, seq = table_and_sequence
        verify_out = tmp_path / "v"
        main(verify_args(str(crossing_dir / "cloud.csv"), str(verify_out), "1.0"))
        detect_out = tmp_path / "d"
        main(
            [
                "detect",
                "--input",
                str(table),
                "--out-dir",
                str(detect_out),
                "--epsilon",
                "1.0",
            ]
        )
        rc = main(
            [
                "context-map",
                "--table",
                str(table),
                "--sequence",
                str(seq),
                "--position",
                "3",
                "--out-dir",
                str(tmp_path / "cm"),
                "--cone-report",
                str(verify_out / "report.json"),
                "--locus-report",
                str(detect_out / "report.json"),
            ]
        )
        assert rc == 0
        payload = load_report(tmp_path / "cm" / "report.json")["payload"]
        assert payload["nearest_component"] in (0, 1)
        assert payload["hybrid"]["kind"] in ("regular", "desingularized")

    def test_reruns_are_byte_identical_after_timing_strip(
        self, table_and_sequence, tmp_path
    ):
        table, seq = table_and_sequence
        outputs = []
        for d in ("cm1", "cm2"):
            rc = main(
                [
                    "context-map",
                    "--table",
                    str(table),
                    "--sequence",
                    str(seq),
                    "--position",
                    "4",
                    "--out-dir",
                    str(tmp_path / d),
                ]
            )
            assert rc == 0
            outputs.append(strip_timing(load_report(tmp_path / d / "report.json")))
        assert outputs[0] == outputs[1]


class TestReportRerender:
    def test_exit_mirrors_the_stored_verdict(self, crossing_dir, tmp_path, capsys):
        ok_dir, bad_dir = tmp_path / "ok", tmp_path / "bad"
        main(verify_args(str(crossing_dir / "cloud.csv"), str(ok_dir), "1.0"))
        main(verify_args(str(crossing_dir / "cloud.csv"), str(bad_dir), "0.01"))
        capsys.readouterr()
        assert main(["report", "--input", str(ok_dir / "report.json")]) == 0
        assert "PASS" in capsys.readouterr().out
        assert main(["report", "--input", str(bad_dir / "report.json")]) == 3
        assert "FAIL" in capsys.readouterr().out

    def test_missing_report_is_exit_two(self, tmp_path):
        assert main(["report", "--input", str(tmp_path / "gone.json")]) == 2
