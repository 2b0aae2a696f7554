import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from anisoflow.cli import CSV_COLUMNS, run_cli
from anisoflow.io import read_pixels

SYNTH = ["--synthetic", "16x16", "--rectangles", "5 6 8 4 0.4 1; 11 10 5 7 -0.3 0.6", "--noise", "0.1"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_tau_star_standalone(capsys):
    assert run_cli(["tau-star", "--e0", "0", "--c-star-value", "1", "--w1inf", "1"]) == 0
    assert float(capsys.readouterr().out) == 0.0625


def test_tau_star_from_synthetic(capsys):
    assert run_cli(["tau-star", *SYNTH, "--eps", "0.1"]) == 0
    assert 0 < float(capsys.readouterr().out) < 1e-3


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["denoise"],
        ["denoise", "--image", "a.pgm", *SYNTH],
        ["denoise", *SYNTH, "--m", "two"],
        ["tau-star", "--e0", "-1", "--c-star-value", "1", "--w1inf", "1"],
        ["tau-star", "--e0", "1", "--eps", "0"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert run_cli(argv) == 1
    assert "error" in capsys.readouterr().err


def test_missing_image_exits_1(tmp_path):
    assert run_cli(["denoise", "--image", str(tmp_path / "none.pgm"), "--output", str(tmp_path / "o")]) == 1


def test_nonconvergence_exits_2(tmp_path, capsys):
    code = run_cli(["denoise", *SYNTH, "--m", "2", "--tau", "0.5", "--maxit-convex", "1", "--output", str(tmp_path)])
    assert code == 2
    assert "step 1" in capsys.readouterr().err


def test_denoise_outputs(tmp_path):
    out = tmp_path / "run"
    argv = ["denoise", *SYNTH, "--m", "50", "--tau-fraction", "0.5", "--stride", "25", "--output", str(out)]
    assert run_cli(argv) == 0
    rows = read_csv(out / "energy.csv")
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [int(r[0]) for r in rows[1:]] == list(range(1, 51))
    totals = np.array([float(r[CSV_COLUMNS.index("total")]) for r in rows[1:]])
    assert np.all(np.diff(totals) <= 0)
    for name in ("u_00000", "u_00025", "alpha_00025", "u_00050", "alpha_00050"):
        assert read_pixels(out / f"{name}.pgm").shape == (16, 16)
    assert "tau_fraction = 0.5" in (out / "config.txt").read_text()


def test_denoise_reproducible_from_saved_config(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["denoise", *SYNTH, "--m", "5", "--tau", "0.01", "--output", str(a)]) == 0
    assert run_cli(["denoise", "--config", str(a / "config.txt"), "--output", str(b)]) == 0
    for name in ("energy.csv", "u_00005.pgm", "alpha_00005.pgm"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_denoise_image_input_keeps_frame(tmp_path):
    from anisoflow.io import save_image, synth_pattern, benchmark_spec

    img = tmp_path / "in.png"
    save_image(synth_pattern(benchmark_spec(12)), img, pad=True)
    out = tmp_path / "o"
    assert run_cli(["denoise", "--image", str(img), "--m", "2", "--tau", "0.01", "--png", "--output", str(out)]) == 0
    assert read_pixels(out / "u_00002.png").shape == (14, 14)


def test_check_dissipation_report(tmp_path, capsys):
    argv = ["check-dissipation", *SYNTH, "--m", "10", "--tau-fraction", "0.5", "--output", str(tmp_path), "--strict"]
    assert run_cli(argv) == 0
    lines = (tmp_path / "report.jsonl").read_text().splitlines()
    verdict = json.loads(lines[0])
    assert verdict["check"] == "dissipation" and verdict["passed"]
    assert "dissipation: PASS" in capsys.readouterr().out


def test_check_range_strict(tmp_path):
    assert run_cli(["check-range", *SYNTH, "--m", "5", "--tau", "0.01", "--output", str(tmp_path), "--strict"]) == 0
    verdict = json.loads((tmp_path / "report.jsonl").read_text())
    assert verdict["max_neg"] <= 1e-6 and verdict["max_over"] <= 1e-6


def test_failed_check_strict_exits_3(tmp_path):
    # a negative slack cannot be met by any trajectory
    argv = ["check-dissipation", *SYNTH, "--m", "2", "--tau", "0.01", "--slack", "-1", "--output", str(tmp_path)]
    assert run_cli(argv) == 0
    assert run_cli(argv + ["--strict"]) == 3


def test_check_dependence(tmp_path):
    argv = ["check-dependence", *SYNTH, "--m", "4", "--tau", "0.01", "--delta", "0.001", "--output", str(tmp_path)]
    assert run_cli(argv) == 0
    verdict = json.loads((tmp_path / "report.jsonl").read_text())
    assert verdict["check"] == "dependence" and verdict["j0"] > 0


def test_synth_command(tmp_path):
    path = tmp_path / "s.pgm"
    assert run_cli(["synth", *SYNTH, "-o", str(path), "--pad"]) == 0
    assert read_pixels(path).shape == (18, 18)
    assert run_cli(["synth", "-o", str(path)]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "anisoflow.cli", "tau-star", "--e0", "0", "--c-star-value", "1", "--w1inf", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "0.0625"
    proc = subprocess.run([sys.executable, "-m", "anisoflow.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1
