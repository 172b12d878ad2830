import json
import pathlib

import pytest

from conformal_fault.cli import main, parse_alpha_grid
from conformal_fault.errors import InvalidParameterError
from conformal_fault.fileio import load_calibration, load_outcomes, load_scores


def run(argv, capsys=None):
    code = main(argv)
    if capsys is not None:
        return code, capsys.readouterr()
    return code


def simulate(tmp_path, name="scores.csv", extra=()):
    out = str(tmp_path / name)
    code = main(
        ["simulate", "--per-class", "40", "--iterations", "60", "--seed", "5", "--out", out]
        + list(extra)
    )
    assert code == 0
    return out


def test_parse_alpha_grid():
    assert parse_alpha_grid("0.1:0.9:0.1") == pytest.approx(
        [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    )
    assert parse_alpha_grid("0.25") == [0.25]
    assert parse_alpha_grid("0.2:0.3:0.05") == pytest.approx([0.2, 0.25, 0.3])
    with pytest.raises(InvalidParameterError):
        parse_alpha_grid("0.5:0.1:0.1")
    with pytest.raises(InvalidParameterError):
        parse_alpha_grid("0:0.9:0.1")
    with pytest.raises(InvalidParameterError):
        parse_alpha_grid("a:b:c")
    with pytest.raises(InvalidParameterError):
        parse_alpha_grid("0.1:0.9")


def test_simulate_writes_pool(tmp_path):
    out = simulate(tmp_path)
    labels, records = load_scores(out)
    assert labels == ["Normal", "IR", "OR", "Ball"]
    assert len(records) == 4 * 16  # 40 per class, 60/40 split -> 16 pool rows each
    assert all(r.true_label is not None for r in records)


def test_simulate_split_arithmetic(tmp_path):
    out = str(tmp_path / "example.csv")
    assert main(["simulate", "--per-class", "150", "--seed", "1", "--out", out]) == 0
    _, records = load_scores(out)
    assert len(records) == 240  # 150/class, 60/40 train/pool, 4 classes


def test_simulate_default_pool(tmp_path):
    out = str(tmp_path / "default.csv")
    assert main(["simulate", "--seed", "1", "--out", out]) == 0
    _, records = load_scores(out)
    assert len(records) == 600  # defaults leave a 150-per-class pool
    for name in ("Normal", "IR", "OR", "Ball"):
        assert sum(1 for r in records if r.true_label == name) == 150


def test_simulate_deterministic(tmp_path):
    a = simulate(tmp_path, "a.csv")
    b = simulate(tmp_path, "b.csv")
    assert pathlib.Path(a).read_bytes() == pathlib.Path(b).read_bytes()


def test_calibrate_artifact(tmp_path):
    scores = simulate(tmp_path)
    artifact = str(tmp_path / "cal.json")
    code = main(["calibrate", scores, "--normal-labels", "Normal", "--out", artifact])
    assert code == 0
    model, space = load_calibration(artifact)
    assert model.n == 4 * 16
    assert space.normal_labels == ("Normal",)
    # rerun is byte-identical
    artifact2 = str(tmp_path / "cal2.json")
    main(["calibrate", scores, "--normal-labels", "Normal", "--out", artifact2])
    assert pathlib.Path(artifact).read_bytes() == pathlib.Path(artifact2).read_bytes()


def test_calibrate_rejects_unlabeled_row(tmp_path, capsys):
    scores = tmp_path / "scores.csv"
    scores.write_text(
        "sample_id,true_label,A,B\nx1,A,0.8,0.2\nx2,,0.5,0.5\n", encoding="utf-8"
    )
    code, captured = run(
        ["calibrate", str(scores), "--normal-labels", "A", "--out", str(tmp_path / "c.json")],
        capsys,
    )
    assert code == 1
    assert "MissingLabel" in captured.err
    assert "x2" in captured.err


def test_predict_outcomes(tmp_path):
    scores = simulate(tmp_path)
    artifact = str(tmp_path / "cal.json")
    main(["calibrate", scores, "--normal-labels", "Normal", "--out", artifact])
    out = str(tmp_path / "outcomes.csv")
    code = main(["predict", artifact, scores, "--alpha", "0.2", "--out", out])
    assert code == 0
    outcomes = load_outcomes(out)
    assert len(outcomes) == 64
    assert all(o.alpha == 0.2 for o in outcomes)


def test_predict_label_space_mismatch(tmp_path, capsys):
    scores = simulate(tmp_path)
    artifact = str(tmp_path / "cal.json")
    main(["calibrate", scores, "--normal-labels", "Normal", "--out", artifact])
    # same labels, different order
    payload = json.loads(pathlib.Path(artifact).read_text())
    payload["labels"] = payload["labels"][::-1]
    pathlib.Path(artifact).write_text(json.dumps(payload))
    code, captured = run(
        ["predict", artifact, scores, "--alpha", "0.2", "--out", str(tmp_path / "o.csv")],
        capsys,
    )
    assert code == 1
    assert "LabelSpaceMismatch" in captured.err


def test_predict_alpha_extremes(tmp_path):
    scores = simulate(tmp_path)
    artifact = str(tmp_path / "cal.json")
    main(["calibrate", scores, "--normal-labels", "Normal", "--out", artifact])
    near_one = str(tmp_path / "hi.csv")
    main(["predict", artifact, scores, "--alpha", "0.9999", "--out", near_one])
    hi = load_outcomes(near_one)
    assert sum(1 for o in hi if not o.set_members) >= 0.9 * len(hi)
    # smallest alpha the 6-decimal outcome format can carry; still below 1/(N+1)
    near_zero = str(tmp_path / "lo.csv")
    main(["predict", artifact, scores, "--alpha", "1e-6", "--out", near_zero])
    lo = load_outcomes(near_zero)
    # full sets always contain fault labels, so every decision raises the alarm
    assert all(len(o.set_members) == 4 for o in lo)
    assert all(o.decision.value == "Faulty" for o in lo)


def test_evaluate_single_alpha(tmp_path):
    scores = simulate(tmp_path)
    prefix = str(tmp_path / "eval")
    code = main(
        [
            "evaluate", scores, "--normal-labels", "Normal", "--alpha", "0.2",
            "--trials", "5", "--seed", "3", "--jobs", "1", "--out", prefix,
        ]
    )
    assert code == 0
    trials = pathlib.Path(prefix + "_trials.csv").read_text().splitlines()
    aggregate = pathlib.Path(prefix + "_aggregate.csv").read_text().splitlines()
    assert len(trials) == 1 + 5
    assert len(aggregate) == 1 + 1


def test_evaluate_single_trial_sd_zero(tmp_path):
    scores = simulate(tmp_path)
    prefix = str(tmp_path / "one")
    main(
        [
            "evaluate", scores, "--normal-labels", "Normal", "--alpha", "0.3",
            "--trials", "1", "--seed", "3", "--jobs", "1", "--out", prefix,
        ]
    )
    aggregate = pathlib.Path(prefix + "_aggregate.csv").read_text().splitlines()
    _, _, ecr_sd, _, apss_sd = aggregate[1].split(",")
    assert ecr_sd == "0.000000"
    assert apss_sd == "0.000000"


def test_sweep_default_grid(tmp_path):
    scores = simulate(tmp_path)
    prefix = str(tmp_path / "sweep")
    code = main(
        [
            "sweep", scores, "--normal-labels", "Normal",
            "--trials", "3", "--seed", "4", "--jobs", "1", "--out", prefix,
        ]
    )
    assert code == 0
    aggregate = pathlib.Path(prefix + "_aggregate.csv").read_text().splitlines()
    assert len(aggregate) == 1 + 9


def test_sweep_deterministic_bytes(tmp_path):
    scores = simulate(tmp_path)
    args = [
        "sweep", scores, "--normal-labels", "Normal", "--alphas", "0.2:0.8:0.3",
        "--trials", "4", "--seed", "12", "--jobs", "1",
    ]
    main(args + ["--out", str(tmp_path / "r1")])
    main(args + ["--out", str(tmp_path / "r2")])
    for suffix in ("_trials.csv", "_aggregate.csv"):
        a = pathlib.Path(str(tmp_path / "r1") + suffix).read_bytes()
        b = pathlib.Path(str(tmp_path / "r2") + suffix).read_bytes()
        assert a == b


def test_cli_reports_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,true_label,A,B\nx,A,0.5\n", encoding="utf-8")
    code, captured = run(
        ["calibrate", str(bad), "--normal-labels", "A", "--out", str(tmp_path / "c.json")],
        capsys,
    )
    assert code == 1
    assert "ParseError" in captured.err
    assert "line 2" in captured.err


def test_cli_rejects_bad_grid(tmp_path, capsys):
    scores = simulate(tmp_path)
    code, captured = run(
        [
            "sweep", scores, "--normal-labels", "Normal", "--alphas", "0.9:0.1:0.1",
            "--trials", "2", "--jobs", "1", "--out", str(tmp_path / "x"),
        ],
        capsys,
    )
    assert code == 1
    assert "InvalidParameter" in captured.err


def test_separation_zero_still_runs(tmp_path):
    out = simulate(tmp_path, "flat.csv", extra=["--separation", "0.0"])
    _, records = load_scores(out)
    assert len(records) == 64


def test_calib_ratio_changes_split(tmp_path):
    scores = simulate(tmp_path)
    prefix = str(tmp_path / "ratio")
    code = main(
        [
            "evaluate", scores, "--normal-labels", "Normal", "--alpha", "0.2",
            "--trials", "2", "--seed", "3", "--calib-ratio", "0.25",
            "--jobs", "1", "--out", prefix,
        ]
    )
    assert code == 0
    rows = pathlib.Path(prefix + "_trials.csv").read_text().splitlines()[1:]
    # 64-row pool at ratio 0.25: 16 calibration, 48 evaluation
    assert all(row.split(",")[-1] == "48" for row in rows)
