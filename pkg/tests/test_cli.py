import json

import pytest

from hdemg.am import load_model
from hdemg.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main

SMALL = ["--fs", "250", "--channels", "16", "--noise", "4.0"]
ENC = ["--dim", "256", "--seed", "3"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "trials"
    assert main(["synth", "--out", str(out), *SMALL]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def models(dataset, tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    paths = {e: d / f"{e}.hdam" for e in ("low", "high")}
    for e, p in paths.items():
        rc = main(
            ["train", "--data", str(dataset), "--model", str(p), "--context", e, *ENC]
        )
        assert rc == EXIT_OK
    return paths


class TestSynth:
    def test_writes_full_grid(self, dataset):
        assert len(list(dataset.rglob("*.emg"))) == 135

    def test_deterministic(self, dataset, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path), *SMALL]) == EXIT_OK
        rel = "subject1/fist_high_3.emg"
        assert (tmp_path / rel).read_bytes() == (dataset / rel).read_bytes()


class TestTrain:
    def test_gesture_model(self, models):
        model = load_model(models["low"])
        assert len(model.prototypes) == 9
        assert model.config.dim == 256

    def test_gesture_effort_model(self, dataset, tmp_path):
        out = tmp_path / "joint.hdam"
        rc = main(
            ["train", "--data", str(dataset), "--model", str(out),
             "--mode", "gesture+effort", *ENC]
        )
        assert rc == EXIT_OK
        assert len(load_model(out).prototypes) == 27

    def test_missing_data_dir(self, tmp_path):
        rc = main(
            ["train", "--data", str(tmp_path / "nope"), "--model", str(tmp_path / "m")]
        )
        assert rc == EXIT_DATA

    def test_bad_dim(self, dataset, tmp_path):
        rc = main(
            ["train", "--data", str(dataset), "--model", str(tmp_path / "m"),
             "--dim", "255"]
        )
        assert rc == EXIT_CONFIG


class TestMerge:
    def test_merge_and_classify(self, dataset, models, tmp_path, capsys):
        merged = tmp_path / "merged.hdam"
        rc = main(
            ["merge", str(models["low"]), str(models["high"]),
             "--out", str(merged), "--seed", "3"]
        )
        assert rc == EXIT_OK
        capsys.readouterr()
        rc = main(["classify", "--model", str(merged), "--data", str(dataset)])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        last = out.strip().splitlines()[-1]
        correct, total = last.split()[0].split("/")
        assert int(total) == 135
        assert int(correct) / int(total) > 0.5

    def test_merge_incompatible_models(self, dataset, models, tmp_path):
        other = tmp_path / "other.hdam"
        rc = main(
            ["train", "--data", str(dataset), "--model", str(other),
             "--context", "high", "--dim", "256", "--seed", "4"]
        )
        assert rc == EXIT_OK
        rc = main(["merge", str(models["low"]), str(other), "--out", str(tmp_path / "m")])
        assert rc == EXIT_CONFIG


class TestClassify:
    def test_single_file(self, dataset, models, capsys):
        f = dataset / "subject1" / "fist_high_3.emg"
        rc = main(["classify", "--model", str(models["high"]), "--data", str(f)])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert "fist_high_3.emg" in out
        assert "1/1" in out

    def test_missing_model(self, dataset, tmp_path):
        rc = main(["classify", "--model", str(tmp_path / "no.hdam"), "--data", str(dataset)])
        assert rc == EXIT_DATA

    def test_corrupt_model(self, dataset, tmp_path):
        bad = tmp_path / "bad.hdam"
        bad.write_bytes(b"not a model")
        rc = main(["classify", "--model", str(bad), "--data", str(dataset)])
        assert rc == EXIT_DATA


class TestEval:
    def test_ctx_pair_report(self, dataset, tmp_path, capsys):
        out = tmp_path / "report.jsonl"
        rc = main(
            ["eval", "ctx-pair", "--data", str(dataset), "--pair", "low,high",
             "--out", str(out), *ENC]
        )
        assert rc == EXIT_OK
        assert "merged_model_on_high" in capsys.readouterr().out
        record = json.loads(out.read_text())
        assert record["experiment"] == "context-pair[low,high]"

    def test_machine_report_byte_identical(self, dataset, tmp_path, capsys):
        outs = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for o in outs:
            rc = main(
                ["eval", "effort-classes", "--data", str(dataset), "--out", str(o), *ENC]
            )
            assert rc == EXIT_OK
        capsys.readouterr()
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_all_ctx(self, dataset, capsys):
        rc = main(["eval", "all-ctx", "--data", str(dataset), *ENC])
        assert rc == EXIT_OK
        assert "all_model_on_medium" in capsys.readouterr().out

    def test_bad_pair(self, dataset, capsys):
        rc = main(["eval", "ctx-pair", "--data", str(dataset), "--pair", "low", *ENC])
        assert rc == EXIT_CONFIG

    def test_missing_data(self, tmp_path):
        rc = main(["eval", "all-ctx", "--data", str(tmp_path / "nope"), *ENC])
        assert rc == EXIT_DATA


class TestReport:
    def test_render_machine_report(self, dataset, tmp_path, capsys):
        out = tmp_path / "r.jsonl"
        assert main(["eval", "all-ctx", "--data", str(dataset), "--out", str(out), *ENC]) == EXIT_OK
        human_direct = capsys.readouterr().out
        rc = main(["report", "--in", str(out)])
        assert rc == EXIT_OK
        rendered = capsys.readouterr().out
        # machine format sorts JSON keys, so row order may differ; content must not
        direct_rows = {l for l in human_direct.splitlines() if l.startswith("all_model")}
        rendered_rows = {l for l in rendered.splitlines() if l.startswith("all_model")}
        assert direct_rows == rendered_rows
        assert "experiment: all-contexts  seed: 3" in rendered

    def test_missing_file(self, tmp_path):
        assert main(["report", "--in", str(tmp_path / "nope.jsonl")]) == EXIT_DATA
