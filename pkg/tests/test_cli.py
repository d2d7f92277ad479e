"""CLI command behavior: artifacts, determinism, exit codes."""

import filecmp
import json

import pytest

from trialign.cli import main


def _dir_bytes(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def _synth(out, clips=24, seed=0, extra=()):
    return main(["synth", "--out", str(out), "--clips", str(clips),
                 "--shared-dim", "4", "--audio-dim", "2", "--visual-dim", "2",
                 "--noise", "0.1", "--rows", "2", "--seed", str(seed),
                 *extra])


class TestSynth:
    def test_writes_dataset(self, tmp_path):
        assert _synth(tmp_path / "ds") == 0
        for name in ("meta.json", "manifest.jsonl", "embeddings.f32"):
            assert (tmp_path / "ds" / name).exists()

    def test_byte_identical_for_same_seed(self, tmp_path):
        _synth(tmp_path / "a", seed=3)
        _synth(tmp_path / "b", seed=3)
        assert _dir_bytes(tmp_path / "a") == _dir_bytes(tmp_path / "b")

    def test_seed_changes_bytes(self, tmp_path):
        _synth(tmp_path / "a", seed=3)
        _synth(tmp_path / "b", seed=4)
        assert _dir_bytes(tmp_path / "a") != _dir_bytes(tmp_path / "b")


class TestTrainEval:
    def test_full_cycle_artifacts(self, tmp_path, capsys):
        _synth(tmp_path / "ds")
        ckpt = tmp_path / "model.ckpt"
        code = main(["train", "--data", str(tmp_path / "ds"),
                     "--regime", "slava-av-3loss", "--out", str(ckpt),
                     "--epochs", "2", "--batch-size", "8", "--seed", "0"])
        assert code == 0
        assert ckpt.exists()
        assert (tmp_path / "model.ckpt.losses.csv").exists()
        out = capsys.readouterr().out
        assert "resolved config" in out and '"epochs": 2' in out

        report_path = tmp_path / "report.json"
        code = main(["eval", "--data", str(tmp_path / "ds"),
                     "--ckpt", str(ckpt), "--k", "5",
                     "--out", str(report_path)])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["k"] == 5
        assert len(report["tasks"]) == 7
        table = capsys.readouterr().out
        assert "Based On" in table and "slava-av-3loss" in table

    def test_config_file_and_flag_precedence(self, tmp_path, capsys):
        _synth(tmp_path / "ds")
        config = tmp_path / "run.cfg"
        config.write_text(
            "epochs = 3\nlr = 1e-4\n# comment line\nbatch_size = 8\n")
        ckpt = tmp_path / "m.ckpt"
        code = main(["train", "--data", str(tmp_path / "ds"),
                     "--regime", "audioclip", "--out", str(ckpt),
                     "--config", str(config), "--epochs", "1"])
        assert code == 0
        out = capsys.readouterr().out
        resolved = json.loads(out.split("resolved config: ")[1].split("\n")[0])
        assert resolved["epochs"] == 1       # flag beats file
        assert resolved["lr"] == 1e-4        # file beats default
        assert resolved["batch_size"] == 8

    def test_bad_config_key_exits_one(self, tmp_path, capsys):
        _synth(tmp_path / "ds")
        config = tmp_path / "bad.cfg"
        config.write_text("learning_rate = 1\n")
        code = main(["train", "--data", str(tmp_path / "ds"),
                     "--regime", "audioclip", "--out", str(tmp_path / "m"),
                     "--config", str(config)])
        assert code == 1
        assert "learning_rate" in capsys.readouterr().err

    def test_missing_dataset_exits_one(self, tmp_path, capsys):
        code = main(["train", "--data", str(tmp_path / "nope"),
                     "--regime", "audioclip", "--out", str(tmp_path / "m")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_train_determinism_byte_identical_checkpoints(self, tmp_path):
        _synth(tmp_path / "ds")
        for name in ("a", "b"):
            main(["train", "--data", str(tmp_path / "ds"),
                  "--regime", "slava-mixed", "--out",
                  str(tmp_path / f"{name}.ckpt"),
                  "--epochs", "2", "--batch-size", "8"])
        assert filecmp.cmp(tmp_path / "a.ckpt", tmp_path / "b.ckpt",
                           shallow=False)

    def test_input_dataset_not_mutated(self, tmp_path):
        _synth(tmp_path / "ds")
        before = _dir_bytes(tmp_path / "ds")
        main(["train", "--data", str(tmp_path / "ds"), "--regime",
              "two-stage-frozen", "--out", str(tmp_path / "m.ckpt"),
              "--epochs", "1", "--batch-size", "8"])
        main(["eval", "--data", str(tmp_path / "ds"),
              "--ckpt", str(tmp_path / "m.ckpt"),
              "--out", str(tmp_path / "r.json")])
        assert _dir_bytes(tmp_path / "ds") == before


class TestGradcheckCommand:
    def test_reports_and_passes(self, capsys):
        code = main(["gradcheck", "--trials", "10", "--seed", "0"])
        out = capsys.readouterr().out
        assert code == 0
        assert "max relative error" in out
        assert "PASS" in out


class TestCompare:
    def test_six_checkpoints_give_seven_by_six_table(self, tmp_path, capsys):
        regimes = ["two-stage-frozen", "two-stage-trainable", "audioclip",
                   "slava-mixed", "slava-av-2loss", "slava-av-3loss"]
        _synth(tmp_path / "ds")
        ckpts = []
        for regime in regimes:
            ckpt = tmp_path / f"{regime}.ckpt"
            main(["train", "--data", str(tmp_path / "ds"), "--regime", regime,
                  "--out", str(ckpt), "--epochs", "1", "--batch-size", "8"])
            ckpts.append(str(ckpt))
        out_path = tmp_path / "cmp.json"
        code = main(["compare", "--data", str(tmp_path / "ds"),
                     "--ckpt", *ckpts, "--out", str(out_path)])
        assert code == 0
        merged = json.loads(out_path.read_text())
        assert merged["models"] == regimes
        assert len(merged["rows"]) == 7
        for row in merged["rows"]:
            assert len(row["recalls"]) == 6
        table = capsys.readouterr().out
        header = [line for line in table.splitlines()
                  if "Retrieve" in line][0]
        for regime in regimes:
            assert regime in header


class TestUsageErrors:
    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["synth"])
        assert exc.value.code == 2

    def test_unknown_regime_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--data", "x", "--regime", "bogus", "--out", "y"])
        assert exc.value.code == 2
