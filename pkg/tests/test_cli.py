"""End-to-end subcommand behavior through the argv entry point."""

import numpy as np
import pytest

from batchscore.cli import main


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestFilterCommand:
    def test_stdout_table_has_dc_row(self, capsys):
        assert main(["filter", "--set", "alpha=0.7", "--set", "filter.n_points=5"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0] == "omega,magnitude"
        first = out[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == pytest.approx(1.0, abs=1e-12)
        last = out[-1].split(",")
        assert float(last[0]) == pytest.approx(np.pi)
        assert float(last[1]) == pytest.approx(0.3 / 1.7, abs=1e-12)

    def test_file_output(self, tmp_path, capsys):
        out = tmp_path / "resp.csv"
        assert main(["filter", "--set", f"filter.out={out}"]) == 0
        capsys.readouterr()
        header, rows = read_csv(out)
        assert header == ["omega", "magnitude"]
        assert len(rows) == 181

    def test_alpha_out_of_range_is_config_error(self, capsys):
        assert main(["filter", "--set", "alpha=1.5"]) == 2
        assert "error:" in capsys.readouterr().err


class TestTrainCommand:
    def test_writes_metrics_row(self, tmp_path, capsys):
        metrics = tmp_path / "metrics.csv"
        rc = main(
            [
                "train",
                "--set", "dataset.n_samples=300",
                "--set", "train.epochs=4",
                "--set", f"io.metrics_out={metrics}",
            ]
        )
        assert rc == 0
        capsys.readouterr()
        header, rows = read_csv(metrics)
        assert header == ["final_train_acc", "final_test_acc", "pruned_percent", "wall_time", "epochs"]
        assert len(rows) == 1
        assert 0.0 <= float(rows[0][1]) <= 1.0
        assert rows[0][4] == "4"

    def test_instrumented_run_writes_log(self, tmp_path, capsys):
        metrics = tmp_path / "metrics.csv"
        log = tmp_path / "loss.ndjson"
        rc = main(
            [
                "train",
                "--set", "dataset.n_samples=200",
                "--set", "train.epochs=2",
                "--set", "train.instrument_per_sample=true",
                "--set", "policy.kind=none",
                "--set", f"io.metrics_out={metrics}",
                "--set", f"io.loss_log={log}",
            ]
        )
        assert rc == 0
        capsys.readouterr()
        assert log.exists()
        assert len(log.read_text().strip().splitlines()) == 2 * (160 // 32)

    def test_config_file_driven_run(self, tmp_path, capsys):
        cfg = tmp_path / "desk.cfg"
        cfg.write_text(
            "dataset.n_samples = 200\n"
            "train.epochs = 2\n"
            f"io.metrics_out = {tmp_path / 'm.csv'}\n"
        )
        assert main(["train", "--config", str(cfg)]) == 0
        capsys.readouterr()
        assert (tmp_path / "m.csv").exists()


class TestReplayCommand:
    def test_round_trip_against_trainer(self, tmp_path, capsys):
        metrics = tmp_path / "metrics.csv"
        log = tmp_path / "loss.ndjson"
        scores = tmp_path / "scores.csv"
        decisions = tmp_path / "decisions.csv"
        common = [
            "--set", "dataset.n_samples=300",
            "--set", "train.epochs=3",
            "--set", "train.seed=5",
            "--set", "dataset.seed=5",
        ]
        assert main(
            ["train", *common,
             "--set", "train.instrument_per_sample=true",
             "--set", f"io.metrics_out={metrics}",
             "--set", f"io.loss_log={log}"]
        ) == 0
        rc = main(
            ["replay", *common,
             "--set", f"replay.log={log}",
             "--set", "replay.n_samples=240",
             "--set", f"replay.scores_out={scores}",
             "--set", f"replay.decisions_out={decisions}"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "replayed" in out
        header, rows = read_csv(scores)
        assert header == ["id", "score", "update_count"]
        assert len(rows) == 240
        for _, score, count in rows:
            float(score)  # plain decimal literals, parseable by any host
            assert "(" not in score
            int(count)
        header, rows = read_csv(decisions)
        assert header == ["id", "kept", "rescale"]
        assert {r[1] for r in rows} <= {"0", "1"}
        assert all("(" not in r[2] and float(r[2]) >= 1.0 for r in rows)

    def test_missing_log_config_is_usage_error(self, capsys):
        assert main(["replay"]) == 2
        assert "replay.log" in capsys.readouterr().err

    def test_nonexistent_log_is_runtime_error(self, capsys):
        assert main(["replay", "--set", "replay.log=/nonexistent/x.ndjson"]) == 1
        assert "error:" in capsys.readouterr().err


class TestPsdCommand:
    def test_spectra_and_summary(self, tmp_path, capsys):
        log = tmp_path / "loss.ndjson"
        sig = tmp_path / "sig.csv"
        noi = tmp_path / "noi.csv"
        assert main(
            ["train",
             "--set", "dataset.n_samples=200",
             "--set", "train.epochs=40",
             "--set", "policy.kind=none",
             "--set", "train.instrument_per_sample=true",
             "--set", f"io.metrics_out={tmp_path / 'm.csv'}",
             "--set", f"io.loss_log={log}"]
        ) == 0
        capsys.readouterr()
        rc = main(
            ["psd",
             "--set", f"psd.log={log}",
             "--set", "welch.segment_len=16",
             "--set", "welch.overlap=8",
             "--set", f"psd.signal_out={sig}",
             "--set", f"psd.noise_out={noi}"]
        )
        assert rc == 0
        summary = capsys.readouterr().out
        assert "noise_dominant=" in summary
        header, rows = read_csv(sig)
        assert header == ["freq", "power"]
        assert len(rows) == 9  # 16//2 + 1 bins
        header2, rows2 = read_csv(noi)
        assert [r[0] for r in rows] == [r[0] for r in rows2]


class TestSweepCommand:
    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        rc = main(
            ["sweep-alpha",
             "--set", "dataset.n_samples=200",
             "--set", "train.epochs=3",
             "--set", "sweep.alphas=0.5,1.0",
             "--set", f"sweep.out={out}"]
        )
        assert rc == 0
        capsys.readouterr()
        header, rows = read_csv(out)
        assert header == ["alpha", "final_test_acc", "pruned_percent"]
        assert [float(r[0]) for r in rows] == [0.5, 1.0]


class TestDispatch:
    def test_unknown_subcommand_exits_two(self, capsys):
        assert main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_no_subcommand_exits_two(self, capsys):
        assert main([]) == 2
        assert "subcommand" in capsys.readouterr().err

    def test_unknown_key_exits_two(self, capsys):
        assert main(["train", "--set", "no.such.key=1"]) == 2
        assert "unknown key" in capsys.readouterr().err
