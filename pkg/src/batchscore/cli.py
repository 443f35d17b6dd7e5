"""Command-line entry points.

Subcommands: ``train``, ``sweep-alpha``, ``replay``, ``psd``, ``filter``.
Each takes ``--config <path>`` plus repeatable ``--set key=value`` overrides.
Exit status 0 on success, 2 for usage/config errors, 1 for runtime failures,
always with a one-line ``error: ...`` diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import TextIO

from .config import ConfigError, RunConfig
from .filters import FilterSpec, decompose_all, frequency_response_grid
from .models import make_synthetic_dataset
from .runlog import parse_log, replay, write_decisions_csv, write_log, write_scores_csv
from .spectral import PsdEstimate, mean_psd, separation_report
from .trainer import RunMetrics, alpha_sweep, run_experiment

SUBCOMMANDS = ("train", "sweep-alpha", "replay", "psd", "filter")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchscore",
        description="Score training samples from mean batch losses and prune dynamically.",
    )
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name, help_text in (
        ("train", "run one training experiment and write a metrics CSV row"),
        ("sweep-alpha", "train once per decay factor and tabulate accuracy/pruned %"),
        ("replay", "rebuild scores from a batch-loss log and emit decisions"),
        ("psd", "Welch signal/noise spectra from an instrumented log"),
        ("filter", "tabulate the EMA filter's frequency response magnitude"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="flat key = value config file")
        p.add_argument(
            "--set",
            dest="sets",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
    return parser


def _open_out(path: str, stack: ExitStack) -> TextIO:
    if path == "-":
        return sys.stdout
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    return stack.enter_context(open(target, "w", encoding="utf-8"))


def _write_metrics_csv(metrics: RunMetrics, out: TextIO) -> None:
    out.write("final_train_acc,final_test_acc,pruned_percent,wall_time,epochs\n")
    out.write(
        f"{metrics.final_train_acc!r},{metrics.final_test_acc!r},"
        f"{metrics.pruned_percent!r},{metrics.wall_time!r},{metrics.loss_curve.size}\n"
    )


def _write_psd_csv(est: PsdEstimate, out: TextIO) -> None:
    out.write("freq,power\n")
    for f, p in zip(est.freqs, est.power):
        out.write(f"{float(f)!r},{float(p)!r}\n")


def _cmd_train(cfg: RunConfig) -> int:
    dataset = make_synthetic_dataset(cfg.dataset_spec())
    metrics = run_experiment(dataset, cfg.model_spec(), cfg.train_config())
    with ExitStack() as stack:
        _write_metrics_csv(metrics, _open_out(cfg["io.metrics_out"], stack))
    print(f"metrics written to {cfg['io.metrics_out']}")
    if metrics.loss_log is not None:
        log_path = Path(cfg["io.loss_log"])
        log_path.parent.mkdir(parents=True, exist_ok=True)
        write_log(metrics.loss_log, log_path)
        print(f"loss log written to {log_path}")
    return 0


def _cmd_sweep_alpha(cfg: RunConfig) -> int:
    dataset = make_synthetic_dataset(cfg.dataset_spec())
    rows = alpha_sweep(dataset, cfg.model_spec(), cfg.train_config(), list(cfg["sweep.alphas"]))
    with ExitStack() as stack:
        out = _open_out(cfg["sweep.out"], stack)
        out.write("alpha,final_test_acc,pruned_percent\n")
        for row in rows:
            out.write(f"{row.alpha!r},{row.final_test_acc!r},{row.pruned_percent!r}\n")
    print(f"sweep written to {cfg['sweep.out']}")
    return 0


def _cmd_replay(cfg: RunConfig) -> int:
    log_path = cfg["replay.log"]
    if not log_path:
        raise ConfigError("replay.log must point at a batch-loss log")
    n_samples = cfg["replay.n_samples"] or None
    result = replay(
        parse_log(log_path),
        cfg.ema_config(),
        cfg.policy(),
        n_samples=n_samples,
        schedule=cfg.schedule(cfg["train.epochs"]),
        cycle=cfg["replay.cycle"],
        seed=cfg["replay.seed"],
    )
    with ExitStack() as stack:
        write_scores_csv(result.table, _open_out(cfg["replay.scores_out"], stack))
    with ExitStack() as stack:
        write_decisions_csv(result.active, _open_out(cfg["replay.decisions_out"], stack))
    r = result.report
    print(
        f"replayed {r.n_records} records over {r.n_samples} samples: "
        f"kept={r.kept_count} pruned={r.pruned_count} unscored={r.unscored_count}"
    )
    return 0


def _cmd_psd(cfg: RunConfig) -> int:
    log_path = cfg["psd.log"]
    if not log_path:
        raise ConfigError("psd.log must point at an instrumented loss log")
    records = list(parse_log(log_path))
    if not records:
        raise ValueError(f"{log_path} holds no records")
    n_samples = max(int(rec.indices.max()) for rec in records) + 1
    signal_seqs, noise_seqs = decompose_all(records, n_samples)
    welch_cfg = cfg.welch_config()
    signal = mean_psd(signal_seqs, welch_cfg)
    noise = mean_psd(noise_seqs, welch_cfg)
    report = separation_report(signal.estimate, noise.estimate)
    with ExitStack() as stack:
        _write_psd_csv(signal.estimate, _open_out(cfg["psd.signal_out"], stack))
    with ExitStack() as stack:
        _write_psd_csv(noise.estimate, _open_out(cfg["psd.noise_out"], stack))
    print(
        f"samples_used={signal.n_used} skipped={signal.n_skipped} "
        f"noise_dominant={str(report.all_bins_noise_dominant).lower()} "
        f"high_freq_ratio={report.high_freq_ratio:.6g} low_freq_ratio={report.low_freq_ratio:.6g}"
    )
    return 0


def _cmd_filter(cfg: RunConfig) -> int:
    spec = FilterSpec(cfg["alpha"]) if 0 < cfg["alpha"] < 1 else None
    if spec is None:
        raise ConfigError(f"alpha must lie in (0, 1) for the response table, got {cfg['alpha']}")
    omegas, mags = frequency_response_grid(spec, cfg["filter.n_points"])
    with ExitStack() as stack:
        out = _open_out(cfg["filter.out"], stack)
        out.write("omega,magnitude\n")
        for w, m in zip(omegas, mags):
            out.write(f"{float(w)!r},{float(m)!r}\n")
    if cfg["filter.out"] != "-":
        print(f"filter response written to {cfg['filter.out']}")
    return 0


_HANDLERS = {
    "train": _cmd_train,
    "sweep-alpha": _cmd_sweep_alpha,
    "replay": _cmd_replay,
    "psd": _cmd_psd,
    "filter": _cmd_filter,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; normalize the exit code
        return int(exc.code or 0) and 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig.resolve(args.config, args.sets)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
