"""Flat ``key = value`` run configuration with documented defaults.

Dotted keys namespace the subsystems (``ema.alpha``, ``policy.prune_prob``,
``welch.segment_len``, ...).  Precedence is defaults < config file < ``--set``
overrides; unknown keys are rejected wherever they appear.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .models import DatasetSpec, ModelSpec
from .pruning import CycleSchedule, NoPrune, PrunePolicy, ThresholdSoftPrune, WindowSelect
from .scores import EmaConfig
from .spectral import WelchConfig
from .trainer import TrainConfig


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(p) for p in parts)


def _choice(*allowed: str) -> Callable[[str], str]:
    def convert(raw: str) -> str:
        value = raw.strip()
        if value not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}; got {raw!r}")
        return value

    return convert


@dataclass(frozen=True)
class Option:
    default: Any
    convert: Callable[[str], Any]
    help: str


OPTIONS: dict[str, Option] = {
    # synthetic dataset
    "dataset.n_samples": Option(2000, int, "total samples before the 80/20 split"),
    "dataset.n_features": Option(20, int, "feature dimension"),
    "dataset.n_classes": Option(5, int, "number of Gaussian clusters / classes"),
    "dataset.cluster_spread": Option(1.0, float, "stddev of each cluster around its center"),
    "dataset.label_noise": Option(0.15, float, "fraction of train labels re-drawn among other classes"),
    "dataset.seed": Option(0, int, "dataset generation seed"),
    # model
    "model.arch": Option("softmax", _choice("softmax", "mlp"), "classifier architecture"),
    "model.hidden": Option(32, int, "hidden width for the mlp arch"),
    "model.init_seed": Option(0, int, "parameter initialization seed"),
    # training loop
    "train.epochs": Option(50, int, "training epochs"),
    "train.batch_size": Option(32, int, "minibatch size"),
    "train.learning_rate": Option(0.1, float, "SGD learning rate"),
    "train.seed": Option(0, int, "selection/shuffle seed for the run"),
    "train.instrument_per_sample": Option(False, _parse_bool, "log per-sample losses (oracle mode)"),
    # score EMA
    "ema.alpha": Option(0.7, float, "EMA decay factor in [0, 1]"),
    "ema.init_policy": Option(
        "first-observed", _choice("first-observed", "fixed"), "score initialization policy"
    ),
    "ema.init_value": Option(0.0, float, "shared initial score for the fixed policy"),
    # pruning policy
    "policy.kind": Option("threshold", _choice("none", "threshold", "window"), "pruning policy family"),
    "policy.prune_prob": Option(0.6, float, "skip probability for below-mean scorers"),
    "policy.rescale": Option(True, _parse_bool, "rescale kept below-mean samples by 1/(1-prune_prob)"),
    "policy.anneal_tail": Option(0.125, float, "final epoch fraction trained without pruning"),
    "policy.keep_fraction": Option(0.7, float, "kept fraction for the window policy"),
    "policy.progress_mode": Option(
        "easy-to-hard", _choice("easy-to-hard", "static"), "window slide mode across cycles"
    ),
    "schedule.cycle_len_epochs": Option(1, int, "epochs per pruning cycle"),
    # Welch estimation
    "welch.segment_len": Option(64, int, "Welch segment length"),
    "welch.overlap": Option(32, int, "overlap between segments"),
    "welch.window": Option("hann", _choice("hann", "rectangular"), "segment window"),
    "welch.detrend": Option("mean", _choice("mean", "none"), "per-segment detrend"),
    # filter subcommand
    "alpha": Option(0.7, float, "decay factor for the filter response table"),
    "filter.n_points": Option(181, int, "grid points over [0, pi], endpoints included"),
    "filter.out": Option("-", str, "filter CSV path ('-' for stdout)"),
    # sweep subcommand
    "sweep.alphas": Option(
        (0.5, 0.6, 0.7, 0.8, 0.9, 1.0), _parse_float_list, "comma-separated decay factors to sweep"
    ),
    "sweep.out": Option("out/sweep.csv", str, "sweep CSV path"),
    # train outputs
    "io.metrics_out": Option("out/metrics.csv", str, "run metrics CSV path"),
    "io.loss_log": Option("out/loss_log.ndjson", str, "instrumented loss log path"),
    # replay subcommand
    "replay.log": Option("", str, "input batch-loss log (required)"),
    "replay.n_samples": Option(0, int, "table size; 0 infers max index + 1"),
    "replay.cycle": Option(0, int, "cycle index for the selection after replay"),
    "replay.seed": Option(0, int, "selection seed for the replayed decision"),
    "replay.scores_out": Option("out/scores.csv", str, "scores CSV path"),
    "replay.decisions_out": Option("out/decisions.csv", str, "decisions CSV path"),
    # psd subcommand
    "psd.log": Option("", str, "instrumented loss log to analyze (required)"),
    "psd.signal_out": Option("out/psd_signal.csv", str, "signal PSD CSV path"),
    "psd.noise_out": Option("out/psd_noise.csv", str, "noise PSD CSV path"),
}


class ConfigError(ValueError):
    """Bad key, bad value, or malformed config syntax."""


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment, blanks ignored."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if key not in OPTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            raw[key] = value
    return raw


def parse_set_overrides(sets: list[str]) -> dict[str, str]:
    raw: dict[str, str] = {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in OPTIONS:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = value
    return raw


class RunConfig:
    """Resolved, typed configuration values."""

    def __init__(self, values: dict[str, Any]):
        self._values = values

    @classmethod
    def resolve(cls, config_path: str | None = None, sets: list[str] | None = None) -> "RunConfig":
        values = {key: opt.default for key, opt in OPTIONS.items()}
        layers: list[dict[str, str]] = []
        if config_path:
            layers.append(parse_config_file(config_path))
        if sets:
            layers.append(parse_set_overrides(sets))
        for layer in layers:
            for key, raw in layer.items():
                try:
                    values[key] = OPTIONS[key].convert(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {exc}") from exc
        return cls(values)

    def __getitem__(self, key: str) -> Any:
        if key not in OPTIONS:
            raise ConfigError(f"unknown key {key!r}")
        return self._values[key]

    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            n_samples=self["dataset.n_samples"],
            n_features=self["dataset.n_features"],
            n_classes=self["dataset.n_classes"],
            cluster_spread=self["dataset.cluster_spread"],
            label_noise=self["dataset.label_noise"],
            seed=self["dataset.seed"],
        )

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            arch=self["model.arch"],
            hidden=self["model.hidden"],
            init_seed=self["model.init_seed"],
        )

    def ema_config(self) -> EmaConfig:
        return EmaConfig(
            alpha=self["ema.alpha"],
            init_policy=self["ema.init_policy"],
            init_value=self["ema.init_value"],
        )

    def policy(self) -> PrunePolicy:
        kind = self["policy.kind"]
        if kind == "none":
            return NoPrune()
        if kind == "threshold":
            return ThresholdSoftPrune(
                prune_prob=self["policy.prune_prob"],
                rescale=self["policy.rescale"],
                anneal_tail=self["policy.anneal_tail"],
            )
        return WindowSelect(
            keep_fraction=self["policy.keep_fraction"],
            progress_mode=self["policy.progress_mode"],
        )

    def schedule(self, total_epochs: int) -> CycleSchedule:
        return CycleSchedule(
            cycle_len_epochs=self["schedule.cycle_len_epochs"], total_epochs=total_epochs
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self["train.epochs"],
            batch_size=self["train.batch_size"],
            learning_rate=self["train.learning_rate"],
            ema=self.ema_config(),
            policy=self.policy(),
            cycle_len_epochs=self["schedule.cycle_len_epochs"],
            instrument_per_sample=self["train.instrument_per_sample"],
            seed=self["train.seed"],
        )

    def welch_config(self) -> WelchConfig:
        return WelchConfig(
            segment_len=self["welch.segment_len"],
            overlap=self["welch.overlap"],
            window=self["welch.window"],
            detrend=self["welch.detrend"],
        )
