"""Configuration-driven experiment runner.

Subcommands: ``train``, ``sweep-qubits``, ``sweep-ensemble``,
``compare``, ``impact``. Every emitted file carries the fully resolved
configuration as comment lines, and all randomness flows from the
configured seeds, so reruns reproduce every number bit-exactly.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, analysis, ansatz, classifier, data, ensemble, noise

SCHEMA_VERSION = 1

TASK_DIGITS = {"mnist2": (1, 9), "mnist4": (1, 4, 7, 9)}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "mnist2"
    images: str = ""
    labels: str = ""
    n_qubits: int = 4
    n_blocks: int = 3
    n_variants: int = 3
    variant_seed: int = 1
    n_train: int = 300
    n_test: int = 30
    split_seed: int = 7
    ensemble_sizes: tuple[int, ...] = (3, 5, 7, 9, 11)
    compare_size: int = 7
    machines: tuple[str, ...] = ("ibmq_lima", "ibmq_quito", "ibmq_belem")
    strategies: tuple[str, ...] = ("plurality", "average", "accuracy_weighted")
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    epochs: int = 60
    batch_size: int = 100
    learning_rate: float = 0.5
    train_restarts: int = 3
    train_seed: int = 0
    out: str = "results"

    def __post_init__(self):
        if self.task not in TASK_DIGITS:
            raise ConfigError(f"unknown task {self.task!r}")
        if not self.seeds:
            raise ConfigError("at least one seed required")
        for name in self.machines:
            try:
                noise.profile_by_name(name)
            except noise.NoiseConfigError as exc:
                raise ConfigError(str(exc)) from exc

    @property
    def digits(self) -> tuple[int, ...]:
        return TASK_DIGITS[self.task]

    @property
    def readout_qubits(self) -> tuple[int, ...]:
        return classifier.default_readout(len(self.digits))

    def profiles(self) -> tuple[noise.MachineProfile, ...]:
        return tuple(noise.profile_by_name(name) for name in self.machines)

    def out_dir(self) -> Path:
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def header_lines(self) -> list[str]:
        lines = [f"qvote {__version__} schema={SCHEMA_VERSION}"]
        lines += [f"{key}={value}" for key, value in asdict(self).items()]
        return lines


_INT_TUPLES = {"ensemble_sizes", "seeds"}
_STR_TUPLES = {"machines", "strategies"}
_INTS = {
    "n_qubits", "n_blocks", "n_variants", "variant_seed", "n_train", "n_test",
    "split_seed", "compare_size", "epochs", "batch_size", "train_restarts",
    "train_seed",
}
_FLOATS = {"learning_rate"}


def _coerce(key: str, value: str):
    value = value.strip()
    if key in _INT_TUPLES:
        return tuple(int(v) for v in value.split(",") if v.strip())
    if key in _STR_TUPLES:
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if key in _INTS:
        return int(value)
    if key in _FLOATS:
        return float(value)
    return value


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    """Config file keys, then CLI flags, over the defaults."""
    values: dict = {}
    if path:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            for key, value in parser[section].items():
                values[key] = _coerce(key, value)
    for key, value in overrides.items():
        if value is not None:
            values[key] = _coerce(key, value) if isinstance(value, str) else value
    unknown = set(values) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**values)


def _load_images(config: ExperimentConfig):
    if not config.images or not config.labels:
        raise ConfigError("images and labels paths are required")
    return data.load_idx(config.images, config.labels)


def build_split(config: ExperimentConfig, n_features: int | None = None,
                digits=None) -> data.DatasetSplit:
    return data.build_subset(
        _load_images(config),
        digits or config.digits,
        config.n_train,
        config.n_test,
        seed=config.split_seed,
        n_features=n_features or config.n_qubits,
    )


def model_path(config: ExperimentConfig, variant_id: int,
               n_qubits: int | None = None) -> Path:
    n_qubits = n_qubits or config.n_qubits
    return config.out_dir() / "models" / (
        f"{config.task}_q{n_qubits}_v{variant_id}.json"
    )


def train_variant(config: ExperimentConfig, variant: ansatz.Variant,
                  split: data.DatasetSplit) -> classifier.ClassifierModel:
    """Train one variant noiselessly; restarts pick the best train accuracy."""
    best = None
    for restart in range(max(1, config.train_restarts)):
        seed = config.train_seed + restart
        model = classifier.ClassifierModel(
            variant=variant,
            params=classifier.init_params(variant, seed),
            class_labels=config.digits,
            readout_qubits=config.readout_qubits,
        )
        trained = classifier.train(
            model, split.train,
            classifier.TrainConfig(
                epochs=config.epochs, batch_size=config.batch_size,
                learning_rate=config.learning_rate, seed=seed,
            ),
        )
        score = classifier.accuracy(trained, split.train)
        if best is None or score > best[0]:
            best = (score, trained)
    return best[1]


def _write_manifest(config: ExperimentConfig, command: str, outputs: list[str]):
    manifest = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": asdict(config),
        "outputs": outputs,
    }
    path = config.out_dir() / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2))


def _write_table(path: Path, config: ExperimentConfig, header_row, rows):
    with open(path, "w", newline="") as f:
        for line in config.header_lines():
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(header_row)
        writer.writerows(rows)


def effective_variants(config: ExperimentConfig, n_qubits: int | None = None) -> int:
    # a width cannot host more distinct chain layouts than orderings exist
    return min(config.n_variants, ansatz.n_chain_layouts(n_qubits or config.n_qubits))


def get_models(config: ExperimentConfig, n_qubits: int | None = None,
               n_variants: int | None = None,
               auto_train: bool = True) -> list[classifier.ClassifierModel]:
    """Load persisted per-variant models, training them if absent."""
    n_qubits = n_qubits or config.n_qubits
    wanted = n_variants or effective_variants(config, n_qubits)
    missing = [
        vid for vid in range(wanted)
        if not model_path(config, vid, n_qubits).exists()
    ]
    if missing:
        if not auto_train:
            raise ConfigError(f"missing trained models for variants {missing}")
        cmd_train(replace(config, n_qubits=n_qubits), quiet=False)
    return [
        classifier.load_model(model_path(config, vid, n_qubits))
        for vid in range(wanted)
    ]


def cmd_train(config: ExperimentConfig, quiet: bool = False) -> list[Path]:
    """Train every variant noiselessly and persist the models."""
    split = build_split(config)
    spec = ansatz.build_hea(config.n_qubits, config.n_blocks)
    variants = ansatz.generate_variants(
        spec, effective_variants(config), seed=config.variant_seed
    )
    (config.out_dir() / "models").mkdir(exist_ok=True)
    rows, outputs = [], []
    for variant in variants:
        trained = train_variant(config, variant, split)
        path = model_path(config, variant.variant_id)
        classifier.save_model(trained, path)
        outputs.append(str(path))
        test_acc = classifier.accuracy(trained, split.test)
        rows.append([variant.variant_id, repr(test_acc)])
        if not quiet:
            print(f"variant {variant.variant_id}: noiseless test accuracy {test_acc:.3f}")
    table = config.out_dir() / f"train_{config.task}.csv"
    _write_table(table, config, ["variant_id", "noiseless_test_accuracy"], rows)
    _write_manifest(config, "train", outputs + [str(table)])
    return [model_path(config, v.variant_id) for v in variants]


def single_machine_accuracy(model, profile, test_set, seed: int) -> float:
    """One classifier on one machine over a test set, seeded."""
    hits = 0
    for s_idx, (features, label) in enumerate(test_set):
        rng = noise.substream(seed, 0, 0, s_idx)
        config = noise.NoisyExecutionConfig(profile=profile, seed=rng)
        hits += classifier.predict(classifier.confidence(model, features, config)) == label
    return hits / len(test_set)


def cmd_sweep_qubits(config: ExperimentConfig, quiet: bool = False) -> Path:
    """Single-classifier noisy accuracy per machine and qubit count."""
    widths = (2, 4, 6)
    rows = []
    splits = {}
    models = {}
    for width in widths:
        splits[width] = build_split(config, n_features=width)
        models[width] = get_models(config, n_qubits=width, n_variants=1)[0]
    for profile in noise.load_profiles():
        row = [profile.name]
        for width in widths:
            if width > profile.n_qubits:
                row.extend(["n/a", "n/a"])
                continue
            accs = [
                single_machine_accuracy(
                    models[width], profile, splits[width].test, seed
                )
                for seed in config.seeds
            ]
            report = analysis.accuracy_stats(accs)
            row.extend([repr(report.mean), repr(report.std)])
            if not quiet:
                print(f"{profile.name} {width}-qubit: {report.formatted()}")
        rows.append(row)
    path = config.out_dir() / f"sweep_qubits_{config.task}.csv"
    header = ["machine"]
    for width in widths:
        header += [f"acc_{width}q_mean", f"acc_{width}q_std"]
    _write_table(path, config, header, rows)
    _write_manifest(config, "sweep_qubits", [str(path)])
    return path


def _allocated_models(config: ExperimentConfig, models, size: int, seed: int):
    allocation = ensemble.allocate_variants(size, config.n_variants, seed)
    return [models[vid] for vid in allocation]


def cmd_sweep_ensemble(config: ExperimentConfig, quiet: bool = False) -> Path:
    """Ensemble accuracy per (size, strategy), mean +- std over seeds."""
    split = build_split(config)
    models = get_models(config)
    machines = config.profiles()
    validation = split.train[-30:]
    rows = []
    for size in config.ensemble_sizes:
        by_strategy = {s: [] for s in config.strategies}
        for seed in config.seeds:
            allocated = _allocated_models(config, models, size, seed)
            result = ensemble.run_ensemble(
                allocated, machines, split.test, "plurality", seed,
            )
            weights = (
                ensemble.classifier_weights(allocated, machines, validation, seed)
                if "accuracy_weighted" in config.strategies else None
            )
            for strategy in config.strategies:
                by_strategy[strategy].append(
                    ensemble.rerun_strategy(result.records, strategy, weights)
                )
        for strategy, accs in by_strategy.items():
            report = analysis.accuracy_stats(accs)
            rows.append([size, strategy, repr(report.mean), repr(report.std),
                         report.n_runs])
            if not quiet:
                print(f"size {size} {strategy}: {report.formatted()}")
    path = config.out_dir() / f"sweep_ensemble_{config.task}.csv"
    _write_table(path, config, ["ensemble_size", "strategy", "mean", "std", "n_runs"],
                 rows)
    _write_manifest(config, "sweep_ensemble", [str(path)])
    return path


def cmd_compare(config: ExperimentConfig, quiet: bool = False) -> Path:
    """Ensemble vs each single machine vs noiseless simulation.

    Strategy rows are paired: every strategy re-aggregates the same
    per-classifier confidence records.
    """
    split = build_split(config)
    models = get_models(config)
    machines = config.profiles()
    validation = split.train[-30:]
    rows = []

    strategy_accs = {s: [] for s in config.strategies}
    for seed in config.seeds:
        allocated = _allocated_models(config, models, config.compare_size, seed)
        result = ensemble.run_ensemble(
            allocated, machines, split.test, "plurality", seed
        )
        weights = (
            ensemble.classifier_weights(allocated, machines, validation, seed)
            if "accuracy_weighted" in config.strategies else None
        )
        for strategy in config.strategies:
            strategy_accs[strategy].append(
                ensemble.rerun_strategy(result.records, strategy, weights)
            )
    for strategy, accs in strategy_accs.items():
        report = analysis.accuracy_stats(accs, setting=f"ensemble_{strategy}")
        rows.append([f"ensemble_{strategy}", repr(report.mean), repr(report.std),
                     report.n_runs])
        if not quiet:
            print(f"ensemble {strategy}: {report.formatted()}")

    for profile in machines:
        accs = [
            single_machine_accuracy(models[0], profile, split.test, seed)
            for seed in config.seeds
        ]
        report = analysis.accuracy_stats(accs, setting=profile.name)
        rows.append([profile.name, repr(report.mean), repr(report.std),
                     report.n_runs])
        if not quiet:
            print(f"{profile.name}: {report.formatted()}")

    sim_acc = classifier.accuracy(models[0], split.test)
    rows.append(["simulation", repr(sim_acc), "", 1])
    if not quiet:
        print(f"simulation: {sim_acc:.3f}")

    path = config.out_dir() / f"compare_{config.task}.csv"
    _write_table(path, config, ["setting", "mean", "std", "n_runs"], rows)
    _write_manifest(config, "compare", [str(path)])
    return path


def impact_records(model, profile, test_set, seed: int,
                   n_evaluations: int = 7) -> list[analysis.ImpactRecord]:
    """Noisy per-classifier predictions scored into impact records."""
    records = []
    for s_idx, (features, label) in enumerate(test_set):
        for rep in range(n_evaluations):
            rng = noise.substream(seed, rep, 0, s_idx)
            conf = classifier.confidence(
                model, features,
                noise.NoisyExecutionConfig(profile=profile, seed=rng),
            )
            records.append(
                analysis.ImpactRecord(
                    impact=analysis.impact_factor(conf),
                    correct=classifier.predict(conf) == label,
                    sample_index=s_idx,
                    classifier_id=rep,
                )
            )
    return records


def cmd_impact(config: ExperimentConfig, quiet: bool = False) -> Path:
    """Impact-factor densities on a noisy 2-qubit evaluation."""
    split = build_split(config, n_features=2, digits=TASK_DIGITS["mnist2"])
    model = get_models(config, n_qubits=2, n_variants=1)[0]
    profile = config.profiles()[0]
    records = []
    for seed in config.seeds:
        records.extend(impact_records(model, profile, split.test, seed))
    centers, dc, dw = analysis.impact_distribution(records)
    mean_correct, mean_wrong = analysis.group_means(records)
    path = config.out_dir() / "impact_density.csv"
    with open(path, "w", newline="") as f:
        for line in config.header_lines():
            f.write(f"# {line}\n")
        f.write(f"# records={len(records)} mean_correct={mean_correct!r} "
                f"mean_wrong={mean_wrong!r}\n")
        writer = csv.writer(f)
        writer.writerow(["bin_center", "density_correct", "density_wrong"])
        for c, a, b in zip(centers, dc, dw):
            writer.writerow([repr(float(c)), repr(float(a)), repr(float(b))])
    if not quiet:
        print(f"mean impact: correct {mean_correct:.3f}, wrong {mean_wrong:.3f}")
    _write_manifest(config, "impact", [str(path)])
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvote", description="ensemble quantum-classifier experiments"
    )
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--task", choices=sorted(TASK_DIGITS))
    parser.add_argument("--images", help="IDX image file")
    parser.add_argument("--labels", help="IDX label file")
    parser.add_argument("--qubits", dest="n_qubits")
    parser.add_argument("--sizes", dest="ensemble_sizes",
                        help="comma-separated ensemble sizes")
    parser.add_argument("--machines", help="comma-separated profile names")
    parser.add_argument("--strategies", help="comma-separated strategies")
    parser.add_argument("--seeds", help="comma-separated evaluation seeds")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "command",
        choices=["train", "sweep-qubits", "sweep-ensemble", "compare", "impact"],
    )
    return parser


COMMANDS = {
    "train": cmd_train,
    "sweep-qubits": cmd_sweep_qubits,
    "sweep-ensemble": cmd_sweep_ensemble,
    "compare": cmd_compare,
    "impact": cmd_impact,
}


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    config = load_config(config_path, args)
    COMMANDS[command](config)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
