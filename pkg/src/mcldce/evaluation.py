"""Accuracy, the multi-arm noisy-label experiment and its reports."""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import yaml

from .centroid import CorrectionMode, compute_M, correct_centroid, empirical_centroid
from .data import (Dataset, check_seed, gen_gaussian_mixture, load_csv, load_idx, mixture_spec,
                   standardize, substream)
from .errors import ConfigError, StageError, ValidationError
from .linalg import DEFAULT_PINV_TOL
from .noise import (NoiseKind, NoiseSpec, estimate_priors, inject_noise, load_transition_csv,
                    noisy_label_frequencies)
from .risk import LinearModel, RiskConfig, predict, train

SCHEMA_VERSION = "mcldce-report/1"

ARMS = ("corrected_paper_M", "corrected_direct_T", "naive_noisy", "clean_oracle")

SPLIT_STREAM = 10
NOISE_STREAM = 11
TRAIN_STREAM = 12


def accuracy(model, test: Dataset) -> float:
    if test.n < 1:
        raise ValidationError("test set is empty")
    return float(np.mean(predict(model, test.features) == test.classes))


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field maps to one config-file key."""

    source: str = "gaussian"
    classes: int = 4
    dim: int = 10
    n: int = 2000
    sigma: float = 1.0
    separation: float = 3.0
    weights: tuple | None = None
    csv_path: str | None = None
    idx_images: str | None = None
    idx_labels: str | None = None
    standardize: bool = False

    noise: str = "symmetric"
    rate: float = 0.4
    transition_path: str | None = None

    lam: float = 1e-3
    trainer: str = "closed_form"
    optimizer: str = "adam"
    step_size: float = 0.001
    smoothing: float = 0.9
    epochs: int = 200
    batch_size: int = 128
    decay_start: int = 80
    pinv_tol: float = DEFAULT_PINV_TOL

    trials: int = 5
    test_fraction: float = 0.2
    seed: int = 0
    arms: tuple = ARMS
    workers: int = 1

    def __post_init__(self):
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "arms", tuple(self.arms))
        if self.source not in ("gaussian", "csv", "idx"):
            raise ConfigError(f"unknown source {self.source!r}", ["source"])
        if self.source == "csv" and not self.csv_path:
            raise ConfigError("source 'csv' needs csv_path", ["csv_path"])
        if self.source == "idx" and not (self.idx_images and self.idx_labels):
            raise ConfigError("source 'idx' needs idx_images and idx_labels", ["idx_images", "idx_labels"])
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}", ["trials"])
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}", ["test_fraction"])
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", ["workers"])
        bad = [a for a in self.arms if a not in ARMS]
        if bad or not self.arms:
            raise ConfigError(f"unknown arms {bad}; choose from {list(ARMS)}", ["arms"])
        try:
            check_seed(self.seed)
            self.noise_spec()
            self.risk_config()
        except ValidationError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        unknown = sorted(set(mapping) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}", unknown)
        try:
            return cls(**mapping)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        with open(path) as f:
            mapping = yaml.safe_load(f) or {}
        if not isinstance(mapping, dict):
            raise ConfigError(f"{path}: config must be a flat key-value mapping")
        nested = sorted(k for k, v in mapping.items() if isinstance(v, dict))
        if nested:
            raise ConfigError(f"{path}: nested values not allowed for keys {nested}", nested)
        mapping.update(overrides or {})
        return cls.from_mapping(mapping)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["arms"] = list(self.arms)
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    def noise_spec(self) -> NoiseSpec:
        if self.noise == "explicit":
            if not self.transition_path:
                raise ConfigError("explicit noise needs transition_path", ["transition_path"])
            return NoiseSpec(NoiseKind.EXPLICIT, matrix=load_transition_csv(self.transition_path),
                             seed=self.seed)
        return NoiseSpec(self.noise, self.rate, seed=self.seed)

    def risk_config(self, mode=CorrectionMode.NONE, seed: int = 0) -> RiskConfig:
        return RiskConfig(lam=self.lam, mode=mode, trainer=self.trainer, step_size=self.step_size,
                          smoothing=self.smoothing, epochs=self.epochs, batch_size=self.batch_size,
                          decay_start=self.decay_start, optimizer=self.optimizer, seed=seed)


@dataclass
class ExperimentReport:
    config: dict
    seeds: list
    arms: dict  # arm name -> list of per-trial test accuracies
    priors: list  # per-trial estimated class priors
    centroid_gap: list  # per-trial ||paper_M - direct_T||_F
    timing: dict = field(default_factory=dict)  # arm name -> seconds, summed over trials

    def mean(self, arm: str) -> float:
        return float(np.mean(self.arms[arm]))

    def std(self, arm: str) -> float:
        return float(np.std(self.arms[arm]))

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "config_echo": self.config,
            "seeds": list(self.seeds),
            "arms": [
                {"name": name, "trials": list(acc), "mean": self.mean(name), "std": self.std(name)}
                for name, acc in self.arms.items()
            ],
            "priors": [list(p) for p in self.priors],
            "centroid_gap": list(self.centroid_gap),
        }
        if timing:
            out["timing"] = dict(self.timing)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(
            config=d["config_echo"],
            seeds=list(d["seeds"]),
            arms={a["name"]: list(a["trials"]) for a in d["arms"]},
            priors=[list(p) for p in d["priors"]],
            centroid_gap=list(d["centroid_gap"]),
            timing=dict(d.get("timing", {})),
        )


@contextmanager
def _stage(name, trial):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, trial, e) from e


def trial_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(s.generate_state(1, np.uint64)[0]) for s in children]


def _load_source(config: ExperimentConfig) -> Dataset | None:
    if config.source == "csv":
        return load_csv(config.csv_path)
    if config.source == "idx":
        return load_idx(config.idx_images, config.idx_labels, config.classes)
    return None


def _split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    n_test = min(max(1, round(ds.n * test_fraction)), ds.n - 1)
    order = substream(seed, SPLIT_STREAM).permutation(ds.n)
    return ds.subset(np.sort(order[n_test:])), ds.subset(np.sort(order[:n_test]))


def _run_trial(config: ExperimentConfig, trial: int, seed: int, pool: Dataset | None):
    with _stage("data", trial):
        if pool is None:
            spec = mixture_spec(config.classes, config.dim, config.sigma, config.seed,
                                config.separation, config.weights)
            pool = gen_gaussian_mixture(dataclasses.replace(spec, seed=seed), config.n)
        train_ds, test_ds = _split(pool, config.test_fraction, seed)
        if config.standardize:
            train_ds, test_ds = standardize(train_ds, test_ds)
        test_digest = test_ds.digest()

    with _stage("noise", trial):
        T = config.noise_spec().transition(train_ds.c)
        noise_seed = int(substream(seed, NOISE_STREAM).integers(2**63))
        noisy = inject_noise(train_ds, T, noise_seed)
    if test_ds.digest() != test_digest:
        raise StageError("noise", trial, "test split changed during noise injection")

    with _stage("priors", trial):
        priors = estimate_priors(T, noisy_label_frequencies(noisy))
    with _stage("centroid", trial):
        mu_noisy = empirical_centroid(noisy)
        M = compute_M(T, priors, config.pinv_tol)
        centroids = {
            "corrected_paper_M": mu_noisy @ M.pinv,
            "corrected_direct_T": correct_centroid(mu_noisy, T, priors, CorrectionMode.DIRECT_T,
                                                   config.pinv_tol),
            "naive_noisy": mu_noisy,
            "clean_oracle": empirical_centroid(train_ds),
        }
        gap = float(np.linalg.norm(centroids["corrected_paper_M"] - centroids["corrected_direct_T"]))

    modes = {"corrected_paper_M": CorrectionMode.PAPER_M, "corrected_direct_T": CorrectionMode.DIRECT_T}
    train_seed = int(substream(seed, TRAIN_STREAM).integers(2**63))
    acc, elapsed = {}, {}
    for arm in config.arms:
        with _stage(f"train:{arm}", trial):
            start = time.perf_counter()
            cfg = config.risk_config(modes.get(arm, CorrectionMode.NONE), train_seed)
            model: LinearModel = train(noisy.features, centroids[arm], cfg)
            acc[arm] = accuracy(model, test_ds)
            elapsed[arm] = time.perf_counter() - start
    if test_ds.digest() != test_digest:
        raise StageError("evaluate", trial, "test split changed during training")
    return acc, elapsed, priors.tolist(), gap


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every enabled arm on ``config.trials`` independent seeds.

    Noise touches only the training split; all arms share the same noisy
    training set and are scored on the same clean test split.
    """
    with _stage("load", None):
        pool = _load_source(config)
    seeds = trial_seeds(config.seed, config.trials)
    jobs = [(config, t, s, pool) for t, s in enumerate(seeds)]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            results = list(ex.map(lambda a: _run_trial(*a), jobs))
    else:
        results = [_run_trial(*a) for a in jobs]

    arms = {arm: [r[0][arm] for r in results] for arm in config.arms}
    timing = {arm: float(sum(r[1][arm] for r in results)) for arm in config.arms}
    return ExperimentReport(
        config=config.to_dict(),
        seeds=seeds,
        arms=arms,
        priors=[r[2] for r in results],
        centroid_gap=[r[3] for r in results],
        timing=timing,
    )


def report_json(report: ExperimentReport, timing: bool = True) -> str:
    return json.dumps(report.to_dict(timing), indent=2, sort_keys=True) + "\n"


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    if fmt == "json":
        with open(path, "w") as f:
            f.write(report_json(report))
    elif fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["arm", "trial", "seed", "accuracy"])
            for arm, accs in report.arms.items():
                for t, a in enumerate(accs):
                    w.writerow([arm, t, report.seeds[t], repr(a)])
    else:
        raise ValidationError(f"unknown report format {fmt!r}")


def load_report(path) -> ExperimentReport:
    with open(path) as f:
        return ExperimentReport.from_dict(json.load(f))
