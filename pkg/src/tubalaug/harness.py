"""Experiment driver: trains baseline and augmented variants under shared
seeds and schedules, applies the freeze rule, and gathers the evaluation
metrics into a TrainReport."""

from __future__ import annotations

import hashlib
import math
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .augment import (PRESETS, TAdafParams, augment_backward_batch,
                      augment_forward_batch, combine)
from .data import Dataset, load_cifar, subset, synth_dataset
from .errors import ConfigError
from .metrics import min_available_epochs, param_accounting
from .network import (AdamState, LENET_SCHEDULE, DEEP_SCHEDULE, adam_step,
                      batch_to_images, build_model, constant_schedule,
                      images_to_batch, lr_at, scaled_schedule,
                      softmax_xent_batch)

__all__ = ["ExperimentConfig", "VariantResult", "TrainReport", "train",
           "resolve_schedule", "DATA_DIR_ENV"]

DATA_DIR_ENV = "TUBALAUG_DATA_DIR"


@dataclass
class ExperimentConfig:
    dataset: str = "synth"          # synth | cifar10 | cifar100
    data_dir: str = ""              # falls back to $TUBALAUG_DATA_DIR
    subset_size: int = 0            # 0 = full training split
    test_subset_size: int = 0       # 0 = full test split
    seed: int = 0
    model: str = "mlp"              # mlp | lenet
    preset: str = "off"             # off | 333 | 433 | 525
    epochs: int = 20
    batch_size: int = 32
    schedule: str = "const"         # const | lenet | deep
    base_rate: float = 1e-3         # rate for the const schedule
    freeze_fraction: float = 0.6
    activation: str = "identity"
    out_dir: str = "runs/exp"
    figures: bool = True
    synth_classes: int = 4
    synth_per_class: int = 200
    synth_dim: int = 8

    def validate(self):
        if self.preset not in ("off",) + tuple(PRESETS):
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if not 0 < self.freeze_fraction <= 1:
            raise ConfigError("freeze fraction must lie in (0, 1]")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        return self


@dataclass
class VariantResult:
    name: str
    initial_test_acc: float = 0.0
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    lr_model: list = field(default_factory=list)
    lr_tprod: list = field(default_factory=list)
    frozen: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    aug_checksums: list = field(default_factory=list)
    model_checksums: list = field(default_factory=list)
    lambda_max: float = 0.0
    t_ava: int | None = None


@dataclass
class TrainReport:
    config: dict
    variants: list  # VariantResult, baseline first
    lambda_floor: float = 0.0
    base_params: int = 0
    additional_params: int = 0
    param_ratio: float = 0.0
    learnable_time_ratio: float | None = None


def resolve_schedule(cfg: ExperimentConfig):
    if cfg.schedule == "const":
        return constant_schedule(cfg.base_rate, cfg.epochs)
    if cfg.schedule == "lenet":
        base = LENET_SCHEDULE
    elif cfg.schedule == "deep":
        base = DEEP_SCHEDULE
    else:
        raise ConfigError(f"unknown schedule {cfg.schedule!r}")
    if cfg.epochs == base.last_epoch:
        return base
    return scaled_schedule(base, cfg.epochs)


def _load_datasets(cfg: ExperimentConfig):
    if cfg.dataset == "synth":
        dim = (cfg.synth_dim, cfg.synth_dim)
        train = synth_dataset(cfg.synth_classes, cfg.synth_per_class, dim=dim,
                              seed=cfg.seed, split="train")
        test = synth_dataset(cfg.synth_classes, max(cfg.synth_per_class // 4, 1),
                             dim=dim, seed=cfg.seed + 99991, split="test")
        return train, test
    if cfg.dataset in ("cifar10", "cifar100"):
        data_dir = cfg.data_dir or os.environ.get(DATA_DIR_ENV, "")
        if not data_dir:
            raise ConfigError(
                f"dataset {cfg.dataset} needs --data-dir or ${DATA_DIR_ENV}"
            )
        train = load_cifar(data_dir, cfg.dataset, "train")
        test = load_cifar(data_dir, cfg.dataset, "test")
        if cfg.subset_size:
            train = subset(train, cfg.subset_size, seed=cfg.seed)
        if cfg.test_subset_size:
            test = subset(test, cfg.test_subset_size, seed=cfg.seed + 1)
        return train, test
    raise ConfigError(f"unknown dataset {cfg.dataset!r}")


def _checksum(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


def _evaluate(model, aug, dataset: Dataset, batch_size: int) -> float:
    correct = 0
    for start in range(0, len(dataset), batch_size):
        imgs = dataset.images[start:start + batch_size]
        labels = dataset.labels[start:start + batch_size]
        if aug is None:
            logits, _ = model.forward(images_to_batch(imgs))
        else:
            branches, _ = augment_forward_batch(imgs, aug)
            stacked = np.concatenate(branches, axis=0)
            all_logits, _ = model.forward(images_to_batch(stacked))
            b = len(labels)
            logits = combine((all_logits[:b], all_logits[b:2 * b],
                              all_logits[2 * b:]), aug.weights)
        correct += int(np.sum(logits.argmax(axis=1) == labels))
    return correct / len(dataset)


def _train_batch(model, aug, imgs, labels):
    """One forward/backward over a batch; returns loss, logits, grads."""
    if aug is None:
        logits, caches = model.forward(images_to_batch(imgs))
        loss, dlogits = softmax_xent_batch(logits, labels)
        grads, _ = model.backward(dlogits, caches)
        return loss, logits, grads, None
    branches, cache = augment_forward_batch(imgs, aug)
    stacked = np.concatenate(branches, axis=0)
    all_logits, caches = model.forward(images_to_batch(stacked))
    b = len(labels)
    l0, l1, l2 = all_logits[:b], all_logits[b:2 * b], all_logits[2 * b:]
    logits = combine((l0, l1, l2), aug.weights)
    loss, dcomb = softmax_xent_batch(logits, labels)
    w = aug.weights
    dlogits = np.concatenate([w[0] * dcomb, w[1] * dcomb, w[2] * dcomb])
    grads, dx = model.backward(dlogits, caches)
    dimgs = batch_to_images(dx)
    dw1, dw2, _ = augment_backward_batch(
        (dimgs[:b], dimgs[b:2 * b], dimgs[2 * b:]), cache, aug)
    return loss, logits, grads, (dw1, dw2)


def _run_variant(cfg: ExperimentConfig, name: str, preset: str,
                 train_set: Dataset, test_set: Dataset) -> VariantResult:
    input_hw = train_set.images.shape[1:3]
    model = build_model(cfg.model, input_hw, train_set.num_classes,
                        seed=cfg.seed)
    adam_model = AdamState.for_params(model.params())
    aug = None
    adam_aug = None
    if preset != "off":
        aug = TAdafParams.identity_init(input_hw[0], input_hw[1],
                                        weights=PRESETS[preset],
                                        activation=cfg.activation)
        adam_aug = AdamState.for_params([aug.w1, aug.w2])
    schedule = resolve_schedule(cfg)
    shuffle_rng = np.random.default_rng(cfg.seed + 7919)
    freeze_epoch = math.ceil(cfg.freeze_fraction * cfg.epochs)
    result = VariantResult(name=name)
    result.initial_test_acc = _evaluate(model, aug, test_set, cfg.batch_size)

    n = len(train_set)
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        lr_model = lr_at(schedule, epoch, "model")
        lr_tprod = lr_at(schedule, epoch, "tprod")
        frozen = epoch > freeze_epoch
        if aug is not None:
            aug.frozen = frozen
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            imgs, labels = train_set.images[idx], train_set.labels[idx]
            loss, logits, grads, aug_grads = _train_batch(model, aug, imgs, labels)
            loss_sum += loss * len(idx)
            correct += int(np.sum(logits.argmax(axis=1) == labels))
            adam_step(model.params(), grads, lr_model, adam_model)
            if aug is not None and not frozen:
                adam_step([aug.w1, aug.w2], list(aug_grads), lr_tprod, adam_aug)
        result.train_loss.append(loss_sum / n)
        result.train_acc.append(correct / n)
        result.test_acc.append(_evaluate(model, aug, test_set, cfg.batch_size))
        result.lr_model.append(lr_model)
        result.lr_tprod.append(lr_tprod)
        result.frozen.append(frozen)
        result.epoch_seconds.append(time.perf_counter() - t0)
        result.model_checksums.append(_checksum(*model.params()))
        result.aug_checksums.append(
            _checksum(aug.w1, aug.w2) if aug is not None else "")
    result.lambda_max = max(result.test_acc)
    # expose final parameter counts for reporting
    result._model = model  # noqa: SLF001 - reused by param accounting
    result._aug = aug
    return result


def train(cfg: ExperimentConfig) -> TrainReport:
    """Run the baseline (and, if configured, the augmented variant)."""
    cfg.validate()
    train_set, test_set = _load_datasets(cfg)
    variants = [("baseline", "off")]
    if cfg.preset != "off":
        variants.append((f"aug-{cfg.preset}", cfg.preset))
    results = [_run_variant(cfg, name, preset, train_set, test_set)
               for name, preset in variants]

    baseline = results[0]
    _, floor, t_avas = min_available_epochs(
        [r.test_acc for r in results], baseline.test_acc)
    for r, t in zip(results, t_avas):
        r.t_ava = t

    armed = results[-1] if len(results) > 1 else None
    base_count, extra, ratio = param_accounting(
        baseline._model, armed._aug if armed else None)
    report = TrainReport(config=asdict(cfg), variants=results,
                         lambda_floor=floor, base_params=base_count,
                         additional_params=extra, param_ratio=ratio)
    if armed is not None:
        learnable = [i for i, fz in enumerate(armed.frozen) if not fz]
        if learnable:
            a = np.mean([armed.epoch_seconds[i] for i in learnable])
            b = np.mean([baseline.epoch_seconds[i] for i in learnable])
            report.learnable_time_ratio = float(a / b)
    return report
