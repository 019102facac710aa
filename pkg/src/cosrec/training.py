"""Mini-batch training loop: shuffling, negative sampling, Adam, early stopping.

Each epoch shuffles the training windows, draws fresh negatives for
every batch, and applies one Adam step per batch. When validation is on,
the tail of each user's training sequence is carved off, MAP on that
tail is tracked after every epoch, and training stops once it has not
improved for `patience` epochs; the best parameters are restored at the
end. One flat JSON record per epoch goes to `log_fn`.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, NegativeSampler, carve_validation, generate_windows
from .metrics import evaluate
from .optim import Adam


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False

    @property
    def final_loss(self) -> float:
        return self.history[-1]["loss"] if self.history else float("nan")


def train_model(model, dataset: Dataset, *, epochs: int, batch_size: int = 512,
                num_negatives: int = 3, learning_rate: float = 0.001,
                seed: int = 0, validation: bool = True, val_fraction: float = 0.1,
                patience: int = 5, eval_threads: int = 1,
                log_fn=None, optimizer: Adam | None = None) -> TrainResult:
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if batch_size < 2:
        raise ValueError("batch size must be >= 2")
    if num_negatives < 1:
        raise ValueError("num_negatives must be >= 1")
    if learning_rate <= 0.0:
        raise ValueError("learning rate must be positive")

    # Independent streams so shuffling, negatives and dropout stay
    # reproducible regardless of how much randomness each one consumes.
    shuffle_rng, negative_rng, dropout_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))

    train_split = carve_validation(dataset, val_fraction) if validation else dataset
    windows = generate_windows(train_split, model.config.window_size,
                               model.config.horizon)
    if len(windows) == 0:
        raise ValueError("no training windows; sequences are too short")
    sampler = NegativeSampler(train_split, rate=num_negatives)
    opt = optimizer if optimizer is not None else Adam(learning_rate=learning_rate)

    result = TrainResult()
    best_map = -np.inf
    best_state: dict[str, np.ndarray] | None = None
    epochs_since_best = 0

    for epoch in range(1, epochs + 1):
        started = time.perf_counter()
        order = shuffle_rng.permutation(len(windows))
        loss_sum = 0.0
        example_count = 0
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            if len(idx) < 2:
                continue  # batch statistics need at least two rows
            users = windows.users[idx]
            negatives = sampler.sample_batch(users, model.config.horizon,
                                             negative_rng)
            loss, grads = model.loss_and_backward(
                users, windows.inputs[idx], windows.targets[idx], negatives,
                rng=dropout_rng)
            opt.step(model.parameters(), grads)
            loss_sum += loss * len(idx)
            example_count += len(idx)

        record = {
            "epoch": epoch,
            "loss": loss_sum / max(example_count, 1),
            "examples": example_count,
            "elapsed_s": round(time.perf_counter() - started, 3),
        }

        if validation:
            report = evaluate(model, train_split, threads=eval_threads)
            record["val_map"] = report.map
            if report.map > best_map:
                best_map = report.map
                best_state = {k: v.copy() for k, v in model.state_dict().items()}
                result.best_epoch = epoch
                epochs_since_best = 0
            else:
                epochs_since_best += 1

        result.history.append(record)
        if log_fn is not None:
            log_fn(record)

        if validation and epochs_since_best >= patience:
            result.stopped_early = True
            break

    if best_state is not None:
        model.load_state_dict(best_state)
    return result
