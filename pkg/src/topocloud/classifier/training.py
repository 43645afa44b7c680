from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .network import CnnModel, finalize_batchnorm, init_model, loss_and_grads, relu_pattern

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class TrainingDiverged(TrainingError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    max_epochs: int = 1000
    loss_stop: float = 0.005
    learning_rate: float = 0.001
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        for name in ("max_epochs", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("loss_stop", "learning_rate", "eps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: Dict[str, np.ndarray], cfg: TrainingConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        corr1 = 1.0 - c.beta1 ** self.t
        corr2 = 1.0 - c.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            params[k] -= c.learning_rate * (self.m[k] / corr1) / (np.sqrt(self.v[k] / corr2) + c.eps)


def feature_stats(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant features would divide by zero
    std = np.where(std > 0, std, 1.0)
    return mean, std


def train(X: np.ndarray, labels: Sequence[str], cfg: TrainingConfig = TrainingConfig(),
          channels: Optional[Sequence[int]] = None, classes: Optional[Sequence[str]] = None,
          meta: Optional[dict] = None) -> CnnModel:
    """Fit the CNN with Adam on mean cross-entropy.

    Stops at ``max_epochs`` or as soon as an epoch's mean training loss is at
    most ``loss_stop``. BatchNorm population statistics are then computed over
    the whole training set and frozen.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    classes = sorted(set(labels)) if classes is None else list(classes)
    if len(set(labels)) < 2:
        raise TrainingError("training needs at least two distinct classes")
    index = {c: i for i, c in enumerate(classes)}
    try:
        y = np.array([index[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise TrainingError(f"label {exc.args[0]!r} is not in the class catalog") from None
    if not np.all(np.isfinite(X)):
        raise TrainingError("training features contain non-finite values")

    model = init_model(X.shape[1], classes, seed=cfg.seed, channels=channels)
    model.norm_mean, model.norm_std = feature_stats(X)
    Z = (X - model.norm_mean) / model.norm_std

    opt = Adam(model.params, cfg)
    rng = np.random.default_rng([cfg.seed, 1])
    history = []
    n = len(Z)
    for epoch in range(1, cfg.max_epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            loss, grads, _ = loss_and_grads(model, Z[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"loss became non-finite at epoch {epoch}")
            opt.step(model.params, grads)
            total += loss * len(idx)
        epoch_loss = total / n
        history.append(epoch_loss)
        log.info("epoch %d loss %.6f", epoch, epoch_loss)
        if epoch_loss <= cfg.loss_stop:
            break

    finalize_batchnorm(model, Z)
    model.meta.update(meta or {})
    model.meta["training"] = cfg.to_dict()
    model.meta["history"] = history
    return model


def _relative_error(a: float, b: float, floor: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def gradient_check(model: CnnModel, Z: np.ndarray, y: np.ndarray, step: float = 1e-5,
                   floor: float = 1e-8, min_step: float = 1e-9, details: bool = False):
    """Max relative error between backprop and central finite differences over all parameters.

    Runs in training mode (batch statistics). Where the ``+-step`` stencil
    flips a ReLU the loss is not differentiable across it, so the step is cut
    by 10x for that parameter until the activation pattern matches on both
    sides (down to ``min_step``).
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _, grads, cache = loss_and_grads(model, Z, y)
    base_pattern = relu_pattern(cache)
    worst = 0.0
    report = {}
    for name, p in model.params.items():
        errs = np.zeros(p.size)
        flat = p.reshape(-1)
        for j in range(p.size):
            orig = flat[j]
            h = step
            while True:
                flat[j] = orig + h
                lp, _, cp = loss_and_grads(model, Z, y, need_grads=False)
                flat[j] = orig - h
                lm, _, cm = loss_and_grads(model, Z, y, need_grads=False)
                flat[j] = orig
                same = (np.array_equal(relu_pattern(cp), base_pattern)
                        and np.array_equal(relu_pattern(cm), base_pattern))
                if same or h / 10 < min_step:
                    break
                h /= 10
            numeric = (lp - lm) / (2 * h)
            errs[j] = _relative_error(float(grads[name].reshape(-1)[j]), numeric, floor)
        report[name] = errs
        worst = max(worst, float(errs.max(initial=0.0)))
    return (worst, report) if details else worst
