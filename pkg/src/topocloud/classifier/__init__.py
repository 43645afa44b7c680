from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .network import (CnnModel, ShapeMismatchError, default_channels, forward_logits, init_model,
                      log_softmax, normalize_inputs, predict_proba)
from .serialization import ModelFileError, load_model, model_from_bytes, model_to_bytes, save_model
from .training import (TrainingConfig, TrainingDiverged, TrainingError, gradient_check, train)


class BankMismatchError(ValueError):
    pass


def forward(model: CnnModel, X: np.ndarray) -> np.ndarray:
    """Probability rows for a batch of raw feature vectors (inference mode)."""
    return predict_proba(model, X)


def check_bank(model: CnnModel, bank_hash) -> None:
    if bank_hash is not None and model.bank_hash is not None and bank_hash != model.bank_hash:
        raise BankMismatchError(f"features come from filtration bank {bank_hash}, "
                                f"model was trained on bank {model.bank_hash}")


def predict(model: CnnModel, vector) -> Tuple[str, float]:
    """Label and probability of the most likely class; ties go to the earlier catalog class."""
    values = getattr(vector, "values", vector)
    check_bank(model, getattr(vector, "bank_hash", None))
    probs = predict_proba(model, np.asarray(values, dtype=np.float64).reshape(1, -1))[0]
    k = int(np.argmax(probs))
    return model.classes[k], float(probs[k])


def decide(probs: np.ndarray) -> np.ndarray:
    return np.argmax(probs, axis=1)


@dataclass
class EvalReport:
    classes: List[str]
    confusion: np.ndarray     # rows: true class, cols: predicted
    overall_accuracy: float
    mean_class_accuracy: float

    def format(self) -> str:
        width = max(8, max(len(c) for c in self.classes) + 1)
        lines = [f"OA: {100 * self.overall_accuracy:.2f}%",
                 f"mAcc: {100 * self.mean_class_accuracy:.2f}%",
                 "confusion matrix (rows=true, cols=predicted):",
                 " " * width + "".join(c.rjust(width) for c in self.classes)]
        for c, row in zip(self.classes, self.confusion):
            lines.append(c.ljust(width) + "".join(str(int(v)).rjust(width) for v in row))
        return "\n".join(lines) + "\n"


def evaluate_predictions(true: Sequence[str], pred: Sequence[str], classes: Sequence[str]) -> EvalReport:
    """OA = correct / total; mAcc = unweighted mean of per-class recall over classes present in ``true``."""
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true, pred):
        cm[index[t], index[p]] += 1
    total = cm.sum()
    oa = float(np.trace(cm) / total) if total else 0.0
    support = cm.sum(axis=1)
    present = support > 0
    recalls = np.diag(cm)[present] / support[present]
    macc = float(recalls.mean()) if recalls.size else 0.0
    return EvalReport(classes, cm, oa, macc)


def evaluate(model: CnnModel, X: np.ndarray, labels: Sequence[str], bank_hash=None):
    check_bank(model, bank_hash)
    unknown = sorted(set(labels) - set(model.classes))
    if unknown:
        raise ValueError(f"labels not in the model's catalog: {unknown}")
    probs = predict_proba(model, X)
    pred = [model.classes[k] for k in decide(probs)]
    return evaluate_predictions(labels, pred, model.classes), probs


def precision_recall_points(probs: np.ndarray, labels: Sequence[str], classes: Sequence[str]):
    """Macro-averaged one-vs-rest precision/recall at each distinct score threshold."""
    classes = list(classes)
    y = np.array([classes.index(l) for l in labels])
    thresholds = np.unique(probs)[::-1]
    points = []
    for thr in thresholds:
        prec, rec = [], []
        for k in range(len(classes)):
            pos = probs[:, k] >= thr
            tp = np.sum(pos & (y == k))
            prec.append(tp / pos.sum() if pos.sum() else 1.0)
            rec.append(tp / np.sum(y == k) if np.sum(y == k) else 0.0)
        points.append((float(thr), float(np.mean(prec)), float(np.mean(rec))))
    return points


__all__ = [
    "BankMismatchError", "CnnModel", "EvalReport", "ModelFileError", "ShapeMismatchError",
    "TrainingConfig", "TrainingDiverged", "TrainingError", "check_bank", "default_channels",
    "evaluate", "evaluate_predictions", "forward", "forward_logits", "gradient_check",
    "init_model", "load_model", "log_softmax", "model_from_bytes", "model_to_bytes",
    "normalize_inputs", "precision_recall_points", "predict", "predict_proba", "save_model", "train",
]
