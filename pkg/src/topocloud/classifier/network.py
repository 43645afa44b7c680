"""A 1D CNN over feature vectors, written directly in numpy (float64).

Layout is channel-last, ``(batch, length, channels)``. The network is three
blocks of Conv1D (stride 1, 'same' zero padding, no bias) -> BatchNorm -> ReLU,
then a fully connected layer over the flattened output and a softmax.

Convolutions run as one GEMM per kernel tap over a flat padded buffer: each
sample is padded on both sides and the batch is laid end to end, so tap ``t``
is the contiguous row slice ``X[t:t+M]``. Rows that straddle two samples are
computed and then discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

BN_EPS = 1e-5
KERNELS = (3, 5, 7)


class ShapeMismatchError(ValueError):
    pass


def default_channels(n_classes: int) -> Tuple[int, int, int]:
    return (128, 64, 32 if n_classes == 2 else n_classes)


@dataclass
class CnnModel:
    classes: List[str]
    input_len: int
    channels: Tuple[int, int, int]
    params: Dict[str, np.ndarray]
    buffers: Dict[str, np.ndarray]
    norm_mean: np.ndarray
    norm_std: np.ndarray
    kernels: Tuple[int, int, int] = KERNELS
    meta: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def bank_hash(self) -> Optional[str]:
        return self.meta.get("bank_hash")

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "CnnModel":
        return CnnModel(list(self.classes), self.input_len, tuple(self.channels),
                        {k: v.copy() for k, v in self.params.items()},
                        {k: v.copy() for k, v in self.buffers.items()},
                        self.norm_mean.copy(), self.norm_std.copy(), tuple(self.kernels),
                        dict(self.meta))


def param_names(n_layers: int = 3) -> List[str]:
    names = []
    for i in range(1, n_layers + 1):
        names += [f"conv{i}.W", f"bn{i}.gamma", f"bn{i}.beta"]
    return names + ["fc.W", "fc.b"]


def init_model(input_len: int, classes: Sequence[str], seed: int = 0,
               channels: Optional[Sequence[int]] = None, kernels: Sequence[int] = KERNELS) -> CnnModel:
    """He-normal conv and FC weights (std sqrt(2/fan_in)); BN starts at identity; FC bias zero."""
    classes = list(classes)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    channels = tuple(int(c) for c in (channels or default_channels(len(classes))))
    rng = np.random.default_rng(seed)
    params, buffers = {}, {}
    c_in = 1
    for i, (k, c_out) in enumerate(zip(kernels, channels), 1):
        if k % 2 != 1:
            raise ValueError("kernel sizes must be odd for length-preserving padding")
        params[f"conv{i}.W"] = rng.normal(0.0, np.sqrt(2.0 / (c_in * k)), size=(k, c_in, c_out))
        params[f"bn{i}.gamma"] = np.ones(c_out)
        params[f"bn{i}.beta"] = np.zeros(c_out)
        buffers[f"bn{i}.mean"] = np.zeros(c_out)
        buffers[f"bn{i}.var"] = np.ones(c_out)
        c_in = c_out
    fan_in = input_len * channels[-1]
    params["fc.W"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, len(classes)))
    params["fc.b"] = np.zeros(len(classes))
    return CnnModel(classes, int(input_len), channels, params, buffers,
                    np.zeros(input_len), np.ones(input_len), tuple(int(k) for k in kernels))


# -- layers -------------------------------------------------------------------

def conv_forward(h: np.ndarray, W: np.ndarray):
    B, L, c_in = h.shape
    k, _, c_out = W.shape
    p = k // 2
    P = L + 2 * p
    Xp = np.zeros((B, P, c_in))
    Xp[:, p:p + L] = h
    X = Xp.reshape(B * P, c_in)
    M = B * P - 2 * p
    out = np.zeros((B * P, c_out))
    acc = out[:M]
    for t in range(k):
        acc += X[t:t + M] @ W[t]
    return out.reshape(B, P, c_out)[:, :L], X


def conv_backward(g: np.ndarray, X: np.ndarray, W: np.ndarray, need_input_grad: bool = True):
    B, L, c_out = g.shape
    k, c_in, _ = W.shape
    p = k // 2
    P = L + 2 * p
    M = B * P - 2 * p
    G = np.zeros((B, P, c_out))
    G[:, :L] = g
    G = G.reshape(B * P, c_out)[:M]
    dW = np.empty_like(W)
    for t in range(k):
        dW[t] = X[t:t + M].T @ G
    if not need_input_grad:
        return None, dW
    dX = np.zeros((B * P, c_in))
    for t in range(k):
        dX[t:t + M] += G @ W[t].T
    return dX.reshape(B, P, c_in)[:, p:p + L], dW


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def normalize_inputs(model: CnnModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.input_len:
        raise ShapeMismatchError(f"expected feature length {model.input_len}, got {X.shape[1]}")
    return (X - model.norm_mean) / model.norm_std


def _n_layers(model: CnnModel) -> int:
    return len(model.channels)


def forward_logits(model: CnnModel, Z: np.ndarray, train: bool = False, params=None):
    """Logits for already-normalized inputs ``Z`` of shape (B, L).

    ``train`` uses batch statistics in BatchNorm and returns a cache for
    :func:`backward`; otherwise the stored population statistics are used.
    """
    params = model.params if params is None else params
    h = np.asarray(Z, dtype=np.float64)[:, :, None]
    cache = []
    for i in range(1, _n_layers(model) + 1):
        z, X = conv_forward(h, params[f"conv{i}.W"])
        if train:
            mean = z.mean(axis=(0, 1))
            var = z.var(axis=(0, 1))
        else:
            mean = model.buffers[f"bn{i}.mean"]
            var = model.buffers[f"bn{i}.var"]
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (z - mean) * inv_std
        y = params[f"bn{i}.gamma"] * xhat + params[f"bn{i}.beta"]
        mask = y > 0
        h = np.where(mask, y, 0.0)
        if train:
            cache.append((X, xhat, inv_std, mask))
    B = h.shape[0]
    flat = h.reshape(B, -1)
    logits = flat @ params["fc.W"] + params["fc.b"]
    if train:
        cache.append(flat)
    return logits, cache


def predict_proba(model: CnnModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities for raw (un-normalized) feature rows, inference mode.

    Rows go through the network one at a time: BLAS may round differently
    for different GEMM heights, and a row's output must not depend on which
    other rows share its batch.
    """
    Z = normalize_inputs(model, X)
    out = np.zeros((len(Z), model.n_classes))
    for i in range(len(Z)):
        logits, _ = forward_logits(model, Z[i:i + 1])
        out[i] = np.exp(log_softmax(logits))[0]
    return out


def loss_and_grads(model: CnnModel, Z: np.ndarray, y: np.ndarray, params=None, need_grads: bool = True):
    """Mean cross-entropy in training mode and its gradient for every parameter."""
    params = model.params if params is None else params
    logits, cache = forward_logits(model, Z, train=True, params=params)
    logp = log_softmax(logits)
    B = len(y)
    loss = float(-logp[np.arange(B), y].mean())
    if not need_grads:
        return loss, None, cache
    grads = {}
    dlogits = np.exp(logp)
    dlogits[np.arange(B), y] -= 1.0
    dlogits /= B
    flat = cache[-1]
    grads["fc.W"] = flat.T @ dlogits
    grads["fc.b"] = dlogits.sum(axis=0)
    n = _n_layers(model)
    dh = (dlogits @ params["fc.W"].T).reshape(B, model.input_len, model.channels[-1])
    for i in range(n, 0, -1):
        X, xhat, inv_std, mask = cache[i - 1]
        dy = np.where(mask, dh, 0.0)
        grads[f"bn{i}.beta"] = dy.sum(axis=(0, 1))
        grads[f"bn{i}.gamma"] = (dy * xhat).sum(axis=(0, 1))
        dxhat = dy * params[f"bn{i}.gamma"]
        N = dy.shape[0] * dy.shape[1]
        dz = (inv_std / N) * (N * dxhat - dxhat.sum(axis=(0, 1))
                              - xhat * (dxhat * xhat).sum(axis=(0, 1)))
        dh, grads[f"conv{i}.W"] = conv_backward(dz, X, params[f"conv{i}.W"], need_input_grad=i > 1)
    return loss, grads, cache


def relu_pattern(cache) -> np.ndarray:
    """All ReLU on/off flags of a training-mode forward pass, flattened."""
    return np.concatenate([c[3].ravel() for c in cache[:-1]])


def finalize_batchnorm(model: CnnModel, Z: np.ndarray, batch_size: int = 128) -> None:
    """Set BatchNorm population statistics from the full training set, layer by layer."""
    for i in range(1, _n_layers(model) + 1):
        total = 0
        mean = np.zeros(model.channels[i - 1])
        m2 = np.zeros(model.channels[i - 1])
        for start in range(0, len(Z), batch_size):
            h = np.asarray(Z[start:start + batch_size], dtype=np.float64)[:, :, None]
            for j in range(1, i + 1):
                z, _ = conv_forward(h, model.params[f"conv{j}.W"])
                if j == i:
                    break
                xhat = (z - model.buffers[f"bn{j}.mean"]) / np.sqrt(model.buffers[f"bn{j}.var"] + BN_EPS)
                h = np.maximum(model.params[f"bn{j}.gamma"] * xhat + model.params[f"bn{j}.beta"], 0.0)
            # pairwise (Chan et al.) merge of per-batch mean and M2
            nb = z.shape[0] * z.shape[1]
            mb = z.mean(axis=(0, 1))
            m2b = ((z - mb) ** 2).sum(axis=(0, 1))
            delta = mb - mean
            n_new = total + nb
            mean = mean + delta * (nb / n_new)
            m2 = m2 + m2b + delta * delta * (total * nb / n_new)
            total = n_new
        model.buffers[f"bn{i}.mean"] = mean
        model.buffers[f"bn{i}.var"] = m2 / total
