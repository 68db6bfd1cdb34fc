"""Feed-forward approximator for the resources-left ratio.

Rectifier hidden layers, one sigmoid output unit, trained on squared error by
plain mini-batch gradient descent. Everything random (initialisation and the
per-epoch shuffles) comes from one generator seeded by ``NetworkConfig.seed``,
so two runs on the same data are bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

# Largest double strictly below one, and smallest positive normal.
_OUT_HI = 1.0 - 2.0**-53
_OUT_LO = 2.0**-1022


class DimensionError(ValueError):
    pass


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass(frozen=True)
class NetworkConfig:
    input_width: int = 5
    hidden_widths: tuple[int, ...] = (32, 16)
    epochs: int = 20
    learning_rate: float = 0.05
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_width not in (5, 6):
            raise ValueError("input_width must be 5 (first innings) or 6 (second innings)")
        if any(w <= 0 for w in self.hidden_widths):
            raise ValueError("hidden widths must be positive")
        if self.epochs <= 0 or self.batch_size <= 0 or not self.learning_rate > 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_widths"] = list(self.hidden_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**{**d, "hidden_widths": tuple(d["hidden_widths"])})


@dataclass
class ValueNetwork:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: NetworkConfig | None = None
    activations: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.activations:
            self.activations = ("relu",) * (len(self.weights) - 1) + ("sigmoid",)
        widths = self.layer_widths
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[k], widths[k + 1]) or b.shape != (widths[k + 1],):
                raise DimensionError(f"layer {k} shapes {w.shape}/{b.shape} do not chain")
        if widths[-1] != 1:
            raise DimensionError("network must end in a single output unit")

    @property
    def layer_widths(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def __call__(self, features) -> np.ndarray | float:
        return forward(self, features)

    def copy(self) -> "ValueNetwork":
        return ValueNetwork(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.config, self.activations
        )


@dataclass
class TrainingReport:
    epoch_mse: list[float]
    config: NetworkConfig
    n_samples: int

    @property
    def final_mse(self) -> float:
        return self.epoch_mse[-1]

    @property
    def seed(self) -> int:
        return self.config.seed

    def to_dict(self) -> dict:
        return {
            "epoch_mse": self.epoch_mse,
            "final_mse": self.final_mse,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "n_samples": self.n_samples,
        }


def normalize_features(state) -> np.ndarray:
    """Scale each state component into [0, 1]; target band goes last."""
    if len(state) == 5:
        over, wickets, band, ball, flag = state
        return np.array([over / 50, wickets / 10, band / 49, ball / 5, float(flag)])
    over, wickets, band, target_band, ball, flag = state
    return np.array([over / 50, wickets / 10, band / 49, ball / 5, float(flag), target_band / 49])


def normalize_many(components: np.ndarray) -> np.ndarray:
    """Vectorised :func:`normalize_features` over an ``(n, 5|6)`` array."""
    c = np.asarray(components, dtype=float)
    cols = [c[:, 0] / 50, c[:, 1] / 10, c[:, 2] / 49]
    if c.shape[1] == 5:
        cols += [c[:, 3] / 5, c[:, 4]]
    else:
        cols += [c[:, 4] / 5, c[:, 5], c[:, 3] / 49]
    return np.stack(cols, axis=1)


def init_network(config: NetworkConfig, rng: np.random.Generator | None = None) -> ValueNetwork:
    """Uniform initialisation in ``±sqrt(6 / fan_in)``; biases start at zero."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    widths = [config.input_width, *config.hidden_widths, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ValueNetwork(weights, biases, config)


def _sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_cache(net: ValueNetwork, x: np.ndarray):
    activations = [x]
    pre = []
    a = x
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        pre.append(z)
        a = _sigmoid(z) if k == last else np.maximum(z, 0.0)
        activations.append(a)
    return pre, activations


def forward(network: ValueNetwork, features) -> np.ndarray | float:
    """Resources-left ratio for one feature vector (float) or a batch (array)."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x2 = x.reshape(1, -1) if single else x
    if x2.shape[1] != network.input_width:
        raise DimensionError(f"expected {network.input_width} features, got {x2.shape[1]}")
    _, acts = _forward_cache(network, x2)
    y = np.clip(acts[-1][:, 0], _OUT_LO, _OUT_HI)
    return float(y[0]) if single else y


def loss_and_gradients(network: ValueNetwork, x: np.ndarray, t: np.ndarray):
    """Mean squared error over a batch and its gradient for every parameter."""
    pre, acts = _forward_cache(network, x)
    y = acts[-1][:, 0]
    resid = y - t
    n = x.shape[0]
    loss = float(np.mean(resid**2))
    # d loss / d z_out through the sigmoid
    delta = (2.0 / n) * resid[:, None] * y[:, None] * (1.0 - y[:, None])
    grads_w = [None] * len(network.weights)
    grads_b = [None] * len(network.weights)
    for k in range(len(network.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ network.weights[k].T) * (pre[k - 1] > 0)
    return loss, grads_w, grads_b


def mse(network: ValueNetwork, x: np.ndarray, t: np.ndarray) -> float:
    _, acts = _forward_cache(network, x)
    return float(np.mean((acts[-1][:, 0] - t) ** 2))


def samples_to_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([s.features for s in samples], dtype=float)
    t = np.array([s.target for s in samples], dtype=float)
    return x, t


def train(config: NetworkConfig, samples, *, targets: np.ndarray | None = None):
    """Fit a network to ``(features, target)`` samples by mini-batch descent.

    ``samples`` is either a sequence of McSample or, with ``targets`` given, a
    feature matrix. Returns ``(network, report)``.
    """
    if targets is None:
        if len(samples) == 0:
            raise ValueError("no training samples")
        x, t = samples_to_arrays(samples)
    else:
        x, t = np.asarray(samples, dtype=float), np.asarray(targets, dtype=float)
    if x.shape[0] == 0:
        raise ValueError("no training samples")
    if x.shape[1] != config.input_width:
        raise DimensionError(f"features have width {x.shape[1]}, config expects {config.input_width}")
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("targets must lie in [0, 1]")

    rng = np.random.default_rng(config.seed)
    net = init_network(config, rng)
    n = x.shape[0]
    lr = config.learning_rate
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        # overflow surfaces as a non-finite loss below
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, config.batch_size):
                idx = order[start : start + config.batch_size]
                _, gw, gb = loss_and_gradients(net, x[idx], t[idx])
                for k in range(len(net.weights)):
                    net.weights[k] -= lr * gw[k]
                    net.biases[k] -= lr * gb[k]
            loss = mse(net, x, t)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch, loss)
        history.append(loss)
    return net, TrainingReport(history, config, n)


# --------------------------------------------------------------------------
# gradient verification


def _flat(arrays) -> np.ndarray:
    return np.concatenate([a.ravel() for a in arrays])


def gradient_pair(network: ValueNetwork, sample, epsilon: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Analytic and central-difference gradients of the single-sample loss."""
    x = np.asarray(sample.features, dtype=float).reshape(1, -1)
    t = np.array([sample.target], dtype=float)
    _, gw, gb = loss_and_gradients(network, x, t)
    analytic = _flat([g for pair in zip(gw, gb) for g in pair])
    probe = network.copy()
    numeric = []
    for param in probe.parameters():
        flat = param.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = mse(probe, x, t)
            flat[i] = orig - epsilon
            down = mse(probe, x, t)
            flat[i] = orig
            numeric.append((up - down) / (2 * epsilon))
    return analytic, np.array(numeric)


def gradient_check(network: ValueNetwork, sample, epsilon: float = 1e-5, floor: float = 1e-7) -> float:
    """Largest relative disagreement between backprop and finite differences.

    Relative error is ``|a - n| / max(|a| + |n|, floor)``; the floor keeps
    parameters with vanishing gradient from dividing roundoff by zero.
    """
    if not 0 < epsilon <= 1e-3:
        raise ValueError("epsilon must lie in (0, 1e-3]")
    a, n = gradient_pair(network, sample, epsilon)
    return float(np.max(np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), floor)))


# --------------------------------------------------------------------------
# persistence


def _hex_nested(arr: np.ndarray):
    return [_hex_nested(a) for a in arr] if arr.ndim > 1 else [float(v).hex() for v in arr]


def _from_hex(nested) -> np.ndarray:
    def conv(v):
        return [conv(x) for x in v] if isinstance(v, list) else float.fromhex(v)

    return np.array(conv(nested), dtype=float)


def network_to_dict(network: ValueNetwork) -> dict:
    return {
        "config": network.config.to_dict() if network.config else None,
        "layer_widths": network.layer_widths,
        "activations": list(network.activations),
        "weights": [_hex_nested(w) for w in network.weights],
        "biases": [_hex_nested(b) for b in network.biases],
    }


def network_from_dict(d: dict) -> ValueNetwork:
    weights = [_from_hex(w).reshape(a, b) for w, a, b in zip(d["weights"], d["layer_widths"], d["layer_widths"][1:])]
    biases = [_from_hex(b).reshape(-1) for b in d["biases"]]
    config = NetworkConfig.from_dict(d["config"]) if d.get("config") else None
    return ValueNetwork(weights, biases, config, tuple(d["activations"]))


def dumps_network(network: ValueNetwork) -> str:
    return json.dumps(network_to_dict(network))


def loads_network(text: str) -> ValueNetwork:
    return network_from_dict(json.loads(text))


def resources_left(network: ValueNetwork, states: Sequence) -> np.ndarray:
    """Predicted resources left for a batch of raw state tuples."""
    comps = np.asarray(states, dtype=float)
    return forward(network, normalize_many(comps))
