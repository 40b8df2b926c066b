"""Feed-forward network machinery: parameter containers, forward/backward
passes, losses, optimizers, a finite-difference gradient checker, and a
scikit-learn style classifier wrapper.

Architecture family: fully connected layers with ReLU hidden activations and
a linear, sigmoid, or softmax output head. Zero hidden layers with a softmax
head is the multinomial linear model; two hidden layers cover the generator
and discriminator shapes.

Numeric conventions: losses are means over rows plus an optional
l2 * ||W||^2 / 2 penalty on weight matrices (never biases). Binary
cross-entropy is evaluated through log-sum-exp (softplus) on raw logits, so
it stays finite for any finite logit; the +-30 logit clamp applies where
probabilities are emitted, keeping sigmoid outputs strictly inside (0, 1) in
float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .distributions import LabeledDataset
from .errors import ContractViolation, NumericError
from .numkit import Rng, as_matrix, standard_normal

__all__ = [
    "MlpParams",
    "MlpArch",
    "TrainConfig",
    "FitReport",
    "AdamState",
    "init_params",
    "forward",
    "loss_and_grad",
    "backprop_from_output",
    "predict",
    "sgd_step",
    "adam_step",
    "init_adam",
    "train_classifier",
    "grad_check",
    "MlpClassifier",
]

HEADS = ("linear", "sigmoid", "softmax")
LOSSES = ("softmax-CE", "binary-CE")

# sigmoid(30) differs from 1.0 by ~9.4e-14, still representable in float64
_LOGIT_CLAMP = 30.0


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------

@dataclass
class MlpParams:
    """Layer parameters: weights[i] is (in_i, out_i), biases[i] is (out_i,).

    Consecutive layers chain (out_i == in_{i+1}); ``head`` names the output
    non-linearity. The same container carries gradients, which share shapes.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head: str

    def __post_init__(self):
        if self.head not in HEADS:
            raise ContractViolation(f"MlpParams: unknown head {self.head!r}")
        if not self.weights or len(self.weights) != len(self.biases):
            raise ContractViolation("MlpParams: need matching weight/bias lists")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ContractViolation(f"MlpParams: layer {i} shapes inconsistent")
            if i + 1 < len(self.weights) and w.shape[1] != self.weights[i + 1].shape[0]:
                raise ContractViolation(f"MlpParams: layers {i} and {i + 1} do not chain")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            head=self.head,
        )


@dataclass(frozen=True)
class MlpArch:
    """Shape template from which parameters are initialized."""

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    head: str

    def __post_init__(self):
        if self.head not in HEADS:
            raise ContractViolation(f"MlpArch: unknown head {self.head!r}")
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ContractViolation("MlpArch: all layer sizes must be >= 1")


def init_params(arch: MlpArch, rng: Rng) -> MlpParams:
    """He-scaled weights for ReLU layers, 1/fan_in for the output, zero bias."""
    sizes = (arch.input_dim, *arch.hidden, arch.output_dim)
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        last = i == len(sizes) - 2
        scale = np.sqrt((1.0 if last else 2.0) / fan_in)
        weights.append(scale * standard_normal(rng, fan_in, fan_out))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases, head=arch.head)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the mini-batch training loops."""

    learning_rate: float = 1e-3
    batch_size: int = 128
    iterations: int = 5000
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ContractViolation("TrainConfig: learning_rate must be > 0")
        if self.batch_size < 1 or self.iterations < 1:
            raise ContractViolation("TrainConfig: batch_size and iterations must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ContractViolation(f"TrainConfig: unknown optimizer {self.optimizer!r}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ContractViolation("TrainConfig: betas must lie in [0, 1)")
        if self.l2 < 0.0:
            raise ContractViolation("TrainConfig: l2 must be >= 0")


@dataclass(frozen=True)
class FitReport:
    """What training left behind: final loss, train accuracy, loss trace."""

    final_loss: float
    train_accuracy: float
    loss_trace: np.ndarray


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------

def _relu(u: np.ndarray) -> np.ndarray:
    return np.maximum(u, 0.0)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def _sigmoid_clamped(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -_LOGIT_CLAMP, _LOGIT_CLAMP)))


def _trace(params: MlpParams, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Post-activation values per layer plus the final-layer logits."""
    x = as_matrix(x, "network input")
    if x.shape[1] != params.input_dim:
        raise ContractViolation(
            f"network input has {x.shape[1]} columns, expected {params.input_dim}"
        )
    acts = [x]
    h = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        h = _relu(h @ w + b)
        acts.append(h)
    logits = h @ params.weights[-1] + params.biases[-1]
    return acts, logits


def forward(params: MlpParams, x) -> np.ndarray:
    """Per-row network output after the head non-linearity."""
    _, logits = _trace(params, x)
    if params.head == "linear":
        return logits
    if params.head == "sigmoid":
        return _sigmoid_clamped(logits)
    return _softmax(logits)


def _loss_and_logit_grad(
    logits: np.ndarray, target, loss: str
) -> tuple[float, np.ndarray]:
    n = logits.shape[0]
    if loss == "softmax-CE":
        y = np.ascontiguousarray(target, dtype=np.int64)
        if y.ndim != 1 or y.shape[0] != n:
            raise ContractViolation("softmax-CE: target must be one label per row")
        c = logits.shape[1]
        if y.size and (y.min() < 0 or y.max() >= c):
            raise ContractViolation(f"softmax-CE: labels must lie in [0, {c})")
        shifted = logits - np.max(logits, axis=1, keepdims=True)
        log_norm = np.log(np.sum(np.exp(shifted), axis=1))
        value = float(np.mean(log_norm - shifted[np.arange(n), y]))
        dz = _softmax(logits)
        dz[np.arange(n), y] -= 1.0
        return value, dz / n
    # binary-CE: -[t log p + (1-t) log(1-p)] == softplus(z) - t z, per row
    t = np.ascontiguousarray(target, dtype=np.float64).reshape(-1)
    if t.shape[0] != n:
        raise ContractViolation("binary-CE: target must be one value per row")
    if t.size and (t.min() < 0.0 or t.max() > 1.0):
        raise ContractViolation("binary-CE: targets must lie in [0, 1]")
    z = logits.reshape(-1)
    value = float(np.mean(np.logaddexp(0.0, z) - t * z))
    # sigma(z) = exp(-softplus(-z)): stable for any finite logit
    dz = (np.exp(-np.logaddexp(0.0, -z)) - t) / n
    return value, dz.reshape(n, 1)


def _check_loss_head(params: MlpParams, loss: str) -> None:
    if loss not in LOSSES:
        raise ContractViolation(f"unknown loss {loss!r}")
    if loss == "softmax-CE" and params.head != "softmax":
        raise ContractViolation("softmax-CE requires a softmax head")
    if loss == "binary-CE":
        if params.head != "sigmoid":
            raise ContractViolation("binary-CE requires a sigmoid head")
        if params.output_dim != 1:
            raise ContractViolation("binary-CE requires a single output unit")


def _backprop(
    params: MlpParams, acts: list[np.ndarray], delta: np.ndarray, l2: float
) -> tuple[MlpParams, np.ndarray]:
    """Propagate a logit-space delta back through the layers.

    Returns gradients in an MlpParams-shaped container and the gradient with
    respect to the network input.
    """
    g_w = [None] * params.n_layers
    g_b = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        g_w[i] = acts[i].T @ delta + l2 * params.weights[i]
        g_b[i] = np.sum(delta, axis=0)
        delta = delta @ params.weights[i].T
        if i > 0:
            # ReLU mask; post-activation > 0 iff pre-activation > 0
            delta = delta * (acts[i] > 0.0)
    grads = MlpParams(weights=g_w, biases=g_b, head=params.head)
    return grads, delta


def loss_and_grad(
    params: MlpParams, x, target, loss: str, l2: float = 0.0
) -> tuple[float, MlpParams]:
    """Mean loss over rows (plus l2 penalty) and exact analytic gradients."""
    _check_loss_head(params, loss)
    acts, logits = _trace(params, x)
    value, delta = _loss_and_logit_grad(logits, target, loss)
    if l2 > 0.0:
        value += 0.5 * l2 * float(sum(np.sum(w * w) for w in params.weights))
    grads, _ = _backprop(params, acts, delta, l2)
    return value, grads


def loss_and_input_grad(
    params: MlpParams, x, target, loss: str
) -> tuple[float, np.ndarray]:
    """Loss plus its gradient with respect to the input rows.

    This is the hook that chains a generator into the discriminator: evaluate
    the discriminator's loss on generated rows and push the input gradient
    back through the generator with :func:`backprop_from_output`.
    """
    _check_loss_head(params, loss)
    acts, logits = _trace(params, x)
    value, delta = _loss_and_logit_grad(logits, target, loss)
    _, dx = _backprop(params, acts, delta, 0.0)
    return value, dx


def backprop_from_output(params: MlpParams, x, output_grad: np.ndarray) -> MlpParams:
    """Parameter gradients of a linear-head network given dLoss/dOutput."""
    if params.head != "linear":
        raise ContractViolation("backprop_from_output: requires a linear head")
    acts, logits = _trace(params, x)
    if output_grad.shape != logits.shape:
        raise ContractViolation("backprop_from_output: output_grad shape mismatch")
    grads, _ = _backprop(params, acts, output_grad, 0.0)
    return grads


def predict(params: MlpParams, x) -> np.ndarray:
    """Class-posterior matrix; argmax (lowest index on ties) gives labels.

    A sigmoid head is expanded to the two-column form (1 - p, p); a linear
    head has no probabilistic reading and is rejected.
    """
    if params.head == "linear":
        raise ContractViolation("predict: linear head has no probabilistic reading")
    out = forward(params, x)
    if params.head == "sigmoid":
        if out.shape[1] != 1:
            raise ContractViolation("predict: sigmoid head must have one output unit")
        return np.hstack([1.0 - out, out])
    return out


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def sgd_step(params: MlpParams, grads: MlpParams, lr: float) -> MlpParams:
    return MlpParams(
        weights=[w - lr * g for w, g in zip(params.weights, grads.weights)],
        biases=[b - lr * g for b, g in zip(params.biases, grads.biases)],
        head=params.head,
    )


@dataclass
class AdamState:
    """First/second moment accumulators plus the step count."""

    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0


def init_adam(params: MlpParams) -> AdamState:
    return AdamState(
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
    )


def adam_step(
    params: MlpParams,
    grads: MlpParams,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> MlpParams:
    """Bias-corrected Adam update; mutates ``state``, returns new params."""
    state.t += 1
    corr1 = 1.0 - beta1 ** state.t
    corr2 = 1.0 - beta2 ** state.t
    new_w, new_b = [], []
    for i in range(params.n_layers):
        state.m_w[i] = beta1 * state.m_w[i] + (1.0 - beta1) * grads.weights[i]
        state.v_w[i] = beta2 * state.v_w[i] + (1.0 - beta2) * grads.weights[i] ** 2
        state.m_b[i] = beta1 * state.m_b[i] + (1.0 - beta1) * grads.biases[i]
        state.v_b[i] = beta2 * state.v_b[i] + (1.0 - beta2) * grads.biases[i] ** 2
        new_w.append(
            params.weights[i]
            - lr * (state.m_w[i] / corr1) / (np.sqrt(state.v_w[i] / corr2) + eps)
        )
        new_b.append(
            params.biases[i]
            - lr * (state.m_b[i] / corr1) / (np.sqrt(state.v_b[i] / corr2) + eps)
        )
    return MlpParams(weights=new_w, biases=new_b, head=params.head)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

class _BatchCursor:
    """Seeded epoch shuffling: deal mini-batches, reshuffle when exhausted.

    A trailing partial epoch segment shorter than the batch size is dropped;
    datasets smaller than one batch are used whole every iteration.
    """

    def __init__(self, n: int, batch_size: int, rng: Rng):
        self.n = n
        self.batch = min(batch_size, n)
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next_batch(self) -> np.ndarray:
        if self.pos + self.batch > self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        out = self.order[self.pos : self.pos + self.batch]
        self.pos += self.batch
        return out


def _loss_for_head(head: str) -> str:
    return "binary-CE" if head == "sigmoid" else "softmax-CE"


def train_classifier(
    data: LabeledDataset, arch: MlpArch, cfg: TrainConfig
) -> tuple[MlpParams, FitReport]:
    """Mini-batch training of a classifier on a labeled dataset.

    Deterministic given the config seed: initialization and batch shuffling
    both draw from one generator seeded with ``cfg.seed``. The learning rate
    drops once, by 10x, at 80% of the iteration budget. The loss trace logs
    about one batch loss per percent of progress.
    """
    if data.n < 1:
        raise ContractViolation("train_classifier: dataset is empty")
    if arch.input_dim != data.dim:
        raise ContractViolation("train_classifier: arch input dim != data dim")
    if arch.head == "softmax":
        if arch.output_dim != data.class_count:
            raise ContractViolation("train_classifier: output dim != class count")
        targets = data.y
    elif arch.head == "sigmoid":
        if data.class_count != 2 or arch.output_dim != 1:
            raise ContractViolation(
                "train_classifier: sigmoid head needs 2 classes and one output unit"
            )
        targets = data.y.astype(np.float64)
    else:
        raise ContractViolation("train_classifier: head must be softmax or sigmoid")

    loss_name = _loss_for_head(arch.head)
    rng = Rng(cfg.seed)
    params = init_params(arch, rng)
    state = init_adam(params) if cfg.optimizer == "adam" else None
    cursor = _BatchCursor(data.n, cfg.batch_size, rng)
    decay_at = int(0.8 * cfg.iterations)
    log_every = max(1, cfg.iterations // 100)
    trace = []

    for t in range(cfg.iterations):
        idx = cursor.next_batch()
        value, grads = loss_and_grad(params, data.x[idx], targets[idx], loss_name, cfg.l2)
        if not np.isfinite(value):
            raise NumericError(f"train_classifier: non-finite loss at iteration {t}")
        lr = cfg.learning_rate * (0.1 if t >= decay_at else 1.0)
        if cfg.optimizer == "adam":
            params = adam_step(params, grads, state, lr, cfg.beta1, cfg.beta2, cfg.eps)
        else:
            params = sgd_step(params, grads, lr)
        if t % log_every == 0 or t == cfg.iterations - 1:
            trace.append(value)

    final_loss, _ = loss_and_grad(params, data.x, targets, loss_name, cfg.l2)
    labels = np.argmax(predict(params, data.x), axis=1)
    accuracy = float(np.mean(labels == data.y))
    report = FitReport(
        final_loss=float(final_loss),
        train_accuracy=accuracy,
        loss_trace=np.array(trace),
    )
    return params, report


# ---------------------------------------------------------------------------
# finite-difference gradient checker
# ---------------------------------------------------------------------------

def grad_check(
    params: MlpParams, x, target, loss: str, l2: float = 0.0, h: float = 1e-5
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    _, grads = loss_and_grad(params, x, target, loss, l2)
    worst = 0.0

    def loss_at(p: MlpParams) -> float:
        return loss_and_grad(p, x, target, loss, l2)[0]

    for kind in ("weights", "biases"):
        for i in range(params.n_layers):
            analytic = getattr(grads, kind)[i]
            array = getattr(params, kind)[i]
            it = np.nditer(array, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                probe = params.copy()
                getattr(probe, kind)[i][idx] = array[idx] + h
                up = loss_at(probe)
                getattr(probe, kind)[i][idx] = array[idx] - h
                down = loss_at(probe)
                fd = (up - down) / (2.0 * h)
                a = float(analytic[idx])
                if abs(a) < 1e-10 and abs(fd) < 1e-10:
                    continue
                worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-8))
    return worst


# ---------------------------------------------------------------------------
# estimator wrapper
# ---------------------------------------------------------------------------

class MlpClassifier(ClassifierMixin, BaseEstimator):
    """Multi-class MLP classifier with the scikit-learn estimator surface.

    ``hidden=()`` gives the multinomial linear model used as the default
    annotator; non-empty ``hidden`` adds ReLU layers. All stochasticity is
    derived from ``seed``, so fits are reproducible bit for bit.
    """

    def __init__(
        self,
        hidden: Sequence[int] = (),
        learning_rate: float = 1e-3,
        batch_size: int = 128,
        iterations: int = 5000,
        optimizer: str = "adam",
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        l2: float = 0.0,
        seed: int = 0,
    ):
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.iterations = iterations
        self.optimizer = optimizer
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.l2 = l2
        self.seed = seed

    def fit(self, X, y) -> "MlpClassifier":
        X = as_matrix(X, "X")
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ContractViolation("fit: y must be 1-D with one label per row of X")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        data = LabeledDataset(
            X, encoded.astype(np.int64), class_count=len(self.classes_), source="external"
        )
        arch = MlpArch(
            input_dim=X.shape[1],
            hidden=tuple(int(h) for h in self.hidden),
            output_dim=len(self.classes_),
            head="softmax",
        )
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            iterations=self.iterations,
            optimizer=self.optimizer,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            l2=self.l2,
            seed=self.seed,
        )
        self.params_, self.fit_report_ = train_classifier(data, arch, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "params_")
        X = as_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ContractViolation(
                f"predict: X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return predict(self.params_, X)

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
