"""Adam training loop, losses, evaluation and a seeded random-search tuner."""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError, SpinRFError

log = logging.getLogger(__name__)

CROSS_ENTROPY = "cross_entropy"
MSE = "mse"


@dataclass
class TrainConfig:
    learning_rate: float = 1.07e-5
    epochs: int = 50
    batch_size: int = 32
    loss: str = CROSS_ENTROPY
    seed: int = 0
    repeats: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    #: MSE target for class 1 (outputs in uW for an output oscillator).
    mse_target: float = 1.0

    def __post_init__(self):
        # lr = 0 is allowed: it freezes the model, which is useful as a control.
        if not self.learning_rate >= 0.0:
            raise DomainError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")
        if self.loss not in (CROSS_ENTROPY, MSE):
            raise DomainError(f"unknown loss {self.loss!r}")


# -- losses --------------------------------------------------------------

def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    """Mean cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), labels]))
    grad = softmax(logits)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def mse(outputs, labels, target=1.0):
    """Mean squared error against one-hot targets scaled by ``target``.

    A single-output network is trained toward ``target * label``.
    """
    t = _targets(outputs, labels, target)
    diff = outputs - t
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def _targets(outputs, labels, target):
    if outputs.shape[1] == 1:
        return (labels.astype(float) * target)[:, None]
    t = np.zeros_like(outputs)
    t[np.arange(outputs.shape[0]), labels] = target
    return t


def predict(outputs, threshold=None):
    """Class indices. Ties resolve to the lowest index; one output is thresholded."""
    if outputs.shape[1] == 1:
        return (outputs[:, 0] > threshold).astype(int)
    return np.argmax(outputs, axis=1)


def accuracy(outputs, labels, threshold=None):
    return float(np.mean(predict(outputs, threshold) == labels))


# -- optimizer -----------------------------------------------------------

@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8, units=None):
    """One Adam update of ``params`` in place.

    ``units`` maps a parameter name to its stored-unit size per optimizer
    unit; gradients are converted before the moment updates and steps are
    converted back.
    """
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {k} at step {state.step + 1}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for k, g in grads.items():
        u = 1.0 if units is None else units[k]
        g = g * u
        m = state.m.get(k)
        if m is None:
            m = state.m[k] = np.zeros_like(g)
            state.v[k] = np.zeros_like(g)
        v = state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        params[k] -= (lr * u) * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state


# -- training ------------------------------------------------------------

def _loss(cfg, outputs, labels):
    if cfg.loss == CROSS_ENTROPY:
        return cross_entropy(outputs, labels)
    return mse(outputs, labels, cfg.mse_target)


def _threshold(cfg, model):
    return 0.5 * cfg.mse_target if model.n_outputs == 1 else None


def evaluate(model, x, y, cfg=None, batch_size=1024):
    """(loss, accuracy) over a whole split."""
    cfg = cfg or TrainConfig()
    if len(y) == 0:
        return math.nan, math.nan
    outs = np.concatenate(
        [model.forward(x[i:i + batch_size]) for i in range(0, len(y), batch_size)]
    )
    loss, _ = _loss(cfg, outs, y)
    return loss, accuracy(outs, y, _threshold(cfg, model))


@dataclass
class TrainResult:
    model: object
    best_model: object
    best_epoch: int
    history: list

    @property
    def final(self):
        return self.history[-1]


def train(model, x_train, y_train, cfg, x_test=None, y_test=None, callback=None):
    """Train ``model`` in place with Adam.

    Returns a :class:`TrainResult`; ``history`` has one record per epoch
    with the mean minibatch loss and the accuracies measured after the epoch.
    The best model is the one with the highest test accuracy (training
    accuracy when no test split is given); the earliest epoch wins ties.
    """
    x_train = np.asarray(x_train, dtype=float)
    y_train = np.asarray(y_train)
    if len(y_train) == 0:
        raise SpinRFError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    opt = AdamState()
    units = model.param_units()
    thr = _threshold(cfg, model)
    history = []
    best = (-1.0, 0, model.copy())
    n = len(y_train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            out, cache = model.forward(x_train[idx], cache=True)
            loss, g = _loss(cfg, out, y_train[idx])
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}")
            total += loss * len(idx)
            grads = model.backward(cache, g)
            adam_step(model.parameters(), grads, opt, cfg.learning_rate,
                      cfg.beta1, cfg.beta2, cfg.eps, units)
            model.project()
        _, train_acc = evaluate(model, x_train, y_train, cfg)
        test_acc = math.nan
        if x_test is not None and len(y_test):
            _, test_acc = evaluate(model, np.asarray(x_test, dtype=float), np.asarray(y_test), cfg)
        rec = {"epoch": epoch, "loss": total / n, "train_acc": train_acc, "test_acc": test_acc}
        history.append(rec)
        log.debug("epoch %d loss %.6g train %.4f test %.4f", epoch, rec["loss"], train_acc, test_acc)
        score = train_acc if math.isnan(test_acc) else test_acc
        if score > best[0]:
            best = (score, epoch, model.copy())
        if callback is not None:
            callback(rec)
    return TrainResult(model, best[2], best[1], history)


HISTORY_COLUMNS = ("epoch", "loss", "train_acc", "test_acc")


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS)
        w.writeheader()
        for rec in history:
            w.writerow({k: repr(float(rec[k])) if k != "epoch" else rec[k] for k in HISTORY_COLUMNS})


def write_history_json(history, path):
    with open(path, "w") as fh:
        json.dump([_jsonable(r) for r in history], fh, indent=1)


def _jsonable(rec):
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in rec.items()}


# -- hyperparameter search ----------------------------------------------

@dataclass
class HyperSearchSpace:
    """Ranges are (low, high). ``None`` keeps that hyperparameter out of the search."""

    learning_rate: tuple = (1e-6, 1e-3)
    g_m: tuple = None
    v_layer: tuple = None
    n_trials: int = 100
    objective_repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_trials < 1:
            raise DomainError("n_trials must be >= 1")
        if self.objective_repeats < 1:
            raise DomainError("objective_repeats must be >= 1")
        for name in ("learning_rate", "g_m", "v_layer"):
            r = getattr(self, name)
            if r is not None and not r[0] <= r[1]:
                raise DomainError(f"empty range for {name}: {r}")
        for name in ("learning_rate", "g_m"):
            r = getattr(self, name)
            if r is not None and r[0] <= 0:
                raise DomainError(f"{name} is searched log-uniformly and needs a positive range")

    def sample(self, rng):
        def loguniform(r):
            return float(math.exp(rng.uniform(math.log(r[0]), math.log(r[1]))))

        trial = {"learning_rate": loguniform(self.learning_rate)}
        if self.g_m is not None:
            trial["g_m"] = loguniform(self.g_m)
        if self.v_layer is not None:
            trial["v_layer"] = float(rng.uniform(*self.v_layer))
        return trial


@dataclass
class SearchResult:
    best_params: dict
    best_score: float
    trials: list


def hyper_search(space, train_fn, log_path=None):
    """Seeded random search.

    ``train_fn(params, seed)`` returns a validation accuracy. Each trial is
    scored by the mean over ``objective_repeats`` seeds; failing trials are
    logged with their error and skipped.
    """
    rng = np.random.default_rng(space.seed)
    trials = []
    for t in range(space.n_trials):
        params = space.sample(rng)
        seeds = [space.seed * 1_000_003 + t * 1009 + r for r in range(space.objective_repeats)]
        rec = {"trial": t, **params}
        try:
            scores = [float(train_fn(params, s)) for s in seeds]
            rec["mean_accuracy"] = float(np.mean(scores))
            rec["std_accuracy"] = float(np.std(scores))
            rec["error"] = ""
        except (SpinRFError, FloatingPointError, ValueError) as exc:
            rec["mean_accuracy"] = math.nan
            rec["std_accuracy"] = math.nan
            rec["error"] = str(exc)
            log.warning("trial %d failed: %s", t, exc)
        trials.append(rec)
    if log_path is not None:
        write_trials(trials, log_path)
    ok = [r for r in trials if not math.isnan(r["mean_accuracy"])]
    if not ok:
        raise SpinRFError(f"all {len(trials)} trials failed; see trial log")
    best = max(ok, key=lambda r: r["mean_accuracy"])  # first maximum wins
    keys = [k for k in ("learning_rate", "g_m", "v_layer") if k in best]
    return SearchResult({k: best[k] for k in keys}, best["mean_accuracy"], trials)


def write_trials(trials, path):
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump([_jsonable(r) for r in trials], fh, indent=1)
        return
    cols = list(trials[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(trials)


def config_dict(cfg):
    return asdict(cfg)
