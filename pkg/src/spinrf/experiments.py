"""Reusable training recipes shared by the command line and the acceptance checks."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import datasets, network, synapse
from .devices import OscillatorParams, ResonatorParams
from .errors import DomainError
from .training import TrainConfig, evaluate, predict, train

SOFTWARE_LR = 0.06
PHYSICAL_LR = 1.07e-5

#: Maximum frequencies of the frequency-range study on images, Hz.
SWEEP_F_MAX = (100e6, 500e6, 1e9, 5e9, 10e9, 20e9)
SWEEP_F_MIN = 50e6


@dataclass
class ModelSpec:
    """Architecture and coupling constants of a network to build."""

    kind: str = "physical"
    n_hidden: int = 128
    g_m: float = 1.81e-3
    v_layer: float = 0.013
    sign_mode: str = synapse.ALTERNATING
    hidden_band: tuple = (1e9, 5e9)
    output_neuron: bool = False
    activation: str = "relu"

    def __post_init__(self):
        if self.kind not in ("physical", "software"):
            raise DomainError(f"model kind must be physical or software, got {self.kind!r}")
        if self.n_hidden < 0:
            raise DomainError("n_hidden must be >= 0")


def build(spec, grid, n_outputs, rng):
    if spec.kind == "software":
        return network.build_software(grid.n_bins, spec.n_hidden, n_outputs, rng,
                                      activation=spec.activation)
    return network.build_physical(
        grid, spec.n_hidden, n_outputs, rng, g_m=spec.g_m, v_layer=spec.v_layer,
        hidden_band=spec.hidden_band, sign_mode=spec.sign_mode,
        output_neuron=spec.output_neuron,
    )


def default_lr(kind):
    return SOFTWARE_LR if kind == "software" else PHYSICAL_LR


def train_on_dataset(ds, spec, cfg):
    """Build with ``cfg.seed`` and train on the dataset's train split."""
    rng = np.random.default_rng(cfg.seed)
    model = build(spec, ds.grid, ds.n_classes, rng)
    x_tr, y_tr = ds.train
    x_te, y_te = ds.test
    return train(model, x_tr, y_tr, cfg, x_te if len(y_te) else None, y_te if len(y_te) else None)


def validation_split(ds, fraction=0.2, seed=0):
    """Training samples only, re-tagged so a stratified ``fraction`` is held out.

    Hyperparameter search scores trials on this held-out part and never sees
    the dataset's test split.
    """
    if not 0.0 < fraction < 1.0:
        raise DomainError("validation fraction must lie in (0, 1)")
    x, y = ds.train
    n_val = int(round(fraction * len(y)))
    if n_val < 1 or n_val >= len(y):
        raise DomainError(f"cannot hold out {fraction:.0%} of {len(y)} training samples")
    split = datasets.stratified_split(y, n_val, seed)
    return datasets.SpectrumDataset(ds.grid, x, y, split, ds.n_classes)


# -- frequency-range study ------------------------------------------------

def neighbor_weight_correlation(weights):
    """Mean Pearson correlation between weight columns of adjacent input bins.

    Columns that are constant over chains carry no correlation information
    and are skipped.
    """
    w = np.asarray(weights, dtype=float)
    a, b = w[:, :-1], w[:, 1:]
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    num = np.sum(a * b, axis=0)
    den = np.sqrt(np.sum(a * a, axis=0) * np.sum(b * b, axis=0))
    ok = den > 0
    if not np.any(ok):
        return math.nan
    return float(np.mean(num[ok] / den[ok]))


@dataclass
class SweepRow:
    f_max: float
    repeat: int
    train_acc: float
    test_acc: float
    neighbor_corr: float


SWEEP_COLUMNS = ("f_max", "repeat", "train_acc", "test_acc", "neighbor_corr")


def sweep_frequency(images, labels, split, f_max_list=SWEEP_F_MAX, f_min=SWEEP_F_MIN,
                    repeats=10, cfg=None, n_chains=10, seed=0, callback=None):
    """Single synaptic layer (``n_chains`` chains x 784 resonators) per ``f_max``.

    Repeat ``r`` at every ``f_max`` uses seed ``seed * 1000 + r`` so that
    frequency ranges are compared on the same initial draws.
    """
    cfg = cfg or TrainConfig(learning_rate=PHYSICAL_LR, epochs=20)
    rows = []
    for f_max in f_max_list:
        if not f_max > f_min:
            raise DomainError(f"f_max {f_max} must exceed f_min {f_min}")
        ds = datasets.mnist_as_spectrum(images, labels, f_min, f_max, split)
        x_tr, y_tr = ds.train
        x_te, y_te = ds.test
        for r in range(repeats):
            s = seed * 1000 + r
            rng = np.random.default_rng(s)
            model = network.build_physical(ds.grid, 0, n_chains, rng, v_layer=0.0)
            c = TrainConfig(**{**cfg.__dict__, "seed": s})
            res = train(model, x_tr, y_tr, c)
            _, tr = evaluate(res.model, x_tr, y_tr, c)
            _, te = evaluate(res.model, x_te, y_te, c) if len(y_te) else (math.nan, math.nan)
            w = synapse.effective_weights(res.model.layer1, ds.grid)
            row = SweepRow(f_max, r, tr, te, neighbor_weight_correlation(w))
            rows.append(row)
            if callback is not None:
                callback(row)
    return rows


def software_single_layer(images, labels, split, repeats=10, cfg=None, seed=0):
    """Test accuracies of a linear softmax classifier on the same split."""
    cfg = cfg or TrainConfig(learning_rate=1e-3, epochs=20)
    ds = datasets.mnist_as_spectrum(images, labels, SWEEP_F_MIN, SWEEP_F_MAX[-1], split)
    x_tr, y_tr = ds.train
    x_te, y_te = ds.test
    out = []
    for r in range(repeats):
        s = seed * 1000 + r
        model = network.build_software(784, 0, 10, np.random.default_rng(s))
        res = train(model, x_tr, y_tr, TrainConfig(**{**cfg.__dict__, "seed": s}))
        out.append(evaluate(res.model, x_te, y_te, cfg)[1])
    return out


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(float(r.f_max)), r.repeat, repr(r.train_acc), repr(r.test_acc),
                        repr(r.neighbor_corr)])


def sweep_summary(rows):
    """Per-f_max mean/std of test accuracy and mean neighbour correlation."""
    out = {}
    for f in sorted({r.f_max for r in rows}):
        sel = [r for r in rows if r.f_max == f]
        acc = np.array([r.test_acc for r in sel])
        out[f] = {
            "mean_test_acc": float(np.mean(acc)),
            "std_test_acc": float(np.std(acc)),
            "mean_neighbor_corr": float(np.mean([r.neighbor_corr for r in sel])),
            "repeats": len(sel),
        }
    return out


# -- two-tone nonlinear tasks --------------------------------------------------

@dataclass
class Task2DConfig:
    """Offline software training followed by weight programming.

    The software network has the physical network's activations and its
    weights are clipped to what one resonator per input can reach at the
    chosen transconductances, so every trained network can be programmed.
    """

    n_samples: int = 2000
    test_fraction: float = 0.25
    seed: int = 0
    g_m: float = 5e-3
    output_g_m: float = 1e-2
    learning_rate: float = 0.01
    epochs: int = 400
    batch_size: int = 32
    max_restarts: int = 8
    target_train_acc: float = 0.995
    finetune_epochs: int = 0
    finetune_lr: float = 1e-5
    grid_resolution: int = 91
    layer1_band: tuple = (100e6, 600e6)
    #: fraction of the reachable weight range the software weights may use
    weight_headroom: float = 0.95

    def __post_init__(self):
        if self.max_restarts < 1:
            raise DomainError("max_restarts must be >= 1")
        if not 0.0 < self.weight_headroom <= 1.0:
            raise DomainError("weight_headroom must lie in (0, 1]")
        if self.grid_resolution < 2:
            raise DomainError("grid_resolution must be >= 2")


@dataclass
class Task2DResult:
    task_id: int
    software_train_acc: float
    software_test_acc: float
    train_acc: float
    test_acc: float
    restarts: int
    weight_error_uv: float
    model: object = field(repr=False, default=None)
    software: object = field(repr=False, default=None)

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "task_id", "software_train_acc", "software_test_acc", "train_acc", "test_acc",
            "restarts", "weight_error_uv")}


def _weight_bound(g_m, osc, rp, headroom):
    """Largest software weight (threshold units per uW) one resonator can program."""
    return headroom * rp.k_sd * g_m * 1e-6 / osc.i_th


def physical_from_software(sw, input_grid, g_m, output_g_m, layer1_band,
                           resonator_params=None, osc_params=None, hidden_band=(1e9, 5e9)):
    """Program a physical 2-layer network with an output oscillator from ``sw``.

    Software pre-activations are in threshold-current units, so a weight
    ``w`` becomes ``w * I_th / g_m`` volts per uW and a bias ``b`` becomes
    ``b * I_th / g_m`` volts. Returns the model and the worst weight error.
    """
    rp = resonator_params or ResonatorParams()
    op = osc_params or OscillatorParams()
    n_hidden = sw.w1.shape[0]
    rng = np.random.default_rng(0)  # frequencies are overwritten below
    model = network.build_physical(
        input_grid, n_hidden, sw.n_outputs, rng, g_m=g_m, v_layer=0.0,
        layer1_band=layer1_band, hidden_band=hidden_band, output_neuron=True,
        output_g_m=output_g_m, resonator_params=rp, osc_params=op,
    )
    uv = synapse.UV_PER_V
    e1 = synapse.program_weights(model.layer1, input_grid, sw.w1 * op.i_th / g_m * uv)
    model.layer1.v_chains[:] = sw.b1 * op.i_th / g_m
    e2 = synapse.program_weights(model.layer2, model.layer2_grid,
                                 sw.w2 * op.i_th / output_g_m * uv)
    model.layer2.v_chains[:] = sw.b2 * op.i_th / output_g_m
    return model, max(e1, e2)


def _software_2d(rng, b1, b2, centre, s1=None, s2=None):
    s1 = b1 if s1 is None else min(s1, b1)
    s2 = b2 if s2 is None else min(s2, b2)
    w1 = rng.uniform(-s1, s1, (2, 2))
    w2 = rng.uniform(-s2, s2, (1, 2))
    # start every oscillator inside its active range for a typical input
    return network.SoftwareModel(
        w1, 2.5 - w1 @ centre, w2, 2.5 - w2 @ np.full(2, 0.5),
        activation="stno", output_activation="stno", w1_bound=b1, w2_bound=b2,
    )


def run_task2d(task_id, cfg=None):
    """Train, program and evaluate the 2-2-1 network on one built-in task."""
    cfg = cfg or Task2DConfig()
    ds = datasets.make_task2d(task_id, cfg.n_samples, cfg.seed, cfg.test_fraction)
    x_tr, y_tr = ds.train
    x_te, y_te = ds.test
    has_test = len(y_te) > 0
    rp, op = ResonatorParams(), OscillatorParams()
    b1 = _weight_bound(cfg.g_m, op, rp, cfg.weight_headroom)
    b2 = _weight_bound(cfg.output_g_m, op, rp, cfg.weight_headroom)
    centre = np.full(2, np.mean(datasets.TASK2D_RANGE))
    tc = TrainConfig(learning_rate=cfg.learning_rate, epochs=cfg.epochs,
                     batch_size=cfg.batch_size, loss="mse", mse_target=1.0)
    best = None
    for r in range(cfg.max_restarts):
        seed = cfg.seed * 1000 + r
        sw = _software_2d(np.random.default_rng(seed), b1, b2, centre)
        res = train(sw, x_tr, y_tr, TrainConfig(**{**tc.__dict__, "seed": seed}))
        acc = evaluate(res.model, x_tr, y_tr, tc)[1]
        if best is None or acc > best[0]:
            best = (acc, res.model, r + 1)
        if acc >= cfg.target_train_acc:
            break
    sw_acc, sw, _ = best
    restarts = r + 1
    model, err = physical_from_software(sw, ds.grid, cfg.g_m, cfg.output_g_m, cfg.layer1_band, rp, op)
    if cfg.finetune_epochs > 0:
        ft = TrainConfig(learning_rate=cfg.finetune_lr, epochs=cfg.finetune_epochs,
                         batch_size=cfg.batch_size, loss="mse", mse_target=1.0, seed=cfg.seed)
        tuned = train(model.copy(), x_tr, y_tr, ft).model
        if evaluate(tuned, x_tr, y_tr, tc)[1] > evaluate(model, x_tr, y_tr, tc)[1]:
            model = tuned
    nan = math.nan
    return Task2DResult(
        task_id=task_id,
        software_train_acc=sw_acc,
        software_test_acc=evaluate(sw, x_te, y_te, tc)[1] if has_test else nan,
        train_acc=evaluate(model, x_tr, y_tr, tc)[1],
        test_acc=evaluate(model, x_te, y_te, tc)[1] if has_test else nan,
        restarts=restarts,
        weight_error_uv=err,
        model=model,
        software=sw,
    )


def decision_grid(model, resolution, lo=datasets.TASK2D_RANGE[0], hi=datasets.TASK2D_RANGE[1]):
    """(P1, P2, predicted class) on a ``resolution`` x ``resolution`` lattice."""
    axis = np.linspace(lo, hi, resolution)
    p1, p2 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([p1.ravel(), p2.ravel()])
    cls = predict(model.forward(pts), threshold=0.5)
    return np.column_stack([pts, cls])


def write_decision_grid(grid, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("p1_uw", "p2_uw", "predicted_class"))
        for p1, p2, c in grid:
            w.writerow((repr(float(p1)), repr(float(p2)), int(c)))
