"""Central finite-difference oracle shared by the gradient tests."""

import numpy as np

from spinrf import training
from spinrf.synapse import FrequencyGrid
from spinrf import network


def loss_and_grads(model, x, y, loss=training.CROSS_ENTROPY):
    out, cache = model.forward(x, cache=True)
    cfg = training.TrainConfig(loss=loss)
    val, g = training._loss(cfg, out, y)
    return val, model.backward(cache, g)


def loss_only(model, x, y, loss=training.CROSS_ENTROPY):
    return training._loss(training.TrainConfig(loss=loss), model.forward(x), y)[0]


def _step(name, value, rel_step):
    # resonance frequencies are large and get a relative step; voltages and
    # software weights sit near zero and get an absolute one
    if name.endswith("f_res"):
        return rel_step * abs(value)
    return 1e-6


def max_rel_error(model, x, y, loss=training.CROSS_ENTROPY, rel_step=1e-6):
    """Largest |analytic - fd| / max(|fd|, floor) over every parameter entry.

    The floor is 1e-3 of the largest gradient in the same array, so entries
    that are numerically zero compare on an absolute scale.
    """
    _, grads = loss_and_grads(model, x, y, loss)
    worst = 0.0
    for name, arr in model.parameters().items():
        g = grads[name]
        floor = 1e-3 * max(np.abs(g).max(), 1e-30)
        for idx in np.ndindex(arr.shape):
            h = _step(name, arr[idx], rel_step)
            keep = arr[idx]
            arr[idx] = keep + h
            a = loss_only(model, x, y, loss)
            arr[idx] = keep - h
            b = loss_only(model, x, y, loss)
            arr[idx] = keep
            fd = (a - b) / (2 * h)
            worst = max(worst, abs(g[idx] - fd) / max(abs(fd), floor))
    return worst


def micro_physical(seed, output_neuron=False):
    """Random 4-3-2 physical network with hidden drives well inside the active window."""
    rng = np.random.default_rng(seed)
    grid = FrequencyGrid(200e6, 500e6, 4)
    model = network.build_physical(grid, 3, 2, rng, g_m=1.81e-3, v_layer=0.0,
                                   output_neuron=output_neuron, output_g_m=1.81e-3)
    x = rng.uniform(0.0, 0.2, (6, 4))
    i_mid = 25e-6 / 1.81e-3
    v1 = model.layer1.v_chains
    v1[:] = i_mid - (x @ network.synapse.effective_weights(model.layer1, grid).T).mean(axis=0) * 1e-6
    if output_neuron:
        h = model.forward(x, cache=True)[1]["h"]
        w2 = network.synapse.effective_weights(model.layer2, network.FrequencyGrid(
            model.hidden.emit_freqs[0], model.hidden.emit_freqs[-1], 3))
        model.layer2.v_chains[:] = i_mid - (h @ w2.T).mean(axis=0) * 1e-6
    y = rng.integers(0, 2, 6)
    return model, x, y


def away_from_kinks(model, x, margin=0.5e-6):
    """True when every oscillator drive is at least ``margin`` (A) from a kink."""
    _, c = model.forward(x, cache=True)
    checks = []
    if model.hidden is not None:
        checks.append((c["v1"], model.hidden))
    if model.output_neuron is not None:
        checks.append((c["v2"] if model.hidden is not None else c["v1"], model.output_neuron))
    for v, layer in checks:
        i = v * 1e-6 * layer.g_m
        th, cl = layer.osc_params.i_th, layer.osc_params.i_clamp
        if np.any(np.abs(i - th) < margin) or np.any(np.abs(i - cl) < margin):
            return False
    return True
