import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinrf import network, training
from spinrf.errors import DivergenceError, DomainError, SpinRFError


def adam_reference(p, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    # textbook Adam, one scalar at a time
    m = v = 0.0
    out = []
    for t, g in enumerate(grads, 1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        out.append(p)
    return out


def test_adam_matches_reference():
    grads = [0.3, -1.2, 0.7, 2.0, -0.1]
    params = {"w": np.array([1.5])}
    st_ = training.AdamState()
    got = []
    for g in grads:
        training.adam_step(params, {"w": np.array([g])}, st_, 0.01)
        got.append(params["w"][0])
    np.testing.assert_allclose(got, adam_reference(1.5, grads, 0.01), rtol=1e-13)


def test_adam_units_scale_steps():
    # with unit u, the step is u times the unitless step on a gradient g*u
    p1, p2 = {"f": np.array([0.0])}, {"f": np.array([0.0])}
    s1, s2 = training.AdamState(), training.AdamState()
    training.adam_step(p1, {"f": np.array([2e-9])}, s1, 1e-5, units={"f": 1e9})
    training.adam_step(p2, {"f": np.array([2.0])}, s2, 1e-5)
    assert p1["f"][0] == pytest.approx(1e9 * p2["f"][0], rel=1e-9)


def test_adam_rejects_nonfinite():
    with pytest.raises(DivergenceError):
        training.adam_step({"w": np.zeros(1)}, {"w": np.array([np.nan])}, training.AdamState(), 0.1)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_loss_gradients_finite_difference(seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(4, 3))
    y = rng.integers(0, 3, 4)
    for fn in (training.cross_entropy, lambda o, l: training.mse(o, l, 0.7)):
        _, g = fn(z, y)
        for idx in np.ndindex(z.shape):
            h = 1e-6
            zp, zm = z.copy(), z.copy()
            zp[idx] += h
            zm[idx] -= h
            fd = (fn(zp, y)[0] - fn(zm, y)[0]) / (2 * h)
            assert g[idx] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_cross_entropy_stable_for_large_logits():
    loss, g = training.cross_entropy(np.array([[1000.0, 0.0]]), np.array([1]))
    assert loss == pytest.approx(1000.0)
    assert np.all(np.isfinite(g))


def test_predict_single_output_threshold_and_ties():
    assert list(training.predict(np.array([[0.2], [0.8]]), 0.5)) == [0, 1]
    assert training.predict(np.array([[1.0, 1.0]]))[0] == 0


def test_config_validation():
    training.TrainConfig(learning_rate=0.0)
    for kw in ({"learning_rate": -1.0}, {"learning_rate": math.nan}, {"epochs": 0},
               {"batch_size": 0}, {"loss": "hinge"}):
        with pytest.raises(DomainError):
            training.TrainConfig(**kw)


def blobs(rng, n=200):
    y = rng.integers(0, 2, n)
    x = rng.normal(0, 0.3, (n, 2)) + np.where(y[:, None] == 1, 1.0, -1.0)
    return x, y


def test_software_training_learns_and_is_deterministic(rng):
    x, y = blobs(rng)

    def run():
        m = network.build_software(2, 0, 2, np.random.default_rng(0))
        return training.train(m, x, y, training.TrainConfig(learning_rate=0.05, epochs=20, seed=3))

    a, b = run(), run()
    assert a.final["train_acc"] > 0.95
    assert a.history == b.history
    np.testing.assert_array_equal(a.model.w1, b.model.w1)
    assert a.history[-1]["loss"] < a.history[0]["loss"]


def test_lr_zero_freezes(rng):
    x, y = blobs(rng)
    m = network.build_software(2, 0, 2, np.random.default_rng(0))
    w = m.w1.copy()
    training.train(m, x, y, training.TrainConfig(learning_rate=0.0, epochs=2))
    np.testing.assert_array_equal(m.w1, w)


def test_best_model_tracks_test_accuracy(rng):
    x, y = blobs(rng)
    m = network.build_software(2, 0, 2, np.random.default_rng(0))
    res = training.train(m, x, y, training.TrainConfig(learning_rate=0.05, epochs=5), x, y)
    accs = [r["test_acc"] for r in res.history]
    assert res.best_epoch == 1 + int(np.argmax(accs))
    assert training.evaluate(res.best_model, x, y)[1] == max(accs)


def test_divergence_detected(rng):
    x, y = blobs(rng)
    m = network.build_software(2, 0, 2, np.random.default_rng(0))
    m.w1[:] = np.inf
    with np.errstate(invalid="ignore"), pytest.raises(DivergenceError):
        training.train(m, x, y, training.TrainConfig(epochs=1))


def test_empty_training_set():
    m = network.build_software(2, 0, 2, np.random.default_rng(0))
    with pytest.raises(SpinRFError):
        training.train(m, np.zeros((0, 2)), np.zeros(0, int), training.TrainConfig())


def test_history_and_trials_files(tmp_path, rng):
    x, y = blobs(rng)
    m = network.build_software(2, 0, 2, np.random.default_rng(0))
    res = training.train(m, x, y, training.TrainConfig(learning_rate=0.05, epochs=3))
    p = tmp_path / "h.csv"
    training.write_history_csv(res.history, p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(training.HISTORY_COLUMNS) and len(lines) == 4


def test_hyper_search_finds_planted_optimum(tmp_path):
    space = training.HyperSearchSpace(learning_rate=(1e-4, 1e-1), n_trials=40, objective_repeats=2, seed=7)

    def score(params, seed):
        return -abs(math.log10(params["learning_rate"]) + 2.0)

    res = training.hyper_search(space, score, tmp_path / "t.csv")
    assert abs(math.log10(res.best_params["learning_rate"]) + 2.0) < 0.15
    again = training.hyper_search(space, score)
    assert again.trials == res.trials
    assert (tmp_path / "t.csv").read_text().count("\n") == 41


def test_hyper_search_logs_failures():
    space = training.HyperSearchSpace(n_trials=4, objective_repeats=1)
    calls = []

    def flaky(params, seed):
        calls.append(seed)
        if len(calls) % 2:
            raise DivergenceError("boom")
        return 0.5

    res = training.hyper_search(space, flaky)
    assert sum(1 for t in res.trials if t["error"]) == 2
    with pytest.raises(SpinRFError):
        training.hyper_search(space, lambda p, s: (_ for _ in ()).throw(DivergenceError("x")))


def test_search_space_validation():
    with pytest.raises(DomainError):
        training.HyperSearchSpace(learning_rate=(0.0, 1.0))
    with pytest.raises(DomainError):
        training.HyperSearchSpace(n_trials=0)


def test_adam_zero_gradient_first_step_is_noop():
    p = {"w": np.array([0.3, -2.0])}
    training.adam_step(p, {"w": np.zeros(2)}, training.AdamState(), 0.1)
    np.testing.assert_array_equal(p["w"], [0.3, -2.0])


def test_adam_constant_gradient_steps_approach_lr():
    # with a constant gradient the bias-corrected ratio m/sqrt(v) is exactly 1
    p = {"w": np.array([0.0])}
    st_ = training.AdamState()
    prev = 0.0
    for _ in range(200):
        training.adam_step(p, {"w": np.array([0.37])}, st_, 1e-3)
        step, prev = prev - p["w"][0], p["w"][0]
        assert step == pytest.approx(1e-3, rel=1e-6)


def test_lr_zero_keeps_untrained_accuracy_every_epoch(rng):
    x, y = blobs(rng)
    m = network.build_software(2, 0, 2, np.random.default_rng(1))
    acc0 = training.evaluate(m, x, y)[1]
    res = training.train(m, x, y, training.TrainConfig(learning_rate=0.0, epochs=3), x, y)
    assert all(r["train_acc"] == acc0 and r["test_acc"] == acc0 for r in res.history)


@pytest.mark.parametrize("task", [1, 2, 3])
def test_two_tone_loss_non_increasing_first_epochs(task):
    from spinrf import datasets, experiments
    cfg = experiments.Task2DConfig()
    ds = datasets.make_task2d(task, 1000, seed=0)
    b1 = experiments._weight_bound(cfg.g_m, experiments.OscillatorParams(),
                                   experiments.ResonatorParams(), cfg.weight_headroom)
    b2 = experiments._weight_bound(cfg.output_g_m, experiments.OscillatorParams(),
                                   experiments.ResonatorParams(), cfg.weight_headroom)
    sw = experiments._software_2d(np.random.default_rng(0), b1, b2, np.full(2, 2.75))
    tc = training.TrainConfig(learning_rate=cfg.learning_rate, epochs=3, batch_size=cfg.batch_size,
                              loss=training.MSE)
    losses = [training.evaluate(sw, *ds.train, tc)[0]]
    for _ in range(3):
        sw = training.train(sw, *ds.train, tc.__class__(**{**tc.__dict__, "epochs": 1})).model
        losses.append(training.evaluate(sw, *ds.train, tc)[0])
    assert all(b <= a for a, b in zip(losses, losses[1:])), losses
