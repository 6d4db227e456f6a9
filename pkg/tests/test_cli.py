import functools

import numpy as np
import pytest

from schema_util import validate_csv, validate_json
from spinrf import cli, fitting
from spinrf.cli import ConfigError

TINY_TRAIN = ["--set", "data.per_class=12", "--set", "model.n_hidden=6", "--epochs", "2"]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--output-dir", str(out)])
    return code, out


def test_config_defaults_and_overrides(tmp_path):
    cfg = cli.load_config(None, ["train.epochs=7", "sweep.f_max=1e8,2e9"])
    assert cfg["train"]["epochs"] == 7
    assert cfg["sweep"]["f_max"] == (1e8, 2e9)
    ini = tmp_path / "c.ini"
    cli.write_config(cfg, ini)
    assert cli.load_config(ini) == cfg


@pytest.mark.parametrize("override", ["train.nope=1", "bogus.key=1", "train.epochs=abc", "noequals"])
def test_config_errors(override):
    with pytest.raises(ConfigError):
        cli.load_config(None, [override])


def test_config_file_errors(tmp_path):
    bad = tmp_path / "c.ini"
    bad.write_text("[model]\nwidth = 3\n")
    with pytest.raises(ConfigError, match="model.width"):
        cli.load_config(bad)
    with pytest.raises(ConfigError):
        cli.load_config(tmp_path / "missing.ini")


def test_unknown_key_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "energy", "--set", "energy.watts=3")
    assert code == 2
    assert "energy.watts" in capsys.readouterr().err


def test_energy(tmp_path, capsys):
    code, out = run(tmp_path, "energy")
    assert code == 0
    assert "3.4048 mW" in capsys.readouterr().out
    d = validate_json(out / "energy.json", "energy")
    assert round(d["synaptic_total_w"] * 1e3, 3) == 3.405
    assert (out / "config.ini").exists()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env-out"))
    assert cli.main(["energy"]) == 0
    assert (tmp_path / "env-out" / "energy.json").exists()


def test_train_evaluate_and_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    code, a = run(tmp_path, "train", *TINY_TRAIN, "--seed", "3", name="a")
    assert code == 0
    code, b = run(tmp_path, "train", *TINY_TRAIN, "--seed", "3", name="b")
    assert code == 0
    for f in ("history.csv", "checkpoint.spk", "summary.json", "config.ini"):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    validate_csv(a / "history.csv", "history_csv")
    s = validate_json(a / "summary.json", "train_summary")
    assert s["n_train"] + s["n_test"] == 120
    code, ev = run(tmp_path, "evaluate", "--checkpoint", str(a / "checkpoint.spk"),
                   "--set", "data.per_class=12", "--seed", "3", name="ev")
    assert code == 0
    e = validate_json(ev / "summary.json", "evaluate_summary")
    assert e["test_acc"] == pytest.approx(s["final_test_acc"])


def test_config_echo_reproduces_run(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    _, a = run(tmp_path, "train", *TINY_TRAIN, "--model", "software", name="a")
    code, b = run(tmp_path, "train", "--config", str(a / "config.ini"), name="b")
    assert code == 0
    assert (a / "history.csv").read_bytes() == (b / "history.csv").read_bytes()


def test_train_from_csv_and_bad_csv(tmp_path):
    from spinrf import datasets
    ds = datasets.synth_drone_like(per_class=10, seed=1)
    p = tmp_path / "d.csv"
    datasets.save_spectra_csv(ds, p)
    code, _ = run(tmp_path, "train", "--data", str(p), "--set", "model.n_hidden=4", "--epochs", "1")
    assert code == 0
    lines = p.read_text().splitlines()
    lines[5] = lines[5] + ",oops"
    p.write_text("\n".join(lines))
    code, _ = run(tmp_path, "train", "--data", str(p), "--epochs", "1", name="bad")
    assert code == 3


def test_corrupt_checkpoint_exits_3(tmp_path):
    ck = tmp_path / "x.spk"
    ck.write_bytes(b"SPINRFCK" + b"\0" * 50)
    code, _ = run(tmp_path, "evaluate", "--checkpoint", str(ck))
    assert code == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exits_4(tmp_path):
    code, _ = run(tmp_path, "train", "--model", "software", "--set", "train.learning_rate=1e300",
                  *TINY_TRAIN)
    assert code == 4


def test_search(tmp_path):
    code, out = run(tmp_path, "search", "--set", "data.per_class=6", "--set", "model.n_hidden=4",
                    "--set", "search.n_trials=2", "--set", "search.objective_repeats=1",
                    "--set", "train.epochs=1")
    assert code == 0
    validate_csv(out / "trials.csv", "trials_csv", text_columns=("error",))
    d = validate_json(out / "summary.json", "search_summary")
    # 20% of the 42 training samples (70% of 60) are held out for validation
    assert d["n_validation"] == 8


def test_missing_dataset_exits_3_with_path(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code, _ = run(tmp_path, "train", "--data", str(missing), "--epochs", "1")
    assert code == 3
    assert str(missing) in capsys.readouterr().err


MNIST = ["--set", "data.mnist_images=tests/data/mnist5k-images-idx3-ubyte.gz",
         "--set", "data.mnist_labels=tests/data/mnist5k-labels-idx1-ubyte.gz"]


def test_sweep_freq_smoke(tmp_path, data_dir, monkeypatch):
    monkeypatch.chdir(data_dir.parent.parent)
    code, out = run(tmp_path, "sweep-freq", *MNIST, "--set", "data.subset=300",
                    "--set", "data.n_test=100", "--set", "sweep.f_max=1e8,5e9",
                    "--set", "sweep.repeats=1", "--set", "sweep.epochs=1")
    assert code == 0
    rows = validate_csv(out / "sweep.csv", "sweep_csv")
    assert len(rows) == 2
    validate_json(out / "summary.json", "sweep_summary")


def test_sweep_needs_mnist_paths(tmp_path):
    code, _ = run(tmp_path, "sweep-freq")
    assert code == 2


def test_task2d_grid_and_determinism(tmp_path):
    args = ["task2d", "--set", "task2d.tasks=2", "--set", "task2d.n_samples=200",
            "--set", "task2d.epochs=5", "--set", "task2d.max_restarts=1",
            "--set", "task2d.grid_resolution=11"]
    code, a = run(tmp_path, *args, name="a")
    assert code == 0
    _, b = run(tmp_path, *args, name="b")
    assert (a / "task2_grid.csv").read_bytes() == (b / "task2_grid.csv").read_bytes()
    rows = validate_csv(a / "task2_grid.csv", "grid_csv")
    assert len(rows) == 121
    p1 = sorted({float(r["p1_uw"]) for r in rows})
    assert p1[0] == 0.5 and p1[-1] == 5.0 and len(p1) == 11
    validate_json(a / "summary.json", "task2d_summary")


def test_task2d_unknown_task(tmp_path):
    assert run(tmp_path, "task2d", "--set", "task2d.tasks=9")[0] == 2


def write_spectrum(path, noise=0.0):
    f = np.linspace(0.8e9, 1.5e9, 401)
    v = fitting.spin_diode_model(f, 1.0, [1.0e9, 1.3e9], [15e6, 25e6], [30.0, -10.0], [-20.0, 40.0])
    v = v + np.random.default_rng(0).normal(0, noise, f.size)
    path.write_text("freq_hz,voltage_uv\n" + "".join(f"{a!r},{b!r}\n" for a, b in zip(f.tolist(), v.tolist())))


def test_fit_spin_diode(tmp_path):
    p = tmp_path / "s.csv"
    write_spectrum(p)
    code, out = run(tmp_path, "fit", str(p))
    assert code == 0
    d = validate_json(out / "fit.json", "fit")
    got = [r["f_res_hz"] for r in d["resonances"]]
    np.testing.assert_allclose(got, [1.0e9, 1.3e9], rtol=1e-3)


def test_fit_neuron(tmp_path):
    p = tmp_path / "n.csv"
    i = np.arange(0, 8e-3, 0.1e-3)
    v = np.where(i >= 3e-3, 2e3 * i - 5.0, 0.0)
    p.write_text("i_a,v_uv\n" + "".join(f"{a!r},{b!r}\n" for a, b in zip(i.tolist(), v.tolist())))
    code, out = run(tmp_path, "fit", str(p), "--kind", "neuron")
    assert code == 0
    d = validate_json(out / "fit.json", "fit")
    assert abs(d["threshold"] - 3e-3) <= 0.1e-3


def test_fit_nonconvergence_exits_4_with_partial_report(tmp_path, monkeypatch):
    p = tmp_path / "s.csv"
    write_spectrum(p, noise=0.5)
    monkeypatch.setattr(cli.fitting, "fit_spin_diode",
                        functools.partial(fitting.fit_spin_diode, max_iter=1))
    code, out = run(tmp_path, "fit", str(p))
    assert code == 4
    d = validate_json(out / "fit.json", "fit")
    assert d["converged"] is False


def test_malformed_fit_csv_exits_3(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("freq_hz,voltage_uv\n1,2\n3\n")
    code, _ = run(tmp_path, "fit", str(p))
    assert code == 3
    assert "3" in capsys.readouterr().err


def test_fit_missing_path_exits_2(tmp_path):
    assert run(tmp_path, "fit")[0] == 2
