import numpy as np
import pytest

from spinrf import datasets
from spinrf.errors import DomainError, ParseError, StructuralError
from spinrf.synapse import FrequencyGrid


def small(rng):
    grid = FrequencyGrid(1e8, 2e8, 4)
    return datasets.SpectrumDataset(grid, rng.uniform(0, 1, (6, 4)), [0, 1, 2, 0, 1, 2],
                                    ["train"] * 4 + ["test"] * 2, 3)


def test_csv_round_trip_exact(tmp_path, rng):
    ds = small(rng)
    p = tmp_path / "d.csv"
    datasets.save_spectra_csv(ds, p)
    back = datasets.load_spectra_csv(p)
    np.testing.assert_array_equal(back.powers, ds.powers)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert list(back.split) == list(ds.split)
    assert back.grid.f_min == 1e8 and back.n_classes == 3


@pytest.mark.parametrize("mutate,row", [
    (lambda L: L.__setitem__(3, "7" + L[3][L[3].index(","):]), 4),
    (lambda L: L.__setitem__(2, L[2] + ",0.5"), 3),
    (lambda L: L.__setitem__(4, L[4].rsplit(",", 1)[0] + ",-1.0"), 5),
    (lambda L: L.__setitem__(5, L[5].rsplit(",", 1)[0] + ",abc"), 6),
    (lambda L: L.__setitem__(0, "a,b,c"), 1),
])
def test_csv_errors_carry_row(tmp_path, rng, mutate, row):
    p = tmp_path / "d.csv"
    datasets.save_spectra_csv(small(rng), p)
    lines = p.read_text().splitlines()
    mutate(lines)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        datasets.load_spectra_csv(p)
    assert exc.value.row == row


def test_csv_split_count_mismatch(tmp_path, rng):
    p = tmp_path / "d.csv"
    datasets.save_spectra_csv(small(rng), p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ParseError, match="declares"):
        datasets.load_spectra_csv(p)


def test_dataset_validation(rng):
    grid = FrequencyGrid(1e8, 2e8, 4)
    with pytest.raises(StructuralError):
        datasets.SpectrumDataset(grid, np.zeros((2, 3)), [0, 0], ["train"] * 2, 1)
    with pytest.raises(DomainError):
        datasets.SpectrumDataset(grid, np.zeros((2, 4)), [0, 5], ["train"] * 2, 2)
    with pytest.raises(DomainError):
        datasets.SpectrumDataset(grid, np.zeros((2, 4)), [0, 1], ["train", "val"], 2)


def test_average_and_scale(rng):
    spec = rng.uniform(0, 2, (10, 4))
    np.testing.assert_allclose(datasets.average_spectrogram(spec), spec.mean(axis=0))
    with pytest.raises(DomainError):
        datasets.average_spectrogram(-spec)
    ds = datasets.minmax_scale(small(rng))
    assert ds.powers.min() == 0.0 and ds.powers.max() == 1.0
    with pytest.raises(DomainError):
        datasets.minmax_scale(small(rng).with_powers(np.ones((6, 4))))


def test_drone_generator_shape_and_determinism():
    a = datasets.synth_drone_like(seed=4)
    b = datasets.synth_drone_like(seed=4)
    assert a.powers.shape == (1000, 256)
    assert len(a.train[1]) == 702 and len(a.test[1]) == 298
    assert a.grid.f_min == 20e6 and a.grid.f_max == 120e6
    np.testing.assert_array_equal(a.powers, b.powers)
    assert a.powers.min() == 0.0 and a.powers.max() == 1.0
    assert np.all(np.bincount(a.labels) == 100)
    c = datasets.synth_drone_like(seed=5)
    assert not np.array_equal(a.powers, c.powers)


def test_idx_round_trip(tmp_path, rng):
    arr = rng.integers(0, 256, (3, 28, 28)).astype(np.uint8)
    for comp in (False, True):
        p = tmp_path / f"a{comp}.idx"
        datasets.write_idx(p, arr, compress=comp)
        np.testing.assert_array_equal(datasets.read_idx(p), arr)


def test_idx_rejects_garbage(tmp_path):
    p = tmp_path / "bad.idx"
    p.write_bytes(b"\x01\x02\x03\x04garbage")
    with pytest.raises(ParseError):
        datasets.read_idx(p)
    p.write_bytes(b"\x00\x00\x08\x01\x00\x00\x00\x05\x01")
    with pytest.raises(ParseError):
        datasets.read_idx(p)


def test_bundled_mnist_subset(data_dir):
    imgs, labels = datasets.load_mnist(data_dir / "mnist5k-images-idx3-ubyte.gz",
                                       data_dir / "mnist5k-labels-idx1-ubyte.gz")
    assert imgs.shape == (5000, 28, 28) and np.all(np.bincount(labels) == 500)
    ds = datasets.mnist_as_spectrum(imgs, labels, 50e6, 5e9)
    assert ds.powers.shape == (5000, 784) and ds.powers.max() <= 1.0
    assert ds.grid.centers[0] == 50e6


def test_stratified_split(rng):
    labels = np.repeat(np.arange(10), 50)
    s = datasets.stratified_split(labels, 100, 0)
    assert np.sum(s == "test") == 100
    for c in range(10):
        assert np.sum((s == "test") & (labels == c)) == 10
    np.testing.assert_array_equal(s, datasets.stratified_split(labels, 100, 0))


@pytest.mark.parametrize("task", [1, 2, 3])
def test_tasks_are_balanced_and_nonlinear(task):
    ds = datasets.make_task2d(task, 2000, seed=0)
    frac = ds.labels.mean()
    assert 0.4 < frac < 0.6
    assert datasets.best_linear_accuracy(ds.powers, ds.labels, 90, 60) < 0.95
    assert ds.powers.min() >= 0.5 and ds.powers.max() <= 5.0


def test_task_id_validation():
    with pytest.raises(DomainError):
        datasets.make_task2d(4)
