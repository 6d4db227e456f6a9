"""Input spectra: file formats, scaling, and synthetic generators.

Every dataset is a set of power spectra (uW per frequency bin) on one
:class:`~spinrf.synapse.FrequencyGrid`, with integer labels and a
train/test tag per sample.
"""

import csv
import gzip
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, StructuralError
from .synapse import FrequencyGrid

TRAIN = "train"
TEST = "test"

DRONE_GRID = FrequencyGrid(20e6, 120e6, 256)
DRONE_SPLIT = (702, 298)

TASK2D_TONES = (220e6, 400e6)
TASK2D_RANGE = (0.5, 5.0)
# Boundary constants chosen so each class covers about half of the square.
TASK2D_CORNER = 5.0 - 4.5 / np.sqrt(2.0)
TASK2D_BAND = 4.5 * (1.0 - 1.0 / np.sqrt(2.0))
TASK2D_RADIUS = 4.5 * np.sqrt(2.0 / np.pi)

CSV_HEADER = ("f_min_hz", "f_max_hz", "n_bins", "n_classes", "n_train", "n_test")

GENERATOR_VERSION = "1"


@dataclass
class SpectrumDataset:
    grid: FrequencyGrid
    powers: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.powers = np.asarray(self.powers, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        self.split = np.asarray(self.split, dtype=object)
        if self.powers.ndim != 2 or self.powers.shape[1] != self.grid.n_bins:
            raise StructuralError(
                f"powers shape {self.powers.shape} does not match {self.grid.n_bins} bins"
            )
        if self.labels.shape != (self.powers.shape[0],) or self.split.shape != self.labels.shape:
            raise StructuralError("labels/split do not match the number of samples")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DomainError(f"labels must lie in [0, {self.n_classes})")
        bad = set(self.split) - {TRAIN, TEST}
        if bad:
            raise DomainError(f"unknown split tags {sorted(bad)}")

    def __len__(self):
        return self.labels.size

    def subset(self, tag):
        m = self.split == tag
        return self.powers[m], self.labels[m]

    @property
    def train(self):
        return self.subset(TRAIN)

    @property
    def test(self):
        return self.subset(TEST)

    def with_powers(self, powers):
        return SpectrumDataset(self.grid, powers, self.labels, self.split, self.n_classes)


def average_spectrogram(spec):
    """Mean over time frames (rows) of a (frames, bins) spectrogram."""
    spec = np.asarray(spec, dtype=float)
    if spec.ndim != 2 or spec.size == 0:
        raise DomainError("spectrogram must be a non-empty 2-D array")
    if np.any(spec < 0):
        raise DomainError("spectrogram entries must be non-negative")
    return spec.mean(axis=0)


def minmax_scale(dataset, full_scale=1.0):
    """Affine map of the whole dataset (not per sample) onto [0, full_scale] uW."""
    p = dataset.powers
    lo, hi = float(p.min()), float(p.max())
    if not hi > lo:
        raise DomainError("cannot scale a constant dataset (max == min)")
    return dataset.with_powers((p - lo) / (hi - lo) * full_scale)


# -- CSV -------------------------------------------------------------------

def save_spectra_csv(dataset, path):
    """Write ``dataset``; floats are written with repr so the round trip is exact."""
    n_train = int(np.sum(dataset.split == TRAIN))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        g = dataset.grid
        w.writerow([repr(g.f_min), repr(g.f_max), g.n_bins, dataset.n_classes,
                    n_train, len(dataset) - n_train])
        for p, lab, sp in zip(dataset.powers, dataset.labels, dataset.split):
            w.writerow([int(lab), sp, *map(repr, p.tolist())])


def load_spectra_csv(path):
    """Read a spectra CSV (format in README). Errors carry the 1-based row number."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        rows = csv.reader(fh)
        try:
            head = next(rows)
            vals = next(rows)
        except StopIteration:
            raise ParseError("missing header rows", path, 1) from None
        if tuple(h.strip() for h in head) != CSV_HEADER:
            raise ParseError(f"header must be {','.join(CSV_HEADER)}", path, 1)
        try:
            f_min, f_max = float(vals[0]), float(vals[1])
            n_bins, n_classes, n_train, n_test = (int(v) for v in vals[2:6])
            grid = FrequencyGrid(f_min, f_max, n_bins)
        except (ValueError, IndexError, DomainError) as exc:
            raise ParseError(f"bad header values: {exc}", path, 2) from None
        powers, labels, split = [], [], []
        for rowno, row in enumerate(rows, start=3):
            if not row:
                continue
            if len(row) != n_bins + 2:
                raise ParseError(
                    f"expected {n_bins} power values, got {len(row) - 2}", path, rowno
                )
            try:
                lab = int(row[0])
                vals = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(str(exc), path, rowno) from None
            if not 0 <= lab < n_classes:
                raise ParseError(f"label {lab} outside [0, {n_classes})", path, rowno)
            if row[1] not in (TRAIN, TEST):
                raise ParseError(f"split must be train or test, got {row[1]!r}", path, rowno)
            if any(v < 0 or v != v for v in vals):
                raise ParseError("powers must be non-negative numbers", path, rowno)
            labels.append(lab)
            split.append(row[1])
            powers.append(vals)
    split = np.array(split, dtype=object)
    got = (int(np.sum(split == TRAIN)), int(np.sum(split == TEST)))
    if got != (n_train, n_test):
        raise ParseError(f"header declares {n_train}/{n_test} train/test samples, found {got}", path)
    powers = np.array(powers, dtype=float).reshape(-1, n_bins)
    return SpectrumDataset(grid, powers, np.array(labels, dtype=int), split, n_classes)


def write_provenance(path, **info):
    """JSON sidecar describing how a dataset file was produced."""
    info.setdefault("generator_version", GENERATOR_VERSION)
    with open(path, "w") as fh:
        json.dump(info, fh, indent=1, sort_keys=True)


# -- synthetic drone-style spectra ------------------------------------------

def _class_templates(n_classes, grid):
    """Fixed per-class spectral templates (independent of the sample seed)."""
    rng = np.random.default_rng(0x5D20E)
    f = (grid.centers - grid.f_min) / (grid.f_max - grid.f_min)
    centers = np.linspace(0.06, 0.94, n_classes)
    rng.shuffle(centers)
    templates = np.zeros((n_classes, grid.n_bins))
    for c in range(n_classes):
        t = np.zeros_like(f)
        # wide occupied channel, flat top with soft edges
        width = rng.uniform(0.04, 0.10)
        t += 0.6 / (1.0 + np.exp((np.abs(f - centers[c]) - width / 2) / 0.006))
        # narrow control/hopping lines at class-specific places
        for _ in range(rng.integers(2, 5)):
            pos = rng.uniform(0.02, 0.98)
            t += rng.uniform(0.3, 1.0) * np.exp(-0.5 * ((f - pos) / rng.uniform(0.003, 0.01)) ** 2)
        templates[c] = t
    return templates


def synth_drone_like(n_classes=10, per_class=100, seed=0, grid=DRONE_GRID,
                     train_fraction=DRONE_SPLIT[0] / sum(DRONE_SPLIT)):
    """Synthetic 10-class emitter spectra on 20-120 MHz.

    Each sample is its class template times a gain in [0.9, 1.1] plus
    Gaussian noise of 1% of full scale, clipped at zero, then the whole set
    is min-max scaled to [0, 1] uW. With 100 per class the split is 702/298.
    """
    if per_class < 2:
        raise DomainError("per_class must be >= 2")
    rng = np.random.default_rng(seed)
    templates = _class_templates(n_classes, grid)
    full = templates.max()
    labels = np.repeat(np.arange(n_classes), per_class)
    gain = rng.uniform(0.9, 1.1, labels.size)
    powers = templates[labels] * gain[:, None]
    powers += rng.normal(0.0, 0.01 * full, powers.shape)
    np.clip(powers, 0.0, None, out=powers)
    order = rng.permutation(labels.size)
    n_train = int(round(train_fraction * labels.size))
    split = np.full(labels.size, TEST, dtype=object)
    split[order[:n_train]] = TRAIN
    ds = SpectrumDataset(grid, powers, labels, split, n_classes)
    return minmax_scale(ds)


# -- MNIST ------------------------------------------------------------------

IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx(path):
    """Read an IDX file (optionally gzip-compressed) into a numpy array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0 or raw[2] not in IDX_TYPES:
        raise ParseError("bad IDX magic number", path)
    dtype = np.dtype(IDX_TYPES[raw[2]])
    ndim = raw[3]
    if len(raw) < 4 + 4 * ndim:
        raise ParseError("truncated IDX header", path)
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    count = int(np.prod(dims, dtype=np.int64))
    data = raw[4 + 4 * ndim:]
    if len(data) != count * dtype.itemsize:
        raise ParseError(f"IDX payload has {len(data)} bytes, expected {count * dtype.itemsize}", path)
    return np.frombuffer(data, dtype).reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array, compress=None):
    a = np.asarray(array)
    codes = {np.dtype(v).newbyteorder("="): k for k, v in IDX_TYPES.items()}
    code = codes.get(a.dtype.newbyteorder("="))
    if code is None:
        raise DomainError(f"dtype {a.dtype} cannot be stored as IDX")
    raw = bytes([0, 0, code, a.ndim]) + struct.pack(f">{a.ndim}I", *a.shape)
    raw += a.astype(IDX_TYPES[code]).tobytes()
    if compress is None:
        compress = str(path).endswith(".gz")
    with open(path, "wb") as fh:
        fh.write(gzip.compress(raw, mtime=0) if compress else raw)


def load_mnist(images_path, labels_path):
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ParseError("image/label IDX files do not match", images_path)
    return images, labels.astype(int)


def mnist_as_spectrum(images, labels, f_min=50e6, f_max=5e9, split=None):
    """Map 28x28 images onto a 784-bin spectrum, row-major pixel i -> bin i.

    Pixels in [0, 255] are divided by 255; pixels already in [0, 1] are kept,
    so intensities are powers in [0, 1] uW.
    """
    x = np.asarray(images, dtype=float)
    if x.ndim == 3:
        x = x.reshape(x.shape[0], -1)
    if x.ndim != 2 or x.shape[1] != 784:
        raise StructuralError(f"expected 28x28 images, got shape {np.shape(images)}")
    if np.any(x < 0) or np.any(x > 255):
        raise DomainError("pixel values must lie in [0, 255]")
    if x.max(initial=0.0) > 1.0:
        x = x / 255.0
    if split is None:
        split = np.full(x.shape[0], TRAIN, dtype=object)
    return SpectrumDataset(FrequencyGrid(f_min, f_max, 784), x, labels, split, 10)


def stratified_split(labels, n_test, seed):
    """Train/test tags with ``n_test`` samples held out, balanced over classes."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    split = np.full(labels.size, TRAIN, dtype=object)
    classes = np.unique(labels)
    per = n_test // classes.size
    extra = n_test - per * classes.size
    for i, c in enumerate(classes):
        idx = rng.permutation(np.flatnonzero(labels == c))
        split[idx[: per + (1 if i < extra else 0)]] = TEST
    return split


# -- two-tone nonlinear tasks -------------------------------------------------

def _task_labels(task_id, p1, p2):
    if task_id == 1:
        # corner: both tones strong (AND of two thresholds)
        return (p1 > TASK2D_CORNER) & (p2 > TASK2D_CORNER)
    if task_id == 2:
        # diagonal band around P1 == P2
        return np.abs(p1 - p2) < TASK2D_BAND
    if task_id == 3:
        # quarter disc centred on the low-power corner
        return (p1 - 0.5) ** 2 + (p2 - 0.5) ** 2 < TASK2D_RADIUS**2
    raise DomainError(f"task_id must be 1, 2 or 3, got {task_id}")


def task2d_label(task_id, p1, p2):
    return _task_labels(task_id, np.asarray(p1, float), np.asarray(p2, float)).astype(int)


def make_task2d(task_id, n_samples=1000, seed=0, test_fraction=0.0):
    """Two-tone dataset: powers at 220 and 400 MHz drawn uniformly in [0.5, 5] uW."""
    rng = np.random.default_rng(seed)
    lo, hi = TASK2D_RANGE
    p = rng.uniform(lo, hi, (n_samples, 2))
    labels = task2d_label(task_id, p[:, 0], p[:, 1])
    split = np.full(n_samples, TRAIN, dtype=object)
    n_test = int(round(test_fraction * n_samples))
    if n_test:
        split[rng.permutation(n_samples)[:n_test]] = TEST
    return SpectrumDataset(FrequencyGrid(*TASK2D_TONES, 2), p, labels, split, 2)


def best_linear_accuracy(points, labels, n_angles=360, n_offsets=200):
    """Best accuracy of any line ``cos(t) x + sin(t) y > b`` on a coarse grid."""
    pts = np.asarray(points, float)
    labels = np.asarray(labels)
    best = 0.0
    for t in np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False):
        proj = pts @ np.array([np.cos(t), np.sin(t)])
        for b in np.linspace(proj.min(), proj.max(), n_offsets):
            best = max(best, float(np.mean((proj > b) == labels)))
    return best
