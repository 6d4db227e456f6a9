"""Fits of measured device curves.

* Spin-diode spectra: sum of symmetric (Lorentzian) and antisymmetric
  (dispersive) resonances plus an offset, by Levenberg-Marquardt.
* Oscillator-to-chain transfer curves: zero below a threshold current and
  affine above it, by threshold grid search plus linear least squares.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, FitError, ParseError

MAX_ITER = 500
RTOL = 1e-9


@dataclass
class SpinDiodeFit:
    """Per-resonance arrays: centre ``f_res`` (Hz), half-width ``width`` (Hz),
    symmetric amplitude ``sym_amp`` and antisymmetric amplitude
    ``antisym_amp`` (uV). ``offset`` and ``rmse`` are in uV."""

    f_res: np.ndarray
    width: np.ndarray
    sym_amp: np.ndarray
    antisym_amp: np.ndarray
    offset: float
    rmse: float
    n_iter: int = 0

    def evaluate(self, freqs):
        return spin_diode_model(freqs, self.offset, self.f_res, self.width,
                                self.sym_amp, self.antisym_amp)

    def to_dict(self):
        order = np.argsort(self.f_res)
        return {
            "resonances": [
                {"f_res_hz": float(self.f_res[i]), "width_hz": float(self.width[i]),
                 "sym_amp_uv": float(self.sym_amp[i]), "antisym_amp_uv": float(self.antisym_amp[i])}
                for i in order
            ],
            "offset_uv": float(self.offset),
            "rmse_uv": float(self.rmse),
            "iterations": int(self.n_iter),
        }


def spin_diode_model(freqs, offset, f_res, width, sym_amp, antisym_amp):
    f = np.asarray(freqs, dtype=float)[:, None]
    x = f - np.asarray(f_res, float)[None, :]
    c = np.asarray(width, float)[None, :]
    den = c * c + x * x
    terms = (np.asarray(sym_amp)[None, :] * c * c + np.asarray(antisym_amp)[None, :] * c * x) / den
    return offset + terms.sum(axis=1)


def _unpack(theta, n):
    r = theta[1:].reshape(n, 4)
    return theta[0], r[:, 0], np.exp(r[:, 1]), r[:, 2], r[:, 3]


def _residual_and_jac(theta, f, v, n):
    off, f0, c, a, b = _unpack(theta, n)
    x = f[:, None] - f0[None, :]
    c2 = c * c
    den = c2[None, :] + x * x
    den2 = den * den
    lor = c2[None, :] / den
    dis = c[None, :] * x / den
    model = off + (a * lor + b * dis).sum(axis=1)
    jac = np.empty((f.size, theta.size))
    jac[:, 0] = 1.0
    d_lor_df0 = 2.0 * c2[None, :] * x / den2
    d_dis_df0 = -c[None, :] * (c2[None, :] - x * x) / den2
    d_lor_dc = 2.0 * c[None, :] * x * x / den2
    d_dis_dc = x * (x * x - c2[None, :]) / den2
    jac[:, 1::4] = a * d_lor_df0 + b * d_dis_df0
    jac[:, 2::4] = (a * d_lor_dc + b * d_dis_dc) * c[None, :]  # log-width
    jac[:, 3::4] = lor
    jac[:, 4::4] = dis
    return model - v, jac


def _initial_centres(f, v, n):
    """Centres from the strongest |d2V/df2| features, one contiguous lobe group each."""
    d2 = np.abs(np.gradient(np.gradient(v, f), f))
    avail = np.ones(f.size, bool)
    centres, halfw = [], []
    for _ in range(n):
        if not np.any(avail & (d2 > 0)):
            break
        k = int(np.argmax(np.where(avail, d2, -1.0)))
        thr = 0.05 * d2[k]
        lo = k
        while lo > 0 and avail[lo - 1] and d2[lo - 1] > thr:
            lo -= 1
        hi = k
        while hi < f.size - 1 and avail[hi + 1] and d2[hi + 1] > thr:
            hi += 1
        # a dispersive line has two |V''| lobes around its centre; take both
        span = max(hi - lo, 1)
        lo2, hi2 = max(lo - span, 0), min(hi + span, f.size - 1)
        seg = slice(lo2, hi2 + 1)
        w = d2[seg] * avail[seg]
        centres.append(float(np.sum(w * f[seg]) / np.sum(w)))
        halfw.append(max((f[hi2] - f[lo2]) / 6.0, f[1] - f[0]))
        avail[seg] = False
    while len(centres) < n:
        centres.append(float(f[(len(centres) + 1) * f.size // (n + 1)]))
        halfw.append((f[-1] - f[0]) / (10.0 * n))
    return np.array(centres), np.array(halfw)


def _linear_amplitudes(f, v, f0, c):
    x = f[:, None] - f0[None, :]
    den = c[None, :] ** 2 + x * x
    cols = [np.ones_like(f)]
    for r in range(f0.size):
        cols.append(c[r] ** 2 / den[:, r])
        cols.append(c[r] * x[:, r] / den[:, r])
    basis = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    rmse = math.sqrt(np.mean((basis @ coef - v) ** 2))
    return coef, rmse


def _rmse(res):
    return math.sqrt(float(np.mean(res * res)))


def fit_spin_diode(freqs, voltages, n_resonances, max_iter=MAX_ITER, rtol=RTOL):
    """Least-squares fit of ``n_resonances`` mixed Lorentzian/dispersive lines."""
    f = np.asarray(freqs, dtype=float)
    v = np.asarray(voltages, dtype=float)
    if f.ndim != 1 or f.shape != v.shape:
        raise DomainError("freqs and voltages must be 1-D arrays of equal length")
    if n_resonances < 1 or f.size < 4 * n_resonances + 1:
        raise DomainError(f"need at least {4 * n_resonances + 1} points for {n_resonances} resonances")
    if np.any(np.diff(f) <= 0):
        raise DomainError("freqs must be strictly increasing")

    centres, halfw = _initial_centres(f, v, n_resonances)
    best = None
    for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
        c = halfw * scale
        coef, rmse = _linear_amplitudes(f, v, centres, c)
        if best is None or rmse < best[0]:
            best = (rmse, c, coef)
    _, c, coef = best
    theta = np.empty(1 + 4 * n_resonances)
    theta[0] = coef[0]
    r = theta[1:].reshape(n_resonances, 4)
    r[:, 0] = centres
    r[:, 1] = np.log(c)
    r[:, 2] = coef[1::2]
    r[:, 3] = coef[2::2]

    res, jac = _residual_and_jac(theta, f, v, n_resonances)
    cost = _rmse(res)
    lam = 1e-3
    converged = cost == 0.0
    it = 0
    while not converged and it < max_iter:
        it += 1
        jtj = jac.T @ jac
        grad = jac.T @ res
        diag = np.maximum(np.diag(jtj), 1e-12 * max(np.max(np.diag(jtj)), 1e-300))
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                trial = theta + step
                res_t, jac_t = _residual_and_jac(trial, f, v, n_resonances)
                cost_t = _rmse(res_t)
                if np.isfinite(cost_t) and cost_t <= cost:
                    break
            lam *= 10.0
            if lam > 1e16:
                converged = True  # no descent direction left at this precision
                break
        if converged:
            break
        rel = (cost - cost_t) / cost if cost > 0 else 0.0
        theta, res, jac, cost = trial, res_t, jac_t, cost_t
        lam = max(lam / 10.0, 1e-12)
        if rel < rtol or cost == 0.0:
            converged = True
    off, f0, c, a, b = _unpack(theta, n_resonances)
    fit = SpinDiodeFit(f0.copy(), c.copy(), a.copy(), b.copy(), float(off), cost, it)
    if not converged:
        raise FitError(f"no convergence after {max_iter} iterations (rmse {cost:.4g} uV)", best=fit)
    return fit


@dataclass
class PiecewiseNeuronFit:
    """Oscillator contribution ``0`` below ``threshold`` (A) and
    ``slope * I + intercept`` (uV) at or above it."""

    threshold: float
    slope: float
    intercept: float
    rmse: float

    def evaluate(self, i_dc):
        i = np.asarray(i_dc, dtype=float)
        return np.where(i >= self.threshold, self.slope * i + self.intercept, 0.0)

    def to_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}


def fit_piecewise_neuron(i_dc, v):
    """Threshold on the grid of sample midpoints (plus both ends), affine fit above.

    Ties in RMSE go to the highest threshold. Choosing the top end means no
    sample is active, which is how an all-zero curve is represented.
    """
    i = np.asarray(i_dc, dtype=float)
    v = np.asarray(v, dtype=float)
    if i.ndim != 1 or i.shape != v.shape:
        raise DomainError("currents and voltages must be 1-D arrays of equal length")
    if i.size < 4:
        raise DomainError("need at least 4 samples")
    if np.any(np.diff(i) < 0):
        raise DomainError("currents must be sorted")
    cands = np.concatenate([[i[0]], 0.5 * (i[:-1] + i[1:])])
    best = None
    usable = False
    for t in cands:
        on = i >= t
        if on.sum() < 2:
            continue
        usable = True
        a = np.column_stack([i[on], np.ones(on.sum())])
        (w, c), *_ = np.linalg.lstsq(a, v[on], rcond=None)
        pred = np.where(on, w * i + c, 0.0)
        err = _rmse(pred - v)
        if best is None or err <= best[3] + 1e-12 * (1.0 + best[3]):
            best = (t, w, c, err)
    if not usable:
        raise DomainError("fewer than 2 points above every candidate threshold")
    flat = _rmse(v)
    if flat <= best[3] + 1e-12 * (1.0 + best[3]):
        best = (float(i[-1]) + (i[-1] - i[0] if i[-1] > i[0] else 1.0), 0.0, 0.0, flat)
    return PiecewiseNeuronFit(float(best[0]), float(best[1]), float(best[2]), float(best[3]))


def eval_two_neuron_model(fit1, fit2, i1, i2):
    """Chain voltage (uV) as the sum of the two oscillator contributions."""
    return fit1.evaluate(i1) + fit2.evaluate(i2)


def rmse_report(measured, predicted):
    """(RMSE in the data's unit, RMSE as a percentage of the measured range)."""
    m = np.asarray(measured, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if m.size == 0:
        raise DomainError("empty data")
    if m.shape != p.shape:
        raise DomainError("measured and predicted differ in shape")
    rmse = _rmse(p - m)
    span = float(m.max() - m.min())
    pct = 100.0 * rmse / span if span > 0 else math.inf if rmse > 0 else 0.0
    return rmse, pct


def read_xy_csv(path):
    """Two-column CSV with a header row, e.g. ``freq_hz,voltage_uv``."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open: {exc.strerror}", path) from exc
    xs, ys = [], []
    with fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or len(header) != 2:
            raise ParseError("expected a two-column header", path, 1)
        for rowno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", path, rowno)
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(str(exc), path, rowno) from None
    if not xs:
        raise ParseError("no data rows", path)
    return tuple(header), np.array(xs), np.array(ys)


def write_fit_json(fit, path, **extra):
    d = fit.to_dict()
    d.update(extra)
    with open(path, "w") as fh:
        json.dump(d, fh, indent=1)
