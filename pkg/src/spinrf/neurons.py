"""Spin-torque oscillator neuron layers.

A transconductance turns each chain voltage into a DC drive current; each
oscillator then emits RF power at its own fixed frequency, so the layer
output is a spectrum on the grid of emission frequencies.
"""

from dataclasses import dataclass, field

import numpy as np

from .devices import OscillatorParams, stno_power, stno_power_grad
from .errors import DomainError, StructuralError

UV_PER_V = 1e6
UW_PER_W = 1e6


@dataclass
class NeuronLayerState:
    """``g_m`` is in A/V, ``emit_freqs`` in Hz."""

    g_m: float
    emit_freqs: np.ndarray
    osc_params: OscillatorParams = field(default_factory=OscillatorParams)
    clamped: bool = True

    def __post_init__(self):
        self.emit_freqs = np.array(self.emit_freqs, dtype=float)
        if not self.g_m > 0.0:
            raise DomainError(f"g_m must be positive, got {self.g_m}")
        if self.emit_freqs.ndim != 1 or np.any(self.emit_freqs <= 0.0):
            raise DomainError("emission frequencies must be a positive vector")
        if np.unique(self.emit_freqs).size != self.emit_freqs.size:
            raise DomainError("emission frequencies must be pairwise distinct")

    @property
    def size(self):
        return self.emit_freqs.size

    def copy(self):
        return NeuronLayerState(self.g_m, self.emit_freqs.copy(), self.osc_params, self.clamped)


def default_emit_freqs(n, f_lo=1e9, f_hi=5e9):
    if n == 1:
        return np.array([0.5 * (f_lo + f_hi)])
    return np.linspace(f_lo, f_hi, n)


def _check(state, voltages):
    v = np.asarray(voltages, dtype=float)
    if v.ndim != 2 or v.shape[1] != state.size:
        raise StructuralError(
            f"voltages shape {v.shape} does not match {state.size} neurons"
        )
    return v


def drive_current(state, voltages_uv):
    return np.asarray(voltages_uv, dtype=float) / UV_PER_V * state.g_m


def forward(state, voltages):
    """Map chain voltages (uV) to oscillator powers (uW).

    Returns ``(powers, emit_freqs)``.
    """
    v = _check(state, voltages)
    p = stno_power(drive_current(state, v), state.osc_params, state.clamped)
    return p * UW_PER_W, state.emit_freqs


def backward(state, voltages, upstream_grad):
    """dL/dV (per uV) from dL/dP (per uW)."""
    v = _check(state, voltages)
    up = np.asarray(upstream_grad, dtype=float)
    if up.shape != v.shape:
        raise StructuralError(f"upstream shape {up.shape} != voltages shape {v.shape}")
    dp_di = stno_power_grad(drive_current(state, v), state.osc_params, state.clamped)
    # uW per uV: (W/A) * (A/V) * 1e6 uW/W / 1e6 uV/V
    return up * dp_di * state.g_m * (UW_PER_W / UV_PER_V)
