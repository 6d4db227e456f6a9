"""Closed-form models of the spin-diode resonator and the spin-torque oscillator.

Frequencies are in Hz, spin-diode weights in uV/uW, currents in A and
powers in W. Every function broadcasts over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Spin-diode sensitivity used by the network simulator, uV/uW.
K_SD_SIMULATION = 8.8e3


@dataclass(frozen=True)
class ResonatorParams:
    """Spin-diode synapse constants."""

    alpha: float = 0.01
    k_sd: float = K_SD_SIMULATION

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.k_sd > 0.0:
            raise DomainError(f"k_sd must be positive, got {self.k_sd}")


@dataclass(frozen=True)
class OscillatorParams:
    """Spin-torque nano-oscillator neuron constants.

    ``shape_tmr_factor`` is the product of tunnel magnetoresistance and shape
    factor; the output power scales with its square.
    """

    i_th: float = 10e-6
    q_nl: float = 2.0
    a_scale: float = 1.25
    r_ohm: float = 1e3
    clamp_factor: float = 4.0
    shape_tmr_factor: float = 1.0

    def __post_init__(self):
        if not self.i_th > 0.0:
            raise DomainError(f"i_th must be positive, got {self.i_th}")
        if not self.r_ohm > 0.0:
            raise DomainError(f"r_ohm must be positive, got {self.r_ohm}")
        if not self.clamp_factor > 1.0:
            raise DomainError(f"clamp_factor must exceed 1, got {self.clamp_factor}")
        if not self.q_nl >= 0.0:
            raise DomainError(f"q_nl must be non-negative, got {self.q_nl}")

    @property
    def i_clamp(self):
        return self.clamp_factor * self.i_th

    @property
    def max_power(self):
        """Output power at the clamp current, W."""
        return float(stno_power(self.i_clamp, self, clamped=True))


def _check_fres(f_res):
    f_res = np.asarray(f_res, dtype=float)
    if not np.all(np.isfinite(f_res)) or np.any(f_res <= 0.0):
        raise DomainError("resonance frequencies must be finite and positive")
    return f_res


def rectification_coefficient(f_in, f_res, p=ResonatorParams()):
    """Spin-diode weight of a resonator at ``f_res`` for an input tone at ``f_in``.

    Dispersive (anti-Lorentzian) in the detuning ``f_in - f_res`` with
    half-width ``alpha * f_res``; peaks at +/- ``k_sd``.
    """
    f_res = _check_fres(f_res)
    x = np.asarray(f_in, dtype=float) - f_res
    c = p.alpha * f_res
    return 2.0 * p.k_sd * c * x / (c * c + x * x)


def rectification_coefficient_grad_fres(f_in, f_res, p=ResonatorParams()):
    """Derivative of :func:`rectification_coefficient` w.r.t. ``f_res``, uV/(uW Hz)."""
    f_res = _check_fres(f_res)
    x = np.asarray(f_in, dtype=float) - f_res
    c = p.alpha * f_res
    den = c * c + x * x
    return 2.0 * p.k_sd * (x * x - c * c) * (p.alpha * x + c) / (den * den)


def rectification_and_grad(f_in, f_res, p=ResonatorParams()):
    """Return ``(G, dG/df_res)`` sharing the intermediate arrays."""
    f_res = _check_fres(f_res)
    x = np.asarray(f_in, dtype=float) - f_res
    c = p.alpha * f_res
    x2 = x * x
    c2 = c * c
    inv = 1.0 / (c2 + x2)
    g = (2.0 * p.k_sd) * c * x * inv
    dg = (2.0 * p.k_sd) * (x2 - c2) * (p.alpha * x + c) * inv * inv
    return g, dg


def normalized_power(xi, q_nl):
    """Stationary precession power ``(xi - 1) / (xi + Q)``, zero below threshold."""
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(xi > 1.0, (xi - 1.0) / (xi + q_nl), 0.0)


def _unclamped_power(i, o):
    xi = i / o.i_th
    p = normalized_power(xi, o.q_nl)
    return o.a_scale * o.shape_tmr_factor**2 * p * o.r_ohm * i * i


def stno_power(i_dc, o=OscillatorParams(), clamped=True):
    """RF output power (W) of an oscillator driven by DC current ``i_dc`` (A).

    Zero at or below threshold, including every negative current. With
    ``clamped`` the drive saturates at ``clamp_factor * i_th``.
    """
    i = np.asarray(i_dc, dtype=float)
    if clamped:
        i = np.minimum(i, o.i_clamp)
    return _unclamped_power(i, o)


def stno_power_grad(i_dc, o=OscillatorParams(), clamped=True):
    """dP/dI in W/A.

    At the threshold the right-sided derivative is returned, at the clamp the
    left-sided one.
    """
    i = np.asarray(i_dc, dtype=float)
    xi = i / o.i_th
    scale = o.a_scale * o.shape_tmr_factor**2 * o.r_ohm
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (xi - 1.0) / (xi + o.q_nl)
        dp_dxi = (1.0 + o.q_nl) / (xi + o.q_nl) ** 2
        grad = scale * (2.0 * i * p + i * i * dp_dxi / o.i_th)
    active = i >= o.i_th
    if clamped:
        active &= i <= o.i_clamp
    return np.where(active, grad, 0.0)
