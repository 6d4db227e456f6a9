"""Synaptic layers built from chains of serially connected spin-diode resonators.

A layer has M chains of N resonators. Chain ``j`` applies to input bin ``i``
the weight ``W[j, i] = sum_k s_k G(f_i, f_res[j, k])`` where ``s_k`` is
``(-1)**k`` for head-to-head wiring and ``+1`` for head-to-tail wiring.

Units: input powers in uW, weights in uV/uW, output voltages in uV. The
chain and layer biases are stored in volts.
"""

from dataclasses import dataclass, field

import numpy as np

from .devices import ResonatorParams, rectification_coefficient
from .errors import DomainError, StructuralError

UV_PER_V = 1e6

ALTERNATING = "alternating"
UNIFORM = "uniform"


@dataclass(frozen=True)
class FrequencyGrid:
    """Equidistant, endpoint-inclusive frequency bins."""

    f_min: float
    f_max: float
    n_bins: int

    def __post_init__(self):
        if not (np.isfinite(self.f_min) and self.f_min > 0):
            raise DomainError(f"f_min must be positive, got {self.f_min}")
        if not (np.isfinite(self.f_max) and self.f_max > self.f_min):
            raise DomainError("f_max must exceed f_min")
        if int(self.n_bins) != self.n_bins or self.n_bins < 2:
            raise DomainError(f"n_bins must be an integer >= 2, got {self.n_bins}")
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def spacing(self):
        return (self.f_max - self.f_min) / (self.n_bins - 1)

    @property
    def centers(self):
        return self.f_min + np.arange(self.n_bins) * self.spacing


@dataclass
class ChainLayerState:
    """Trainable state of one synaptic layer.

    ``f_res`` has shape (chains, resonators) in Hz, ``v_chains`` shape
    (chains,) in V. ``v_layer`` is a scalar hyperparameter bias in V.
    """

    f_res: np.ndarray
    v_chains: np.ndarray
    band: tuple
    v_layer: float = 0.0
    sign_mode: str = ALTERNATING
    resonator_params: ResonatorParams = field(default_factory=ResonatorParams)

    def __post_init__(self):
        self.f_res = np.array(self.f_res, dtype=float)
        self.v_chains = np.array(self.v_chains, dtype=float)
        self.band = (float(self.band[0]), float(self.band[1]))
        if self.f_res.ndim != 2:
            raise StructuralError(f"f_res must be 2-D, got shape {self.f_res.shape}")
        if self.v_chains.shape != (self.f_res.shape[0],):
            raise StructuralError(
                f"v_chains shape {self.v_chains.shape} does not match "
                f"{self.f_res.shape[0]} chains"
            )
        if self.sign_mode not in (ALTERNATING, UNIFORM):
            raise DomainError(f"unknown sign_mode {self.sign_mode!r}")
        lo, hi = self.band
        if not 0.0 < lo < hi:
            raise DomainError(f"invalid frequency band {self.band}")
        if np.any(self.f_res < lo) or np.any(self.f_res > hi):
            raise DomainError("resonance frequencies outside the band")

    @property
    def n_chains(self):
        return self.f_res.shape[0]

    @property
    def n_resonators(self):
        return self.f_res.shape[1]

    def signs(self):
        if self.sign_mode == ALTERNATING:
            return np.where(np.arange(self.n_resonators) % 2 == 0, 1.0, -1.0)
        return np.ones(self.n_resonators)

    def bias_uv(self):
        return (self.v_chains + self.v_layer) * UV_PER_V

    def clip(self):
        """Project the resonance frequencies back into the band, in place."""
        np.clip(self.f_res, self.band[0], self.band[1], out=self.f_res)

    def copy(self):
        return ChainLayerState(
            f_res=self.f_res.copy(),
            v_chains=self.v_chains.copy(),
            band=self.band,
            v_layer=self.v_layer,
            sign_mode=self.sign_mode,
            resonator_params=self.resonator_params,
        )


def init_chain_layer(
    n_chains,
    n_resonators,
    grid,
    rng,
    band=None,
    v_layer=0.0,
    sign_mode=ALTERNATING,
    resonator_params=None,
    jitter=0.25,
):
    """Place resonator k of every chain at the k-th bin centre plus uniform jitter.

    When the chain has a different number of resonators than the grid has
    bins, the starting frequencies are spread evenly over the grid span.
    ``jitter`` is a fraction of the resonator spacing, capped at one
    resonance half-width so that sparse grids do not start far off resonance.
    """
    if band is None:
        band = (grid.f_min, grid.f_max)
    if n_resonators == grid.n_bins:
        base = grid.centers
    else:
        base = np.linspace(grid.f_min, grid.f_max, n_resonators)
    rp = resonator_params or ResonatorParams()
    step = (grid.f_max - grid.f_min) / max(n_resonators - 1, 1)
    amp = np.minimum(jitter * step, rp.alpha * base)
    f_res = base[None, :] + rng.uniform(-1.0, 1.0, (n_chains, n_resonators)) * amp[None, :]
    f_res = np.clip(f_res, band[0], band[1])
    return ChainLayerState(
        f_res=f_res,
        v_chains=np.zeros(n_chains),
        band=band,
        v_layer=v_layer,
        sign_mode=sign_mode,
        resonator_params=rp,
    )


def _freqs(grid):
    if isinstance(grid, FrequencyGrid):
        return grid.centers
    return np.asarray(grid, dtype=float)


def effective_weights(state, grid):
    """Weight matrix (chains, bins) in uV/uW."""
    f = _freqs(grid)
    _check_state_freqs(state)
    rp = state.resonator_params
    s = state.signs()
    w = np.empty((state.n_chains, f.size))
    # one chain at a time keeps the (resonators, bins) blocks cache-sized
    for j in range(state.n_chains):
        g = rectification_coefficient(f[None, :], state.f_res[j][:, None], rp)
        np.dot(s, g, out=w[j])
    return w


def _check_state_freqs(state):
    if not np.all(np.isfinite(state.f_res)) or np.any(state.f_res <= 0):
        raise DomainError("resonance frequencies must be positive and finite")


def _check_powers(state, f, powers):
    powers = np.asarray(powers, dtype=float)
    if powers.ndim != 2 or powers.shape[1] != f.shape[0]:
        raise StructuralError(
            f"powers shape {powers.shape} does not match {f.shape[0]} frequency bins"
        )
    if np.any(powers < 0.0):
        raise DomainError("input powers must be non-negative")
    return powers


def forward(state, grid, powers, weights=None):
    """Chain output voltages (batch, chains) in uV.

    ``weights`` may be passed to reuse an already computed weight matrix.
    """
    f = _freqs(grid)
    powers = _check_powers(state, f, powers)
    if weights is None:
        weights = effective_weights(state, grid)
    elif weights.shape != (state.n_chains, f.shape[0]):
        raise StructuralError("weights do not match the layer shape")
    return powers @ weights.T + state.bias_uv()


def backward(state, grid, powers, upstream_grad):
    """Gradients of a scalar loss given dL/dV (batch, chains).

    Returns ``(grad_f_res, grad_v_chains, grad_powers)`` with units
    dL/dHz, dL/dV and dL/duW respectively.
    """
    f = _freqs(grid)
    powers = _check_powers(state, f, powers)
    up = np.asarray(upstream_grad, dtype=float)
    if up.shape != (powers.shape[0], state.n_chains):
        raise StructuralError(
            f"upstream gradient shape {up.shape} does not match "
            f"({powers.shape[0]}, {state.n_chains})"
        )
    weights, dweights = weights_and_grad(state, f)
    return backward_cached(weights, dweights, powers, up)


def weights_and_grad(state, grid):
    """Weight matrix and the signed derivative tensor dW[j, i]/df_res[j, k].

    The tensor has shape (chains, resonators, bins). This is the training
    hot path, so it evaluates the rectification coefficient and its
    derivative in place, one chain at a time, in preallocated buffers.
    """
    f = _freqs(grid)
    _check_state_freqs(state)
    rp = state.resonator_params
    s = state.signs()
    m, n = state.f_res.shape
    weights = np.empty((m, f.size))
    dweights = np.empty((m, n, f.size))
    x = np.empty((n, f.size))
    inv = np.empty_like(x)
    g = np.empty_like(x)
    k2 = 2.0 * rp.k_sd
    for j in range(m):
        fr = state.f_res[j][:, None]
        c = rp.alpha * fr
        c2 = c * c
        dg = dweights[j]
        np.subtract(f[None, :], fr, out=x)
        np.multiply(x, x, out=inv)
        np.subtract(inv, c2, out=dg)
        inv += c2
        np.reciprocal(inv, out=inv)
        np.multiply(x, inv, out=g)
        np.dot(s * (k2 * c[:, 0]), g, out=weights[j])
        # dG/df_res = 2 K (x^2 - c^2) (alpha x + c) / (c^2 + x^2)^2
        dg *= inv
        dg *= inv
        x *= rp.alpha
        x += c
        dg *= x
        dg *= (k2 * s)[:, None]
    return weights, dweights


def backward_cached(weights, dweights, powers, up):
    """Backward pass from precomputed :func:`weights_and_grad` outputs."""
    # dL/dW[j, i] = sum_b up[b, j] P[b, i]
    grad_w = up.T @ powers
    grad_f_res = np.matmul(dweights, grad_w[:, :, None])[:, :, 0]
    grad_v_chains = up.sum(axis=0) * UV_PER_V
    grad_powers = up @ weights
    return grad_f_res, grad_v_chains, grad_powers


def program_weights(state, grid, target_uv, max_iter=50, rtol=1e-10):
    """Tune ``state.f_res`` in place so the chain weights match ``target_uv``.

    Resonator ``k`` of each chain serves input bin ``k``; each target is first
    met on the near-resonance branch (detuning below one half-width) ignoring
    the other resonators, then the coupled system is solved by Newton steps
    per chain. Targets beyond the reachable +-K_SD are clipped. Returns the
    largest remaining absolute weight error in uV/uW.
    """
    f = _freqs(grid)
    target = np.asarray(target_uv, dtype=float)
    if state.n_resonators != f.size:
        raise StructuralError("weight programming needs one resonator per input bin")
    if target.shape != (state.n_chains, f.size):
        raise StructuralError(f"target shape {target.shape} != {(state.n_chains, f.size)}")
    rp = state.resonator_params
    s = state.signs()
    g = np.clip(target * s[None, :], -0.999 * rp.k_sd, 0.999 * rp.k_sd)
    # G(x) = 2 c x K / (c^2 + x^2) on the branch |x| <= c
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(g == 0.0, 0.0, (rp.k_sd - np.sqrt(rp.k_sd**2 - g * g)) / g)
    f_res = f[None, :] / (1.0 + rp.alpha * u)  # x = f - f_res = c u, c = alpha f_res
    state.f_res[...] = np.clip(f_res, *state.band)
    scale = rp.k_sd
    for _ in range(max_iter):
        w, dw = weights_and_grad(state, f)
        err = w - target
        if np.max(np.abs(err)) <= rtol * scale:
            break
        for j in range(state.n_chains):
            jac = dw[j].T  # (bins, resonators)
            try:
                step = np.linalg.solve(jac, -err[j])
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jac, -err[j], rcond=None)[0]
            # stay within a half-width per step so Newton keeps to the branch
            lim = rp.alpha * state.f_res[j]
            state.f_res[j] += np.clip(step, -0.5 * lim, 0.5 * lim)
        state.clip()
    w = effective_weights(state, f)
    return float(np.max(np.abs(w - np.clip(target, -rp.k_sd, rp.k_sd))))
