"""Two-layer spintronic RF networks, their software equivalents, and checkpoints.

The physical network chains synapse layer 1 -> oscillator layer -> synapse
layer 2. Layer 2 sees the hidden oscillators' emission frequencies as its
input bins. Without an output oscillator the layer-2 chain voltages are the
logits, reported in volts (``logit_scale`` converts from uV).

A single-layer network (``hidden`` and ``layer2`` both ``None``) is used for
the frequency-range study on images.
"""

import hashlib
import json
import os
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from . import neurons, synapse
from .devices import OscillatorParams, ResonatorParams
from .errors import CheckpointError, StructuralError
from .synapse import ChainLayerState, FrequencyGrid

FORMAT_VERSION = 1
MAGIC = b"SPINRFCK"
DIGEST_SIZE = 32

#: Optimizer units per stored unit: frequencies move in GHz, biases in V.
FREQ_UNIT_HZ = 1e9


@dataclass
class NetworkModel:
    input_grid: FrequencyGrid
    layer1: ChainLayerState
    hidden: neurons.NeuronLayerState = None
    layer2: ChainLayerState = None
    output_neuron: neurons.NeuronLayerState = None
    logit_scale: float = 1e-6
    metadata: dict = field(default_factory=dict)

    kind = "physical"

    def __post_init__(self):
        if self.layer1.n_resonators < 1:
            raise StructuralError("layer 1 has no resonators")
        if (self.hidden is None) != (self.layer2 is None):
            raise StructuralError("hidden layer and layer 2 must be given together")
        if self.hidden is not None and self.hidden.size != self.layer1.n_chains:
            raise StructuralError(
                f"{self.layer1.n_chains} layer-1 chains feed {self.hidden.size} neurons"
            )
        if self.output_neuron is not None:
            n_out = self.layer2.n_chains if self.layer2 is not None else self.layer1.n_chains
            if self.output_neuron.size != n_out:
                raise StructuralError("output neuron count does not match last layer")

    @property
    def layer2_grid(self):
        return None if self.hidden is None else self.hidden.emit_freqs

    @property
    def n_inputs(self):
        return self.input_grid.n_bins

    @property
    def n_outputs(self):
        last = self.layer2 if self.layer2 is not None else self.layer1
        return last.n_chains

    def parameters(self):
        """Trainable arrays, keyed by name. Updating them in place updates the model."""
        params = {"layer1.f_res": self.layer1.f_res, "layer1.v_chains": self.layer1.v_chains}
        if self.layer2 is not None:
            params["layer2.f_res"] = self.layer2.f_res
            params["layer2.v_chains"] = self.layer2.v_chains
        return params

    def param_units(self):
        return {k: (FREQ_UNIT_HZ if k.endswith("f_res") else 1.0) for k in self.parameters()}

    def project(self):
        self.layer1.clip()
        if self.layer2 is not None:
            self.layer2.clip()

    def copy(self):
        return NetworkModel(
            input_grid=self.input_grid,
            layer1=self.layer1.copy(),
            hidden=None if self.hidden is None else self.hidden.copy(),
            layer2=None if self.layer2 is None else self.layer2.copy(),
            output_neuron=None if self.output_neuron is None else self.output_neuron.copy(),
            logit_scale=self.logit_scale,
            metadata=dict(self.metadata),
        )

    def forward(self, batch, cache=False):
        """Outputs for a (batch, bins) array of input powers in uW.

        With ``cache=True`` also returns the intermediate values needed by
        :meth:`backward`.
        """
        x = np.asarray(batch, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise StructuralError(f"batch shape {x.shape} does not match {self.n_inputs} inputs")
        c = {"x": x}
        if cache:
            w1, dw1 = synapse.weights_and_grad(self.layer1, self.input_grid)
            c["dw1"] = dw1
        else:
            w1 = synapse.effective_weights(self.layer1, self.input_grid)
        c["w1"] = w1
        v = synapse.forward(self.layer1, self.input_grid, x, weights=w1)
        c["v1"] = v
        if self.hidden is not None:
            h, grid2 = neurons.forward(self.hidden, v)
            c["h"] = h
            if cache:
                w2, dw2 = synapse.weights_and_grad(self.layer2, grid2)
                c["dw2"] = dw2
            else:
                w2 = synapse.effective_weights(self.layer2, grid2)
            c["w2"] = w2
            v = synapse.forward(self.layer2, grid2, h, weights=w2)
            c["v2"] = v
        if self.output_neuron is not None:
            out = neurons.forward(self.output_neuron, v)[0]
        else:
            out = v * self.logit_scale
        return (out, c) if cache else out

    def backward(self, c, out_grad):
        """Parameter gradients (per stored unit) from dL/d(output)."""
        g = np.asarray(out_grad, dtype=float)
        last_v = c["v2"] if self.hidden is not None else c["v1"]
        if g.shape != last_v.shape:
            raise StructuralError(f"output gradient shape {g.shape} != {last_v.shape}")
        if self.output_neuron is not None:
            g = neurons.backward(self.output_neuron, last_v, g)
        else:
            g = g * self.logit_scale
        grads = {}
        if self.hidden is not None:
            gf, gb, gh = synapse.backward_cached(c["w2"], c["dw2"], c["h"], g)
            grads["layer2.f_res"] = gf
            grads["layer2.v_chains"] = gb
            g = neurons.backward(self.hidden, c["v1"], gh)
        gf, gb, _ = synapse.backward_cached(c["w1"], c["dw1"], c["x"], g)
        grads["layer1.f_res"] = gf
        grads["layer1.v_chains"] = gb
        return grads

    # -- serialization -------------------------------------------------
    def _arrays(self):
        arrays = {
            "layer1.f_res": (self.layer1.f_res, "Hz"),
            "layer1.v_chains": (self.layer1.v_chains, "V"),
        }
        if self.hidden is not None:
            arrays["hidden.emit_freqs"] = (self.hidden.emit_freqs, "Hz")
            arrays["layer2.f_res"] = (self.layer2.f_res, "Hz")
            arrays["layer2.v_chains"] = (self.layer2.v_chains, "V")
        if self.output_neuron is not None:
            arrays["output.emit_freqs"] = (self.output_neuron.emit_freqs, "Hz")
        return arrays

    def _config(self):
        def layer_cfg(s):
            return {
                "band_hz": list(s.band),
                "v_layer_v": s.v_layer,
                "sign_mode": s.sign_mode,
                "alpha": s.resonator_params.alpha,
                "k_sd_uv_per_uw": s.resonator_params.k_sd,
            }

        def neuron_cfg(n):
            o = n.osc_params
            return {
                "g_m_a_per_v": n.g_m,
                "clamped": n.clamped,
                "i_th_a": o.i_th,
                "q_nl": o.q_nl,
                "a_scale": o.a_scale,
                "r_ohm": o.r_ohm,
                "clamp_factor": o.clamp_factor,
                "shape_tmr_factor": o.shape_tmr_factor,
            }

        g = self.input_grid
        cfg = {
            "input_grid": {"f_min_hz": g.f_min, "f_max_hz": g.f_max, "n_bins": g.n_bins},
            "layer1": layer_cfg(self.layer1),
            "logit_scale": self.logit_scale,
        }
        if self.hidden is not None:
            cfg["hidden"] = neuron_cfg(self.hidden)
            cfg["layer2"] = layer_cfg(self.layer2)
        if self.output_neuron is not None:
            cfg["output_neuron"] = neuron_cfg(self.output_neuron)
        return cfg

    @classmethod
    def _from_parts(cls, cfg, arrays, metadata):
        def layer(lc, prefix):
            return ChainLayerState(
                f_res=arrays[f"{prefix}.f_res"],
                v_chains=arrays[f"{prefix}.v_chains"],
                band=tuple(lc["band_hz"]),
                v_layer=lc["v_layer_v"],
                sign_mode=lc["sign_mode"],
                resonator_params=ResonatorParams(lc["alpha"], lc["k_sd_uv_per_uw"]),
            )

        def neuron(nc, freqs):
            o = OscillatorParams(
                i_th=nc["i_th_a"],
                q_nl=nc["q_nl"],
                a_scale=nc["a_scale"],
                r_ohm=nc["r_ohm"],
                clamp_factor=nc["clamp_factor"],
                shape_tmr_factor=nc["shape_tmr_factor"],
            )
            return neurons.NeuronLayerState(nc["g_m_a_per_v"], freqs, o, nc["clamped"])

        g = cfg["input_grid"]
        hidden = layer2 = out = None
        if "hidden" in cfg:
            hidden = neuron(cfg["hidden"], arrays["hidden.emit_freqs"])
            layer2 = layer(cfg["layer2"], "layer2")
        if "output_neuron" in cfg:
            out = neuron(cfg["output_neuron"], arrays["output.emit_freqs"])
        model = cls(
            input_grid=FrequencyGrid(g["f_min_hz"], g["f_max_hz"], g["n_bins"]),
            layer1=layer(cfg["layer1"], "layer1"),
            hidden=hidden,
            layer2=layer2,
            output_neuron=out,
            logit_scale=cfg["logit_scale"],
            metadata=metadata,
        )
        if model.layer1.f_res.shape[1] < 1:
            raise StructuralError("empty layer")
        return model


_ACTIVATIONS = ("relu", "stno", "identity")


_OSC = OscillatorParams()


def _stno_shape(z):
    # power in threshold units up to a constant: z^2 (z - 1) / (z + Q)
    return z * z * (z - 1.0) / (z + _OSC.q_nl)


_STNO_NORM = 1.0 / _stno_shape(_OSC.clamp_factor)


def _stno_unit(z):
    """Oscillator power curve in threshold units, normalised to 1 at the clamp."""
    zc = np.minimum(z, _OSC.clamp_factor)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(zc > 1.0, _stno_shape(zc) * _STNO_NORM, 0.0)


def _stno_unit_grad(z):
    q = _OSC.q_nl
    with np.errstate(divide="ignore", invalid="ignore"):
        d = z * (3.0 * z - 2.0) / (z + q) - z * z * (z - 1.0) / ((z + q) * (z + q))
    return np.where((z >= 1.0) & (z <= _OSC.clamp_factor), d * _STNO_NORM, 0.0)


def activate(z, name):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "stno":
        return _stno_unit(z)
    return z


def activate_grad(z, name):
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "stno":
        return _stno_unit_grad(z)
    return np.ones_like(z)


@dataclass
class SoftwareModel:
    """Equivalent software network: free weights and biases with the same shapes.

    Weights are stored (outputs, inputs) like the physical chains. Optional
    ``w1_bound``/``w2_bound`` clip weights after every step, e.g. to what one
    resonator per input can reach.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray = None
    b2: np.ndarray = None
    activation: str = "relu"
    output_activation: str = "identity"
    metadata: dict = field(default_factory=dict)
    w1_bound: float = None
    w2_bound: float = None

    kind = "software"

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=float)
        self.b1 = np.array(self.b1, dtype=float)
        if self.w1.ndim != 2 or self.b1.shape != (self.w1.shape[0],):
            raise StructuralError("layer-1 weight/bias shapes disagree")
        if (self.w2 is None) != (self.b2 is None):
            raise StructuralError("w2 and b2 must be given together")
        if self.w2 is not None:
            self.w2 = np.array(self.w2, dtype=float)
            self.b2 = np.array(self.b2, dtype=float)
            if self.w2.ndim != 2 or self.w2.shape[1] != self.w1.shape[0]:
                raise StructuralError("layer-2 weights do not match hidden size")
            if self.b2.shape != (self.w2.shape[0],):
                raise StructuralError("layer-2 bias shape disagrees")
        for a in (self.activation, self.output_activation):
            if a not in _ACTIVATIONS:
                raise StructuralError(f"unknown activation {a!r}")

    @property
    def n_inputs(self):
        return self.w1.shape[1]

    @property
    def n_outputs(self):
        return (self.w2 if self.w2 is not None else self.w1).shape[0]

    def parameters(self):
        p = {"layer1.weight": self.w1, "layer1.bias": self.b1}
        if self.w2 is not None:
            p["layer2.weight"] = self.w2
            p["layer2.bias"] = self.b2
        return p

    def param_units(self):
        return {k: 1.0 for k in self.parameters()}

    def project(self):
        if self.w1_bound is not None:
            np.clip(self.w1, -self.w1_bound, self.w1_bound, out=self.w1)
        if self.w2 is not None and self.w2_bound is not None:
            np.clip(self.w2, -self.w2_bound, self.w2_bound, out=self.w2)

    def copy(self):
        return SoftwareModel(
            self.w1.copy(),
            self.b1.copy(),
            None if self.w2 is None else self.w2.copy(),
            None if self.b2 is None else self.b2.copy(),
            self.activation,
            self.output_activation,
            dict(self.metadata),
            self.w1_bound,
            self.w2_bound,
        )

    def forward(self, batch, cache=False):
        x = np.asarray(batch, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise StructuralError(f"batch shape {x.shape} does not match {self.n_inputs} inputs")
        z1 = x @ self.w1.T + self.b1
        c = {"x": x, "z1": z1}
        if self.w2 is None:
            z = z1
        else:
            h = activate(z1, self.activation)
            c["h"] = h
            z = h @ self.w2.T + self.b2
            c["z2"] = z
        out = activate(z, self.output_activation)
        return (out, c) if cache else out

    def backward(self, c, out_grad):
        g = np.asarray(out_grad, dtype=float)
        last = c["z2"] if self.w2 is not None else c["z1"]
        if g.shape != last.shape:
            raise StructuralError(f"output gradient shape {g.shape} != {last.shape}")
        g = g * activate_grad(last, self.output_activation)
        grads = {}
        if self.w2 is not None:
            grads["layer2.weight"] = g.T @ c["h"]
            grads["layer2.bias"] = g.sum(axis=0)
            g = (g @ self.w2) * activate_grad(c["z1"], self.activation)
        grads["layer1.weight"] = g.T @ c["x"]
        grads["layer1.bias"] = g.sum(axis=0)
        return grads

    def _arrays(self):
        a = {"layer1.weight": (self.w1, "1"), "layer1.bias": (self.b1, "1")}
        if self.w2 is not None:
            a["layer2.weight"] = (self.w2, "1")
            a["layer2.bias"] = (self.b2, "1")
        return a

    def _config(self):
        return {"activation": self.activation, "output_activation": self.output_activation,
                "w1_bound": self.w1_bound, "w2_bound": self.w2_bound}

    @classmethod
    def _from_parts(cls, cfg, arrays, metadata):
        return cls(
            arrays["layer1.weight"],
            arrays["layer1.bias"],
            arrays.get("layer2.weight"),
            arrays.get("layer2.bias"),
            cfg["activation"],
            cfg["output_activation"],
            metadata,
            cfg.get("w1_bound"),
            cfg.get("w2_bound"),
        )


# -- builders -----------------------------------------------------------

def build_physical(
    input_grid,
    n_hidden,
    n_outputs,
    rng,
    g_m=1.81e-3,
    v_layer=0.013,
    n_res1=None,
    n_res2=None,
    layer1_band=None,
    hidden_band=(1e9, 5e9),
    sign_mode=synapse.ALTERNATING,
    output_neuron=False,
    output_g_m=None,
    resonator_params=None,
    osc_params=None,
    logit_scale=1e-6,
):
    """Two-layer physical network; ``n_hidden=0`` builds a single synaptic layer."""
    if n_hidden == 1:
        raise StructuralError("a hidden layer needs at least two oscillators")
    rp = resonator_params or ResonatorParams()
    op = osc_params or OscillatorParams()
    if n_hidden == 0:
        layer1 = synapse.init_chain_layer(
            n_outputs, n_res1 or input_grid.n_bins, input_grid, rng,
            band=layer1_band, v_layer=v_layer, sign_mode=sign_mode, resonator_params=rp,
        )
        out = None
        if output_neuron:
            out = neurons.NeuronLayerState(
                output_g_m or g_m, neurons.default_emit_freqs(n_outputs), op, True
            )
        return NetworkModel(input_grid, layer1, output_neuron=out, logit_scale=logit_scale,
                            metadata=_metadata())
    layer1 = synapse.init_chain_layer(
        n_hidden, n_res1 or input_grid.n_bins, input_grid, rng,
        band=layer1_band, v_layer=v_layer, sign_mode=sign_mode, resonator_params=rp,
    )
    emit = neurons.default_emit_freqs(n_hidden, *hidden_band)
    hidden = neurons.NeuronLayerState(g_m, emit, op, clamped=True)
    grid2 = FrequencyGrid(emit[0], emit[-1], n_hidden)
    # room for both detuning signs at the outermost emitters
    margin = 5.0 * rp.alpha
    band2 = (emit[0] * (1.0 - margin), emit[-1] * (1.0 + margin))
    layer2 = synapse.init_chain_layer(
        n_outputs, n_res2 or n_hidden, grid2, rng, band=band2, v_layer=0.0,
        sign_mode=sign_mode, resonator_params=rp,
    )
    out = None
    if output_neuron:
        out = neurons.NeuronLayerState(
            output_g_m or g_m, neurons.default_emit_freqs(n_outputs), op, True
        )
    return NetworkModel(input_grid, layer1, hidden, layer2, out, logit_scale, _metadata())


def build_software(n_inputs, n_hidden, n_outputs, rng, activation="relu",
                   output_activation="identity"):
    """He-uniform initialised software network; ``n_hidden=0`` for one layer."""

    def init(n_out, n_in):
        lim = np.sqrt(6.0 / n_in)
        return rng.uniform(-lim, lim, (n_out, n_in))

    if n_hidden == 0:
        return SoftwareModel(init(n_outputs, n_inputs), np.zeros(n_outputs),
                             activation=activation, output_activation=output_activation,
                             metadata=_metadata())
    return SoftwareModel(
        init(n_hidden, n_inputs), np.zeros(n_hidden),
        init(n_outputs, n_hidden), np.zeros(n_outputs),
        activation, output_activation, _metadata(),
    )


def _metadata():
    # SOURCE_DATE_EPOCH pins the timestamp so repeated runs are byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return {"created_unix": float(epoch) if epoch else time.time()}


# -- checkpoints --------------------------------------------------------

_KINDS = {"physical": NetworkModel, "software": SoftwareModel}


def config_hash(model):
    """SHA-256 of the model's fixed configuration (not its trained values)."""
    blob = json.dumps({"kind": model.kind, **model._config()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def save_checkpoint(model, path):
    """Write ``model`` to ``path``; see README for the byte layout."""
    arrays = model._arrays()
    entries = []
    offset = 0
    blobs = []
    for name, (arr, unit) in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(a.shape), "unit": unit,
                        "offset": offset, "count": int(a.size)})
        blobs.append(a.tobytes())
        offset += a.nbytes
    meta = dict(model.metadata)
    meta.setdefault("config_hash", config_hash(model))
    header = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": model._config(),
        "arrays": entries,
        "metadata": meta,
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(hbytes)) + hbytes + b"".join(blobs)
    digest = hashlib.sha256(body).digest()
    with open(path, "wb") as fh:
        fh.write(body + digest)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    fixed = len(MAGIC) + 12
    if len(data) < fixed + DIGEST_SIZE:
        raise CheckpointError(f"{path}: file too short ({len(data)} bytes)")
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a spinrf checkpoint")
    version, hlen = struct.unpack("<IQ", data[len(MAGIC):fixed])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: content digest mismatch (corrupted or truncated)")
    if fixed + hlen > len(body):
        raise CheckpointError(f"{path}: header extends past end of file")
    try:
        header = json.loads(body[fixed:fixed + hlen].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: unreadable header") from exc
    payload = body[fixed + hlen:]
    arrays = {}
    for e in header["arrays"]:
        shape = tuple(e["shape"])
        if int(np.prod(shape, dtype=np.int64)) != e["count"]:
            raise StructuralError(f"{path}: array {e['name']} shape {shape} != count {e['count']}")
        end = e["offset"] + 8 * e["count"]
        if end > len(payload):
            raise StructuralError(f"{path}: array {e['name']} extends past payload")
        arrays[e["name"]] = np.frombuffer(payload, "<f8", e["count"], e["offset"]).reshape(shape).copy()
    cls = _KINDS.get(header["kind"])
    if cls is None:
        raise CheckpointError(f"{path}: unknown model kind {header['kind']!r}")
    try:
        return cls._from_parts(header["config"], arrays, header["metadata"])
    except KeyError as exc:
        raise StructuralError(f"{path}: missing entry {exc}") from exc
