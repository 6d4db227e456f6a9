"""Power and energy budget of a frequency-multiplexed spintronic network.

A synaptic layer joins N oscillators of one layer to M chains of N diodes.
An RF amplifier drives the chains so that each diode produces at least
``v_min`` at its output; DC amplifiers drive the M oscillators of the next
layer to ``a_range`` times their threshold current.

Supply powers are treated as delivered powers (amplifier efficiency 1).
"""

import json
import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError

#: uV/uW and V/W are the same ratio, so the sensitivity needs no conversion.
K_SD_ENERGY = 1e4

DEFAULT_BASELINES_W = {"digitizer": 45.0, "processor": 100.0}


@dataclass(frozen=True)
class EnergyConfig:
    n_pre: int = 256
    m_post: int = 128
    k_sd: float = K_SD_ENERGY
    v_min: float = 1e-3
    r_synapse: float = 2.5e3
    r_neuron: float = 2.5e3
    i_th: float = 1e-5
    a_range: float = 2.0
    f_op: float = 1e9
    periods_to_settle: float = 100.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name == "a_range":
                if not value >= 0:
                    raise DomainError("a_range must be non-negative")
            elif not value > 0:
                raise DomainError(f"{name} must be positive, got {value}")

    def with_layer(self, n_pre, m_post):
        d = asdict(self)
        d.update(n_pre=n_pre, m_post=m_post)
        return EnergyConfig(**d)


def chain_input_current(cfg):
    """RF current into one chain so every diode reaches ``v_min``, in A."""
    return math.sqrt(cfg.v_min / (cfg.n_pre * cfg.k_sd * cfg.r_synapse))


def diode_output_voltage(cfg, i_chain):
    """Peak DC voltage of one diode carrying ``i_chain``, in V."""
    return cfg.k_sd * cfg.r_synapse * i_chain**2


def synaptic_supply_power(cfg):
    """(total W, per-synapse W) the RF amplifier delivers to one synaptic layer."""
    per = cfg.v_min / cfg.k_sd
    return cfg.m_post * cfg.n_pre * per, per


def neuron_supply_power(cfg):
    """(per-neuron W, total W) delivered to the M post-synaptic oscillators."""
    per = cfg.r_neuron * (cfg.a_range * cfg.i_th) ** 2
    return per, cfg.m_post * per


def operation_energy(cfg):
    """(operation time s, energy per synapse J, energy per neuron J)."""
    t_op = cfg.periods_to_settle / cfg.f_op
    _, p_syn = synaptic_supply_power(cfg)
    p_neu, _ = neuron_supply_power(cfg)
    return t_op, p_syn * t_op, p_neu * t_op


@dataclass
class LayerBudget:
    n_pre: int
    m_post: int
    synapses: int
    synaptic_power_w: float
    neuron_power_w: float


@dataclass
class EnergyBudget:
    layers: list
    synapse_count: int
    neuron_count: int
    per_synapse_power_w: float
    per_neuron_power_w: float
    synaptic_total_w: float
    neuron_total_w: float
    grand_total_w: float
    t_op_s: float
    e_synapse_j: float
    e_neuron_j: float
    energy_per_inference_j: float
    baselines_w: dict = field(default_factory=dict)
    baseline_ratios: dict = field(default_factory=dict)

    @property
    def comparable_total_w(self):
        """Synaptic total alone; the published few-mW figure counts synapses only."""
        return self.synaptic_total_w

    def to_dict(self):
        d = asdict(self)
        d["comparable_total_w"] = self.comparable_total_w
        return d

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def table(self):
        rows = [
            ("layer", "N", "M", "synapses", "synaptic mW", "neuron mW"),
        ]
        for i, lay in enumerate(self.layers, 1):
            rows.append((str(i), str(lay.n_pre), str(lay.m_post), str(lay.synapses),
                         f"{lay.synaptic_power_w * 1e3:.4g}", f"{lay.neuron_power_w * 1e3:.4g}"))
        widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        lines = ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
        lines += [
            f"synaptic total        {self.synaptic_total_w * 1e3:.4f} mW",
            f"neuron total          {self.neuron_total_w * 1e3:.4f} mW",
            f"grand total           {self.grand_total_w * 1e3:.4f} mW",
            f"operation time        {self.t_op_s * 1e9:.4g} ns",
            f"energy per synapse    {self.e_synapse_j * 1e15:.4g} fJ",
            f"energy per neuron     {self.e_neuron_j * 1e15:.4g} fJ",
            f"energy per inference  {self.energy_per_inference_j * 1e9:.4g} nJ",
        ]
        for name, ratio in self.baseline_ratios.items():
            lines.append(f"gain vs {name:<13} {ratio:.3g}x")
        return "\n".join(lines)


def network_budget(sizes, cfg=EnergyConfig(), baselines=None):
    """Budget for a layered network, e.g. ``sizes=(256, 128, 10)``.

    Zero-sized layers are dropped, so an empty hidden layer leaves the
    inputs wired straight to the outputs. Baseline ratios compare the
    network's grand total against each named baseline and their sum.
    """
    sizes = [int(s) for s in sizes if int(s) > 0]
    if len(sizes) < 2:
        raise DomainError("need at least an input and an output layer")
    baselines = dict(DEFAULT_BASELINES_W if baselines is None else baselines)
    layers = []
    for n, m in zip(sizes[:-1], sizes[1:]):
        c = cfg.with_layer(n, m)
        syn, _ = synaptic_supply_power(c)
        _, neu = neuron_supply_power(c)
        layers.append(LayerBudget(n, m, n * m, syn, neu))
    t_op, e_syn, e_neu = operation_energy(cfg)
    _, per_syn = synaptic_supply_power(cfg)
    per_neu, _ = neuron_supply_power(cfg)
    syn_total = sum(lay.synaptic_power_w for lay in layers)
    neu_total = sum(lay.neuron_power_w for lay in layers)
    total = syn_total + neu_total
    ratios = {k: v / total for k, v in baselines.items()}
    if len(baselines) > 1:
        ratios["combined"] = sum(baselines.values()) / total
    n_syn = sum(lay.synapses for lay in layers)
    n_neu = sum(lay.m_post for lay in layers)
    return EnergyBudget(
        layers=layers,
        synapse_count=n_syn,
        neuron_count=n_neu,
        per_synapse_power_w=per_syn,
        per_neuron_power_w=per_neu,
        synaptic_total_w=syn_total,
        neuron_total_w=neu_total,
        grand_total_w=total,
        t_op_s=t_op,
        e_synapse_j=e_syn,
        e_neuron_j=e_neu,
        energy_per_inference_j=n_syn * e_syn + n_neu * e_neu,
        baselines_w=baselines,
        baseline_ratios=ratios,
    )
