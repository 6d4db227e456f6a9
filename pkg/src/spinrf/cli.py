"""``spinrf`` command line: train, evaluate, search, sweep-freq, task2d, energy, fit.

Every subcommand reads an optional INI file (``--config``) whose sections
and keys are listed in :data:`SCHEMA`, applies ``--set section.key=value``
overrides on top, and writes its results plus a ``config.ini`` echo into the
output directory.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets, energy, experiments, fitting, network, training
from .errors import (CheckpointError, DivergenceError, DomainError, FitError, ParseError,
                     SpinRFError, StructuralError)

log = logging.getLogger("spinrf")

OUTPUT_ENV = "SPINRF_OUTPUT_DIR"
DEFAULT_OUTPUT = "spinrf-out"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

AUTO = "auto"


class ConfigError(SpinRFError):
    pass


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_or_auto(text):
    t = str(text).strip().lower()
    return AUTO if t == AUTO else float(t)


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _pairs(text):
    out = {}
    for item in str(text).split(","):
        if item.strip():
            k, _, v = item.partition("=")
            if not _:
                raise ValueError(f"expected name=value, got {item!r}")
            out[k.strip()] = float(v)
    return out


#: section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "seed": (int, 0),
    },
    "data": {
        "source": (str, "synth-drone"),
        "path": (str, ""),
        "mnist_images": (str, ""),
        "mnist_labels": (str, ""),
        "mnist_test_images": (str, ""),
        "mnist_test_labels": (str, ""),
        "n_test": (int, 1000),
        "subset": (int, 0),
        "per_class": (int, 100),
        "n_classes": (int, 10),
        "f_min": (float, experiments.SWEEP_F_MIN),
        "f_max": (float, 5e9),
    },
    "model": {
        "kind": (str, "physical"),
        "n_hidden": (int, 128),
        "g_m": (float, 1.81e-3),
        "v_layer": (float, 0.013),
        "sign_mode": (str, "alternating"),
        "hidden_f_lo": (float, 1e9),
        "hidden_f_hi": (float, 5e9),
        "output_neuron": (_bool, False),
        "activation": (str, "relu"),
    },
    "train": {
        "learning_rate": (_float_or_auto, AUTO),
        "epochs": (int, 50),
        "batch_size": (int, 32),
        "loss": (str, "cross_entropy"),
        "repeats": (int, 1),
    },
    "search": {
        "n_trials": (int, 100),
        "validation_fraction": (float, 0.2),
        "objective_repeats": (int, 10),
        "lr_min": (float, 1e-6),
        "lr_max": (float, 1e-3),
        "g_m_min": (float, 5e-4),
        "g_m_max": (float, 5e-3),
        "v_layer_min": (float, 0.0),
        "v_layer_max": (float, 0.03),
    },
    "sweep": {
        "f_min": (float, experiments.SWEEP_F_MIN),
        "f_max": (_floats, experiments.SWEEP_F_MAX),
        "repeats": (int, 10),
        "epochs": (int, 20),
        "learning_rate": (_float_or_auto, AUTO),
        "batch_size": (int, 32),
        "n_chains": (int, 10),
        "software_baseline": (_bool, True),
    },
    "task2d": {
        "tasks": (_ints, (1, 2, 3)),
        "n_samples": (int, 2000),
        "test_fraction": (float, 0.25),
        "g_m": (float, experiments.Task2DConfig.g_m),
        "output_g_m": (float, experiments.Task2DConfig.output_g_m),
        "learning_rate": (float, experiments.Task2DConfig.learning_rate),
        "epochs": (int, experiments.Task2DConfig.epochs),
        "batch_size": (int, experiments.Task2DConfig.batch_size),
        "max_restarts": (int, experiments.Task2DConfig.max_restarts),
        "target_train_acc": (float, experiments.Task2DConfig.target_train_acc),
        "finetune_epochs": (int, 0),
        "finetune_lr": (float, 1e-5),
        "grid_resolution": (int, 91),
    },
    "energy": {
        "sizes": (_ints, (256, 128, 10)),
        "k_sd": (float, energy.EnergyConfig.k_sd),
        "v_min": (float, energy.EnergyConfig.v_min),
        "r_synapse": (float, energy.EnergyConfig.r_synapse),
        "r_neuron": (float, energy.EnergyConfig.r_neuron),
        "i_th": (float, energy.EnergyConfig.i_th),
        "a_range": (float, energy.EnergyConfig.a_range),
        "f_op": (float, energy.EnergyConfig.f_op),
        "periods_to_settle": (float, energy.EnergyConfig.periods_to_settle),
        "baselines": (_pairs, dict(energy.DEFAULT_BASELINES_W)),
    },
    "fit": {
        "kind": (str, "spin-diode"),
        "path": (str, ""),
        "n_resonances": (int, 2),
    },
}


def _format(value):
    if isinstance(value, dict):
        return ",".join(f"{k}={v!r}" for k, v in value.items())
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_config(path=None, overrides=()):
    """Defaults, then the INI file, then ``section.key=value`` overrides."""
    cfg = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}

    def put(section, key, text, where):
        if section not in SCHEMA:
            raise ConfigError(f"{where}: unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{where}: unknown key {section}.{key}")
        parse = SCHEMA[section][key][0]
        try:
            cfg[section][key] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {section}.{key}: {exc}") from None

    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if cp.defaults():
            raise ConfigError(f"{path}: keys outside a section are not allowed")
        for section in cp.sections():
            for key, text in cp.items(section):
                put(section, key, text, str(path))
    for item in overrides:
        dotted, eq, text = item.partition("=")
        section, dot, key = dotted.strip().partition(".")
        if not eq or not dot:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        put(section, key, text.strip(), "--set")
    return cfg


def write_config(cfg, path):
    cp = configparser.ConfigParser(interpolation=None)
    for section, keys in cfg.items():
        cp[section] = {k: _format(v) for k, v in keys.items()}
    with open(path, "w") as fh:
        cp.write(fh)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- data ------------------------------------------------------------------

def _mnist_dataset(d):
    if not d["mnist_images"] or not d["mnist_labels"]:
        raise ConfigError("data.mnist_images and data.mnist_labels are required for MNIST")
    images, labels = datasets.load_mnist(d["mnist_images"], d["mnist_labels"])
    if d["mnist_test_images"]:
        ti, tl = datasets.load_mnist(d["mnist_test_images"], d["mnist_test_labels"])
        split = np.array([datasets.TRAIN] * len(labels) + [datasets.TEST] * len(tl), dtype=object)
        images = np.concatenate([images, ti])
        labels = np.concatenate([labels, tl])
    else:
        split = None
    if d["subset"]:
        images, labels = images[: d["subset"]], labels[: d["subset"]]
        split = None if split is None else split[: d["subset"]]
    if split is None:
        split = datasets.stratified_split(labels, d["n_test"], 0)
    return images, labels, split


def load_dataset(cfg):
    d = cfg["data"]
    src = d["source"]
    if src == "synth-drone":
        return datasets.synth_drone_like(d["n_classes"], d["per_class"], cfg["run"]["seed"])
    if src == "csv":
        if not d["path"]:
            raise ConfigError("data.path is required for source=csv")
        return datasets.load_spectra_csv(d["path"])
    if src == "mnist":
        images, labels, split = _mnist_dataset(d)
        return datasets.mnist_as_spectrum(images, labels, d["f_min"], d["f_max"], split)
    raise ConfigError(f"unknown data.source {src!r} (synth-drone, csv or mnist)")


def _model_spec(cfg):
    m = cfg["model"]
    return experiments.ModelSpec(
        kind=m["kind"], n_hidden=m["n_hidden"], g_m=m["g_m"], v_layer=m["v_layer"],
        sign_mode=m["sign_mode"], hidden_band=(m["hidden_f_lo"], m["hidden_f_hi"]),
        output_neuron=m["output_neuron"], activation=m["activation"],
    )


def _train_config(cfg, kind, seed):
    t = cfg["train"]
    lr = t["learning_rate"]
    if lr == AUTO:
        lr = experiments.default_lr(kind)
    return training.TrainConfig(learning_rate=lr, epochs=t["epochs"],
                                batch_size=t["batch_size"], loss=t["loss"], seed=seed)


# -- subcommands -------------------------------------------------------------

HISTORY_COLUMNS = ("repeat",) + training.HISTORY_COLUMNS


def _write_history(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for r in rows:
            w.writerow([r["repeat"], r["epoch"], repr(float(r["loss"])),
                        repr(float(r["train_acc"])), repr(float(r["test_acc"]))])


def cmd_train(cfg, out):
    spec = _model_spec(cfg)
    seed = cfg["run"]["seed"]
    repeats = cfg["train"]["repeats"]
    if repeats < 1:
        raise ConfigError("train.repeats must be >= 1")
    tcfgs = [_train_config(cfg, spec.kind, seed + r) for r in range(repeats)]
    ds = load_dataset(cfg)
    if spec.kind == "physical" and spec.n_hidden == 0 and spec.v_layer:
        log.info("single-layer network: v_layer applies to the output chains")
    rows, runs = [], []
    best = None
    for r, tc in enumerate(tcfgs):
        res = experiments.train_on_dataset(ds, spec, tc)
        for h in res.history:
            rows.append({"repeat": r, **h})
        fin = res.final
        runs.append({
            "repeat": r, "seed": tc.seed, "final_train_acc": fin["train_acc"],
            "final_test_acc": fin["test_acc"], "best_epoch": res.best_epoch,
            "best_test_acc": res.history[res.best_epoch - 1]["test_acc"],
        })
        score = fin["test_acc"] if not math.isnan(fin["test_acc"]) else fin["train_acc"]
        if best is None or score > best[0]:
            best = (score, r, res)
        log.info("repeat %d: train %.4f test %.4f", r, fin["train_acc"], fin["test_acc"])
    _write_history(rows, out / "history.csv")
    network.save_checkpoint(best[2].model, out / "checkpoint.spk")
    finals = np.array([x["final_test_acc"] for x in runs], dtype=float)
    summary = {
        "command": "train",
        "model": spec.kind,
        "seed": seed,
        "n_train": int(np.sum(ds.split == datasets.TRAIN)),
        "n_test": int(np.sum(ds.split == datasets.TEST)),
        "final_train_acc": runs[best[1]]["final_train_acc"],
        "final_test_acc": runs[best[1]]["final_test_acc"],
        "best_test_acc": runs[best[1]]["best_test_acc"],
        "best_epoch": runs[best[1]]["best_epoch"],
        "mean_final_test_acc": float(np.mean(finals)),
        "std_final_test_acc": float(np.std(finals)),
        "checkpoint_repeat": best[1],
        "runs": runs,
        "config": cfg,
        "version": __version__,
    }
    write_json(summary, out / "summary.json")
    print(f"test accuracy {summary['final_test_acc']:.4f} "
          f"(train {summary['final_train_acc']:.4f}); results in {out}")
    return summary


def cmd_evaluate(cfg, out, checkpoint):
    model = network.load_checkpoint(checkpoint)
    ds = load_dataset(cfg)
    if ds.grid.n_bins != model.n_inputs:
        raise StructuralError(f"dataset has {ds.grid.n_bins} bins, model expects {model.n_inputs}")
    tc = training.TrainConfig(loss=cfg["train"]["loss"])
    res = {"command": "evaluate", "checkpoint": str(checkpoint), "config": cfg}
    for tag in (datasets.TRAIN, datasets.TEST):
        x, y = ds.subset(tag)
        loss, acc = training.evaluate(model, x, y, tc)
        res[f"{tag}_loss"] = loss
        res[f"{tag}_acc"] = acc
        res[f"n_{tag}"] = int(len(y))
    write_json(res, out / "summary.json")
    print(f"train accuracy {res['train_acc']:.4f}, test accuracy {res['test_acc']:.4f}")
    return res


def cmd_search(cfg, out):
    s = cfg["search"]
    spec = _model_spec(cfg)
    if spec.kind != "physical":
        raise ConfigError("search tunes g_m and v_layer and needs model.kind=physical")
    space = training.HyperSearchSpace(
        learning_rate=(s["lr_min"], s["lr_max"]), g_m=(s["g_m_min"], s["g_m_max"]),
        v_layer=(s["v_layer_min"], s["v_layer_max"]), n_trials=s["n_trials"],
        objective_repeats=s["objective_repeats"], seed=cfg["run"]["seed"],
    )
    base = _train_config(cfg, "physical", 0)
    ds = experiments.validation_split(load_dataset(cfg), s["validation_fraction"], cfg["run"]["seed"])

    def objective(params, seed):
        sp = experiments.ModelSpec(**{**spec.__dict__, "g_m": params["g_m"],
                                      "v_layer": params["v_layer"]})
        tc = training.TrainConfig(**{**base.__dict__, "learning_rate": params["learning_rate"],
                                     "seed": seed})
        return experiments.train_on_dataset(ds, sp, tc).final["test_acc"]

    res = training.hyper_search(space, objective, out / "trials.csv")
    summary = {"command": "search", "best_params": res.best_params,
               "best_mean_accuracy": res.best_score, "n_validation": int(np.sum(ds.split == datasets.TEST)), "n_trials": len(res.trials), "config": cfg}
    write_json(summary, out / "summary.json")
    print(f"best {res.best_params} mean accuracy {res.best_score:.4f}")
    return summary


def cmd_sweep_freq(cfg, out):
    s = cfg["sweep"]
    images, labels, split = _mnist_dataset(cfg["data"])
    lr = s["learning_rate"]
    if lr == AUTO:
        lr = experiments.PHYSICAL_LR
    tc = training.TrainConfig(learning_rate=lr, epochs=s["epochs"], batch_size=s["batch_size"])
    rows = experiments.sweep_frequency(
        images, labels, split, s["f_max"], s["f_min"], s["repeats"], tc, s["n_chains"],
        cfg["run"]["seed"],
        callback=lambda r: log.info("f_max %.3g repeat %d test %.4f", r.f_max, r.repeat, r.test_acc),
    )
    experiments.write_sweep_csv(rows, out / "sweep.csv")
    summary = {"command": "sweep-freq", "per_f_max": [
        {"f_max": f, **v} for f, v in experiments.sweep_summary(rows).items()], "config": cfg}
    if s["software_baseline"]:
        accs = experiments.software_single_layer(
            images, labels, split, s["repeats"],
            training.TrainConfig(learning_rate=1e-3, epochs=s["epochs"], batch_size=s["batch_size"]),
            cfg["run"]["seed"])
        summary["software_mean_test_acc"] = float(np.mean(accs))
        summary["software_std_test_acc"] = float(np.std(accs))
    write_json(summary, out / "summary.json")
    for row in summary["per_f_max"]:
        print(f"f_max {row['f_max']:.3g} Hz: test {row['mean_test_acc']:.4f} "
              f"+- {row['std_test_acc']:.4f}, neighbour corr {row['mean_neighbor_corr']:.3f}")
    return summary


def cmd_task2d(cfg, out):
    t = cfg["task2d"]
    tcfg = experiments.Task2DConfig(
        n_samples=t["n_samples"], test_fraction=t["test_fraction"], seed=cfg["run"]["seed"],
        g_m=t["g_m"], output_g_m=t["output_g_m"], learning_rate=t["learning_rate"],
        epochs=t["epochs"], batch_size=t["batch_size"], max_restarts=t["max_restarts"],
        target_train_acc=t["target_train_acc"], finetune_epochs=t["finetune_epochs"],
        finetune_lr=t["finetune_lr"], grid_resolution=t["grid_resolution"],
    )
    for task in t["tasks"]:
        if task not in (1, 2, 3):
            raise ConfigError(f"unknown task {task}")
    results = []
    for task in t["tasks"]:
        r = experiments.run_task2d(task, tcfg)
        grid = experiments.decision_grid(r.model, tcfg.grid_resolution)
        experiments.write_decision_grid(grid, out / f"task{task}_grid.csv")
        network.save_checkpoint(r.model, out / f"task{task}.spk")
        results.append(r.to_dict())
        print(f"task {task}: physical test accuracy {r.test_acc:.4f} "
              f"(train {r.train_acc:.4f}, software test {r.software_test_acc:.4f})")
    write_json({"command": "task2d", "tasks": results, "config": cfg}, out / "summary.json")
    return results


def cmd_energy(cfg, out):
    e = cfg["energy"]
    ecfg = energy.EnergyConfig(
        k_sd=e["k_sd"], v_min=e["v_min"], r_synapse=e["r_synapse"], r_neuron=e["r_neuron"],
        i_th=e["i_th"], a_range=e["a_range"], f_op=e["f_op"],
        periods_to_settle=e["periods_to_settle"],
    )
    budget = energy.network_budget(e["sizes"], ecfg, e["baselines"])
    d = budget.to_dict()
    d["command"] = "energy"
    d["config"] = cfg
    write_json(d, out / "energy.json")
    print(budget.table())
    return budget


def cmd_fit(cfg, out):
    f = cfg["fit"]
    if not f["path"]:
        raise ConfigError("fit.path is required")
    _, x, y = fitting.read_xy_csv(f["path"])
    if f["kind"] == "spin-diode":
        try:
            res = fitting.fit_spin_diode(x, y, f["n_resonances"])
        except FitError as exc:
            if exc.best is not None:
                write_json({"command": "fit", "kind": f["kind"], "converged": False,
                            **exc.best.to_dict()},
                           out / "fit.json")
            raise
        pred = res.evaluate(x)
    elif f["kind"] == "neuron":
        res = fitting.fit_piecewise_neuron(x, y)
        pred = res.evaluate(x)
    else:
        raise ConfigError(f"unknown fit.kind {f['kind']!r} (spin-diode or neuron)")
    rmse, pct = fitting.rmse_report(y, pred)
    report = {"command": "fit", "kind": f["kind"], "converged": True, **res.to_dict(),
              "rmse_percent_of_range": pct, "n_points": int(x.size), "config": cfg}
    write_json(report, out / "fit.json")
    if f["kind"] == "spin-diode":
        for r in report["resonances"]:
            print(f"f_res {r['f_res_hz']:.6g} Hz  width {r['width_hz']:.4g} Hz  "
                  f"sym {r['sym_amp_uv']:.4g} uV  antisym {r['antisym_amp_uv']:.4g} uV")
    else:
        print(f"threshold {res.threshold:.6g} A  slope {res.slope:.4g} uV/A  "
              f"intercept {res.intercept:.4g} uV")
    print(f"rmse {rmse:.4g} ({pct:.3g}% of range)")
    return report


# -- entry point ---------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="spinrf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"spinrf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="INI file with [section] key = value")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config value")
        sp.add_argument("--output-dir", type=Path,
                        help=f"results directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
        sp.add_argument("--seed", type=int, help="shorthand for --set run.seed=N")
        sp.add_argument("-v", "--verbose", action="count", default=0)
        return sp

    t = common(sub.add_parser("train", help="train a physical or software network"))
    t.add_argument("--model", choices=("physical", "software"))
    t.add_argument("--data", help="synth-drone, mnist, or a spectra CSV path")
    t.add_argument("--epochs", type=int)
    e = common(sub.add_parser("evaluate", help="evaluate a checkpoint on a dataset"))
    e.add_argument("--checkpoint", type=Path, required=True)
    e.add_argument("--data", help="synth-drone, mnist, or a spectra CSV path")
    s = common(sub.add_parser("search", help="random search over lr, g_m and v_layer"))
    s.add_argument("--data", help="synth-drone, mnist, or a spectra CSV path")
    common(sub.add_parser("sweep-freq", help="MNIST accuracy versus maximum frequency"))
    common(sub.add_parser("task2d", help="the three two-tone nonlinear tasks"))
    common(sub.add_parser("energy", help="power and energy budget"))
    f = common(sub.add_parser("fit", help="fit a spin-diode spectrum or a neuron curve"))
    f.add_argument("path", nargs="?", help="two-column CSV (same as --set fit.path=...)")
    f.add_argument("--kind", choices=("spin-diode", "neuron"))
    return p


def _shorthand(args):
    sets = []
    if args.seed is not None:
        sets.append(f"run.seed={args.seed}")
    if getattr(args, "model", None):
        sets.append(f"model.kind={args.model}")
    if getattr(args, "epochs", None) is not None:
        sets.append(f"train.epochs={args.epochs}")
    data = getattr(args, "data", None)
    if data:
        if data in ("synth-drone", "mnist"):
            sets.append(f"data.source={data}")
        else:
            sets += ["data.source=csv", f"data.path={data}"]
    if getattr(args, "path", None):
        sets.append(f"fit.path={args.path}")
    if getattr(args, "kind", None):
        sets.append(f"fit.kind={args.kind}")
    return sets + list(args.overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _shorthand(args))
        out = args.output_dir or Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_config(cfg, out / "config.ini")
        except OSError as exc:
            raise ConfigError(f"output directory {out} is not writable: {exc.strerror}") from None
        handlers = {
            "train": cmd_train, "search": cmd_search, "sweep-freq": cmd_sweep_freq,
            "task2d": cmd_task2d, "energy": cmd_energy, "fit": cmd_fit,
        }
        if args.command == "evaluate":
            cmd_evaluate(cfg, out, args.checkpoint)
        else:
            handlers[args.command](cfg, out)
    except ConfigError as exc:
        print(f"spinrf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, CheckpointError, StructuralError, OSError) as exc:
        print(f"spinrf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, FitError, FloatingPointError) as exc:
        print(f"spinrf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"spinrf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
