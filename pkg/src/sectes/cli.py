"""Experiment harness: configuration files, model serialization, and the
command-line surface (simulate / train / synth / validate / bench / report).

Every floating value written to disk carries 17 significant digits, and
every job derives its seed from a stable hash of the master seed and the
job coordinates, so a (config, master seed) pair fully determines the
report bytes regardless of worker count or scheduling.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from types import SimpleNamespace

import numpy as np

from . import ndnet
from .baselines import GrnnModel, PlsModel
from .ctes import CtesModel, DiscriminatorModel, GeneratorModel, \
    Normalization, TrainConfig, synthesize
from .datagen import GpSimConfig, PairedDataset, SimConfig, \
    gen_multivariate_dataset, gen_scalar_to_matrix_dataset, \
    read_dataset_csv, write_dataset_csv
from .ensemble import EnsembleConfig, EnsembleModel, ensemble_synthesize, \
    train_se_ctes
from .errors import ConfigError, ModelFormatError
from .forest import ForestConfig
from .validation import MethodSettings, aggregate_trials, \
    fit_and_synthesize, identify_group_experiment, risk_difference_eval

log = logging.getLogger("sectes")

MODEL_FORMAT_VERSION = 1
KNOWN_METHODS = ("pls", "grnn", "cgan", "gan-cls", "ctes", "se-ctes")
STUDIES = ("multivariate", "scalar-to-matrix", "tabular-risk")


# --- canonical JSON with exact float round-trips ---

def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            raise ValueError("cannot serialize non-finite float")
        return f"{v:.17g}"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(json.dumps(str(k)) + ":" + _encode(v)
                              for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _encode(obj)


def stable_seed(*parts) -> int:
    """Scheduling-independent 63-bit seed from the given key parts."""
    key = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


# --- model files ---

def _net_to_dict(net: ndnet.NetParams) -> dict:
    return {"spec": [asdict(l) for l in net.spec],
            "layers": [{"W": lay["W"], "b": lay["b"]} for lay in net.layers]}


def _net_from_dict(d: dict) -> ndnet.NetParams:
    spec = [ndnet.LayerSpec(**s) for s in d["spec"]]
    layers = [{"W": np.asarray(lay["W"], dtype=np.float64),
               "b": np.asarray(lay["b"], dtype=np.float64)}
              for lay in d["layers"]]
    return ndnet.NetParams(spec=spec, layers=layers)


def _norm_to_dict(norm: Normalization) -> dict:
    return {"x_mean": norm.x_mean, "x_std": norm.x_std,
            "y_mean": norm.y_mean, "y_std": norm.y_std}


def _norm_from_dict(d: dict) -> Normalization:
    return Normalization(**{k: np.asarray(v, dtype=np.float64)
                            for k, v in d.items()})


def _train_cfg_to_dict(cfg: TrainConfig) -> dict:
    d = asdict(cfg)
    d["conv_channels"] = list(cfg.conv_channels)
    return d


def _train_cfg_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    d["conv_channels"] = tuple(d.get("conv_channels", (8, 16, 32, 64)))
    return TrainConfig(**d)


def _expr_shape(v):
    return None if v is None else tuple(v)


def _ctes_to_dict(model: CtesModel) -> dict:
    return {
        "kind": "ctes",
        "config": _train_cfg_to_dict(model.config),
        "norm": _norm_to_dict(model.generator.norm),
        "expr_shape": model.generator.expr_shape,
        "z_dim": model.generator.z_dim,
        "mixer": _net_to_dict(model.generator.mixer),
        "decoder": _net_to_dict(model.generator.decoder),
        "encoder": _net_to_dict(model.discriminator.encoder),
        "head": _net_to_dict(model.discriminator.head),
        "loss_d": model.loss_d,
        "loss_g": model.loss_g,
        "iterations_run": model.iterations_run,
    }


def _ctes_from_dict(d: dict) -> CtesModel:
    norm = _norm_from_dict(d["norm"])
    shape = _expr_shape(d["expr_shape"])
    gen = GeneratorModel(mixer=_net_from_dict(d["mixer"]),
                         decoder=_net_from_dict(d["decoder"]),
                         z_dim=int(d["z_dim"]), norm=norm, expr_shape=shape)
    disc = DiscriminatorModel(encoder=_net_from_dict(d["encoder"]),
                              head=_net_from_dict(d["head"]),
                              norm=norm, expr_shape=shape)
    return CtesModel(generator=gen, discriminator=disc,
                     config=_train_cfg_from_dict(d["config"]),
                     loss_d=np.asarray(d["loss_d"], dtype=np.float64),
                     loss_g=np.asarray(d["loss_g"], dtype=np.float64),
                     iterations_run=int(d["iterations_run"]))


def _model_to_payload(model) -> dict:
    if isinstance(model, CtesModel):
        return _ctes_to_dict(model)
    if isinstance(model, EnsembleModel):
        cfg = model.config
        return {
            "kind": "se-ctes",
            "config": {"k": cfg.k, "h": cfg.h,
                       "train": _train_cfg_to_dict(cfg.train),
                       "clf": asdict(cfg.clf),
                       "synth_per_model": cfg.synth_per_model,
                       "seed": cfg.seed},
            "members": [None if m is None else _ctes_to_dict(m)
                        for m in model.models],
            "scores": model.scores,
            "selected": list(model.selected),
            "diagnostics": model.diagnostics,
        }
    if isinstance(model, PlsModel):
        return {"kind": "pls", "mean_x": model.mean_x, "mean_y": model.mean_y,
                "coef": model.coef, "n_components": model.n_components}
    if isinstance(model, GrnnModel):
        return {"kind": "grnn", "train_x": model.train_x,
                "train_y": model.train_y, "bandwidth": model.bandwidth}
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def _model_from_payload(d: dict):
    kind = d.get("kind")
    if kind == "ctes":
        return _ctes_from_dict(d)
    if kind == "se-ctes":
        c = d["config"]
        cfg = EnsembleConfig(k=int(c["k"]), h=int(c["h"]),
                             train=_train_cfg_from_dict(c["train"]),
                             clf=ForestConfig(**c["clf"]),
                             synth_per_model=c["synth_per_model"],
                             seed=int(c["seed"]))
        return EnsembleModel(
            models=[None if m is None else _ctes_from_dict(m)
                    for m in d["members"]],
            scores=np.asarray(d["scores"], dtype=np.float64),
            selected=[int(i) for i in d["selected"]],
            config=cfg, diagnostics=d["diagnostics"])
    if kind == "pls":
        return PlsModel(mean_x=np.asarray(d["mean_x"], dtype=np.float64),
                        mean_y=np.asarray(d["mean_y"], dtype=np.float64),
                        coef=np.asarray(d["coef"], dtype=np.float64),
                        n_components=int(d["n_components"]))
    if kind == "grnn":
        return GrnnModel(train_x=np.asarray(d["train_x"], dtype=np.float64),
                         train_y=np.asarray(d["train_y"], dtype=np.float64),
                         bandwidth=float(d["bandwidth"]))
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    """Versioned JSON model file; floats at 17 significant digits."""
    doc = {"format_version": MODEL_FORMAT_VERSION,
           "payload": _model_to_payload(model)}
    with open(path, "w") as fh:
        fh.write(dumps_canonical(doc))


def load_model(path):
    """Load a model file; rejects unknown versions and corrupt files."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"corrupt model file {path}: {exc.msg} at offset {exc.pos}") from exc
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {version!r}; this build reads "
            f"version {MODEL_FORMAT_VERSION}")
    return _model_from_payload(doc["payload"])


# --- experiment configuration ---

@dataclass
class ExperimentConfig:
    """Validated settings of one benchmark run."""

    study: str = "multivariate"
    sigmas: list = field(default_factory=lambda: [0.01, 0.03, 0.05, 0.07, 0.09])
    trials: int = 5
    replicates: int = 1
    methods: list = field(default_factory=lambda: list(KNOWN_METHODS))
    groups: list = field(default_factory=lambda: [2, 3, 4])
    samples_per_group: int = 200
    train: TrainConfig = field(default_factory=TrainConfig)
    k: int = 5
    h: int = 2
    forest: ForestConfig = field(default_factory=ForestConfig)
    beta_grid: list = field(default_factory=list)
    fresh_data_per_trial: bool = True
    subsample_merged: bool = True
    grid: int = 16
    images_per_category: int = 32
    data_csv: str | None = None
    out_dir: str = "out"
    master_seed: int = 0
    workers: int = 1


def _take(raw: dict, path: str, known: dict) -> dict:
    """Pop known keys with defaults; reject unknown keys with field paths."""
    out = {}
    for key, default in known.items():
        out[key] = raw.pop(key) if key in raw else default
    if raw:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{sorted(raw)[0]}: unknown field")
    return out


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a raw JSON document into an :class:`ExperimentConfig`;
    violations name the offending field."""
    raw = dict(raw)
    train_raw = dict(raw.pop("train", {}))
    ens_raw = dict(raw.pop("ensemble", {}))
    forest_raw = dict(raw.pop("forest", {}))
    gp_raw = dict(raw.pop("gp", {}))
    defaults = ExperimentConfig()
    top = _take(raw, "", {
        "study": defaults.study, "sigmas": defaults.sigmas,
        "trials": defaults.trials, "replicates": defaults.replicates,
        "methods": defaults.methods, "groups": defaults.groups,
        "samples_per_group": defaults.samples_per_group,
        "beta_grid": defaults.beta_grid,
        "fresh_data_per_trial": defaults.fresh_data_per_trial,
        "subsample_merged": defaults.subsample_merged,
        "data_csv": defaults.data_csv, "out_dir": defaults.out_dir,
        "master_seed": defaults.master_seed, "workers": defaults.workers,
    })
    if top["study"] not in STUDIES:
        raise ConfigError(f"study: must be one of {STUDIES}")
    for name, low in (("trials", 1), ("replicates", 1), ("workers", 1)):
        if int(top[name]) < low:
            raise ConfigError(f"{name}: must be >= {low}")
    for s in top["sigmas"]:
        if not 0.0 < float(s) < 1.0:
            raise ConfigError(f"sigmas: value {s} outside (0, 1)")
    for m in top["methods"]:
        if m not in KNOWN_METHODS:
            raise ConfigError(f"methods: unknown method {m!r}; expected "
                              f"one of {KNOWN_METHODS}")
    for b in top["beta_grid"]:
        if not 0.0 <= float(b) <= 1.0:
            raise ConfigError(f"beta_grid: value {b} outside [0, 1]")

    tc_defaults = TrainConfig()
    tc_kwargs = _take(train_raw, "train",
                      {f: getattr(tc_defaults, f)
                       for f in tc_defaults.__dataclass_fields__})
    tc_kwargs["conv_channels"] = tuple(tc_kwargs["conv_channels"])
    try:
        train = TrainConfig(**tc_kwargs)
    except ConfigError as exc:
        raise ConfigError(f"train: {exc}") from None

    ens = _take(ens_raw, "ensemble", {"k": defaults.k, "h": defaults.h})
    try:  # reuse the ensemble invariants (h >= 1, k > 2h)
        EnsembleConfig(k=int(ens["k"]), h=int(ens["h"]), train=train)
    except ConfigError as exc:
        raise ConfigError(f"ensemble: {exc}") from None

    fc_defaults = ForestConfig()
    fc_kwargs = _take(forest_raw, "forest",
                      {f: getattr(fc_defaults, f)
                       for f in fc_defaults.__dataclass_fields__})
    try:
        forest = ForestConfig(**fc_kwargs)
    except ConfigError as exc:
        raise ConfigError(f"forest: {exc}") from None

    gp = _take(gp_raw, "gp", {"grid": defaults.grid,
                              "images_per_category": defaults.images_per_category})

    return ExperimentConfig(
        study=top["study"], sigmas=[float(s) for s in top["sigmas"]],
        trials=int(top["trials"]), replicates=int(top["replicates"]),
        methods=list(top["methods"]), groups=[int(g) for g in top["groups"]],
        samples_per_group=int(top["samples_per_group"]), train=train,
        k=int(ens["k"]), h=int(ens["h"]), forest=forest,
        beta_grid=[float(b) for b in top["beta_grid"]],
        fresh_data_per_trial=bool(top["fresh_data_per_trial"]),
        subsample_merged=bool(top["subsample_merged"]),
        grid=int(gp["grid"]),
        images_per_category=int(gp["images_per_category"]),
        data_csv=top["data_csv"], out_dir=str(top["out_dir"]),
        master_seed=int(top["master_seed"]), workers=int(top["workers"]))


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment config, filling defaults."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at offset {exc.pos}: "
                              f"{exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return build_config(raw)


def _config_hash(cfg: ExperimentConfig) -> str:
    doc = asdict(cfg)
    doc["train"]["conv_channels"] = list(cfg.train.conv_channels)
    return hashlib.sha256(dumps_canonical(doc).encode()).hexdigest()


# --- the benchmark grid ---

_SWEEP_RE = re.compile(r"^(ctes|se-ctes|cgan|gan-cls)\[beta=([0-9.eE+-]+)\]$")


def _parse_method_label(label: str):
    m = _SWEEP_RE.match(label)
    if m:
        return m.group(1), float(m.group(2))
    return label, None


def _method_settings(cfg: ExperimentConfig, beta_override=None) -> MethodSettings:
    ensemble = EnsembleConfig(k=cfg.k, h=cfg.h, train=cfg.train, clf=cfg.forest)
    return MethodSettings(train=cfg.train, forest=cfg.forest,
                          ensemble=ensemble, beta_override=beta_override)


def _job_dataset(cfg: ExperimentConfig, sigma, trial: int) -> PairedDataset:
    data_trial = trial if cfg.fresh_data_per_trial else 0
    if cfg.study == "multivariate":
        seed = stable_seed(cfg.master_seed, "data", sigma, data_trial)
        return gen_multivariate_dataset(SimConfig(
            sigma=sigma, samples_per_group=cfg.samples_per_group, seed=seed))
    if cfg.study == "scalar-to-matrix":
        seed = stable_seed(cfg.master_seed, "data", "gp", data_trial)
        return gen_scalar_to_matrix_dataset(GpSimConfig(
            grid=cfg.grid, images_per_category=cfg.images_per_category,
            seed=seed))
    if not cfg.data_csv:
        raise ConfigError("data_csv: required for the tabular-risk study")
    return read_dataset_csv(cfg.data_csv)


def _run_job(cfg: ExperimentConfig, job: dict) -> dict:
    """One grid cell; returns a result row (or an error marker)."""
    started = time.monotonic()
    try:
        method, beta_override = _parse_method_label(job["method"])
        settings = _method_settings(cfg, beta_override)
        dataset = _job_dataset(cfg, job["sigma"], job["trial"])
        if cfg.study == "tabular-risk":
            rep = risk_difference_eval(dataset, job["group"], method,
                                       settings, seed=job["seed"])
            row = {"mean_abs_diff": rep.mean_abs_diff, "std": rep.std,
                   "n": rep.n}
        else:
            rep = identify_group_experiment(
                dataset, job["group"], method, settings, seed=job["seed"],
                replicates=cfg.replicates,
                subsample_merged=cfg.subsample_merged,
                sigma=job["sigma"], trial=job["trial"])
            row = {"A1": rep.a1, "A2": rep.a2,
                   "TP": rep.confusion.tp, "FP": rep.confusion.fp,
                   "FN": rep.confusion.fn, "TN": rep.confusion.tn}
        status, error = "ok", None
    except Exception as exc:  # recorded in the manifest, suite continues
        row, status, error = {}, "failed", f"{type(exc).__name__}: {exc}"
    return {**job, "status": status, "error": error,
            "wall_time": time.monotonic() - started, "row": row}


def _job_key(job: dict):
    return (job["method"], -1.0 if job["sigma"] is None else job["sigma"],
            job["group"], job["trial"])


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else str(v)


def _write_csv(path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def enumerate_jobs(cfg: ExperimentConfig) -> list[dict]:
    """The (method x sigma x group x trial) grid with derived seeds;
    the tuning sweep adds one extra method label per grid beta."""
    methods = list(cfg.methods)
    methods += [f"ctes[beta={b:g}]" for b in cfg.beta_grid]
    sigmas = cfg.sigmas if cfg.study == "multivariate" else [None]
    return [{"method": m, "sigma": s, "group": g, "trial": t,
             "seed": stable_seed(cfg.master_seed, m, s, g, t)}
            for m in methods for s in sigmas for g in cfg.groups
            for t in range(cfg.trials)]


def run_suite(cfg: ExperimentConfig) -> dict:
    """Execute the (method x sigma x group x trial) grid and write the
    per-trial CSV, the aggregated summary CSV, and a run manifest.

    Returns the manifest dict; ``n_failed`` is nonzero if any job failed.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    jobs = enumerate_jobs(cfg)

    log.info("running %d jobs with %d workers", len(jobs), cfg.workers)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_job, [cfg] * len(jobs), jobs))
    else:
        results = [_run_job(cfg, job) for job in jobs]
    results.sort(key=_job_key)

    trials_path = os.path.join(cfg.out_dir, f"{cfg.study}_trials.csv")
    summary_path = os.path.join(cfg.out_dir, f"{cfg.study}_summary.csv")
    ok = [r for r in results if r["status"] == "ok"]
    if cfg.study == "tabular-risk":
        _write_csv(trials_path,
                   ["method", "group", "trial", "mean_abs_diff", "std", "n"],
                   [[r["method"], r["group"], r["trial"],
                     r["row"]["mean_abs_diff"], r["row"]["std"], r["row"]["n"]]
                    for r in ok])
        cells: dict = {}
        for r in ok:
            cells.setdefault((r["method"], r["group"]), []).append(
                r["row"]["mean_abs_diff"])
        rows = []
        for (method, group) in sorted(cells):
            vals = np.array(cells[(method, group)])
            std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            rows.append([method, group, float(vals.mean()), std, len(vals)])
        _write_csv(summary_path,
                   ["method", "group", "mean_abs_diff", "std", "n_trials"],
                   rows)
    else:
        _write_csv(trials_path,
                   ["method", "sigma", "group", "trial", "A1", "A2",
                    "TP", "FP", "FN", "TN"],
                   [[r["method"], r["sigma"], r["group"], r["trial"],
                     r["row"]["A1"], r["row"]["A2"], r["row"]["TP"],
                     r["row"]["FP"], r["row"]["FN"], r["row"]["TN"]]
                    for r in ok])
        reports = [SimpleNamespace(method=r["method"], sigma=r["sigma"],
                                   group=r["group"], a1=r["row"]["A1"],
                                   a2=r["row"]["A2"])
                   for r in ok]
        rows = []
        if reports:
            for s in aggregate_trials(reports):
                rows.append([s.method, s.sigma, s.group, s.a1_mean, s.a1_std,
                             s.a2_mean, s.a2_std])
        _write_csv(summary_path,
                   ["method", "sigma", "group", "A1", "A1_std", "A2", "A2_std"],
                   rows)

    manifest = {
        "config_hash": _config_hash(cfg),
        "master_seed": cfg.master_seed,
        "n_jobs": len(results),
        "n_failed": sum(r["status"] == "failed" for r in results),
        "jobs": [{k: r[k] for k in
                  ("method", "sigma", "group", "trial", "seed", "status",
                   "error", "wall_time")} for r in results],
    }
    with open(os.path.join(cfg.out_dir, "manifest.json"), "w") as fh:
        fh.write(dumps_canonical(manifest))
    return manifest


# --- training and synthesis entry points used by the subcommands ---

def train_method(cfg: ExperimentConfig, method: str, dataset: PairedDataset,
                 seed: int):
    """Fit one method on a whole dataset and return the model object."""
    from .baselines import grnn_fit, pls_fit, variant_config
    from .ctes import train_ctes

    if method == "pls":
        return pls_fit(dataset.x, dataset.y, min(dataset.char_dim, 2))
    if method == "grnn":
        return grnn_fit(dataset.x, dataset.y)
    variant = variant_config(method)
    train = replace(cfg.train, beta=variant.beta, seed=seed)
    if variant.ensemble:
        ec = EnsembleConfig(k=cfg.k, h=cfg.h, train=train, clf=cfg.forest,
                            seed=seed)
        return train_se_ctes(dataset, ec)
    return train_ctes(dataset, train)


def synthesize_from_model(model, x: np.ndarray, count: int, seed: int,
                          jitter: float) -> np.ndarray:
    """Dispatch synthesis over the serializable model kinds."""
    from .baselines import grnn_predict, pls_predict

    if isinstance(model, PlsModel):
        return np.repeat(np.atleast_2d(pls_predict(model, x)), count, axis=0)
    if isinstance(model, GrnnModel):
        return np.repeat(np.atleast_2d(grnn_predict(model, x)), count, axis=0)
    rng = np.random.default_rng(seed)
    if isinstance(model, EnsembleModel):
        return ensemble_synthesize(model, np.atleast_2d(x), total=count,
                                   rng=rng, jitter=jitter)
    return synthesize(model, x, count, rng=rng, jitter=jitter)


# --- subcommands ---

def _load_or_default_config(path) -> ExperimentConfig:
    return parse_config(path) if path else ExperimentConfig()


def cmd_simulate(args) -> int:
    cfg = _load_or_default_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    os.makedirs(args.out, exist_ok=True)
    if cfg.study == "multivariate":
        for sigma in cfg.sigmas:
            ds = gen_multivariate_dataset(SimConfig(
                sigma=sigma, samples_per_group=cfg.samples_per_group,
                seed=stable_seed(cfg.master_seed, "data", sigma, 0)))
            path = os.path.join(args.out, f"multivariate_sigma{sigma:g}.csv")
            write_dataset_csv(ds, path)
            print(path)
    elif cfg.study == "scalar-to-matrix":
        ds = gen_scalar_to_matrix_dataset(GpSimConfig(
            grid=cfg.grid, images_per_category=cfg.images_per_category,
            seed=stable_seed(cfg.master_seed, "data", "gp", 0)))
        path = os.path.join(args.out, "scalar_to_matrix.csv")
        write_dataset_csv(ds, path)
        print(path)
    else:
        raise ConfigError("simulate supports the multivariate and "
                          "scalar-to-matrix studies")
    return 0


def cmd_train(args) -> int:
    cfg = _load_or_default_config(args.config)
    seed = args.seed if args.seed is not None else cfg.master_seed
    if args.data:
        dataset = read_dataset_csv(args.data)
    else:
        sigma = args.sigma if args.sigma is not None else cfg.sigmas[0]
        dataset = _job_dataset(replace(cfg, fresh_data_per_trial=False),
                               sigma, 0)
    model = train_method(cfg, args.method, dataset, seed)
    save_model(model, args.out)
    print(args.out)
    return 0


def cmd_synth(args) -> int:
    model = load_model(args.model)
    if args.x:
        x = np.array([float(v) for v in args.x.split(",")])
        batch = synthesize_from_model(model, x, args.count,
                                      args.seed or 0, args.jitter)
    else:
        ds = read_dataset_csv(args.data)
        batches = [synthesize_from_model(model, row, args.count,
                                         stable_seed(args.seed or 0, i),
                                         args.jitter)
                   for i, row in enumerate(ds.x)]
        batch = np.vstack(batches)
    header = [f"y{j + 1}" for j in range(batch.shape[1])]
    _write_csv(args.out, header, batch.tolist())
    print(args.out)
    return 0


def cmd_validate(args) -> int:
    cfg = _load_or_default_config(args.config)
    seed = args.seed if args.seed is not None else cfg.master_seed
    sigma = args.sigma if args.sigma is not None else cfg.sigmas[0]
    dataset = _job_dataset(replace(cfg, fresh_data_per_trial=False), sigma, 0)
    method, beta_override = _parse_method_label(args.method)
    settings = _method_settings(cfg, beta_override)
    if cfg.study == "tabular-risk":
        rep = risk_difference_eval(dataset, args.group, method, settings,
                                   seed=seed)
        print(f"method={rep.method} group={rep.group} "
              f"mean|r_a-r_s|={rep.mean_abs_diff:.4f} std={rep.std:.4f}")
    else:
        rep = identify_group_experiment(
            dataset, args.group, method, settings, seed=seed,
            replicates=cfg.replicates, subsample_merged=cfg.subsample_merged,
            sigma=None if cfg.study != "multivariate" else sigma)
        print(f"method={rep.method} sigma={rep.sigma} group={rep.group} "
              f"A1={rep.a1:.3f} A2={rep.a2:.3f} "
              f"TP={rep.confusion.tp} FP={rep.confusion.fp} "
              f"FN={rep.confusion.fn} TN={rep.confusion.tn}")
    return 0


def cmd_bench(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out_dir = args.out
    manifest = run_suite(cfg)
    print(f"jobs: {manifest['n_jobs']}  failed: {manifest['n_failed']}  "
          f"out: {cfg.out_dir}")
    return 1 if manifest["n_failed"] else 0


def cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                reports.append(SimpleNamespace(
                    method=row["method"],
                    sigma=float(row["sigma"]) if row.get("sigma") else None,
                    group=int(row["group"]), a1=float(row["A1"]),
                    a2=float(row["A2"])))
    rows = [[s.method, s.sigma, s.group, s.a1_mean, s.a1_std, s.a2_mean,
             s.a2_std] for s in aggregate_trials(reports)]
    _write_csv(args.out,
               ["method", "sigma", "group", "A1", "A1_std", "A2", "A2_std"],
               rows)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sectes",
        description="Selective-ensemble characteristic-to-expression "
                    "synthesis experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit study datasets as CSV")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="fit one method and save a model file")
    p.add_argument("--config", default=None)
    p.add_argument("--method", required=True)
    p.add_argument("--data", default=None, help="dataset CSV (default: simulate)")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model file path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="generate expressions from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--x", default=None, help="comma-separated characteristic")
    p.add_argument("--data", default=None, help="CSV of characteristics")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="run a single identify-group experiment")
    p.add_argument("--config", default=None)
    p.add_argument("--method", required=True)
    p.add_argument("--group", type=int, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="run the full benchmark grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="aggregate per-trial CSVs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CTES_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
