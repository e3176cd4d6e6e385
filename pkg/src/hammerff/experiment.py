"""Benchmark experiment: NOILC training, both identification paths and the 7-trial task-change run.

Every random stream is keyed by ``(seed, purpose)`` so that a method's
numbers do not depend on which other methods run, or in which order:

* NOILC training trial ``j``      -> ``(seed, "noilc", j)``
* classical open-loop experiment -> ``(seed, "classical", 0 | 1)`` (input, noise)
* benchmark trial ``j``           -> ``(seed, "bench", j)`` (shared by all methods)
* noise floor                    -> ``(seed, "floor")``
* particle swarms                -> ``derived_seed(seed, "pso/<method>")``

With ``fresh_noise=False`` the trial index is dropped, so every training trial
(and every benchmark trial) sees the same noise realization, and the floor is
measured on the training realization.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import write_columns, write_rows
from .errors import ConfigurationError, HammerffError, StabilityError
from .ident import (build_training_dataset, fit_classical, fit_proposed, open_loop_dataset,
                    wiener_ff)
from .ilc import basis_matrix, bfilc_update
from .lifted_lti import lift, process_sensitivity, sensitivity
from .plant import PlantConfig, lead_lag_controller, loop_metrics, run_trial, two_mass_plant
from .pso import SwarmConfig
from .trajectory import QuinticSpec, ReferenceSet, peak_acceleration

__all__ = [
    "METHODS",
    "OUTPUT_DIR_ENV",
    "ExperimentConfig",
    "Check",
    "derived_seed",
    "seed_tag",
    "design_surrogate",
    "default_config_dict",
    "load_config",
    "load_default_config",
    "validate",
    "run_experiment",
    "run_method",
    "write_outputs",
    "report_json",
    "export_figures",
]

METHODS = ("bfilc_linear", "classical_hammerstein", "proposed")
OUTPUT_DIR_ENV = "HAMMERFF_OUTPUT_DIR"
REPORT_FORMAT = "hammerff-report/1"


def seed_tag(purpose):
    """Stable 32-bit integer for a purpose string."""
    return int.from_bytes(purpose.encode(), "little") % (2 ** 32)


def derived_seed(seed, purpose):
    return int(np.random.SeedSequence((int(seed), seed_tag(purpose))).generate_state(1)[0])


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    plant: PlantConfig
    references: ReferenceSet
    swarm: SwarmConfig
    noilc_iterations: int = 10
    noilc_alpha: float = 1.0
    noilc_eps_rel: float = 0.05
    preview: int = 0
    methods: tuple = METHODS
    output_dir: str = "results"
    seed: int = 0
    classical_amplitude_rel: float = 0.7
    bfilc_theta0: tuple = (0.0, 0.0)
    nominal_theta: tuple | None = None
    fresh_noise: bool = True
    surrogate: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise ConfigurationError("at least one method must be selected")
        unknown = sorted(set(self.methods) - set(METHODS))
        if unknown:
            raise ConfigurationError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        # canonical order keeps reports independent of how methods were listed
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))
        if self.noilc_iterations < 1:
            raise ConfigurationError("noilc_iterations must be >= 1")
        if self.preview < 0:
            raise ConfigurationError("preview must be >= 0")

    @property
    def sample_time(self):
        return self.plant.sample_time

    @property
    def motion_distance(self):
        return self.references.motion_distance

    def trial_plant(self):
        """Plant with the experiment seed and noise scaled to the motion distance of r1."""
        return replace(self.plant, seed=int(self.seed), noise_scale=self.motion_distance)

    def swarm_for(self, method):
        return replace(self.swarm, seed=derived_seed(self.seed, "pso/" + method))

    def with_overrides(self, seed=None, methods=None, output_dir=None):
        kw = {}
        if seed is not None:
            kw["seed"] = int(seed)
        if methods is not None:
            kw["methods"] = tuple(methods)
        if output_dir is not None:
            kw["output_dir"] = str(output_dir)
        return replace(self, **kw)

    @classmethod
    def from_dict(cls, d):
        try:
            sw = dict(d["swarm"])
            sw.pop("seed", None)
            theta0 = d.get("bfilc", {}).get("theta0", [0.0, 0.0])
            nom = d.get("nominal_theta")
            return cls(
                plant=PlantConfig.from_dict(d["plant"]),
                references=ReferenceSet.from_dict(d["references"]),
                swarm=SwarmConfig(search_box=tuple(map(tuple, sw.pop("search_box"))), **sw),
                noilc_iterations=int(d.get("noilc", {}).get("iterations", 10)),
                noilc_alpha=float(d.get("noilc", {}).get("alpha", 1.0)),
                noilc_eps_rel=float(d.get("noilc", {}).get("eps_rel", 0.05)),
                preview=int(d.get("preview", 0)),
                methods=tuple(d.get("methods", METHODS)),
                output_dir=str(d.get("output_dir", "results")),
                seed=int(d.get("seed", 0)),
                classical_amplitude_rel=float(d.get("classical", {}).get("amplitude_rel", 0.7)),
                bfilc_theta0=tuple(float(v) for v in theta0),
                nominal_theta=None if nom is None else tuple(float(v) for v in nom),
                fresh_noise=bool(d.get("fresh_noise", True)),
                surrogate=d.get("surrogate"),
            )
        except KeyError as exc:
            raise ConfigurationError(f"config lacks required key {exc}") from None
        except TypeError as exc:
            raise ConfigurationError(f"malformed config: {exc}") from None

    def to_dict(self, include_output_dir=True):
        sw = self.swarm.to_dict()
        sw.pop("seed")
        d = {
            "plant": self.plant.to_dict(),
            "references": self.references.to_dict(),
            "swarm": sw,
            "noilc": {"iterations": self.noilc_iterations, "alpha": self.noilc_alpha,
                      "eps_rel": self.noilc_eps_rel},
            "preview": self.preview,
            "methods": list(self.methods),
            "seed": self.seed,
            "classical": {"amplitude_rel": self.classical_amplitude_rel},
            "bfilc": {"theta0": list(self.bfilc_theta0)},
            "nominal_theta": None if self.nominal_theta is None else list(self.nominal_theta),
            "fresh_noise": self.fresh_noise,
        }
        if self.surrogate is not None:
            d["surrogate"] = self.surrogate
        if include_output_dir:
            d["output_dir"] = self.output_dir
        return d


def load_config(path):
    """Read an experiment config, reporting JSON syntax errors with line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return ExperimentConfig.from_dict(d)


def load_default_config():
    ref = resources.files("hammerff") / "data" / "default_config.json"
    return ExperimentConfig.from_dict(json.loads(ref.read_text()))


# -- default surrogate -----------------------------------------------------------

DEFAULT_SURROGATE = {
    "sample_time": 5e-4,
    "mass": 1.0,
    "peak_demand": 60.0,
    "load_fraction": 0.1,
    "flex_freq": 150.0,
    "flex_damping": 0.02,
    "parasitic_freq": 0.8,
    "parasitic_damping": 0.1,
    "crossover": 20.0,
    "lead_ratio": 3.0,
    "integrator_ratio": 5.0,
    "lowpass_ratio": 6.0,
}

DEFAULT_SEGMENTS = (
    QuinticSpec(distance=0.01, duration=0.08, dwell_before=0.01, dwell_after=0.05),
    QuinticSpec(distance=0.005, duration=0.048, dwell_before=0.01, dwell_after=0.05),
    QuinticSpec(distance=0.0025, duration=0.028, dwell_before=0.01, dwell_after=0.05),
)


def design_surrogate(params, references):
    """Plant, controller and nominal rigid-body gains from physical parameters.

    The motor constant is chosen so that the linear force demand of the most
    aggressive reference peaks at ``peak_demand`` amperes.
    """
    p = dict(DEFAULT_SURROGATE, **params)
    ts = p["sample_time"]
    a_peak = max(peak_acceleration(s) for s in references.segments)
    k = p["mass"] * a_peak / p["peak_demand"]
    plant, ct = two_mass_plant(ts, mass=p["mass"], motor_constant=k,
                               load_fraction=p["load_fraction"], flex_freq=p["flex_freq"],
                               flex_damping=p["flex_damping"], parasitic_freq=p["parasitic_freq"],
                               parasitic_damping=p["parasitic_damping"])
    ctrl = lead_lag_controller(ts, (ct["num"], ct["den"]), crossover=p["crossover"],
                               lead_ratio=p["lead_ratio"], integrator_ratio=p["integrator_ratio"],
                               lowpass_ratio=p["lowpass_ratio"])
    # rigid body f = (m/K) a  ->  theta2 = m / (K Ts^2) on the second difference
    nominal = (0.0, p["mass"] / (k * ts ** 2))
    return plant, ctrl, nominal, dict(p, motor_constant=k)


def default_config_dict(surrogate=None, segments=DEFAULT_SEGMENTS, **overrides):
    """Regenerate the shipped default configuration.

    ``surrogate`` overrides entries of :data:`DEFAULT_SURROGATE`; remaining
    keyword arguments override :class:`ExperimentConfig` fields.
    """
    refs = ReferenceSet(segments)
    plant, ctrl, nominal, sur = design_surrogate(surrogate or {}, refs)
    pc = PlantConfig(plant, ctrl)
    swarm = SwarmConfig(search_box=((0.0, 1e3), (0.0, 10 * nominal[1]), (10.0, 500.0)))
    kw = dict(preview=2, nominal_theta=nominal, surrogate=sur)
    kw.update(overrides)
    cfg = ExperimentConfig(plant=pc, references=refs, swarm=swarm, **kw)
    return cfg.to_dict()


# -- validation ------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    status: str  # "pass" | "warn" | "fail"
    detail: str

    @property
    def ok(self):
        return self.status != "fail"


def validate(cfg):
    """Static checks on a configuration; returns a list of :class:`Check`."""
    out = []
    ts = cfg.sample_time
    P, C = cfg.plant.linear_plant, cfg.plant.controller

    out.append(Check("plant_strictly_proper", "pass" if P.is_strictly_proper else "fail",
                     f"relative degree {P.relative_degree}"))
    try:
        sensitivity(P, C)
        m = loop_metrics(P, C)
        out.append(Check("closed_loop_stable", "pass",
                         f"max closed-loop pole modulus {m['max_pole_modulus']:.6f}"))
        out.append(Check("modulus_margin", "pass" if m["max_sensitivity"] <= 2.0 else "warn",
                         f"max|S| = {m['max_sensitivity_db']:.2f} dB, "
                         f"crossover {m['bandwidth_hz']:.1f} Hz"))
    except StabilityError as exc:
        out.append(Check("closed_loop_stable", "fail", str(exc)))

    r_train = None
    try:
        r_train = cfg.references.training_reference(ts)
        for s in cfg.references.segments:
            s.sample_count(ts)
        out.append(Check("reference_continuity", "pass",
                         f"training reference of {r_train.size} samples"))
    except ConfigurationError as exc:
        out.append(Check("reference_continuity", "fail", str(exc)))

    if r_train is not None:
        a_train = float(np.max(np.abs(np.diff(r_train, 2)))) / ts ** 2
        a_bench = max(peak_acceleration(s) for s in cfg.references.segments)
        # sampled peak sits within a fraction of a percent of the analytic one
        ok = a_train >= 0.99 * a_bench
        out.append(Check("acceleration_coverage", "pass" if ok else "fail",
                         f"training peak {a_train:.4g} m/s^2 vs benchmark peak {a_bench:.4g} m/s^2"))

    imax = cfg.plant.saturation.i_max if cfg.plant.saturation is not None else math.inf
    if r_train is not None and cfg.nominal_theta is not None:
        demand = float(np.max(np.abs(basis_matrix(r_train, cfg.preview) @ np.asarray(cfg.nominal_theta))))
        out.append(Check("nominal_feedforward_domain", "pass" if demand < imax else "fail",
                         f"peak nominal demand {demand:.2f} A vs I_max {imax:g} A"))
        phi_hi = cfg.swarm.search_box[2][1]
        out.append(Check("phi_search_box", "pass" if phi_hi > demand else "warn",
                         f"phi box upper bound {phi_hi:g} A vs peak nominal demand {demand:.2f} A"))
        excited = demand >= 0.5 * imax
        out.append(Check("saturation_excitation", "pass" if excited else "warn",
                         f"peak demand is {demand / imax:.0%} of I_max"))
    elif cfg.nominal_theta is None:
        out.append(Check("nominal_feedforward_domain", "warn", "no nominal_theta given"))

    amp_ok = cfg.classical_amplitude_rel > 0
    out.append(Check("classical_excitation", "pass" if amp_ok else "fail",
                     f"white-noise std {cfg.classical_amplitude_rel:g} x I_max"))
    return out


# -- running ---------------------------------------------------------------------

def _floats(a):
    return [float(v) for v in np.asarray(a).ravel()]


def _bench_trials(cfg, feedforward):
    """Run the schedule with ``feedforward(j, r) -> f``; returns norms and the trial records."""
    plant = cfg.trial_plant()
    tag = seed_tag("bench")
    recs = []
    for j in range(cfg.references.n_trials):
        r = cfg.references.trial_reference(j, cfg.sample_time)
        f = feedforward(j, r, recs)
        key = (cfg.seed, tag, j) if cfg.fresh_noise else (cfg.seed, tag)
        recs.append(run_trial(plant, r, f, trial_index=j, noise_seed=key))
    return recs


def _run_bfilc(cfg):
    plant = cfg.trial_plant()
    sp = process_sensitivity(plant.linear_plant, plant.controller)
    thetas = [np.asarray(cfg.bfilc_theta0, dtype=float)]
    cache = {}

    def update(rec):
        n = len(rec)
        if n not in cache:
            cache[n] = lift(sp, n)
        thetas.append(bfilc_update(basis_matrix(rec.r, cfg.preview), cache[n], rec, thetas[-1]))

    def ff(j, r, recs):
        if recs:
            update(recs[-1])
        return basis_matrix(r, cfg.preview) @ thetas[-1]

    recs = _bench_trials(cfg, ff)
    # one last update so the report shows where learning would go next
    update(recs[-1])
    return recs, {"theta0": list(cfg.bfilc_theta0),
                  "theta_history": [_floats(t) for t in thetas]}


def _wiener_bench(cfg, params):
    return _bench_trials(cfg, lambda j, r, recs: wiener_ff(params, r))


def _run_proposed(cfg):
    plant = cfg.trial_plant()
    r_train = cfg.references.training_reference(cfg.sample_time)
    data = build_training_dataset(plant, r_train, cfg.noilc_iterations, alpha=cfg.noilc_alpha,
                                  eps_rel=cfg.noilc_eps_rel, preview=cfg.preview,
                                  seed_key=(seed_tag("noilc"),), fresh_noise=cfg.fresh_noise)
    fit = fit_proposed(data, cfg.swarm_for("proposed"))
    recs = _wiener_bench(cfg, fit.params)
    extra = {
        "fit": fit.report(),
        "params": fit.params.to_dict(),
        "training": {"error_history": _floats(data.error_history),
                     "length": int(r_train.size)},
        "traces": {"f_noilc": _floats(data.signal_out),
                   "f_fit": _floats(wiener_ff(fit.params, r_train))},
    }
    return recs, extra, fit


def _run_classical(cfg):
    plant = cfg.trial_plant()
    n = cfg.references.training_reference(cfg.sample_time).size
    data = open_loop_dataset(plant, n, amplitude_rel=cfg.classical_amplitude_rel,
                             seed_key=(seed_tag("classical"),), preview=cfg.preview)
    fit = fit_classical(data, cfg.swarm_for("classical_hammerstein"))
    recs = _wiener_bench(cfg, fit.params)
    r_train = cfg.references.training_reference(cfg.sample_time)
    try:
        f_fit = _floats(wiener_ff(fit.params, r_train))
    except HammerffError:
        f_fit = None
    extra = {"fit": fit.report(), "params": fit.params.to_dict(),
             "dataset": {"length": int(n), "amplitude_rel": cfg.classical_amplitude_rel},
             "traces": {"f_fit": f_fit}}
    return recs, extra, fit


def run_method(cfg, method):
    """Run one method end to end; never raises for module errors.

    Returns ``(result_dict, optim_result_or_None)``.
    """
    d1 = cfg.motion_distance
    n = cfg.references.n_trials
    fit = None
    try:
        if method == "bfilc_linear":
            recs, extra = _run_bfilc(cfg)
        elif method == "proposed":
            recs, extra, fit = _run_proposed(cfg)
        elif method == "classical_hammerstein":
            recs, extra, fit = _run_classical(cfg)
        else:
            raise ConfigurationError(f"unknown method {method!r}")
    except (HammerffError, ArithmeticError, ValueError) as exc:
        return {"status": "failed", "reason": f"{type(exc).__name__}: {exc}",
                "trial_errors": [None] * n, "trial_errors_abs": [None] * n}, None
    norms = [rec.error_norm for rec in recs]
    res = {"status": "ok", "reason": None,
           "trial_errors": [v / d1 for v in norms], "trial_errors_abs": norms}
    res.update(extra)
    res.setdefault("traces", {})
    res["traces"]["trial_e"] = [_floats(rec.e) for rec in recs]
    return res, (fit.optim if fit is not None else None)


def _run_method_worker(args):
    cfg_dict, method = args
    return run_method(ExperimentConfig.from_dict(cfg_dict), method)


def _focus_trial(schedule):
    """Index of the first trial after the last change of reference."""
    idx = 0
    for j in range(1, len(schedule)):
        if schedule[j] != schedule[j - 1]:
            idx = j
    return idx


def run_experiment(cfg, parallel=False, log=None):
    """Run all configured methods and assemble the report.

    Returns
    -------
    report : dict
        Deterministic payload (no timestamps).
    metadata : dict
        Wall-clock data, kept out of the report.
    optim : dict
        ``method -> OptimResult`` for the identification fits.
    """
    log = log or (lambda msg: None)
    t0 = time.time()
    timings = {}
    results, optim = {}, {}
    if parallel and len(cfg.methods) > 1:
        payload = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=len(cfg.methods)) as ex:
            outs = list(ex.map(_run_method_worker, [(payload, m) for m in cfg.methods]))
        for m, (res, opt) in zip(cfg.methods, outs):
            results[m], optim[m] = res, opt
        timings["total"] = time.time() - t0
    else:
        for m in cfg.methods:
            log(f"running {m}")
            tm = time.time()
            results[m], optim[m] = run_method(cfg, m)
            timings[m] = time.time() - tm
            log(f"  {m}: {results[m]['status']} in {timings[m]:.1f} s")

    plant = cfg.trial_plant()
    r_train = cfg.references.training_reference(cfg.sample_time)
    # with repeated noise the floor is measured on the training realization
    floor_key = (cfg.seed, seed_tag("floor")) if cfg.fresh_noise else (cfg.seed, seed_tag("noilc"))
    floor_rec = run_trial(plant, np.zeros_like(r_train), np.zeros_like(r_train),
                          noise_seed=floor_key)
    sched = cfg.references.schedule
    labels = cfg.references.labels
    focus = _focus_trial(sched)
    methods = {}
    traces = {"r_train": _floats(r_train), "focus_trial_e": {}}
    for m, res in results.items():
        res = dict(res)
        tr = res.pop("traces", {}) or {}
        trial_e = tr.pop("trial_e", None)
        if trial_e is not None:
            traces["focus_trial_e"][m] = trial_e[focus]
        if m == "proposed" and "f_noilc" in tr:
            traces["f_noilc"] = tr["f_noilc"]
        if "f_fit" in tr:
            traces.setdefault("f_fit", {})[m] = tr["f_fit"]
        methods[m] = res
    report = {
        "format": REPORT_FORMAT,
        "seed": int(cfg.seed),
        "seeds": {"noise": int(cfg.seed),
                  **{f"pso_{m}": derived_seed(cfg.seed, "pso/" + m)
                     for m in ("proposed", "classical_hammerstein") if m in cfg.methods}},
        "config": cfg.to_dict(include_output_dir=False),
        "motion_distance": cfg.motion_distance,
        "noise_floor": {"training_length": floor_rec.error_norm},
        "schedule": [{"trial": j + 1, "reference": labels[s]} for j, s in enumerate(sched)],
        "focus_trial": focus + 1,
        "methods": methods,
        "traces": traces,
    }
    metadata = {"package_version": __version__, "numpy": np.__version__,
                "started_unix": t0, "elapsed_s": time.time() - t0, "timings_s": timings,
                "parallel": bool(parallel)}
    return report, metadata, optim


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else None
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def report_json(report):
    """Canonical serialization: sorted keys, shortest round-trip floats."""
    return json.dumps(_clean(report), indent=1, sort_keys=True, allow_nan=False) + "\n"


def summary_table(report):
    methods = list(report["methods"])
    head = ["trial", "reference"] + methods
    rows = []
    for j, s in enumerate(report["schedule"]):
        row = [str(s["trial"]), s["reference"]]
        for m in methods:
            v = report["methods"][m]["trial_errors"][j]
            row.append("failed" if v is None else f"{v:.4e}")
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(head)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    lines.append("")
    lines.append("normalized error 2-norm ||e||_2 / d1, d1 = "
                 f"{report['motion_distance']:g} m")
    for m in methods:
        res = report["methods"][m]
        if res["status"] != "ok":
            lines.append(f"{m}: FAILED ({res['reason']})")
        elif "params" in res:
            p = res["params"]
            lines.append(f"{m}: theta = [{p['theta'][0]:.6g}, {p['theta'][1]:.6g}], "
                         f"phi = {p['phi']:.4f} A")
    return "\n".join(lines) + "\n"


def write_outputs(report, metadata, optim, out_dir):
    """Write report.json, metadata.json, trials.csv, summary.txt and optimizer traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report))
    (out / "metadata.json").write_text(json.dumps(_clean(metadata), indent=1, sort_keys=True) + "\n")
    rows = []
    for m, res in report["methods"].items():
        for j, s in enumerate(report["schedule"]):
            rows.append([s["trial"], s["reference"], m, res["status"],
                         "" if res["trial_errors_abs"][j] is None else res["trial_errors_abs"][j],
                         "" if res["trial_errors"][j] is None else res["trial_errors"][j]])
    write_rows(out / "trials.csv",
               ["trial", "reference", "method", "status", "error_norm", "error_norm_normalized"], rows)
    (out / "summary.txt").write_text(summary_table(report))
    for m, res in optim.items():
        if res is not None:
            res.write_trace(out / f"pso_trace_{m}.csv")
    return out


# -- figure export ---------------------------------------------------------------

def export_figures(report_path, out_dir=None):
    """Write plot-ready CSV bundles next to the report (or into ``out_dir``).

    Returns the manifest dict, also written as ``figures_manifest.json``.
    """
    report_path = Path(report_path)
    try:
        report = json.loads(report_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read report {report_path}: {exc}") from None
    out = Path(out_dir) if out_dir is not None else report_path.parent / "figures"
    out.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []

    def skip(bundle, reason):
        skipped.append({"bundle": bundle, "reason": reason})

    d1 = report.get("motion_distance")
    cfg_d = report.get("config")
    ts = None
    if cfg_d is not None:
        try:
            cfg = ExperimentConfig.from_dict(cfg_d)
            ts = cfg.sample_time
        except HammerffError as exc:
            cfg = None
            skip("references", f"config in report is invalid: {exc}")
    else:
        cfg = None

    # references, normalized by d1
    if cfg is not None and d1:
        refs = [cfg.references.trial_reference(cfg.references.schedule.index(i), ts)
                if i in cfg.references.schedule else None
                for i in range(len(cfg.references.segments))]
        cols, head = [], []
        n = max(len(r) for r in refs if r is not None)
        cols.append(np.arange(n) * ts)
        head.append("t")
        for lab, r in zip(cfg.references.labels, refs):
            if r is not None:
                cols.append(r / d1)
                head.append(lab)
        write_columns(out / "fig_references.csv", head, cols)
        written.append("fig_references.csv")
    elif cfg is None and not any(s["bundle"] == "references" for s in skipped):
        skip("references", "report has no config block")

    tr = report.get("traces", {})
    fn = tr.get("f_noilc")
    if fn is not None and tr.get("r_train") is not None and ts is not None:
        fn = np.asarray(fn)
        scale = float(np.max(np.abs(fn))) or 1.0
        r = np.asarray(tr["r_train"])
        acc = np.diff(r, 2, prepend=[0.0, 0.0])
        acc = acc / (float(np.max(np.abs(acc))) or 1.0)
        head = ["t", "r_train", "f_noilc", "accel_scaled"]
        cols = [np.arange(r.size) * ts, r / (d1 or 1.0), fn / scale, acc]
        for m, f in (tr.get("f_fit") or {}).items():
            if f is not None:
                head.append(f"f_{m}")
                cols.append(np.asarray(f) / scale)
        write_columns(out / "fig_feedforward.csv", head, cols)
        written.append("fig_feedforward.csv")
    else:
        skip("feedforward", "report has no NOILC feedforward trace (proposed method not run)")

    fe = tr.get("focus_trial_e") or {}
    if fe and ts is not None and d1:
        head, cols = ["t"], []
        n = max(len(v) for v in fe.values())
        cols.append(np.arange(n) * ts)
        for m, e in fe.items():
            head.append(f"e_{m}")
            cols.append(np.asarray(e) / d1)
        write_columns(out / "fig_focus_trial_errors.csv", head, cols)
        written.append("fig_focus_trial_errors.csv")
    else:
        skip("focus_trial_errors", "report has no per-trial error traces")

    methods = report.get("methods") or {}
    sched = report.get("schedule")
    if methods and sched:
        ms = list(methods)
        rows = [[s["trial"], s["reference"]]
                + ["" if methods[m]["trial_errors"][j] is None else methods[m]["trial_errors"][j]
                   for m in ms]
                for j, s in enumerate(sched)]
        write_rows(out / "fig_trial_norms.csv", ["trial", "reference"] + ms, rows)
        written.append("fig_trial_norms.csv")
    else:
        skip("trial_norms", "report has no per-method trial errors")

    manifest = {"report": str(report_path), "files": written, "skipped": skipped}
    (out / "figures_manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def resolve_output_dir(cli_value, cfg):
    """CLI flag beats the environment variable, which beats the config file."""
    if cli_value:
        return cli_value
    env = os.environ.get(OUTPUT_DIR_ENV)
    return env if env else cfg.output_dir
