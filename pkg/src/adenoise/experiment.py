"""Multi-trial experiment runner: configuration, trials, aggregation, output files."""
import copy
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, DivergedError, InvalidArgument
from .estimators import KINDS, EstimatorConfig, default_r_bar, solve
from .scenarios import SCENARIO_KINDS, Scenario, metrics
from .signal_io import fmt
from .signals import idft, vec_adjoint

__all__ = [
    "CSV_HEADER",
    "DEFAULT_CONFIG",
    "load_config",
    "apply_override",
    "validate_config",
    "run_trial",
    "run_experiment",
    "aggregate",
    "ExperimentResult",
]

CSV_HEADER = ["scenario", "estimator", "setup", "trial", "iteration", "objective", "certificate",
              "rel_accuracy", "l2_loss", "linf_fourier_loss"]

DEFAULT_CONFIG = {
    "scenario": {"kind": "ransin", "s": 4, "m": 0, "n": 100},
    "snr": [16.0],
    "trials": 10,
    "seed": 0,
    "estimator": {
        "kinds": ["con-uf"],
        "r_bar": "auto",
        "lam": "auto",
        "delta": 0.05,
        "setups": ["l1"],
        "stopping": "budget",
        "max_iter": 1000,
        "tolerance": None,
        "accuracy_constant": 1.0,
        "adaptive": False,
        "averaging": "uniform",
        "suffix_fraction": 0.5,
        "record_every": 1,
    },
    "reference": {"max_iter": 0, "adaptive": True},
    "output": {"dir": ".", "csv": "results.csv", "aggregate_csv": "aggregate.csv", "json": "summary.json"},
    "workers": 1,
}


# ---------------------------------------------------------------- configuration

def _line_map(text):
    """Dotted key path -> 1-based line number, from the YAML node tree."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                lines[path] = key.start_mark.line + 1
                walk(value, path)

    if root is not None:
        walk(root, "")
    return lines


def _merge(base, extra, path=""):
    for key, value in extra.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown field '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"field '{where}' must be a mapping")
            _merge(base[key], value, where)
        else:
            base[key] = value


def apply_override(config, assignment):
    """Apply ``"a.b=value"`` in place; ``value`` is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key.sub=value")
    key, raw = assignment.split("=", 1)
    key = key.strip().lstrip("-")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {key}: cannot parse value {raw!r} ({exc})") from None
    parts = key.split(".")
    node = config
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"unknown field '{'.'.join(parts[: i + 1])}'")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown field '{key}'")
    if isinstance(node[parts[-1]], dict):
        raise ConfigError(f"field '{key}' is a section; override one of its keys")
    node[parts[-1]] = value
    return config


def load_config(source=None, overrides=()):
    """Defaults, then a YAML file (path or text), then ``key=value`` overrides; validated."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    lines = {}
    origin = "<config>"
    if source is not None:
        if isinstance(source, dict):
            data = source
        else:
            text = source
            if os.path.exists(str(source)):
                origin = str(source)
                with open(source) as fh:
                    text = fh.read()
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                mark = getattr(exc, "problem_mark", None)
                where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
                raise ConfigError(f"{origin}: YAML syntax error{where}: {getattr(exc, 'problem', exc)}") from None
            lines = _line_map(text)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{origin}: top level must be a mapping")
        try:
            _merge(config, data)
        except ConfigError as exc:
            raise _located(exc, lines, origin) from None
    for item in overrides:
        apply_override(config, item)
    try:
        validate_config(config)
    except ConfigError as exc:
        raise _located(exc, lines, origin) from None
    return config


def _located(exc, lines, origin):
    msg = str(exc)
    for path, line in sorted(lines.items(), key=lambda kv: -len(kv[0])):
        if f"'{path}'" in msg:
            return ConfigError(f"{origin}:{line}: {msg}")
    return ConfigError(f"{origin}: {msg}")


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _require(cond, path, what):
    if not cond:
        raise ConfigError(f"field '{path}' {what}")


def validate_config(config):
    """Type and range checks; errors name the offending field."""
    sc = config["scenario"]
    _require(sc["kind"] in SCENARIO_KINDS, "scenario.kind", f"must be one of {', '.join(SCENARIO_KINDS)}")
    for key, low in (("s", 1), ("m", 0), ("n", 1)):
        _require(isinstance(sc[key], int) and not isinstance(sc[key], bool) and sc[key] >= low,
                 f"scenario.{key}", f"must be an integer >= {low}")
    config["snr"] = _as_list(config["snr"])
    _require(config["snr"] and all(isinstance(v, (int, float)) and v > 0 for v in config["snr"]),
             "snr", "must be a positive number or a list of them")
    _require(isinstance(config["trials"], int) and config["trials"] >= 1, "trials", "must be an integer >= 1")
    _require(isinstance(config["seed"], int) and config["seed"] >= 0, "seed", "must be a nonnegative integer")
    _require(isinstance(config["workers"], int) and config["workers"] >= 1, "workers", "must be an integer >= 1")
    est = config["estimator"]
    est["kinds"] = _as_list(est["kinds"])
    for k in est["kinds"]:
        _require(k in KINDS, "estimator.kinds", f"contains {k!r}; allowed: {', '.join(KINDS)}")
    est["setups"] = _as_list(est["setups"])
    _require(all(s in ("l1", "l2") for s in est["setups"]), "estimator.setups", "must list 'l1' and/or 'l2'")
    _require(est["r_bar"] == "auto" or (isinstance(est["r_bar"], (int, float)) and est["r_bar"] >= 0),
             "estimator.r_bar", "must be 'auto' or a nonnegative number")
    _require(est["lam"] == "auto" or (isinstance(est["lam"], (int, float)) and est["lam"] >= 0),
             "estimator.lam", "must be 'auto' or a nonnegative number")
    _require(est["stopping"] in ("budget", "certificate", "statistical"), "estimator.stopping",
             "must be budget, certificate or statistical")
    _require(isinstance(est["max_iter"], int) and est["max_iter"] >= 1, "estimator.max_iter", "must be an integer >= 1")
    _require(isinstance(est["record_every"], int) and est["record_every"] >= 1, "estimator.record_every",
             "must be an integer >= 1")
    _require(est["averaging"] in ("uniform", "suffix"), "estimator.averaging", "must be uniform or suffix")
    _require(isinstance(est["suffix_fraction"], (int, float)) and 0 < est["suffix_fraction"] <= 1,
             "estimator.suffix_fraction", "must lie in (0, 1]")
    _require(isinstance(est["adaptive"], bool), "estimator.adaptive", "must be true or false")
    if est["stopping"] == "certificate":
        _require(isinstance(est["tolerance"], (int, float)) and est["tolerance"] > 0, "estimator.tolerance",
                 "must be positive for certificate stopping")
    _require(isinstance(est["accuracy_constant"], (int, float)) and est["accuracy_constant"] > 0,
             "estimator.accuracy_constant", "must be positive")
    _require(isinstance(est["delta"], (int, float)) and 0 < est["delta"] < 1, "estimator.delta", "must lie in (0, 1)")
    ref = config["reference"]
    _require(isinstance(ref["max_iter"], int) and ref["max_iter"] >= 0, "reference.max_iter",
             "must be a nonnegative integer")
    _require(isinstance(ref["adaptive"], bool), "reference.adaptive", "must be true or false")
    for key in ("csv", "aggregate_csv", "json"):
        _require(config["output"][key] is None or isinstance(config["output"][key], str), f"output.{key}",
                 "must be a file name or null")
    # build one estimator config per kind to surface cross-field problems early
    scenario = _scenario(config, config["snr"][0])
    for kind in est["kinds"]:
        try:
            _estimator_config(config, kind, est["setups"][0], scenario)
        except ConfigError as exc:
            raise ConfigError(f"field 'estimator' ({kind}): {exc}") from None
    return config


def _scenario(config, snr):
    sc = config["scenario"]
    return Scenario(sc["kind"], sc["s"], sc["n"], float(snr), sc["m"])


def _estimator_config(config, kind, setup, scenario, **changes):
    est = config["estimator"]
    r_bar = default_r_bar(scenario.subspace_dim) if est["r_bar"] == "auto" else float(est["r_bar"])
    averaging = ("suffix", est["suffix_fraction"]) if est["averaging"] == "suffix" else "uniform"
    options = dict(
        kind=kind,
        r_bar=r_bar if kind.startswith("con-") else None,
        lam=None if kind.startswith("con-") else est["lam"],
        sigma=scenario.sigma,
        delta=est["delta"],
        setup_u=setup,
        setup_v="l2" if kind.endswith("star") else setup,
        stopping=est["stopping"],
        max_iter=est["max_iter"],
        tolerance=est["tolerance"],
        accuracy_constant=est["accuracy_constant"],
        averaging=averaging,
        adaptive=est["adaptive"],
        record_every=est["record_every"],
    )
    options.update(changes)
    return EstimatorConfig(**options)


# ---------------------------------------------------------------- trials

@dataclass
class TrialResult:
    scenario: str
    estimator: str
    setup: str
    trial: int
    rows: list = field(default_factory=list)
    stop_iteration: int = 0
    seconds: float = 0.0
    final_l2_loss: float = math.nan
    final_linf_loss: float = math.nan
    error: str = ""


def _reference_value(y, cfg, max_iter, adaptive):
    ref_cfg = EstimatorConfig(**{**cfg.__dict__, "stopping": "budget", "max_iter": max_iter,
                                 "adaptive": adaptive,
                                 "record_every": max(1, max_iter // 100)})
    return min(solve(y, ref_cfg).trace.objective)


def run_trial(config, snr, trial):
    """All estimator/setup combinations for one ``(snr, trial)`` draw."""
    scenario = _scenario(config, snr)
    x, y = scenario.draw(config["seed"], trial)
    n = scenario.n
    every = config["estimator"]["record_every"]
    results = []
    for kind in config["estimator"]["kinds"]:
        setups = config["estimator"]["setups"]
        for setup in setups:
            res = TrialResult(scenario.name, kind, setup, trial)
            try:
                cfg = _estimator_config(config, kind, setup, scenario)
                losses = {0: _losses(x, y, np.zeros(2 * (n + 1)), n)}

                if kind in ("con-ls", "pen-ls"):
                    def callback(t, u):
                        if t % every == 0:
                            losses[t] = _losses(x, y, u, n)
                else:
                    def callback(t, state):
                        if t % every == 0:
                            losses[t] = _losses(x, y, state.averaged_u, n)

                sol = solve(y, cfg, callback=callback)
                tr = sol.trace
                last = tr.stop_iteration
                if last not in losses:
                    losses[last] = _losses(x, y, sol.filter_spectral, n)
                ref = None
                if config["reference"]["max_iter"] > 0:
                    ref = _reference_value(y, cfg, config["reference"]["max_iter"], config["reference"]["adaptive"])
                for i, t in enumerate(tr.iterations):
                    obj, bound = tr.objective[i], tr.certificate[i]
                    if ref is not None:
                        rel = (obj - ref) / ref if ref > 0 else math.inf
                    elif tr.rel_accuracy:
                        rel = tr.rel_accuracy[i]
                    else:
                        rel = bound / (obj - bound) if obj > bound else math.inf
                    l2, linf = losses.get(t, (math.nan, math.nan))
                    res.rows.append((t, obj, bound, rel, l2, linf))
                res.stop_iteration = last
                res.seconds = tr.seconds[-1] if tr.seconds else 0.0
                res.final_l2_loss, res.final_linf_loss = losses[last]
            except (DivergedError, InvalidArgument, ConfigError, FloatingPointError, RuntimeError) as exc:
                res.rows = []
                res.error = f"{type(exc).__name__}: {exc}"
            results.append(res)
    return results


def _losses(x, y, u, n):
    m = metrics(x, idft(vec_adjoint(u)), y, n)
    return m["l2_loss"], m["linf_fourier_loss"]


def _trial_job(args):
    return run_trial(*args)


# ---------------------------------------------------------------- aggregation

def aggregate(trials):
    """95th-percentile and median curves across trials on the union iteration grid.

    Trials that stopped early carry their last record forward. Quantiles are
    empirical (inverted CDF), so ``agg95 >= median`` pointwise.
    """
    ok = [t for t in trials if not t.error and t.rows]
    if not ok:
        return []
    grid = sorted({row[0] for t in ok for row in t.rows})
    stacked = []
    for t in ok:
        its = [row[0] for row in t.rows]
        vals = np.array([row[1:] for row in t.rows], dtype=np.float64)
        idx = np.searchsorted(its, grid, side="right") - 1
        idx = np.clip(idx, 0, len(its) - 1)
        stacked.append(vals[idx])
    cube = np.stack(stacked)  # trials x grid x columns
    out = []
    for label, q in (("agg95", 0.95), ("median", 0.5)):
        agg = np.quantile(cube, q, axis=0, method="inverted_cdf")
        for g, row in zip(grid, agg):
            out.append((label, g, *row))
    return out


@dataclass
class ExperimentResult:
    trials: list
    aggregate_rows: list
    summary: list
    files: dict


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([row[0], row[1], row[2], row[3]] + [fmt(v) for v in row[4:]])


def run_experiment(config, out_dir=None):
    """Run every ``(snr, trial)`` combination and write the configured files.

    ``config`` is a path, YAML text or a dict (validated through
    :func:`load_config`). Failed trials are recorded in the summary and the
    run continues.
    """
    config = load_config(config)
    workers = config["workers"]
    jobs = [(config, snr, trial) for snr in config["snr"] for trial in range(config["trials"])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_trial_job, jobs))
    else:
        batches = [run_trial(*job) for job in jobs]
    trials = [res for batch in batches for res in batch]

    groups = {}
    for res in trials:
        groups.setdefault((res.scenario, res.estimator, res.setup), []).append(res)
    per_trial_rows, agg_rows, summary = [], [], []
    for key in sorted(groups, key=lambda k: (_snr_of(groups[k][0], config), k)):
        members = sorted(groups[key], key=lambda r: r.trial)
        for res in members:
            for row in res.rows:
                per_trial_rows.append((*key, res.trial, *row))
        for row in aggregate(members):
            agg_rows.append((*key, *row))
        summary.append(_summary_entry(key, members, config))

    files = {}
    directory = out_dir if out_dir is not None else config["output"]["dir"]
    if directory:
        os.makedirs(directory, exist_ok=True)
        out = config["output"]
        if out["csv"]:
            files["csv"] = os.path.join(directory, out["csv"])
            _write_csv(files["csv"], per_trial_rows)
        if out["aggregate_csv"]:
            files["aggregate_csv"] = os.path.join(directory, out["aggregate_csv"])
            _write_csv(files["aggregate_csv"], agg_rows)
        if out["json"]:
            files["json"] = os.path.join(directory, out["json"])
            with open(files["json"], "w") as fh:
                json.dump(summary, fh, indent=1, default=_json_default)
                fh.write("\n")
    return ExperimentResult(trials, agg_rows, summary, files)


def _snr_of(res, config):
    for snr in config["snr"]:
        if _scenario(config, snr).name == res.scenario:
            return float(snr)
    return 0.0


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


def _summary_entry(key, members, config):
    ok = [r for r in members if not r.error]
    snr = _snr_of(members[0], config)
    scenario = _scenario(config, snr)
    l2 = np.array([r.final_l2_loss for r in ok])

    def stat(fn, arr):
        return float(fn(arr)) if arr.size else None

    return {
        "scenario": key[0],
        "estimator": key[1],
        "setup": key[2],
        "n": scenario.n,
        "snr": snr,
        "sigma": scenario.sigma,
        "trials": len(members),
        "failures": [{"trial": r.trial, "error": r.error} for r in members if r.error],
        "mean_l2_loss": stat(np.mean, l2),
        "median_l2_loss": stat(np.median, l2),
        "p95_l2_loss": None if not l2.size else float(np.quantile(l2, 0.95, method="inverted_cdf")),
        "mean_stop_iter": stat(np.mean, np.array([r.stop_iteration for r in ok], dtype=float)),
        "mean_solver_seconds": stat(np.mean, np.array([r.seconds for r in ok])),
    }
