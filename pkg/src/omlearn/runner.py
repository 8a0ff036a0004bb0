"""Experiment runner: streams, the online meta-learning loop, baselines and reports on disk.

Layout of an output directory::

    config.resolved.yaml          full configuration after defaults
    stream_seed<S>.jsonl          one task record per line
    trace_seed<S>.csv             per-round trace of the meta-learner
    baseline_<KIND>_seed<S>.csv   per-round trace of each baseline (same columns)
    summary.jsonl                 one summary object per seed
"""

import csv
import glob
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (
    TRACE_COLUMNS,
    BoundInputs,
    check_lemma2,
    check_lemma3,
    check_lemma4,
    meta_certificate,
    theorem1_C,
    theorem1_bound,
)
from .adapter import AdapterConfig, MetaGradientOracle
from .baselines import make_baseline
from .config import dump_config
from .exceptions import InputError, NumericError
from .learner import OnlineMetaLearner
from .smoothing import WindowBuffer
from .tasks import make_stream, read_stream, write_stream


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_trace(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col, math.nan)) for col in TRACE_COLUMNS])


def read_trace(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise InputError(f"{path}: unexpected trace columns {reader.fieldnames}")
        return [{k: float(v) for k, v in row.items()} for row in reader]


def seed_streams(seed):
    """Independent seed sequences for the task stream and the learner's oracles."""
    return np.random.SeedSequence(seed).spawn(2)


def build_stream(config, seed):
    if config.stream_file:
        tasks = read_stream(config.stream_file)
        if len(tasks) < config.T:
            raise InputError(f"{config.stream_file} holds {len(tasks)} tasks, T={config.T}")
        return tasks[: config.T]
    stream_seq, _ = seed_streams(seed)
    return make_stream(config.family, config.dim, config.T, seed=stream_seq,
                       domain_radius=config.domain_radius, **config.generator)


def make_learner(config, seed):
    _, learner_seq = seed_streams(seed)
    return OnlineMetaLearner(
        alpha=config.alpha, eta=config.eta, b1=config.b1, window=config.m, sigma=config.sigma,
        w_init=config.w_init, inner_mode=config.inner_mode, batch_size=config.batch_size,
        random_state=learner_seq,
    )


def bound_report(tasks, config, delta=None):
    base, radius, (M, L_prime, beta_prime) = meta_certificate(tasks, config.alpha)
    inputs = BoundInputs(T=len(tasks), m=config.m, eta=config.eta, b1=config.b1,
                         delta=config.delta if delta is None else delta, sigma=config.sigma,
                         M=M, L_prime=L_prime, beta_prime=beta_prime)
    return {
        "inputs": inputs.as_dict(),
        "base_constants": base.as_dict(),
        "certified_radius": radius,
        "C": theorem1_C(inputs),
        "bound": theorem1_bound(inputs),
    }


def run_seed(config, seed):
    """Run one seed end to end and return its summary; files go to ``config.output_dir``."""
    out = config.output_dir
    tasks = build_stream(config, seed)
    write_stream(tasks, os.path.join(out, f"stream_seed{seed}.jsonl"))

    learner = make_learner(config, seed)
    trace_path = os.path.join(out, f"trace_seed{seed}.csv")
    try:
        for task in tasks:
            learner.partial_fit(task)
    except NumericError:
        write_trace(learner.ledger_.rows, trace_path)
        raise
    ledger = learner.ledger_
    write_trace(ledger.rows, trace_path)

    mean_losses = {"OML": float(np.mean(learner.test_losses_))}
    for bcfg in config.baseline_configs():
        losses = make_baseline(bcfg).fit(tasks).test_losses_
        rows = [{"t": t, "test_loss": loss} for t, loss in enumerate(losses, 1)]
        write_trace(rows, os.path.join(out, f"baseline_{bcfg.kind}_seed{seed}.csv"))
        mean_losses[bcfg.kind] = float(np.mean(losses))

    bound = bound_report(tasks, config)
    lemma3 = check_lemma3([ledger], bound["inputs"]["M"], config.m)
    iterates = np.asarray(learner.iterates_)
    return {
        "seed": seed,
        "T": len(tasks),
        "m": config.m,
        "regret": ledger.running_regret,
        "regret_half": float(ledger.regret_curve()[len(tasks) // 2 - 1]) if len(tasks) > 1 else math.nan,
        "bound": bound["bound"],
        "C": bound["C"],
        "bound_violated": ledger.running_regret > bound["bound"],
        "bound_inputs": bound["inputs"],
        "base_constants": bound["base_constants"],
        "certified_radius": bound["certified_radius"],
        "lemma3": {"telescoped": lemma3.sums[0], "bound": lemma3.bound},
        "domain_exits": int(sum(row["domain_flag"] for row in ledger.rows)),
        "max_iterate_norm": float(np.max(np.linalg.norm(iterates, axis=1))),
        "final_b": ledger.rows[-1]["b_next"],
        "mean_test_loss": mean_losses,
    }


def _run_seed_job(args):
    config, seed = args
    try:
        return seed, run_seed(config, seed), None
    except NumericError as exc:
        return seed, None, str(exc)


def run_experiment(config):
    """Run every seed of ``config`` and write all artifacts; returns the summaries."""
    os.makedirs(config.output_dir, exist_ok=True)
    dump_config(config, os.path.join(config.output_dir, "config.resolved.yaml"))
    jobs = [(config, seed) for seed in config.seeds]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_seed_job, jobs))
    else:
        results = [_run_seed_job(job) for job in jobs]
    summaries = [summary for _, summary, err in results if err is None]
    with open(os.path.join(config.output_dir, "summary.jsonl"), "w") as fh:
        for summary in summaries:
            fh.write(json.dumps(summary, sort_keys=True) + "\n")
    failed = [(seed, err) for seed, _, err in results if err is not None]
    if failed:
        raise NumericError("; ".join(f"seed {seed}: {err}" for seed, err in failed))
    return summaries


def read_summaries(run_dir):
    path = os.path.join(run_dir, "summary.jsonl")
    if not os.path.isfile(path):
        raise InputError(f"{run_dir}: no summary.jsonl (is this a run directory?)")
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


_TRACE_RE = re.compile(r"^(?:trace|baseline_(?P<kind>[A-Za-z]+))_seed(?P<seed>\d+)\.csv$")


def collect_traces(run_dir):
    """Map method name (``OML``, ``TFS``, ...) to ``{seed: rows}`` for one run directory."""
    if not os.path.isdir(run_dir):
        raise InputError(f"{run_dir}: not a directory")
    methods = {}
    for path in sorted(glob.glob(os.path.join(run_dir, "*.csv"))):
        match = _TRACE_RE.match(os.path.basename(path))
        if match:
            method = match.group("kind") or "OML"
            methods.setdefault(method, {})[int(match.group("seed"))] = read_trace(path)
    if not methods:
        raise InputError(f"{run_dir}: no trace files found")
    return methods


def compare(trace_dirs, out=None):
    """Per-round mean and standard error of the test loss for every method of every directory.

    For the second and later directories a ``<label>_minus_<ref>`` column gives
    the mean difference to the same method in the first directory. Returns
    ``(header, rows)`` and writes CSV to ``out`` when given.
    """
    if not trace_dirs:
        raise InputError("compare needs at least one directory")
    series, lengths = [], set()
    names = [os.path.basename(os.path.normpath(d)) or d for d in trace_dirs]
    for i, (run_dir, name) in enumerate(zip(trace_dirs, names)):
        if names.count(name) > 1:
            name = f"{name}#{i}"
        traces = collect_traces(run_dir)
        for method in sorted(traces, key=lambda k: (k != "OML", k)):
            by_seed = traces[method]
            losses = np.array([[row["test_loss"] for row in rows] for _, rows in sorted(by_seed.items())])
            lengths.add(losses.shape[1])
            series.append((i, method, f"{name}:{method}", losses))
    if len(lengths) != 1:
        raise InputError(f"traces do not share T: lengths {sorted(lengths)}")
    T = lengths.pop()

    header = ["t"]
    columns = []
    refs = {method: label for i, method, label, _ in series if i == 0}
    means = {}
    for i, method, label, losses in series:
        mean = losses.mean(axis=0)
        n = losses.shape[0]
        stderr = losses.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(T)
        means[label] = mean
        header += [f"{label}_mean", f"{label}_stderr"]
        columns += [mean, stderr]
    for i, method, label, _ in series:
        if i > 0 and method in refs:
            header.append(f"{label}_minus_{refs[method]}")
            columns.append(means[label] - means[refs[method]])
    rows = [[t + 1] + [float(col[t]) for col in columns] for t in range(T)]
    if out is not None:
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    return header, rows


def check_bounds(run_dir, delta=None):
    """Compare each seed's local regret with the high-probability bound."""
    summaries = read_summaries(run_dir)
    per_seed = []
    for s in summaries:
        inputs = dict(s["bound_inputs"])
        if delta is not None:
            inputs["delta"] = delta
        inputs = BoundInputs(**inputs)
        bound = theorem1_bound(inputs)
        per_seed.append({"seed": s["seed"], "regret": s["regret"], "bound": bound,
                         "violated": s["regret"] > bound})
    used_delta = delta if delta is not None else summaries[0]["bound_inputs"]["delta"]
    fraction = float(np.mean([r["violated"] for r in per_seed]))
    return {"delta": used_delta, "n_runs": len(per_seed), "violation_fraction": fraction,
            "passed": fraction <= used_delta, "runs": per_seed}


def check_lemmas(config, run_dir=None, n_draws=10_000, n_sequences=100, seed=0):
    """Window-gradient variance on the configured stream, the telescoped
    window-loss sum of a run's traces (when ``run_dir`` is given) and the
    sum-integral inequality on random sequences."""
    rng = np.random.default_rng(seed)
    tasks = build_stream(config, config.seeds[0])
    cfg = AdapterConfig(config.alpha)
    buffer = WindowBuffer(config.m, cfg)
    for task in tasks[: config.m]:
        buffer.push(task, MetaGradientOracle(task, cfg, config.sigma, rng.spawn(1)[0]))
    w = np.zeros(tasks[0].n_params) if config.w_init is None else np.asarray(config.w_init, float)
    report = {"lemma2": check_lemma2(buffer, w, n_draws).as_dict()}

    if run_dir is not None:
        summaries = read_summaries(run_dir)
        traces = collect_traces(run_dir).get("OML", {})
        M = max(s["bound_inputs"]["M"] for s in summaries)
        report["lemma3"] = check_lemma3([rows for _, rows in sorted(traces.items())], M, summaries[0]["m"])
        report["lemma3"] = report["lemma3"].as_dict()

    worst = -math.inf
    for _ in range(n_sequences):
        n = int(rng.integers(1, 51))
        a = np.concatenate([[rng.uniform(0.1, 10.0)], rng.exponential(1.0, size=n)])
        lhs, rhs = check_lemma4("inverse", a)
        worst = max(worst, lhs - rhs)
    report["lemma4"] = {"n_sequences": n_sequences, "max_lhs_minus_rhs": worst, "passed": worst <= 0}
    return report
