"""End-to-end acceptance criteria, each at its stated tolerance and time budget.

Every test appends one ``PASS``/``FAIL`` line to the acceptance summary printed
at the end of the pytest run (and prints it immediately under ``-s``).
"""

import math
import os
import time

import numpy as np

from omlearn.adapter import AdapterConfig, MetaGradientOracle, meta_grad, meta_loss
from omlearn.analysis import check_lemma2, check_lemma3, check_lemma4, meta_certificate
from omlearn.config import build_config
from omlearn.optimizer import AdaGradNorm
from omlearn.smoothing import WindowBuffer
from omlearn.tasks import make_stream, make_task
from omlearn import runner

from conftest import ACCEPTANCE_LINES, central_diff_grad, random_ball_point

FAMILIES = [("QuadraticBowl", 5, 10.0), ("SineRegression", 2, 6.0)]
CFG = AdapterConfig(0.1)


def report(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_01_meta_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for family, dim, radius in FAMILIES:
        for seed in range(100):
            task = make_task(family, dim, seed, domain_radius=radius)
            w = random_ball_point(rng, task.n_params, radius)
            g = meta_grad(w, task, CFG)
            fd = central_diff_grad(lambda x: meta_loss(x, task, CFG), w)
            worst = max(worst, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
    elapsed = time.perf_counter() - start
    report(1, "meta-gradient vs finite differences", worst <= 1e-5 and elapsed < 5,
           f"max rel err {worst:.2e} <= 1e-5, {elapsed:.1f}s < 5s")


def test_02_meta_constants_certified():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    violations = 0
    for family, dim, radius in FAMILIES:
        task = make_task(family, dim, 2, domain_radius=radius)
        _, _, (_, L_prime, beta_prime) = meta_certificate([task], CFG.alpha)
        for _ in range(1000):
            u = random_ball_point(rng, task.n_params, radius)
            v = random_ball_point(rng, task.n_params, radius)
            gap = np.linalg.norm(u - v)
            violations += abs(meta_loss(u, task, CFG) - meta_loss(v, task, CFG)) > L_prime * gap
            violations += np.linalg.norm(meta_grad(u, task, CFG) - meta_grad(v, task, CFG)) > beta_prime * gap
    elapsed = time.perf_counter() - start
    report(2, "meta-loss Lipschitz and smoothness certificates", violations == 0 and elapsed < 10,
           f"{violations} violations over 2x1000 pairs per family, {elapsed:.1f}s < 10s")


def test_03_window_variance_reduction():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    details, ok = [], True
    for m in (1, 5, 25):
        buf = WindowBuffer(m, CFG)
        for task in make_stream("QuadraticBowl", 5, m, seed=m, domain_radius=10.0):
            buf.push(task, MetaGradientOracle(task, CFG, 1.0, rng.spawn(1)[0]))
        rep = check_lemma2(buf, np.zeros(5), n_draws=10_000)
        ok &= rep.second_moment <= 1.1 / m
        details.append(f"m={m}: {rep.second_moment:.4f} <= {1.1 / m:.4f}")
    elapsed = time.perf_counter() - start
    report(3, "window gradient variance <= 1.1 sigma^2/m", ok and elapsed < 30,
           f"{'; '.join(details)}, {elapsed:.1f}s < 30s")


def test_04_telescoped_window_loss(tmp_path):
    start = time.perf_counter()
    cfg = build_config(overrides={"seeds": list(range(20)), "baselines": [], "output_dir": str(tmp_path)})
    summaries = runner.run_experiment(cfg)
    traces = [runner.read_trace(os.path.join(tmp_path, f"trace_seed{s}.csv")) for s in cfg.seeds]
    M = max(s["bound_inputs"]["M"] for s in summaries)
    rep = check_lemma3(traces, M, cfg.m)
    elapsed = time.perf_counter() - start
    report(4, "seed-averaged telescoped sum <= 4MT/m", not rep.exceeded and elapsed < 120,
           f"mean {rep.mean:.3f} +/- {rep.stderr:.3f} <= {rep.bound:.1f} (T={rep.T}, m={rep.m}), "
           f"{elapsed:.1f}s < 120s")


def test_05_sum_integral_inequality():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = -math.inf
    for _ in range(100):
        n = int(rng.integers(1, 51))
        a = np.concatenate([[rng.uniform(0.1, 10.0)], rng.exponential(rng.uniform(0.1, 20.0), size=n)])
        a[1:][rng.random(n) < 0.2] = 0.0
        lhs, rhs = check_lemma4("inverse", a)
        worst = max(worst, lhs - rhs)
    elapsed = time.perf_counter() - start
    report(5, "sum a_t h(S_t) <= integral of h for h(x)=1/x", worst <= 0 and elapsed < 1,
           f"max lhs-rhs {worst:.3e} over 100 sequences, {elapsed:.2f}s < 1s")


def test_06_high_probability_bound(tmp_path):
    start = time.perf_counter()
    cfg = build_config(overrides={"seeds": list(range(200)), "baselines": [], "output_dir": str(tmp_path)})
    runner.run_experiment(cfg)
    rep = runner.check_bounds(str(tmp_path), delta=0.1)
    elapsed = time.perf_counter() - start
    worst = max(r["regret"] / r["bound"] for r in rep["runs"])
    report(6, "local regret within the high-probability bound",
           rep["violation_fraction"] <= 0.1 and elapsed < 600,
           f"violation fraction {rep['violation_fraction']:.3f} <= 0.1 over {rep['n_runs']} runs, "
           f"max regret/bound {worst:.2e}, {elapsed:.1f}s < 600s")


def test_07_hyperparameter_robustness():
    start = time.perf_counter()
    cfg = build_config()
    tasks = runner.build_stream(cfg, cfg.seeds[0])
    half = cfg.T // 2
    cells, failures = [], []
    for b1 in (1e-3, 1.0, 1e3):
        for eta in (0.1, 1.0, 10.0):
            learner = runner.make_learner(cfg, cfg.seeds[0]).set_params(b1=b1, eta=eta).fit(tasks)
            curve = learner.ledger_.regret_curve()
            max_norm = float(np.max(np.linalg.norm(learner.iterates_, axis=1)))
            bounded = max_norm <= 10 * cfg.domain_radius
            early, late = curve[half - 1] / half, curve[cfg.T - 1] / cfg.T
            cell = f"b1={b1:g},eta={eta:g}: max|w|={max_norm:.2f} R/t {early:.3f}->{late:.3f}"
            cells.append(cell)
            if not (bounded and late < early):
                failures.append(cell)
    elapsed = time.perf_counter() - start
    detail = (f"{9 - len(failures)}/9 cells bounded with decreasing R_m(t)/t from T/2 to T"
              + (f"; failing {failures}" if failures else "") + f", {elapsed:.1f}s < 600s")
    report(7, "AdaGrad-Norm robustness grid", not failures and elapsed < 600, detail)


def test_08_baseline_ordering(tmp_path):
    start = time.perf_counter()
    means = {}
    for preset in ("clustered", "antipodal"):
        cfg = build_config(preset, overrides={"seeds": list(range(20)),
                                              "output_dir": str(tmp_path / preset)})
        runner.run_experiment(cfg)
        traces = runner.collect_traces(cfg.output_dir)
        means[preset] = {
            method: float(np.mean([[row["test_loss"] for row in rows[20:]] for rows in by_seed.values()]))
            for method, by_seed in traces.items()
        }
    elapsed = time.perf_counter() - start
    c, a = means["clustered"], means["antipodal"]
    ok = c["OML"] < c["TFS"] and a["TOE"] >= a["TFS"] and elapsed < 300
    report(8, "OML < TFS on clustered stream, TOE >= TFS on antipodal stream", ok,
           f"clustered OML {c['OML']:.3f} vs TFS {c['TFS']:.3f}; antipodal TOE {a['TOE']:.3f} "
           f"vs TFS {a['TFS']:.3f}; {elapsed:.1f}s < 300s")


def test_09_adagrad_norm_arithmetic():
    opt = AdaGradNorm(np.zeros(2), eta=1.0, b1=1.0)
    opt.step(np.array([3.0, 4.0]))
    expected = np.array([-3.0, -4.0]) / math.sqrt(26.0)
    err = max(abs(opt.b_sq - 26.0), float(np.max(np.abs(opt.w - expected))))
    report(9, "AdaGrad-Norm (3,4) step", err <= 1e-12,
           f"b_2^2={opt.b_sq!r}, w_2={opt.w.tolist()}, max err {err:.1e} <= 1e-12")


def test_10_determinism(tmp_path):
    outputs = []
    for name in ("first", "second"):
        cfg = build_config(overrides={"T": 60, "seeds": [7], "output_dir": str(tmp_path / name)})
        runner.run_experiment(cfg)
        outputs.append({f: (tmp_path / name / f).read_bytes()
                        for f in sorted(os.listdir(tmp_path / name)) if f.endswith(".csv")})
    same = outputs[0] == outputs[1] and len(outputs[0]) == 3
    report(10, "identical config and seed give byte-identical traces", same,
           f"{len(outputs[0])} trace files compared")
