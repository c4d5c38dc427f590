"""End-to-end acceptance checks, one test per numbered criterion.

Each test prints a single verdict line with its measured runtime, so a
verbose run doubles as a checklist.  Tolerances and time budgets are part
of the criteria and are asserted, not advisory.
"""

import functools
import json
import time

import numpy as np
import scipy.stats
from click.testing import CliRunner

from mixopt import (
    RESTRICTED,
    UNRESTRICTED,
    AioliParams,
    BudgetLedger,
    DogeParams,
    DoremiParams,
    DynamicsSchedule,
    LinearTrainer,
    ScheduleSegment,
    SkillItParams,
    TrainerConfig,
    TrainerFactory,
    allocation,
    analyze_greedy,
    analyze_similarity,
    candidate_grid,
    cli,
    diagonal_projection,
    egd_step,
    extract_parameters,
    fit_dynamic_law,
    fit_static_law,
    greedy_vs_exhaustive,
    learn_params,
    load_config,
    run_aioli,
    run_doge,
    run_doremi,
    run_experiment,
    run_skill_it,
    run_stratified,
    similarity,
    static_losses,
    unrolled_egd,
)

A_DIAG = np.array([[0.002, 0.0], [0.0, 0.0005]])
FLIP_EARLY = np.array([[0.148, 0.011], [-0.013, 0.087]])
FLIP_LATE = np.array([[0.015, 0.001], [0.001, 0.015]])
FULL_MATRIX = np.array([[0.249, 0.058], [0.025, 0.224]])

# (setting, m, final steps, method) -> (runs, steps per run).  The m=7
# restricted skill_it row is a literal override, not the general formula.
ALLOCATION_ROWS = [
    (UNRESTRICTED, 2, 5000, "dml", 10, 5000),
    (UNRESTRICTED, 2, 5000, "skill_it", 2, 5000),
    (UNRESTRICTED, 2, 5000, "doremi", 2, 5000),
    (UNRESTRICTED, 2, 5000, "doge", 1, 5000),
    (UNRESTRICTED, 3, 5000, "dml", 10, 5000),
    (UNRESTRICTED, 3, 5000, "skill_it", 3, 5000),
    (UNRESTRICTED, 3, 5000, "doremi", 2, 5000),
    (UNRESTRICTED, 3, 5000, "doge", 1, 5000),
    (UNRESTRICTED, 7, 40000, "dml", 10, 40000),
    (UNRESTRICTED, 7, 40000, "skill_it", 7, 40000),
    (UNRESTRICTED, 7, 40000, "doremi", 2, 40000),
    (UNRESTRICTED, 7, 40000, "doge", 1, 40000),
    (RESTRICTED, 2, 5000, "dml", 10, 250),
    (RESTRICTED, 2, 5000, "skill_it", 2, 1250),
    (RESTRICTED, 2, 5000, "doremi", 2, 1250),
    (RESTRICTED, 2, 5000, "doge", 1, 2500),
    (RESTRICTED, 3, 5000, "dml", 10, 250),
    (RESTRICTED, 3, 5000, "skill_it", 3, 833),
    (RESTRICTED, 3, 5000, "doremi", 2, 1250),
    (RESTRICTED, 3, 5000, "doge", 1, 2500),
    (RESTRICTED, 7, 40000, "dml", 10, 2000),
    (RESTRICTED, 7, 40000, "skill_it", 7, 2814),
    (RESTRICTED, 7, 40000, "doremi", 2, 10000),
    (RESTRICTED, 7, 40000, "doge", 1, 20000),
]


def checked(num, name, budget_s):
    """Time the check, print one verdict line, and enforce the budget."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs) or ""
            except BaseException:
                elapsed = time.perf_counter() - start
                print(f"criterion {num:2d} FAIL {name} ({elapsed:.2f}s)")
                raise
            elapsed = time.perf_counter() - start
            within = elapsed < budget_s
            line = (f"criterion {num:2d} {'PASS' if within else 'FAIL'} "
                    f"{name} ({elapsed:.2f}s of {budget_s:.0f}s)")
            if detail:
                line += f" :: {detail}"
            print(line)
            assert within, f"{name} took {elapsed:.2f}s, budget {budget_s}s"

        return inner

    return wrap


def linear_config(losses, matrix, **kwargs):
    return TrainerConfig(
        initial_losses=np.asarray(losses, dtype=float),
        schedule=DynamicsSchedule([ScheduleSegment(None, np.asarray(matrix))]),
        **kwargs)


@checked(1, "solver step matches the literal multiplicative form", 1.0)
def test_criterion_01_egd_closed_form():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        m = int(rng.integers(2, 7))
        k = int(rng.integers(1, 4))
        p = rng.dirichlet(np.ones(m))
        a = rng.normal(size=(k, m))
        b = rng.normal(size=k)
        eta = float(rng.uniform(0.01, 1.0))
        w = p * np.exp(eta * (b @ a))
        assert np.allclose(egd_step(p, a, scale=b, step_size=eta),
                           w / w.sum(), rtol=0, atol=1e-12)
    for _ in range(300):
        m = int(rng.integers(2, 5))
        rounds = int(rng.integers(1, 12))
        p0 = rng.dirichlet(np.ones(m))
        seq = [rng.normal(size=(2, m)) for _ in range(rounds)]
        scales = [rng.normal(size=2) for _ in range(rounds)]
        eta = float(rng.uniform(0.05, 0.5))
        p = p0.copy()
        for a, b in zip(seq, scales):
            p = egd_step(p, a, scale=b, step_size=eta)
        assert np.allclose(unrolled_egd(p0, seq, scales, step_size=eta),
                           p, rtol=0, atol=1e-10)
    return "1000 steps at 1e-12, 300 unrolled sequences at 1e-10"


def _random_factory(rng):
    m = int(rng.integers(2, 4))
    config = linear_config(
        2.0 + rng.random(m),
        0.0005 + 0.002 * rng.random((m, m)),
        observation_noise=float(rng.uniform(0.0, 0.01)),
        gradient_noise=float(rng.uniform(0.0, 0.01)),
        seed=int(rng.integers(1 << 16)))
    return TrainerFactory(config, base_seed=int(rng.integers(1 << 16)))


@checked(2, "online methods reduce to the generic solver", 10.0)
def test_criterion_02_methods_reduce_to_generic_solver():
    rng = np.random.default_rng(5)
    ledger = lambda: BudgetLedger(final_steps=240, allowance=10**6)
    entries = 0
    for _ in range(100):
        eta = float(rng.uniform(0.05, 0.5))
        smooth = float(rng.uniform(0.0, 0.3))
        runs = [
            run_skill_it(_random_factory(rng), 240, ledger(),
                         SkillItParams(rounds=3, step_size=eta),
                         skills_steps=60),
            run_doremi(_random_factory(rng), 100, ledger(),
                       DoremiParams(step_size=eta, smoothing=smooth),
                       reference_steps=80, proxy_steps=20),
            run_doge(_random_factory(rng), 100, ledger(),
                     DogeParams(step_size=eta, smoothing=smooth),
                     proxy_steps=20),
        ]
        for result in runs:
            assert result.trace
            for entry in result.trace:
                a, b = extract_parameters(result, entry.round)
                via = egd_step(entry.p_before, a, scale=b, step_size=eta)
                assert np.allclose(via, entry.p_update, rtol=0, atol=1e-12)
                entries += 1
    return f"{entries} traced updates across 300 runs at 1e-12"


@checked(3, "probe-based dynamics recovery", 30.0)
def test_criterion_03_learn_params():
    rng0 = np.random.default_rng(33)
    interval = 16
    details = []
    for m in (2, 3, 7):
        # Column sums are deliberately separated so a rank flip would
        # signal estimation error, not a near-tie in the ground truth.
        a_gt = 0.002 + 0.004 * rng0.random((m, m)) + np.diag(np.full(m, 0.008))
        a_gt *= 1.0 + 0.5 * np.arange(m)
        for sweeps in (1, 4):
            span = m * sweeps * interval
            clean = LinearTrainer(linear_config(np.full(m, 20.0), a_gt))
            got = learn_params(clean, span, sweeps, 0.75,
                               np.random.default_rng(1))
            ref = a_gt * interval
            rel = np.linalg.norm(got - ref) / np.linalg.norm(ref)
            assert rel <= 1e-9, (m, sweeps, rel)
            sims = []
            for seed in range(20):
                noisy = LinearTrainer(linear_config(
                    np.full(m, 20.0), a_gt, observation_noise=1e-3, seed=seed))
                est = learn_params(noisy, span, sweeps, 0.75,
                                   np.random.default_rng(seed))
                sims.append(similarity(est, None, a_gt).value)
            assert np.mean(sims) >= 0.95, (m, sweeps, np.mean(sims))
            details.append(f"m={m},k={sweeps}:sim={np.mean(sims):.3f}")
    return " ".join(details)


@checked(4, "law fitting fidelity", 60.0)
def test_criterion_04_law_fits():
    rng = np.random.default_rng(7)
    m = 3
    a_true = rng.uniform(0.5, 3.0, size=(m, m))
    amp = rng.uniform(1.0, 5.0, size=m)
    asym = rng.uniform(0.1, 1.0, size=m)
    mixtures = rng.dirichlet(np.ones(m), size=40)
    clean = np.array([static_losses(a_true, amp, asym, p) for p in mixtures])

    _, _, _, clean_report = fit_static_law(mixtures, clean)
    assert clean_report.r_squared >= 0.999

    noisy = clean + rng.normal(0.0, 0.01, size=clean.shape)
    _, _, _, noisy_report = fit_static_law(mixtures, noisy)
    assert noisy_report.r_squared >= 0.95

    a_dyn = rng.uniform(0.1, 0.5, size=(m, m))
    triples = []
    for _ in range(12):
        before = rng.uniform(2.0, 4.0, size=m)
        p = rng.dirichlet(np.ones(m))
        triples.append((before, p, before - a_dyn @ p))
    recovered, dyn_report = fit_dynamic_law(triples)
    assert np.allclose(recovered, a_dyn, rtol=0, atol=1e-9)
    assert dyn_report.r_squared >= 0.999
    return (f"static R2 clean={clean_report.r_squared:.4f} "
            f"noisy={noisy_report.r_squared:.4f}, dynamic exact")


@checked(5, "interleaved method beats stratified near the static optimum", 60.0)
def test_criterion_05_aioli_beats_stratified():
    config = linear_config([0.5, 12.0], A_DIAG, loss_floor=0.01, seed=0)
    steps = 5000

    oracle = []
    for p1 in np.linspace(0.0, 1.0, 101):
        trainer = TrainerFactory(config, base_seed=0).final()
        trainer.train(np.array([1.0 - p1, p1]), steps)
        oracle.append(trainer.observe_losses("val").mean())
    optimum = min(oracle)

    aioli_losses, strat_losses = [], []
    for seed in range(5):
        strat = run_stratified(TrainerFactory(config, base_seed=seed).final(),
                               steps).avg_val_loss
        best = min(
            run_aioli(
                TrainerFactory(config, base_seed=seed).final(), steps,
                AioliParams(rounds=20, sweeps=1, probe_smoothing=0.75,
                            learn_fraction=0.02, step_size=eta)).avg_val_loss
            for eta in (0.1, 0.2, 0.3, 0.5))
        assert best < strat, (seed, best, strat)
        assert best <= 1.05 * optimum, (seed, best, optimum)
        aioli_losses.append(best)
        strat_losses.append(strat)
    return (f"optimum={optimum:.4f} aioli={np.mean(aioli_losses):.4f} "
            f"stratified={np.mean(strat_losses):.4f} over 5 seeds")


@checked(6, "greedy schedule search versus exhaustive", 120.0)
def test_criterion_06_greedy_vs_exhaustive():
    trainer = LinearTrainer(linear_config([2.0, 3.0], A_DIAG))
    comp = greedy_vs_exhaustive(trainer, candidate_grid(2), 2, 250)
    assert comp.n_schedules == 81
    assert comp.match
    assert abs(comp.greedy_loss - comp.best_loss) <= 1e-12

    flip_doc = {
        "simulator": {
            "kind": "linear",
            "initial_losses": [3.0, 3.0],
            "dynamics": [
                {"until": 500, "matrix": (FLIP_EARLY / 500.0).tolist()},
                {"matrix": (FLIP_LATE / 500.0).tolist()},
            ],
        },
        "steps": 1000,
        "greedy_rounds": 2,
        "methods": [{"name": "stratified"}],
    }
    report = analyze_greedy(load_config(flip_doc))
    (row,) = report["rows"]
    assert row["best_loss"] <= row["greedy_loss"] + 1e-12
    assert isinstance(row["match"], bool)
    verdict = "matched" if row["match"] else "diverged"
    return (f"time-invariant grid matched over 81 schedules; "
            f"direction-flip schedule {verdict}")


@checked(7, "similarity metric properties and oracle", 5.0)
def test_criterion_07_similarity_metric():
    rng = np.random.default_rng(17)
    for _ in range(50):
        m = int(rng.integers(2, 7))
        a = rng.normal(size=(m, m))
        assert similarity(a, None, a).value == 1.0
        assert similarity(a, None, -a).value == -1.0

    checked_pairs = 0
    for _ in range(10000):
        m = int(rng.integers(2, 7))
        a = rng.normal(size=(m, m))
        ref = rng.normal(size=(m, m))
        scale = None
        if rng.random() < 0.3:
            scale = rng.uniform(0.1, 2.0, size=m)
        score = similarity(a, scale, ref)
        assert -1.0 <= score.value <= 1.0

        weights = np.ones(m) if scale is None else scale
        u = weights @ a
        v = np.ones(m) @ ref
        if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
            continue
        u = u / np.linalg.norm(u)
        v = v / np.linalg.norm(v)
        cosine = float(np.clip(u @ v, -1.0, 1.0))
        rho = float(scipy.stats.spearmanr(u, v).statistic)
        assert abs(score.value - 0.5 * (cosine + rho)) <= 1e-12
        checked_pairs += 1
    return f"{checked_pairs} random pairs matched the brute-force oracle"


@checked(8, "published budget allocation table", 1.0)
def test_criterion_08_budget_table():
    for setting, m, steps, method, runs, per_run in ALLOCATION_ROWS:
        alloc = allocation(setting, method, m, steps)
        assert (alloc.runs, alloc.steps_per_run) == (runs, per_run), (
            setting, m, method)
    for setting, m, steps in [(UNRESTRICTED, 2, 5000), (UNRESTRICTED, 3, 5000),
                              (UNRESTRICTED, 7, 40000), (RESTRICTED, 2, 5000),
                              (RESTRICTED, 3, 5000), (RESTRICTED, 7, 40000)]:
        assert (allocation(setting, "grid_search", m, steps)
                == allocation(setting, "dml", m, steps))
    override = allocation(RESTRICTED, "skill_it", 7, 40000)
    assert (override.runs, override.steps_per_run) == (7, 2814)
    return "24 rows exact, grid search mirrors the static-fit allocation"


@checked(9, "diagonal projection flips the dominant group", 1.0)
def test_criterion_09_diagonal_flip():
    full_sums = np.ones(2) @ FULL_MATRIX
    diag_sums = np.ones(2) @ diagonal_projection(FULL_MATRIX)
    assert int(np.argmax(full_sums)) == 1
    assert int(np.argmax(diag_sums)) == 0
    return (f"full column sums {np.round(full_sums, 3).tolist()} favor group 1, "
            f"diagonal {np.round(diag_sums, 3).tolist()} favor group 0")


@checked(10, "deterministic reports and isolated failures", 30.0)
def test_criterion_10_determinism_and_isolation(tmp_path):
    runner = CliRunner()
    doc = {
        "simulator": {
            "kind": "linear",
            "initial_losses": [2.0, 3.0],
            "dynamics": [{"matrix": A_DIAG.tolist()}],
        },
        "steps": 400,
        "seeds": [0, 1],
        "methods": [{"name": "stratified"},
                    {"name": "aioli", "rounds": 5, "sweeps": 1,
                     "learn_fraction": 0.05}],
    }
    config = tmp_path / "config.json"
    config.write_text(json.dumps(doc))

    outs = []
    for name in ("first.json", "second.json"):
        out = tmp_path / name
        result = runner.invoke(cli.main, ["run", str(config), "--out", str(out)])
        assert result.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert runner.invoke(cli.main, ["run", str(broken)]).exit_code == 1

    failing_doc = dict(doc, budget={"allowance": 0},
                       methods=[{"name": "stratified"},
                                {"name": "grid_search"}])
    failing = tmp_path / "failing.json"
    failing.write_text(json.dumps(failing_doc))
    out = tmp_path / "failing_report.json"
    result = runner.invoke(cli.main, ["run", str(failing), "--out", str(out)])
    assert result.exit_code == 2
    report = json.loads(out.read_text())
    assert report["failures"] == 2
    grid_rows = [r for r in report["rows"] if r["method"] == "grid_search"]
    strat_rows = [r for r in report["rows"] if r["method"] == "stratified"]
    assert all(r["error"].startswith("BudgetError") for r in grid_rows)
    assert all(r["error"] is None for r in strat_rows)

    # The surviving cells equal a run without the failing sibling.
    solo, _ = run_experiment(load_config(dict(doc, methods=[
        {"name": "stratified"}])))
    assert [r["avg_test_loss"] for r in strat_rows] == [
        r["avg_test_loss"] for r in solo["rows"]]
    return "byte-identical reports, exit codes 0/1/2, failures contained"


@checked(11, "estimate accuracy correlates with improvement", 300.0)
def test_criterion_11_accuracy_vs_improvement():
    noises = (0.0, 0.005, 0.01, 0.02, 0.04, 0.08, 0.15, 0.3)
    points = []
    for noise in noises:
        doc = {
            "simulator": {
                "kind": "linear",
                "initial_losses": [2.0, 3.0],
                "dynamics": [{"matrix": A_DIAG.tolist()}],
                "gradient_noise": noise,
            },
            "steps": 1000,
            "seeds": [0, 1, 2],
            "analysis": {"step": 950, "smooth_width": 900},
            "methods": [{"name": "doge", "step_size": 5.0}],
        }
        report = analyze_similarity(load_config(doc))
        rows = [r for r in report["rows"] if "error" not in r]
        assert len(rows) == 3
        points.append((np.mean([r["similarity"] for r in rows]),
                       np.mean([r["improvement_vs_stratified"] for r in rows])))
    assert len(points) == len(noises)
    sims, imps = np.array(points).T
    pearson = float(np.corrcoef(sims, imps)[0, 1])
    assert pearson > 0.3, pearson
    return f"pearson={pearson:.3f} over {len(noises)} noise-controlled configs"
