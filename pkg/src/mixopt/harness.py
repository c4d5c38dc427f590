"""Experiment harness: configs in, deterministic reports out.

A config describes one simulated trainer, a step budget, a list of method
entries, and the seeds to repeat them over.  Each (method, seed) cell runs
with its own budget ledger and deterministically derived trainer seeds;
the stratified baseline always runs on the same final-run seed so
per-seed deltas are matched.  Reports are plain dicts serialized with
sorted keys, so identical configs produce byte-identical output.
"""

from __future__ import annotations

import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import methods as mx
from .analysis import greedy_vs_exhaustive, trace_similarity
from .budget import (
    RESTRICTED,
    UNRESTRICTED,
    BudgetLedger,
    allocation,
    extra_allowance,
)
from .errors import ConfigError, MixoptError
from .simplex import candidate_sweep, candidates_from_table, candidates_to_table
from .trainer import DynamicsSchedule, ScheduleSegment, StaticLawConfig, TrainerConfig

_METHOD_NAMES = ("stratified", "grid_search", "dml", "skill_it", "doremi",
                 "doge", "aioli", "aioli_ood")
_BASE_METHODS = ("grid_search", "dml", "skill_it", "doremi", "doge")

# Published learn-fraction and probe-sweep defaults by group count.
_LEARN_FRACTION_DEFAULTS = {2: 0.128, 3: 0.288, 7: 0.07}
_SWEEPS_DEFAULTS = {7: 2}


@dataclass(frozen=True)
class MethodSpec:
    """One method entry from a config: a label, a name, and its settings."""

    label: str
    name: str
    params: object = None
    base: str | None = None


@dataclass
class ExperimentConfig:
    simulator: object
    num_groups: int
    steps: int
    seeds: list
    budget_setting: str
    custom_allowance: int | None
    methods: list
    candidates_spec: dict
    analysis: dict
    greedy_rounds: int
    sweep_steps: int | None
    log_every: int | None
    raw: dict


def _require(mapping, key, field):
    if key not in mapping:
        raise ConfigError("required key is missing", field=f"{field}.{key}")
    return mapping[key]


def _as_int(value, field, minimum=None):
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"expected an integer, got {value!r}", field=field)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be at least {minimum}, got {value}", field=field)
    return value


def _as_number(value, field, *, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=field)
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be at least {minimum}, got {value}", field=field)
    if maximum is not None and value > maximum:
        raise ConfigError(f"must be at most {maximum}, got {value}", field=field)
    return value


def _build_simulator(doc, field="simulator"):
    if not isinstance(doc, dict):
        raise ConfigError("expected an object", field=field)
    kind = doc.get("kind", "linear")
    if kind == "linear":
        known = {"kind", "initial_losses", "loss_floor", "dynamics",
                 "observation_noise", "gradient_noise", "ood_initial", "seed"}
        _reject_unknown(doc, known, field)
        dynamics = _require(doc, "dynamics", field)
        if not isinstance(dynamics, list) or not dynamics:
            raise ConfigError("expected a non-empty list of segments",
                              field=f"{field}.dynamics")
        segments = []
        for k, seg in enumerate(dynamics):
            seg_field = f"{field}.dynamics[{k}]"
            if not isinstance(seg, dict):
                raise ConfigError("expected an object", field=seg_field)
            _reject_unknown(seg, {"until", "matrix", "ood_row"}, seg_field)
            matrix = np.asarray(_require(seg, "matrix", seg_field), dtype=float)
            until = seg.get("until")
            if until is not None:
                until = _as_int(until, f"{seg_field}.until", minimum=1)
            ood_row = seg.get("ood_row")
            segments.append(ScheduleSegment(
                until, matrix,
                None if ood_row is None else np.asarray(ood_row, dtype=float)))
        try:
            schedule = DynamicsSchedule(segments)
        except ConfigError as err:
            raise ConfigError(str(err), field=f"{field}.dynamics") from err
        config = TrainerConfig(
            initial_losses=_coerce_losses(_require(doc, "initial_losses", field)),
            schedule=schedule,
            loss_floor=_as_number(doc.get("loss_floor", 0.0), f"{field}.loss_floor"),
            observation_noise=_as_number(doc.get("observation_noise", 0.0),
                                         f"{field}.observation_noise", minimum=0.0),
            gradient_noise=_as_number(doc.get("gradient_noise", 0.0),
                                      f"{field}.gradient_noise", minimum=0.0),
            seed=_as_int(doc.get("seed", 0), f"{field}.seed"),
            ood_initial=doc.get("ood_initial"),
        )
        return config, schedule.num_groups
    if kind == "static_law":
        known = {"kind", "interaction", "amplitude", "asymptote",
                 "reference_steps", "initial_losses", "observation_noise", "seed"}
        _reject_unknown(doc, known, field)
        interaction = np.asarray(_require(doc, "interaction", field), dtype=float)
        config = StaticLawConfig(
            interaction=interaction,
            amplitude=np.asarray(_require(doc, "amplitude", field), dtype=float),
            asymptote=np.asarray(_require(doc, "asymptote", field), dtype=float),
            reference_steps=_as_int(_require(doc, "reference_steps", field),
                                    f"{field}.reference_steps", minimum=1),
            initial_losses=_coerce_losses(_require(doc, "initial_losses", field)),
            observation_noise=_as_number(doc.get("observation_noise", 0.0),
                                         f"{field}.observation_noise", minimum=0.0),
            seed=_as_int(doc.get("seed", 0), f"{field}.seed"),
        )
        return config, interaction.shape[0] if interaction.ndim == 2 else 0
    raise ConfigError(f"unknown simulator kind {kind!r}", field=f"{field}.kind")


def _coerce_losses(value):
    if isinstance(value, dict):
        return {k: np.asarray(v, dtype=float) for k, v in value.items()}
    return np.asarray(value, dtype=float)


def _reject_unknown(doc, known, field):
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", field=field)


_PARAM_FIELDS = {
    "stratified": set(),
    "grid_search": set(),
    "dml": {"huber_delta", "restarts", "max_iter", "eval_points", "eval_alpha"},
    "skill_it": {"rounds", "step_size", "window"},
    "doremi": {"step_size", "smoothing"},
    "doge": {"step_size", "smoothing"},
    "aioli": {"rounds", "sweeps", "probe_smoothing", "step_size",
              "learn_fraction", "ema", "base"},
    "aioli_ood": {"rounds", "sweeps", "probe_smoothing", "step_size",
                  "learn_fraction", "ema"},
}

_PARAM_TYPES = {
    "dml": mx.DmlParams,
    "skill_it": mx.SkillItParams,
    "doremi": mx.DoremiParams,
    "doge": mx.DogeParams,
}


def _build_method(entry, idx, num_groups):
    field = f"methods[{idx}]"
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", field=field)
    name = _require(entry, "name", field)
    if name not in _METHOD_NAMES:
        raise ConfigError(f"unknown method {name!r}", field=f"{field}.name")
    label = entry.get("label")
    body = {k: v for k, v in entry.items() if k not in ("name", "label")}
    _reject_unknown(body, _PARAM_FIELDS[name], field)
    base = None
    if name in ("aioli", "aioli_ood"):
        base = body.pop("base", None)
        if base is not None and base not in _BASE_METHODS:
            raise ConfigError(f"unknown base method {base!r}", field=f"{field}.base")
        defaults = {
            "learn_fraction": _LEARN_FRACTION_DEFAULTS.get(num_groups, 0.128),
            "sweeps": _SWEEPS_DEFAULTS.get(num_groups, 4),
        }
        defaults.update(body)
        try:
            params = mx.AioliParams(**defaults)
        except (TypeError, ConfigError) as err:
            raise ConfigError(str(err), field=field) from err
    elif name in _PARAM_TYPES:
        try:
            params = _PARAM_TYPES[name](**body)
        except (TypeError, ConfigError) as err:
            raise ConfigError(str(err), field=field) from err
    else:
        params = None
    if label is None:
        label = name if base is None else f"{name}+{base}"
    return MethodSpec(label=label, name=name, params=params, base=base)


def load_config(source) -> ExperimentConfig:
    """Parse and validate an experiment config from a path, text, or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if hasattr(source, "read"):
            text = source.read()
        elif "\n" not in str(source) and os.path.exists(str(source)):
            try:
                with open(source) as fh:
                    text = fh.read()
            except OSError as err:
                raise ConfigError(f"cannot read config: {err}") from err
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    known = {"simulator", "steps", "seeds", "budget", "methods", "candidates",
             "analysis", "greedy_rounds", "sweep_steps", "log_every"}
    _reject_unknown(doc, known, "config")
    simulator, num_groups = _build_simulator(_require(doc, "simulator", "config"))
    steps = _as_int(_require(doc, "steps", "config"), "config.steps", minimum=1)
    seeds = doc.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("expected a non-empty list", field="config.seeds")
    seeds = [_as_int(s, f"config.seeds[{i}]") for i, s in enumerate(seeds)]
    budget = doc.get("budget", UNRESTRICTED)
    custom_allowance = None
    if isinstance(budget, dict):
        _reject_unknown(budget, {"allowance"}, "config.budget")
        custom_allowance = _as_int(_require(budget, "allowance", "config.budget"),
                                   "config.budget.allowance", minimum=0)
        budget_setting = "custom"
    elif budget in (UNRESTRICTED, RESTRICTED):
        budget_setting = budget
    else:
        raise ConfigError(f"unknown budget setting {budget!r}", field="config.budget")
    entries = _require(doc, "methods", "config")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("expected a non-empty list", field="config.methods")
    specs = [_build_method(e, i, num_groups) for i, e in enumerate(entries)]
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise ConfigError("method labels must be unique; add 'label' keys",
                          field="config.methods")
    needs_ood = any(s.name == "aioli_ood" for s in specs)
    if needs_ood and (not isinstance(simulator, TrainerConfig)
                      or simulator.ood_initial is None):
        raise ConfigError("aioli_ood requires simulator.ood_initial and ood rows",
                          field="config.methods")
    candidates_spec = doc.get("candidates", {"mode": "grid"} if num_groups == 2
                              else {"mode": "dirichlet", "count": 10})
    analysis = doc.get("analysis", {})
    if not isinstance(analysis, dict):
        raise ConfigError("expected an object", field="config.analysis")
    _reject_unknown(analysis, {"step", "horizon", "smooth_width"}, "config.analysis")
    for spec in specs:
        if spec.name in ("aioli", "aioli_ood"):
            intervals = num_groups * spec.params.sweeps
            if steps < spec.params.rounds * intervals:
                raise ConfigError(
                    f"{steps} steps cannot cover {spec.params.rounds} rounds of "
                    f"{intervals} probe intervals", field="config.steps")
    return ExperimentConfig(
        simulator=simulator,
        num_groups=num_groups,
        steps=steps,
        seeds=seeds,
        budget_setting=budget_setting,
        custom_allowance=custom_allowance,
        methods=specs,
        candidates_spec=candidates_spec,
        analysis={"step": analysis.get("step", steps // 2),
                  "horizon": analysis.get("horizon", 100),
                  "smooth_width": analysis.get("smooth_width", 100)},
        greedy_rounds=_as_int(doc.get("greedy_rounds", 2), "config.greedy_rounds",
                              minimum=1),
        sweep_steps=(None if doc.get("sweep_steps") is None
                     else _as_int(doc["sweep_steps"], "config.sweep_steps", minimum=1)),
        log_every=(None if doc.get("log_every") is None
                   else _as_int(doc["log_every"], "config.log_every", minimum=1)),
        raw=doc,
    )


def build_candidates(config: ExperimentConfig) -> np.ndarray:
    spec = dict(config.candidates_spec)
    mode = spec.pop("mode", "grid")
    if mode == "grid":
        _reject_unknown(spec, set(), "config.candidates")
        return candidate_sweep(config.num_groups, "grid")
    if mode == "dirichlet":
        _reject_unknown(spec, {"count", "alpha", "oversample", "seed"},
                        "config.candidates")
        return candidate_sweep(
            config.num_groups, "dirichlet",
            count=spec.get("count", 10),
            alpha=spec.get("alpha", 1.0),
            oversample=spec.get("oversample", 4),
            rng=spec.get("seed", 0),
        )
    if mode == "table":
        _reject_unknown(spec, {"path"}, "config.candidates")
        try:
            with open(_require(spec, "path", "config.candidates")) as fh:
                return candidates_from_table(fh.read())
        except OSError as err:
            raise ConfigError(f"cannot read candidate table: {err}",
                              field="config.candidates.path") from err
    raise ConfigError(f"unknown candidates mode {mode!r}",
                      field="config.candidates.mode")


def _cell_ledger(config: ExperimentConfig) -> BudgetLedger:
    if config.budget_setting == "custom":
        return BudgetLedger(final_steps=config.steps,
                            allowance=config.custom_allowance)
    return BudgetLedger(
        final_steps=config.steps,
        allowance=extra_allowance(config.budget_setting, config.steps))


def _learning_steps(config: ExperimentConfig, method: str) -> int:
    """Per-run step count for a method's budgeted learning phase."""
    if config.budget_setting == RESTRICTED:
        return allocation(RESTRICTED, method, config.num_groups,
                          config.steps).steps_per_run
    return config.steps


def run_cell(spec: MethodSpec, config: ExperimentConfig, factory,
             candidates) -> mx.MethodResult:
    """Run one method entry against one seeded trainer factory."""
    steps = config.steps
    log_every = config.log_every
    ledger = _cell_ledger(config)
    name = spec.name
    if name == "stratified":
        result = mx.run_stratified(factory.final(), steps, log_every=log_every)
    elif name == "grid_search":
        result = mx.run_grid_search(
            factory, steps, candidates, ledger,
            sweep_steps=_learning_steps(config, name), log_every=log_every)
    elif name == "dml":
        result = mx.run_dml(
            factory, steps, candidates, ledger, spec.params,
            sweep_steps=_learning_steps(config, name),
            eval_seed=factory.base_seed, log_every=log_every)
    elif name == "skill_it":
        result = mx.run_skill_it(
            factory, steps, ledger, spec.params,
            skills_steps=_learning_steps(config, name),
            static_retrain=config.budget_setting == RESTRICTED,
            log_every=log_every)
    elif name == "doremi":
        alloc = _learning_steps(config, name)
        result = mx.run_doremi(factory, steps, ledger, spec.params,
                               reference_steps=alloc, proxy_steps=alloc,
                               log_every=log_every)
    elif name == "doge":
        result = mx.run_doge(factory, steps, ledger, spec.params,
                             proxy_steps=_learning_steps(config, name),
                             log_every=log_every)
    elif name in ("aioli", "aioli_ood"):
        params = spec.params
        if spec.base is not None:
            run_steps = _learning_steps(config, spec.base)
            base_params = None
            if spec.base in _PARAM_TYPES:
                base_params = _PARAM_TYPES[spec.base]()
            warm_p, _ = mx.learn_proportions(
                spec.base, factory, ledger, run_steps=run_steps,
                candidates=candidates, params=base_params,
                eval_seed=factory.base_seed)
            params = replace(params, warm_start=warm_p, warm_start_steps=run_steps)
        runner = mx.run_aioli if name == "aioli" else mx.run_aioli_ood
        result = runner(factory.final(), steps, params, log_every=log_every)
        result.ledger = ledger.to_dict()
    else:
        raise ConfigError(f"unknown method {name!r}")
    result.extra["label"] = spec.label
    return result


def _row(spec, seed, result, baseline):
    row = {
        "method": spec.label,
        "seed": seed,
        "error": None,
        "avg_val_loss": result.avg_val_loss,
        "avg_test_loss": result.avg_test_loss,
        "final_test_losses": [float(v) for v in result.final_test_losses],
        "delta_vs_stratified": (None if baseline is None
                                else result.avg_test_loss - baseline.avg_test_loss),
        "extra_steps": result.ledger.get("total_consumed", 0),
        "ledger": result.ledger,
        "proportions": (None if result.proportions is None
                        else [float(v) for v in result.proportions]),
    }
    return row


def _error_row(spec, seed, err):
    return {
        "method": spec.label,
        "seed": seed,
        "error": f"{type(err).__name__}: {err}",
        "avg_val_loss": None,
        "avg_test_loss": None,
        "final_test_losses": None,
        "delta_vs_stratified": None,
        "extra_steps": None,
        "ledger": None,
        "proportions": None,
    }


def run_experiment(config: ExperimentConfig, *, seed_override=None,
                   parallelism: int = 1, keep_results: bool = False):
    """Run every (method, seed) cell and assemble a deterministic report.

    Cell failures are contained: the row records the error and the other
    cells still run.  Returns (report dict, results dict) where results
    maps (label, seed) to MethodResult when ``keep_results`` is set.
    """
    seeds = [seed_override] if seed_override is not None else config.seeds
    candidates = build_candidates(config)
    baselines = {}
    for seed in seeds:
        factory = mx.TrainerFactory(config.simulator, base_seed=seed)
        baselines[seed] = mx.run_stratified(factory.final(), config.steps,
                                            log_every=config.log_every)

    def one_cell(spec, seed):
        if spec.name == "stratified":
            return baselines[seed]
        factory = mx.TrainerFactory(config.simulator, base_seed=seed)
        return run_cell(spec, config, factory, candidates)

    cells = [(spec, seed) for spec in config.methods for seed in seeds]
    outcomes = {}
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {(spec.label, seed): pool.submit(one_cell, spec, seed)
                       for spec, seed in cells}
        for (label, seed), fut in futures.items():
            try:
                outcomes[(label, seed)] = fut.result()
            except (MixoptError, ValueError) as err:
                outcomes[(label, seed)] = err
    else:
        for spec, seed in cells:
            try:
                outcomes[(spec.label, seed)] = one_cell(spec, seed)
            except (MixoptError, ValueError) as err:
                outcomes[(spec.label, seed)] = err

    rows, failures = [], 0
    results = {}
    for spec, seed in cells:
        outcome = outcomes[(spec.label, seed)]
        if isinstance(outcome, Exception):
            rows.append(_error_row(spec, seed, outcome))
            failures += 1
        else:
            baseline = None if spec.name == "stratified" else baselines[seed]
            rows.append(_row(spec, seed, outcome, baseline))
            results[(spec.label, seed)] = outcome

    aggregates = []
    for spec in config.methods:
        values = [r["avg_test_loss"] for r in rows
                  if r["method"] == spec.label and r["error"] is None]
        deltas = [r["delta_vs_stratified"] for r in rows
                  if r["method"] == spec.label and r["error"] is None
                  and r["delta_vs_stratified"] is not None]
        aggregates.append({
            "method": spec.label,
            "seeds_completed": len(values),
            "mean_avg_test_loss": float(np.mean(values)) if values else None,
            "std_avg_test_loss": float(np.std(values)) if values else None,
            "mean_delta_vs_stratified": float(np.mean(deltas)) if deltas else None,
        })

    report = {
        "kind": "experiment",
        "steps": config.steps,
        "budget": (config.budget_setting if config.custom_allowance is None
                   else {"allowance": config.custom_allowance}),
        "seeds": seeds,
        "num_groups": config.num_groups,
        "rows": rows,
        "aggregates": aggregates,
        "failures": failures,
    }
    return (report, results) if keep_results else (report, None)


def analyze_similarity(config: ExperimentConfig, *, seed_override=None):
    """Similarity-versus-improvement table across the config's online methods.

    For each traced method cell, replays its run to the analysis step,
    estimates the true dynamics there from a candidate sweep, and scores
    the method's smoothed traced parameters against them.  Improvement is
    the stratified baseline's average test loss minus the method's, so
    positive means the method helped.
    """
    seeds = [seed_override] if seed_override is not None else config.seeds
    candidates = build_candidates(config)
    at_step = config.analysis["step"]
    horizon = config.analysis["horizon"]
    smooth_width = config.analysis["smooth_width"]
    rows, failures = [], 0
    for seed in seeds:
        factory = mx.TrainerFactory(config.simulator, base_seed=seed)
        baseline = mx.run_stratified(factory.final(), config.steps)
        for spec in config.methods:
            if spec.name == "stratified":
                continue
            try:
                result = run_cell(spec, config, factory, candidates)
                if not result.trace:
                    continue
                twin = factory.extra(f"analysis:{spec.label}")
                score, info = trace_similarity(
                    result, twin, candidates, at_step=at_step,
                    horizon=horizon, smooth_width=smooth_width)
                rows.append({
                    "method": spec.label,
                    "seed": seed,
                    "similarity": score.value,
                    "cosine": score.cosine,
                    "spearman": score.spearman,
                    "improvement_vs_stratified": (baseline.avg_test_loss
                                                  - result.avg_test_loss),
                    "scale_coefficient": info["scale_coefficient"],
                })
            except (MixoptError, ValueError) as err:
                failures += 1
                rows.append({"method": spec.label, "seed": seed,
                             "error": f"{type(err).__name__}: {err}"})
    clean = [r for r in rows if "error" not in r]
    correlation = None
    if len(clean) >= 2:
        sims = np.asarray([r["similarity"] for r in clean])
        imps = np.asarray([r["improvement_vs_stratified"] for r in clean])
        if np.ptp(sims) > 0 and np.ptp(imps) > 0:
            correlation = float(np.corrcoef(sims, imps)[0, 1])
    return {
        "kind": "similarity",
        "analysis_step": at_step,
        "horizon": horizon,
        "smooth_width": smooth_width,
        "rows": rows,
        "pearson_similarity_improvement": correlation,
        "failures": failures,
    }


def analyze_greedy(config: ExperimentConfig, *, seed_override=None):
    """Greedy-versus-exhaustive schedule comparison on the config's candidates."""
    seeds = [seed_override] if seed_override is not None else config.seeds
    candidates = build_candidates(config)
    rounds = config.greedy_rounds
    round_steps = config.steps // rounds
    if round_steps < 1:
        raise ConfigError("steps are too few for the requested greedy rounds",
                          field="config.greedy_rounds")
    rows, failures = [], 0
    for seed in seeds:
        factory = mx.TrainerFactory(config.simulator, base_seed=seed)
        trainer = factory.final()
        try:
            comp = greedy_vs_exhaustive(trainer, candidates, rounds, round_steps)
            rows.append({
                "seed": seed,
                "greedy_schedule": [[float(v) for v in p]
                                    for p in comp.greedy_schedule],
                "greedy_loss": comp.greedy_loss,
                "best_schedule": [[float(v) for v in p]
                                  for p in comp.best_schedule],
                "best_loss": comp.best_loss,
                "match": comp.match,
                "n_schedules": comp.n_schedules,
            })
        except (MixoptError, ValueError) as err:
            failures += 1
            rows.append({"seed": seed, "error": f"{type(err).__name__}: {err}"})
    return {
        "kind": "greedy",
        "rounds": rounds,
        "round_steps": round_steps,
        "rows": rows,
        "failures": failures,
    }


def run_candidate_sweep(config: ExperimentConfig, *, seed_override=None):
    """Train one shortened run per candidate and emit a static-law loss log."""
    seed = seed_override if seed_override is not None else config.seeds[0]
    candidates = build_candidates(config)
    steps = config.sweep_steps or config.steps
    factory = mx.TrainerFactory(config.simulator, base_seed=seed)
    samples = []
    for idx, cand in enumerate(candidates):
        t = factory.extra(f"sweep:{idx}")
        t.train(cand, steps)
        samples.append({
            "mixture": [float(v) for v in cand],
            "losses": [float(v) for v in t.observe_losses("val")],
        })
    return {
        "kind": "loss_log",
        "law": "static",
        "steps": steps,
        "seed": seed,
        "samples": samples,
        "candidates_table": candidates_to_table(candidates),
    }


_CSV_COLUMNS = {
    "experiment": ("method", "seed", "avg_val_loss", "avg_test_loss",
                   "delta_vs_stratified", "extra_steps", "error"),
    "similarity": ("method", "seed", "similarity", "cosine", "spearman",
                   "improvement_vs_stratified", "error"),
    "greedy": ("seed", "greedy_loss", "best_loss", "match", "error"),
}


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def report_to_csv(report: dict) -> str:
    columns = _CSV_COLUMNS.get(report.get("kind"))
    if columns is None:
        raise ConfigError(f"no CSV layout for report kind {report.get('kind')!r}")
    out = io.StringIO()
    out.write(",".join(columns) + "\n")
    for row in report["rows"]:
        cells = []
        for col in columns:
            value = row.get(col)
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(repr(value))
            else:
                cells.append(str(value))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def emit_report(report: dict, fmt: str = "json", path=None) -> str:
    """Serialize a report and optionally write it to a file; returns the text."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
