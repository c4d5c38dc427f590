"""Data mixing methods run against a simulated trainer.

Every method ends in a final run of S steps; whatever it trains beyond
that (sweeps, reference models, proxy runs, per-group probes) is charged
to a BudgetLedger.  Methods that adapt proportions online record a
parameter trace: the per-round interaction matrix and scale driving each
exponentiated-gradient update, together with the proportions before and
after.  The traced update of every online baseline reproduces exactly
under the generic egd_step, which is what makes their parameters
comparable in one frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from zlib import crc32

import numpy as np

from .budget import BudgetLedger
from .egd import egd_step, ema_interaction
from .errors import ConfigError, DimensionError, SingularDesignError, TraceError
from .laws import LogLinearStaticLaw
from .simplex import interleave_order, smoothed_onehot, uniform, validate_proportions
from .trainer import (
    DynamicsSchedule,
    LinearTrainer,
    StaticLawConfig,
    StaticLawTrainer,
    TrainerConfig,
)


def multiplicative_update(proportions, gains, step_size: float) -> np.ndarray:
    """Literal multiplicative-weights update p_j * exp(step_size * gains_j).

    This is the form the online methods state their updates in; egd_step
    computes the same map in log space.
    """
    p = validate_proportions(proportions)
    g = np.asarray(gains, dtype=float)
    if g.shape != p.shape:
        raise DimensionError(f"gains shape {g.shape} does not match {p.shape}")
    w = p * np.exp(step_size * g)
    return w / w.sum()


@dataclass(frozen=True)
class SkillItParams:
    """Skills-graph method settings: final-run rounds, step size, window."""

    rounds: int = 10
    step_size: float = 0.2
    window: int = 3

    def __post_init__(self):
        if self.rounds < 1 or self.window < 1:
            raise ConfigError("rounds and window must be at least 1")
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")


@dataclass(frozen=True)
class DoremiParams:
    """Reference-excess method settings: step size and uniform smoothing."""

    step_size: float = 0.01
    smoothing: float = 1e-3

    def __post_init__(self):
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ConfigError("smoothing must lie in [0, 1]")


@dataclass(frozen=True)
class DogeParams:
    """Gradient-alignment method settings."""

    step_size: float = 0.01
    smoothing: float = 0.0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ConfigError("smoothing must lie in [0, 1]")


@dataclass(frozen=True)
class DmlParams:
    """Static-law sweep method settings (fit options and argmin search)."""

    huber_delta: float = 1e-3
    restarts: int = 32
    max_iter: int = 500
    eval_points: int = 10000
    eval_alpha: float = 1.0

    def __post_init__(self):
        if self.eval_points < 1:
            raise ConfigError("eval_points must be positive")
        if self.eval_alpha <= 0:
            raise ConfigError("eval_alpha must be positive")


@dataclass(frozen=True)
class AioliParams:
    """Interleaved online method settings.

    ``learn_fraction`` is the share of each round spent probing smoothed
    one-hot mixtures; ``sweeps`` is how many intervals each group gets per
    round; ``probe_smoothing`` mixes the probes toward uniform; ``ema``
    (optional) retains that much of the previous normalized estimate.  A
    warm start trains ``warm_start_steps`` on fixed ``warm_start``
    proportions before the online rounds begin.
    """

    rounds: int = 20
    sweeps: int = 4
    probe_smoothing: float = 0.75
    step_size: float = 0.2
    learn_fraction: float = 0.128
    ema: float | None = None
    warm_start_steps: int = 0
    warm_start: object = None

    def __post_init__(self):
        if self.rounds < 1 or self.sweeps < 1:
            raise ConfigError("rounds and sweeps must be at least 1")
        if not 0.0 <= self.probe_smoothing <= 1.0:
            raise ConfigError("probe_smoothing must lie in [0, 1]")
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if not 0.0 < self.learn_fraction < 1.0:
            raise ConfigError("learn_fraction must lie strictly between 0 and 1")
        if self.ema is not None and not 0.0 <= self.ema < 1.0:
            raise ConfigError("ema must lie in [0, 1)")
        if self.warm_start_steps < 0:
            raise ConfigError("warm_start_steps must be non-negative")
        if self.warm_start_steps > 0 and self.warm_start is None:
            raise ConfigError("warm_start proportions required when warm_start_steps > 0")


@dataclass(frozen=True)
class TraceEntry:
    """One recorded proportion update of an online method."""

    round: int
    step: int
    interaction: np.ndarray
    scale: np.ndarray
    p_before: np.ndarray
    p_update: np.ndarray
    p_used: np.ndarray


@dataclass
class MethodResult:
    """Outcome of one method cell: final losses, trace, and accounting."""

    method: str
    final_val_losses: np.ndarray
    final_test_losses: np.ndarray
    proportions: np.ndarray | None = None
    schedule: np.ndarray | None = None
    trace: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)
    traced_segments: list = field(default_factory=list)
    final_segments: list = field(default_factory=list)
    ledger: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def avg_val_loss(self) -> float:
        return float(self.final_val_losses.mean())

    @property
    def avg_test_loss(self) -> float:
        return float(self.final_test_losses.mean())


def extract_parameters(result: MethodResult, round_index: int):
    """The (interaction, scale) pair a method's round-``round_index`` update used."""
    for entry in result.trace:
        if entry.round == round_index:
            return entry.interaction.copy(), entry.scale.copy()
    raise TraceError(f"round {round_index} is not in the trace of {result.method}")


class TrainerFactory:
    """Builds deterministically seeded trainers for one experiment cell.

    The final run's trainer always derives from stream 0 of the base seed,
    so every method in a cell (and the stratified baseline) shares it.
    Extra runs get independent streams keyed by a purpose tag.
    """

    def __init__(self, config, base_seed=None):
        self.config = config
        if base_seed is None:
            base_seed = config.seed
        self.base_seed = int(base_seed)
        if isinstance(config, TrainerConfig):
            schedule = config.schedule
            if not isinstance(schedule, DynamicsSchedule):
                schedule = DynamicsSchedule(schedule)
            self.num_groups = schedule.num_groups
            self._cls = LinearTrainer
        elif isinstance(config, StaticLawConfig):
            self.num_groups = np.asarray(config.interaction).shape[0]
            self._cls = StaticLawTrainer
        else:
            raise ConfigError(f"unsupported trainer config type {type(config).__name__}")

    def _build(self, spawn_key):
        rng = np.random.default_rng(np.random.SeedSequence([self.base_seed, *spawn_key]))
        return self._cls(self.config, rng=rng)

    def final(self):
        """Trainer for a final run; identical across methods in the cell."""
        return self._build((0,))

    def extra(self, tag: str):
        """Trainer for an extra-budget run, seeded by the purpose tag."""
        return self._build((1, crc32(tag.encode())))


def _record(trajectory, trainer):
    trajectory.append((trainer.step, trainer.true_losses("val"),
                       trainer.true_losses("test")))


def _train_logged(trainer, p, steps, trajectory, log_every, segments):
    """Train in chunks so the trajectory samples at most every log_every steps."""
    if steps <= 0:
        return
    segments.append((np.asarray(p, dtype=float).copy(), int(steps)))
    chunk = steps if not log_every else log_every
    done = 0
    while done < steps:
        take = min(chunk, steps - done)
        trainer.train(p, take)
        done += take
        _record(trajectory, trainer)


def _finish(method, trainer, ledger=None, **kwargs) -> MethodResult:
    return MethodResult(
        method=method,
        final_val_losses=trainer.true_losses("val"),
        final_test_losses=trainer.true_losses("test"),
        ledger=ledger.to_dict() if isinstance(ledger, BudgetLedger) else (ledger or {}),
        **kwargs,
    )


def run_stratified(trainer, steps: int, *, log_every=None) -> MethodResult:
    """Train the full run on uniform proportions.  Consumes no extra budget."""
    p = uniform(trainer.num_groups)
    trajectory, segments = [], []
    _record(trajectory, trainer)
    _train_logged(trainer, p, steps, trajectory, log_every, segments)
    return _finish("stratified", trainer, proportions=p, trajectory=trajectory,
                   final_segments=segments)


def _sweep_runs(factory, candidates, ledger, sweep_steps):
    """One shortened run per candidate; returns observed final val losses."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    ledger.check(len(candidates) * sweep_steps)
    observed = []
    for idx, cand in enumerate(candidates):
        cand = validate_proportions(cand)
        t = factory.extra(f"sweep:{idx}")
        ledger.charge("sweep", sweep_steps)
        t.train(cand, sweep_steps)
        observed.append(t.observe_losses("val"))
    return candidates, np.asarray(observed)


def run_grid_search(factory, steps: int, candidates, ledger, *,
                    sweep_steps=None, log_every=None) -> MethodResult:
    """Sweep the candidates, pick the best observed mixture, retrain fully."""
    sweep_steps = steps if sweep_steps is None else sweep_steps
    candidates, observed = _sweep_runs(factory, candidates, ledger, sweep_steps)
    best = int(np.argmin(observed.mean(axis=1)))
    winner = candidates[best]
    trainer = factory.final()
    trajectory, segments = [], []
    _record(trajectory, trainer)
    _train_logged(trainer, winner, steps, trajectory, log_every, segments)
    return _finish("grid_search", trainer, ledger, proportions=winner,
                   trajectory=trajectory, final_segments=segments,
                   extra={"candidates": candidates, "sweep_losses": observed,
                          "selected": best, "sweep_steps": sweep_steps})


def _dml_learn(factory, candidates, ledger, sweep_steps, params, eval_seed):
    candidates, observed = _sweep_runs(factory, candidates, ledger, sweep_steps)
    model = LogLinearStaticLaw(huber_delta=params.huber_delta,
                               restarts=params.restarts,
                               max_iter=params.max_iter,
                               random_state=eval_seed)
    model.fit(candidates, observed)
    rng = np.random.default_rng(np.random.SeedSequence([eval_seed, 0xD31]))
    m = candidates.shape[1]
    pool = rng.dirichlet(np.full(m, params.eval_alpha), size=params.eval_points)
    pool = np.vstack([pool, candidates])
    predicted = model.predict(pool).mean(axis=1)
    best = int(np.argmin(predicted))
    info = {
        "candidates": candidates,
        "sweep_losses": observed,
        "sweep_steps": sweep_steps,
        "interaction": model.interaction_,
        "amplitude": model.amplitude_,
        "asymptote": model.asymptote_,
        "fit_report": model.report_.to_dict(),
        "predicted_best_loss": float(predicted[best]),
    }
    return pool[best], info


def run_dml(factory, steps: int, candidates, ledger, params: DmlParams = DmlParams(),
            *, sweep_steps=None, eval_seed: int = 0, log_every=None) -> MethodResult:
    """Fit a static mixing law to sweep endpoints and retrain on its argmin.

    The argmin is searched over a Dirichlet sample of the simplex plus the
    sweep candidates themselves, scored by the fitted law's mean predicted
    loss across groups.
    """
    sweep_steps = steps if sweep_steps is None else sweep_steps
    winner, info = _dml_learn(factory, candidates, ledger, sweep_steps, params, eval_seed)
    trainer = factory.final()
    trajectory, segments = [], []
    _record(trajectory, trainer)
    _train_logged(trainer, winner, steps, trajectory, log_every, segments)
    return _finish("dml", trainer, ledger, proportions=winner,
                   trajectory=trajectory, final_segments=segments, extra=info)


def _skills_graph(factory, ledger, skills_steps):
    """Relative per-group loss drops of one-hot probe runs.

    Entry (i, j) is the fractional drop of group i's validation loss over a
    run trained purely on group j; positive means training on j helps i.
    """
    m = factory.num_groups
    ledger.check(m * skills_steps)
    graph = np.empty((m, m))
    for j in range(m):
        t = factory.extra(f"skills:{j}")
        start = t.observe_losses("val")
        ledger.charge("skills-graph", skills_steps)
        t.train(smoothed_onehot(j, m, 0.0), skills_steps)
        end = t.observe_losses("val")
        graph[:, j] = (start - end) / start
    return graph


def skill_it_gains(skills_graph, val_losses) -> np.ndarray:
    """Per-group exponents of the skills-graph update: losses through the graph."""
    return np.asarray(val_losses, dtype=float) @ np.asarray(skills_graph, dtype=float)


def run_skill_it(factory, steps: int, ledger, params: SkillItParams = SkillItParams(),
                 *, skills_steps=None, static_retrain: bool = False,
                 log_every=None) -> MethodResult:
    """Skills-graph method: probe pairwise transfer, then reweight online.

    The final run is dynamic: each of ``params.rounds`` rounds scales the
    skills graph by current validation losses, takes a multiplicative
    update, and trains on the moving average of the last ``window``
    computed proportion vectors.  With ``static_retrain`` the full run
    instead uses the first update computed from initial losses, which is
    how a shortened-budget run redeems its learning.
    """
    m = factory.num_groups
    skills_steps = steps if skills_steps is None else skills_steps
    graph = _skills_graph(factory, ledger, skills_steps)
    trainer = factory.final()
    trajectory, segments, trace = [], [], []
    _record(trajectory, trainer)
    if static_retrain:
        losses = trainer.observe_losses("val")
        p0 = uniform(m)
        updated = multiplicative_update(p0, skill_it_gains(graph, losses),
                                        params.step_size)
        trace.append(TraceEntry(round=1, step=trainer.step,
                                interaction=losses[:, None] * graph,
                                scale=np.ones(m), p_before=p0,
                                p_update=updated, p_used=updated))
        _train_logged(trainer, updated, steps, trajectory, log_every, segments)
        return _finish("skill_it", trainer, ledger, proportions=updated,
                       trace=trace, trajectory=trajectory,
                       traced_segments=segments, final_segments=segments,
                       extra={"skills_graph": graph, "skills_steps": skills_steps,
                              "static_retrain": True})
    round_steps, remainder = divmod(steps, params.rounds)
    if round_steps < 1:
        raise ConfigError(f"{steps} steps cannot cover {params.rounds} rounds")
    p = uniform(m)
    history = []
    used = []
    for r in range(1, params.rounds + 1):
        losses = trainer.observe_losses("val")
        updated = multiplicative_update(p, skill_it_gains(graph, losses),
                                        params.step_size)
        history.append(updated)
        p_used = np.mean(history[-params.window:], axis=0)
        trace.append(TraceEntry(round=r, step=trainer.step,
                                interaction=losses[:, None] * graph,
                                scale=np.ones(m), p_before=p,
                                p_update=updated, p_used=p_used))
        span = round_steps + (remainder if r == params.rounds else 0)
        _train_logged(trainer, p_used, span, trajectory, log_every, segments)
        used.append(p_used)
        p = updated
    return _finish("skill_it", trainer, ledger, schedule=np.asarray(used),
                   trace=trace, trajectory=trajectory, traced_segments=segments,
                   final_segments=segments,
                   extra={"skills_graph": graph, "skills_steps": skills_steps})


def _proxy_loop(trainer, proxy_steps, step_size, smoothing, gains_of):
    """Shared per-step update loop for the proxy-run methods.

    gains_of(trainer) must return (gains, interaction, scale) for the
    current state.  Returns (average used proportions, trace, segments).
    """
    m = trainer.num_groups
    base = uniform(m)
    p = base.copy()
    total = np.zeros(m)
    trace, segments = [], []
    for tau in range(1, proxy_steps + 1):
        gains, interaction, scale = gains_of(trainer)
        updated = multiplicative_update(p, gains, step_size)
        p_used = (1.0 - smoothing) * updated + smoothing * base
        trace.append(TraceEntry(round=tau, step=trainer.step,
                                interaction=interaction, scale=scale,
                                p_before=p, p_update=updated, p_used=p_used))
        segments.append((p_used.copy(), 1))
        trainer.train(p_used, 1)
        total += p_used
        p = p_used
    return total / proxy_steps, trace, segments


def run_doremi(factory, steps: int, ledger, params: DoremiParams = DoremiParams(),
               *, reference_steps=None, proxy_steps=None, log_every=None) -> MethodResult:
    """Reference-excess method: upweight groups lagging a reference model.

    A reference run trained on uniform proportions fixes per-group target
    losses; a proxy run then reweights toward groups whose training loss
    exceeds the reference, clamped at zero.  The time-averaged proportions
    of the proxy run feed the final run.
    """
    m = factory.num_groups
    reference_steps = steps if reference_steps is None else reference_steps
    proxy_steps = steps if proxy_steps is None else proxy_steps
    ledger.check(reference_steps + proxy_steps)
    reference = factory.extra("reference")
    ledger.charge("reference", reference_steps)
    reference.train(uniform(m), reference_steps)
    ref_losses = reference.observe_losses("train")
    proxy = factory.extra("proxy")
    ledger.charge("proxy", proxy_steps)

    def gains_of(t):
        excess = np.maximum(t.observe_losses("train") - ref_losses, 0.0)
        return excess, np.diag(excess), np.ones(m)

    averaged, trace, segments = _proxy_loop(
        proxy, proxy_steps, params.step_size, params.smoothing, gains_of)
    trainer = factory.final()
    trajectory, final_segments = [], []
    _record(trajectory, trainer)
    _train_logged(trainer, averaged, steps, trajectory, log_every, final_segments)
    return _finish("doremi", trainer, ledger, proportions=averaged,
                   trace=trace, trajectory=trajectory,
                   traced_segments=segments, final_segments=final_segments,
                   extra={"reference_losses": ref_losses,
                          "reference_steps": reference_steps,
                          "proxy_steps": proxy_steps})


def run_doge(factory, steps: int, ledger, params: DogeParams = DogeParams(),
             *, proxy_steps=None, log_every=None) -> MethodResult:
    """Gradient-alignment method: upweight groups whose updates transfer.

    A proxy run queries the alignment oracle each step and reweights by the
    exponentiated column sums.  The time-averaged proportions feed the
    final run.
    """
    m = factory.num_groups
    proxy_steps = steps if proxy_steps is None else proxy_steps
    ledger.check(proxy_steps)
    proxy = factory.extra("proxy")
    ledger.charge("proxy", proxy_steps)

    def gains_of(t):
        alignment = t.gradient_alignment()
        return alignment.sum(axis=0), alignment, np.ones(m)

    averaged, trace, segments = _proxy_loop(
        proxy, proxy_steps, params.step_size, params.smoothing, gains_of)
    trainer = factory.final()
    trajectory, final_segments = [], []
    _record(trajectory, trainer)
    _train_logged(trainer, averaged, steps, trajectory, log_every, final_segments)
    return _finish("doge", trainer, ledger, proportions=averaged,
                   trace=trace, trajectory=trajectory,
                   traced_segments=segments, final_segments=final_segments,
                   extra={"proxy_steps": proxy_steps})


def _probe_mixtures(num_groups, smoothing):
    probes = np.asarray([smoothed_onehot(i, num_groups, smoothing)
                         for i in range(num_groups)])
    if np.linalg.matrix_rank(probes) < num_groups:
        raise SingularDesignError(
            f"probe smoothing {smoothing} makes the sweep mixtures collinear")
    return probes


def _interleaved_drops(trainer, span_steps, sweeps, smoothing, rng, segment_log,
                       observe):
    """Shared interleaved probe loop; returns (probes, per-probe mean drops).

    Splits ``span_steps`` into one interval per (group, sweep) pair, visits
    the smoothed one-hot probes in shuffled order, and accumulates the
    observed loss drop attributed to each probe.
    """
    m = trainer.num_groups
    intervals = m * sweeps
    interval, leftover = divmod(span_steps, intervals)
    if leftover or interval < 1:
        raise ConfigError(
            f"cannot split {span_steps} probe steps into {intervals} equal intervals")
    probes = _probe_mixtures(m, smoothing)
    order = interleave_order(m, sweeps, rng)
    drops = None
    previous = observe()
    for j in order:
        if segment_log is not None:
            segment_log.append((probes[j].copy(), interval))
        trainer.train(probes[j], interval)
        current = observe()
        delta = previous - current
        if drops is None:
            drops = np.zeros((np.size(delta), m))
        drops[:, j] += delta
        previous = current
    return probes, drops / sweeps


def learn_params(trainer, span_steps: int, sweeps: int, smoothing: float, rng,
                 *, segment_log=None) -> np.ndarray:
    """Estimate the interaction matrix from interleaved probe training.

    Trains ``span_steps`` on the trainer (advancing it) and solves the
    probe design for the matrix whose row i predicts group i's loss drop
    per interval.  The returned matrix is scaled to the interval length
    span_steps / (num_groups * sweeps).
    """
    probes, drops = _interleaved_drops(
        trainer, span_steps, sweeps, smoothing, rng, segment_log,
        lambda: trainer.observe_losses("val"))
    return np.linalg.solve(probes, drops.T).T


def learn_params_ood(trainer, span_steps: int, sweeps: int, smoothing: float, rng,
                     *, segment_log=None) -> np.ndarray:
    """Out-of-domain variant of learn_params; returns a per-group row vector."""
    probes, drops = _interleaved_drops(
        trainer, span_steps, sweeps, smoothing, rng, segment_log,
        lambda: np.asarray([trainer.observe_ood_loss("val")]))
    return np.linalg.solve(probes, drops[0])


def _run_interleaved(trainer, steps, params, learner, method_name, log_every):
    m = trainer.num_groups
    trajectory, segments, trace = [], [], []
    _record(trajectory, trainer)
    if params.warm_start_steps:
        if params.warm_start_steps >= steps:
            raise ConfigError("warm start cannot consume the whole run")
        _train_logged(trainer, validate_proportions(params.warm_start),
                      params.warm_start_steps, trajectory, log_every, segments)
    budget = steps - params.warm_start_steps
    round_steps, remainder = divmod(budget, params.rounds)
    intervals = m * params.sweeps
    learn_steps = (int(round_steps * params.learn_fraction) // intervals) * intervals
    if learn_steps == 0:
        learn_steps = intervals
    if learn_steps >= round_steps:
        raise ConfigError(
            f"rounds of {round_steps} steps are too short for {intervals} "
            f"probe intervals")
    start = uniform(m)
    p = start.copy()
    used = []
    smoothed = None
    for r in range(1, params.rounds + 1):
        raw = learner(trainer, learn_steps, params.sweeps, params.probe_smoothing,
                      trainer.rng, segment_log=segments)
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            # No measurable movement; hold the current mixture this round.
            updated, applied = p.copy(), raw
        elif params.ema is not None:
            smoothed = ema_interaction(smoothed, raw / norm, params.ema)
            applied = smoothed
            # History lives in the averaged matrix, so the update re-anchors
            # at the uniform start instead of chaining from the last mixture.
            updated = egd_step(start, applied, step_size=params.step_size)
        else:
            applied = raw / norm
            updated = egd_step(p, applied, step_size=params.step_size)
        trace.append(TraceEntry(
            round=r, step=trainer.step,
            interaction=np.atleast_2d(applied), scale=np.ones(np.atleast_2d(applied).shape[0]),
            p_before=p, p_update=updated, p_used=updated))
        span = round_steps - learn_steps + (remainder if r == params.rounds else 0)
        _train_logged(trainer, updated, span, trajectory, log_every, segments)
        used.append(updated)
        p = updated
    return _finish(method_name, trainer, None, schedule=np.asarray(used),
                   trace=trace, trajectory=trajectory, traced_segments=segments,
                   final_segments=segments,
                   extra={"learn_steps_per_round": learn_steps,
                          "round_steps": round_steps,
                          "warm_start_steps": params.warm_start_steps})


def run_aioli(trainer, steps: int, params: AioliParams = AioliParams(),
              *, log_every=None) -> MethodResult:
    """Interleaved online method: estimate dynamics in-run, reweight, train.

    Each round spends a ``learn_fraction`` of its steps probing smoothed
    one-hot mixtures to estimate the interaction matrix, normalizes it,
    optionally averages it with history, and takes an exponentiated
    gradient step before training the rest of the round on the update.
    Everything happens inside the single final run, so no extra budget is
    consumed.
    """
    return _run_interleaved(trainer, steps, params, learn_params, "aioli", log_every)


def run_aioli_ood(trainer, steps: int, params: AioliParams = AioliParams(),
                  *, log_every=None) -> MethodResult:
    """Out-of-domain variant: probe drops of a single held-out loss channel."""
    result = _run_interleaved(trainer, steps, params, learn_params_ood,
                              "aioli_ood", log_every)
    result.extra["ood_val_loss"] = trainer.true_ood_loss("val")
    result.extra["ood_test_loss"] = trainer.true_ood_loss("test")
    return result


def learn_proportions(method: str, factory, ledger, *, run_steps: int,
                      candidates=None, params=None, eval_seed: int = 0):
    """Run only a base method's budgeted learning phase.

    Returns (proportions, info).  This is what a composed run feeds into
    the interleaved method as a warm start: the base method's learned
    static mixture and the length of the shortened runs it learned from.
    """
    m = factory.num_groups
    if method == "grid_search":
        cands, observed = _sweep_runs(factory, candidates, ledger, run_steps)
        best = int(np.argmin(observed.mean(axis=1)))
        return cands[best], {"sweep_losses": observed, "selected": best}
    if method == "dml":
        winner, info = _dml_learn(factory, candidates, ledger, run_steps,
                                  params or DmlParams(), eval_seed)
        return winner, info
    if method == "skill_it":
        sk = params or SkillItParams()
        graph = _skills_graph(factory, ledger, run_steps)
        probe = factory.extra("skills-initial")
        losses = probe.observe_losses("val")
        p = multiplicative_update(uniform(m), skill_it_gains(graph, losses),
                                  sk.step_size)
        return p, {"skills_graph": graph}
    if method == "doremi":
        dm = params or DoremiParams()
        ledger.check(2 * run_steps)
        reference = factory.extra("reference")
        ledger.charge("reference", run_steps)
        reference.train(uniform(m), run_steps)
        ref_losses = reference.observe_losses("train")
        proxy = factory.extra("proxy")
        ledger.charge("proxy", run_steps)

        def gains_of(t):
            excess = np.maximum(t.observe_losses("train") - ref_losses, 0.0)
            return excess, np.diag(excess), np.ones(m)

        averaged, _, _ = _proxy_loop(proxy, run_steps, dm.step_size,
                                     dm.smoothing, gains_of)
        return averaged, {"reference_losses": ref_losses}
    if method == "doge":
        dg = params or DogeParams()
        proxy = factory.extra("proxy")
        ledger.charge("proxy", run_steps)

        def gains_of(t):
            alignment = t.gradient_alignment()
            return alignment.sum(axis=0), alignment, np.ones(m)

        averaged, _, _ = _proxy_loop(proxy, run_steps, dg.step_size,
                                     dg.smoothing, gains_of)
        return averaged, {}
    raise ConfigError(f"method {method!r} has no separable learning phase")
