"""Analysis tools: estimated dynamics, parameter similarity, schedule search.

The central question these answer: how close are the parameters a mixing
method actually uses to the dynamics the trainer really follows, and does
that closeness predict performance?  Ground truth is estimated the same
way a method would have to: sweep candidate mixtures for a short horizon
from a snapshotted state and fit the dynamic law to the observed drops.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ComplexityError, DegenerateMatrixError, DimensionError, TraceError
from .laws import fit_dynamic_law, fit_scalar_scale
from .simplex import validate_proportions


def sweep_loss_drops(trainer, candidates, horizon: int):
    """Loss-movement triples for each candidate over a short horizon.

    Snapshots the trainer, trains ``horizon`` steps on each candidate from
    that state, and restores afterwards, returning (before, mixture, after)
    triples suitable for the dynamic-law fitters.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if horizon < 1:
        raise DimensionError(f"horizon must be at least 1, got {horizon}")
    base = trainer.snapshot()
    triples = []
    for cand in candidates:
        cand = validate_proportions(cand)
        trainer.restore(base)
        before = trainer.observe_losses("val")
        trainer.train(cand, horizon)
        after = trainer.observe_losses("val")
        triples.append((before, cand, after))
    trainer.restore(base)
    return triples


def estimate_a_star(trainer, candidates, horizon: int = 100) -> np.ndarray:
    """Estimate the true interaction matrix at the trainer's current state.

    The returned matrix is scaled to loss drop per ``horizon`` steps.
    """
    triples = sweep_loss_drops(trainer, candidates, horizon)
    matrix, _ = fit_dynamic_law(triples)
    return matrix


@dataclass(frozen=True)
class SimilarityScore:
    """Similarity between two parameter sets in [-1, 1]."""

    value: float
    cosine: float
    spearman: float


def similarity(interaction, scale, reference) -> SimilarityScore:
    """Compare scaled column sums of a method's parameters against a reference.

    Both parameter sets are collapsed to their per-group influence vector
    (column sums of scale-weighted rows), normalized to unit length, and
    compared by the mean of cosine similarity and a rank correlation with
    average ranks on ties.  Invariant to positive rescaling of either side.
    """
    u = _influence(interaction, scale)
    v = _influence(reference, None)
    # Identical and antipodal influences must score exactly +/-1; the dot
    # product of unit vectors only gets there up to rounding.
    if np.array_equal(u, v):
        cosine = 1.0
    elif np.array_equal(u, -v):
        cosine = -1.0
    else:
        cosine = float(np.clip(u @ v, -1.0, 1.0))
    spear = _rank_correlation(u, v)
    return SimilarityScore(value=0.5 * (cosine + spear), cosine=cosine,
                           spearman=spear)


def _influence(interaction, scale):
    a = np.atleast_2d(np.asarray(interaction, dtype=float))
    if scale is None:
        b = np.ones(a.shape[0])
    else:
        b = np.asarray(scale, dtype=float)
        if b.ndim == 0:
            b = np.full(a.shape[0], float(b))
        if b.shape != (a.shape[0],):
            raise DimensionError(
                f"scale shape {b.shape} does not match {a.shape[0]} rows")
    sums = b @ a
    norm = np.linalg.norm(sums)
    if norm == 0.0:
        raise DegenerateMatrixError("column sums are all zero")
    return sums / norm


def _rank_correlation(u, v):
    ru = rankdata(u)
    rv = rankdata(v)
    if np.array_equal(ru, rv):
        return 1.0
    if np.ptp(ru) == 0.0 or np.ptp(rv) == 0.0:
        # One side carries no ordering information and they disagree.
        return 0.0
    if np.array_equal(ru + rv, np.full(ru.size, ru.size + 1.0)):
        # Exactly reversed ordering, ties included.
        return -1.0
    ru = ru - ru.mean()
    rv = rv - rv.mean()
    return float(np.clip((ru @ rv) / np.sqrt((ru @ ru) * (rv @ rv)), -1.0, 1.0))


def diagonal_projection(interaction) -> np.ndarray:
    """Zero out every off-diagonal entry, keeping only self-interactions."""
    a = np.asarray(interaction, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return np.diag(np.diag(a))


def smooth_trace(matrices, width: int = 100) -> np.ndarray:
    """Trailing mean of the last ``width`` traced matrices."""
    stack = [np.asarray(mat, dtype=float) for mat in matrices]
    if not stack:
        raise TraceError("cannot smooth an empty trace")
    if width < 1:
        raise DimensionError(f"width must be at least 1, got {width}")
    return np.mean(stack[-width:], axis=0)


def replay_segments(trainer, segments, upto_step=None):
    """Re-apply recorded (mixture, steps) segments to a fresh trainer.

    Training is noise-free, so the replayed losses match the original
    run's exactly at every step regardless of how that run consumed its
    RNG.  Stops once ``upto_step`` is reached (truncating mid-segment).
    """
    for p, steps in segments:
        take = steps if upto_step is None else min(steps, upto_step - trainer.step)
        if take <= 0:
            break
        trainer.train(p, take)
    return trainer


def trace_similarity(result, twin_trainer, candidates, *, at_step: int,
                     horizon: int = 100, smooth_width: int = 100):
    """Similarity of a method's traced parameters to estimated ground truth.

    Replays the method's recorded training segments on ``twin_trainer`` up
    to ``at_step``, estimates the true dynamics there from a candidate
    sweep, and compares them against the trailing mean of the method's
    traced interaction matrices at or before that step.  The method matrix
    gets a least-squares scalar scale so opposed directions score
    negatively.  Returns (SimilarityScore, info dict).
    """
    entries = [e for e in result.trace if e.step <= at_step]
    if not entries:
        raise TraceError(f"no traced updates at or before step {at_step}")
    replay_segments(twin_trainer, result.traced_segments, upto_step=at_step)
    triples = sweep_loss_drops(twin_trainer, candidates, horizon)
    a_star, fit_report = fit_dynamic_law(triples)
    a_method = smooth_trace([e.interaction for e in entries], smooth_width)
    coefficient = fit_scalar_scale(a_method, triples)
    score = similarity(a_method, np.full(a_method.shape[0], coefficient), a_star)
    info = {
        "a_star": a_star,
        "a_method": a_method,
        "scale_coefficient": coefficient,
        "fit_r_squared": fit_report.r_squared,
        "at_step": int(at_step),
        "entries_used": len(entries),
    }
    return score, info


@dataclass(frozen=True)
class GreedyComparison:
    """Greedy versus exhaustive schedule search over one candidate set."""

    greedy_indices: tuple
    greedy_schedule: np.ndarray
    greedy_loss: float
    best_indices: tuple
    best_schedule: np.ndarray
    best_loss: float
    n_schedules: int

    @property
    def match(self) -> bool:
        return self.greedy_indices == self.best_indices


def greedy_vs_exhaustive(trainer, candidates, rounds: int, round_steps: int,
                         *, max_schedules: int = 100000) -> GreedyComparison:
    """Compare round-by-round greedy selection against full enumeration.

    Both searches start from the trainer's current state and score a
    schedule by mean validation loss after training all rounds.  The
    exhaustive search covers every candidate assignment to rounds, so its
    best loss can never exceed the greedy schedule's.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    for row in candidates:
        validate_proportions(row)
    n = len(candidates)
    total = n ** rounds
    if total > max_schedules:
        raise ComplexityError(
            f"{n} candidates over {rounds} rounds means {total} schedules, "
            f"limit is {max_schedules}")
    if rounds < 1 or round_steps < 1:
        raise DimensionError("rounds and round_steps must be at least 1")
    base = trainer.snapshot()

    def score_schedule(indices):
        trainer.restore(base)
        for idx in indices:
            trainer.train(candidates[idx], round_steps)
        return float(trainer.observe_losses("val").mean())

    greedy = []
    for _ in range(rounds):
        losses = [score_schedule(greedy + [c]) for c in range(n)]
        greedy.append(int(np.argmin(losses)))
    greedy = tuple(greedy)

    best_indices, best_loss = None, np.inf
    for indices in itertools.product(range(n), repeat=rounds):
        loss = score_schedule(indices)
        if loss < best_loss:
            best_indices, best_loss = indices, loss
    greedy_loss = score_schedule(greedy)
    trainer.restore(base)
    return GreedyComparison(
        greedy_indices=greedy,
        greedy_schedule=candidates[list(greedy)],
        greedy_loss=greedy_loss,
        best_indices=best_indices,
        best_schedule=candidates[list(best_indices)],
        best_loss=best_loss,
        n_schedules=total,
    )
