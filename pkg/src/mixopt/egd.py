"""Exponentiated gradient updates for mixture proportions.

The core move shared by every online mixing method: reweight the current
mixture multiplicatively by the exponentiated column sums of a (scaled)
interaction matrix, then renormalize.  Computed in log space so large
step sizes or extreme proportions cannot overflow.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMatrixError, DimensionError, SimplexError
from .simplex import validate_proportions


def egd_step(proportions, interaction, scale=None, step_size: float = 0.2) -> np.ndarray:
    """One exponentiated gradient step on the simplex.

    Computes p'_j proportional to p_j * exp(step_size * sum_i scale_i *
    interaction_ij).  ``interaction`` may be any (k, m) matrix with one
    column per group; ``scale`` defaults to ones.  Zero entries of
    ``proportions`` stay zero, a property of multiplicative updates.
    """
    p = validate_proportions(proportions)
    a = np.asarray(interaction, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != p.size:
        raise DimensionError(
            f"interaction shape {a.shape} incompatible with {p.size} groups")
    if not np.all(np.isfinite(a)):
        raise DimensionError("interaction entries must be finite")
    if scale is None:
        b = np.ones(a.shape[0])
    else:
        b = np.asarray(scale, dtype=float)
        if b.shape != (a.shape[0],):
            raise DimensionError(
                f"scale shape {b.shape} does not match {a.shape[0]} interaction rows")
    if step_size <= 0:
        raise SimplexError(f"step size must be positive, got {step_size}")
    with np.errstate(divide="ignore"):
        logits = np.log(p) + step_size * (b @ a)
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def unrolled_egd(start, interactions, scales=None, step_size: float = 0.2) -> np.ndarray:
    """Closed form for a sequence of egd_step applications from ``start``.

    Equivalent to folding egd_step over the per-round interaction matrices:
    the intermediate normalizations cancel, leaving a single softmax over
    the accumulated column sums.
    """
    p = validate_proportions(start)
    total = np.zeros(p.size)
    for t, a in enumerate(interactions):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        b = np.ones(a.shape[0]) if scales is None else np.asarray(scales[t], dtype=float)
        total += b @ a
    with np.errstate(divide="ignore"):
        logits = np.log(p) + step_size * total
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def normalize_interaction(interaction) -> np.ndarray:
    """Scale a matrix to unit frobenius norm.

    Normalization keeps update directions comparable across rounds whose
    raw magnitudes differ with the estimation span.
    """
    a = np.asarray(interaction, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise DegenerateMatrixError("cannot normalize an all-zero interaction matrix")
    return a / norm


def ema_interaction(previous, current, weight: float) -> np.ndarray:
    """Exponential moving average of interaction matrices.

    Returns (1 - weight) * current + weight * previous; with no previous
    matrix the current one is returned unchanged.  ``weight`` is the
    retention put on history and must lie in [0, 1).
    """
    if not 0.0 <= weight < 1.0:
        raise SimplexError(f"ema weight must lie in [0, 1), got {weight}")
    cur = np.asarray(current, dtype=float)
    if previous is None:
        return cur.copy()
    prev = np.asarray(previous, dtype=float)
    if prev.shape != cur.shape:
        raise DimensionError(
            f"ema shapes differ: previous {prev.shape}, current {cur.shape}")
    return (1.0 - weight) * cur + weight * prev
