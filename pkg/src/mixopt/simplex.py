"""Operations on mixture proportions living on the probability simplex.

A mixture over m data groups is a length-m vector of non-negative weights
summing to one.  Everything downstream (the trainer, the solvers, the
mixing methods) funnels its proportion handling through this module so the
simplex invariants are checked in exactly one place.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import DimensionError, SimplexError

SUM_TOL = 1e-9
MIN_SEPARATION = 1e-9


def validate_proportions(weights) -> np.ndarray:
    """Return ``weights`` as a validated float64 simplex point.

    Raises SimplexError if any weight is negative, the sum is off by more
    than 1e-9, or there are fewer than two groups.  Vertices are allowed.
    """
    p = np.asarray(weights, dtype=float)
    if p.ndim != 1:
        raise DimensionError(f"proportions must be one-dimensional, got shape {p.shape}")
    if p.size < 2:
        raise SimplexError(f"need at least two groups, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise SimplexError("proportions must be finite")
    if np.any(p < 0):
        raise SimplexError(f"negative weight in proportions: {float(p.min())!r}")
    total = float(p.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise SimplexError(f"proportions sum to {total!r}, expected 1 within {SUM_TOL}")
    return p.copy()


def uniform(num_groups: int) -> np.ndarray:
    """The uniform mixture over ``num_groups`` groups."""
    if num_groups < 2:
        raise SimplexError(f"need at least two groups, got {num_groups}")
    return np.full(num_groups, 1.0 / num_groups)


def smoothed_onehot(group: int, num_groups: int, smoothing: float) -> np.ndarray:
    """One-hot mixture on ``group`` mixed with the uniform distribution.

    Returns (1 - smoothing) * onehot(group) + smoothing * uniform.  With
    smoothing 0 this is the exact vertex; with smoothing 1 it is uniform.
    """
    if not 0.0 <= smoothing <= 1.0:
        raise SimplexError(f"smoothing must lie in [0, 1], got {smoothing}")
    if not 0 <= group < num_groups:
        raise SimplexError(f"group index {group} out of range for {num_groups} groups")
    p = np.full(num_groups, smoothing / num_groups)
    p[group] += 1.0 - smoothing
    return p


def interleave_order(num_groups: int, repeats: int, rng) -> np.ndarray:
    """Shuffled interval order visiting each group index ``repeats`` times.

    Returns an integer array of length num_groups * repeats containing each
    index in range(num_groups) exactly ``repeats`` times, shuffled by ``rng``.
    """
    if num_groups < 2:
        raise SimplexError(f"need at least two groups, got {num_groups}")
    if repeats < 1:
        raise SimplexError(f"repeats must be at least 1, got {repeats}")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return rng.permutation(np.repeat(np.arange(num_groups), repeats))


def candidate_grid(num_groups: int) -> np.ndarray:
    """The nine-point sweep grid (0.1, 0.9) .. (0.9, 0.1) for two groups."""
    if num_groups != 2:
        raise SimplexError("the sweep grid is defined for exactly two groups")
    first = np.arange(1, 10) / 10.0
    return np.column_stack([first, 1.0 - first])


def candidate_dirichlet(num_groups: int, count: int, alpha: float = 1.0,
                        oversample: int = 4, rng=None) -> np.ndarray:
    """Sample sweep candidates by oversampling a Dirichlet and merging.

    Draws count * oversample points from Dirichlet(alpha * ones), then
    repeatedly replaces the closest pair (euclidean) with its midpoint until
    ``count`` points remain.  Midpoints of simplex points stay on the
    simplex, so the merged set is contraction-safe by construction.
    """
    if num_groups < 2:
        raise SimplexError(f"need at least two groups, got {num_groups}")
    if count < 1:
        raise SimplexError(f"count must be positive, got {count}")
    if oversample < 1:
        raise SimplexError(f"oversample must be at least 1, got {oversample}")
    if alpha <= 0:
        raise SimplexError(f"alpha must be positive, got {alpha}")
    rng = np.random.default_rng(rng)
    points = rng.dirichlet(np.full(num_groups, alpha), size=count * oversample)
    points = [row for row in points]
    while len(points) > count:
        arr = np.asarray(points)
        d2 = np.sum((arr[:, None, :] - arr[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        merged = 0.5 * (points[i] + points[j])
        points = [p for k, p in enumerate(points) if k not in (i, j)]
        points.append(merged)
    return np.asarray(points)


def candidate_sweep(num_groups: int, mode: str = "grid", *, count: int = 10,
                    alpha: float = 1.0, oversample: int = 4, rng=None) -> np.ndarray:
    """Build a sweep candidate set, one validated mixture per row.

    mode "grid" gives the fixed nine-point two-group grid; mode "dirichlet"
    draws ``count`` merged samples (see candidate_dirichlet).  Rows are
    guaranteed pairwise distinct beyond 1e-9 in euclidean distance.
    """
    if mode == "grid":
        candidates = candidate_grid(num_groups)
    elif mode == "dirichlet":
        candidates = candidate_dirichlet(num_groups, count, alpha=alpha,
                                         oversample=oversample, rng=rng)
    else:
        raise SimplexError(f"unknown sweep mode {mode!r}")
    for row in candidates:
        validate_proportions(row)
    _check_separation(candidates)
    return candidates


def _check_separation(candidates: np.ndarray) -> None:
    d2 = np.sum((candidates[:, None, :] - candidates[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    if np.min(d2) < MIN_SEPARATION ** 2:
        raise SimplexError("sweep candidates are closer than the 1e-9 separation floor")


def candidates_to_table(candidates: np.ndarray) -> str:
    """Serialize a candidate set to a plain-text table, one mixture per line."""
    out = io.StringIO()
    for row in np.atleast_2d(candidates):
        out.write(" ".join(repr(float(w)) for w in row))
        out.write("\n")
    return out.getvalue()


def candidates_from_table(text: str) -> np.ndarray:
    """Parse a candidate table written by candidates_to_table."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise SimplexError("candidate table is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionError("candidate table rows have inconsistent lengths")
    candidates = np.asarray(rows, dtype=float)
    for row in candidates:
        validate_proportions(row)
    return candidates
