"""Mixing laws: parametric models of per-group loss as a function of mixture.

Two families are supported.  The static law models the loss a full training
run lands at,

    loss_i(p) = asymptote_i + amplitude_i * exp(-(interaction @ p)_i),

and is fit to (mixture, final losses) pairs from a sweep.  The dynamic law
models one-round loss movement,

    next_i = current_i - (interaction @ p)_i,

and is fit to (losses before, mixture, losses after) triples.  Both are
exposed as scikit-learn style estimators plus thin functional wrappers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    ConvergenceError,
    DegenerateScaleError,
    DimensionError,
    InsufficientSamplesError,
    SingularDesignError,
)
from .simplex import validate_proportions


def static_losses(interaction, amplitude, asymptote, proportions) -> np.ndarray:
    """Evaluate the static law at one mixture, returning per-group losses."""
    a, b, c = _check_static_params(interaction, amplitude, asymptote)
    p = validate_proportions(proportions)
    if p.size != a.shape[1]:
        raise DimensionError(
            f"mixture has {p.size} groups but interaction has {a.shape[1]} columns")
    return c + b * np.exp(-(a @ p))


def dynamic_next_losses(interaction, losses, proportions) -> np.ndarray:
    """Evaluate the dynamic law: losses after one round on ``proportions``."""
    a = np.asarray(interaction, dtype=float)
    cur = np.asarray(losses, dtype=float)
    p = validate_proportions(proportions)
    if a.ndim != 2 or a.shape != (cur.size, p.size):
        raise DimensionError(
            f"interaction shape {a.shape} incompatible with {cur.size} groups")
    return cur - a @ p


def _check_static_params(interaction, amplitude, asymptote):
    a = np.asarray(interaction, dtype=float)
    b = np.asarray(amplitude, dtype=float)
    c = np.asarray(asymptote, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"interaction must be a matrix, got shape {a.shape}")
    m = a.shape[0]
    if b.shape != (m,) or c.shape != (m,):
        raise DimensionError("amplitude and asymptote must have one entry per group")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise DimensionError("static law parameters must be finite")
    if np.any(b <= 0):
        raise DimensionError("amplitude entries must be positive")
    if np.any(c < 0):
        raise DimensionError("asymptote entries must be non-negative")
    return a, b, c


@dataclass(frozen=True)
class FitReport:
    """Goodness-of-fit summary for a fitted mixing law."""

    mse: float
    r_squared: float
    per_group_r_squared: np.ndarray
    residuals: np.ndarray
    n_samples: int
    restarts_used: int = 0

    def to_dict(self) -> dict:
        return {
            "mse": float(self.mse),
            "r_squared": float(self.r_squared),
            "per_group_r_squared": [float(v) for v in self.per_group_r_squared],
            "n_samples": int(self.n_samples),
            "restarts_used": int(self.restarts_used),
        }

    def residuals_csv(self) -> str:
        """Residuals as CSV text with columns sample, group, residual."""
        out = io.StringIO()
        out.write("sample,group,residual\n")
        for s in range(self.residuals.shape[0]):
            for g in range(self.residuals.shape[1]):
                out.write(f"{s},{g},{float(self.residuals[s, g])!r}\n")
        return out.getvalue()


def goodness(predicted, observed, restarts_used: int = 0) -> FitReport:
    """FitReport comparing predictions to observations.

    The coefficient of determination is pooled over all groups; a
    per-group breakdown is included alongside.  Residuals are observed
    minus predicted, and both metrics are invariant to sample order.
    """
    pred = np.atleast_2d(np.asarray(predicted, dtype=float))
    obs = np.atleast_2d(np.asarray(observed, dtype=float))
    if pred.shape != obs.shape:
        raise DimensionError(
            f"predicted shape {pred.shape} does not match observed shape {obs.shape}")
    if pred.shape[0] < 2:
        raise InsufficientSamplesError("goodness metrics need at least two samples")
    residuals = obs - pred
    mse = float(np.mean(residuals ** 2))
    r_squared = _r_squared(pred.ravel(), obs.ravel())
    per_group = np.array([_r_squared(pred[:, g], obs[:, g])
                          for g in range(obs.shape[1])])
    return FitReport(mse=mse, r_squared=r_squared, per_group_r_squared=per_group,
                     residuals=residuals, n_samples=obs.shape[0],
                     restarts_used=restarts_used)


def _r_squared(pred, obs):
    ss_res = float(np.sum((obs - pred) ** 2))
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else float("-inf")
    return 1.0 - ss_res / ss_tot


class LogLinearStaticLaw(BaseEstimator, RegressorMixin):
    """Static mixing law fit by robust loss minimization with restarts.

    Each group's parameters (one interaction row, an amplitude, and an
    asymptote) are fit independently by L-BFGS-B on a Huber objective with
    analytic gradients, keeping the best of ``restarts`` random
    initializations.  Amplitudes are constrained positive and asymptotes
    non-negative.

    Attributes set by fit: ``interaction_`` (m, m), ``amplitude_`` (m,),
    ``asymptote_`` (m,), and ``report_`` (a FitReport on the training data).
    """

    def __init__(self, huber_delta: float = 1e-3, restarts: int = 32,
                 max_iter: int = 500, random_state: int = 0):
        self.huber_delta = huber_delta
        self.restarts = restarts
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        P, L = _check_sweep_data(X, y)
        n, m = P.shape
        if n < m + 1:
            raise InsufficientSamplesError(
                f"static fit needs at least {m + 1} mixtures, got {n}")
        if self.huber_delta <= 0:
            raise DimensionError("huber_delta must be positive")
        if self.restarts < 1:
            raise DimensionError("restarts must be at least 1")
        rng = np.random.default_rng(self.random_state)
        rows, amps, asys = [], [], []
        for i in range(m):
            a_i, b_i, c_i = self._fit_group(P, L[:, i], rng)
            rows.append(a_i)
            amps.append(b_i)
            asys.append(c_i)
        self.interaction_ = np.asarray(rows)
        self.amplitude_ = np.asarray(amps)
        self.asymptote_ = np.asarray(asys)
        self.report_ = goodness(self.predict(P), L, restarts_used=self.restarts)
        return self

    def _fit_group(self, P, y, rng):
        n, m = P.shape
        delta = self.huber_delta
        y_min = max(float(y.min()), 0.0)

        def objective(x):
            a, b, c = x[:m], x[m], x[m + 1]
            decay = np.exp(-(P @ a))
            r = c + b * decay - y
            absr = np.abs(r)
            loss = np.where(absr <= delta, 0.5 * r * r,
                            delta * (absr - 0.5 * delta)).sum()
            w = np.clip(r, -delta, delta)
            grad_a = -b * (P.T @ (w * decay))
            return loss, np.concatenate([grad_a, [w @ decay, w.sum()]])

        bounds = [(None, None)] * m + [(1e-8, None), (0.0, None)]
        best_val, best_x = np.inf, None
        for _ in range(self.restarts):
            x0 = np.concatenate([
                rng.uniform(0.0, 5.0, size=m),
                [rng.uniform(0.1, 30.0)],
                [rng.uniform(0.0, y_min) if y_min > 0 else 0.0],
            ])
            res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                           bounds=bounds, options={"maxiter": self.max_iter})
            if np.isfinite(res.fun) and res.fun < best_val:
                best_val, best_x = res.fun, res.x
        if best_x is None:
            raise ConvergenceError("no restart produced a finite objective value")
        return best_x[:m], float(best_x[m]), float(best_x[m + 1])

    def predict(self, X):
        check_is_fitted(self, "interaction_")
        P = _check_mixture_rows(X, self.interaction_.shape[1])
        return self.asymptote_ + self.amplitude_ * np.exp(-(P @ self.interaction_.T))


class LinearDynamicLaw(BaseEstimator, RegressorMixin):
    """Dynamic mixing law: per-round loss drops linear in the mixture.

    fit(X, y) takes mixtures X of shape (n, m) and observed per-group loss
    drops y of shape (n, m), solving an ordinary least squares problem per
    group.  Requires the mixture design to have full column rank.
    """

    def fit(self, X, y):
        P, D = _check_sweep_data(X, y)
        n, m = P.shape
        rank = np.linalg.matrix_rank(P)
        if rank < m:
            raise SingularDesignError(
                f"mixture design has rank {rank}, need {m} (got {n} samples)")
        coef, *_ = np.linalg.lstsq(P, D, rcond=None)
        self.interaction_ = coef.T
        self.report_ = goodness(self.predict(P), D)
        return self

    def predict(self, X):
        check_is_fitted(self, "interaction_")
        P = _check_mixture_rows(X, self.interaction_.shape[1])
        return P @ self.interaction_.T


def fit_static_law(mixtures, losses, *, huber_delta: float = 1e-3,
                   restarts: int = 32, max_iter: int = 500, random_state: int = 0):
    """Fit the static law; returns (interaction, amplitude, asymptote, report)."""
    model = LogLinearStaticLaw(huber_delta=huber_delta, restarts=restarts,
                               max_iter=max_iter, random_state=random_state)
    model.fit(mixtures, losses)
    return model.interaction_, model.amplitude_, model.asymptote_, model.report_


def fit_dynamic_law(triples):
    """Fit the dynamic law to (losses before, mixture, losses after) triples.

    Returns (interaction, report).  The report compares predicted to
    observed after-round losses.  The interaction carries the scale of the
    horizon the triples were measured over; callers convert as needed.
    """
    before, mixtures, after = _split_triples(triples)
    model = LinearDynamicLaw().fit(mixtures, before - after)
    predicted_after = before - model.predict(mixtures)
    report = goodness(predicted_after, after)
    return model.interaction_, report


def fit_scalar_scale(interaction, triples) -> float:
    """Least-squares scalar aligning a method's interaction with observed drops.

    Finds the coefficient minimizing sum over samples and groups of
    (drop - coefficient * (interaction @ p))^2.  Used when comparing a
    method's traced parameters against independently estimated dynamics.
    """
    a = np.asarray(interaction, dtype=float)
    before, mixtures, after = _split_triples(triples)
    if a.shape != (before.shape[1], mixtures.shape[1]):
        raise DimensionError(
            f"interaction shape {a.shape} incompatible with triples of "
            f"{before.shape[1]} groups")
    x = mixtures @ a.T
    denom = float(np.sum(x * x))
    if denom == 0.0:
        raise DegenerateScaleError(
            "interaction predicts zero drop for every sweep mixture")
    return float(np.sum(x * (before - after)) / denom)


def _split_triples(triples):
    before, mixtures, after = [], [], []
    for cur, p, nxt in triples:
        before.append(np.asarray(cur, dtype=float))
        mixtures.append(validate_proportions(p))
        after.append(np.asarray(nxt, dtype=float))
    if not before:
        raise InsufficientSamplesError("no loss-movement triples supplied")
    before, mixtures, after = np.asarray(before), np.asarray(mixtures), np.asarray(after)
    if before.shape != after.shape or before.shape != mixtures.shape:
        raise DimensionError("triples have inconsistent shapes")
    return before, mixtures, after


def _check_sweep_data(X, y):
    P = np.asarray(X, dtype=float)
    L = np.asarray(y, dtype=float)
    if P.ndim != 2:
        raise DimensionError(f"mixtures must be a 2d array, got shape {P.shape}")
    if L.shape != P.shape:
        raise DimensionError(
            f"losses shape {L.shape} does not match mixtures shape {P.shape}")
    if not np.all(np.isfinite(L)):
        raise DimensionError("losses must be finite")
    for row in P:
        validate_proportions(row)
    return P, L


def _check_mixture_rows(X, m):
    P = np.atleast_2d(np.asarray(X, dtype=float))
    if P.shape[1] != m:
        raise DimensionError(f"expected {m} groups per mixture, got {P.shape[1]}")
    for row in P:
        validate_proportions(row)
    return P
