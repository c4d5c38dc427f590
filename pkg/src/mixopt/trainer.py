"""Simulated group-loss trainers.

A trainer holds per-group losses for the train/val/test splits and lowers
them as training steps are consumed.  Ground-truth dynamics are linear in
the mixture: one step on mixture p lowers group i's loss by
(matrix @ p)_i, clamped at a loss floor.  The matrix may change across
step-range segments of a schedule.  Observation noise applies to loss
reads only, never to the underlying state; the gradient-alignment oracle
returns the current ground-truth matrix plus its own noise.

A second trainer kind reproduces a static mixing law instead: a run of
``reference_steps`` at a constant mixture lands exactly on the law's
predicted endpoint, with geometric per-step interpolation in between.

Snapshots capture losses, step counters, and the RNG state, so a restored
trainer replays bit-identically.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, MixoptError, SnapshotError
from .simplex import validate_proportions

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ScheduleSegment:
    """Dynamics over one step range; ``end`` is exclusive, None means unbounded."""

    end: int | None
    matrix: np.ndarray
    ood_row: np.ndarray | None = None


class DynamicsSchedule:
    """Piecewise-constant ground-truth dynamics over the step axis.

    Segments partition [0, infinity): each covers the steps from the end of
    the previous segment up to its own exclusive ``end``, and the last
    segment must have end None.
    """

    def __init__(self, segments):
        segments = [self._coerce(s) for s in segments]
        if not segments:
            raise ConfigError("schedule needs at least one segment")
        m = segments[0].matrix.shape[0]
        prev_end = 0
        for k, seg in enumerate(segments):
            if seg.matrix.shape != (m, m):
                raise ConfigError(
                    f"segment {k} matrix shape {seg.matrix.shape} != ({m}, {m})")
            if not np.all(np.isfinite(seg.matrix)):
                raise ConfigError(f"segment {k} matrix has non-finite entries")
            if seg.ood_row is not None and seg.ood_row.shape != (m,):
                raise ConfigError(f"segment {k} ood row must have {m} entries")
            is_last = k == len(segments) - 1
            if is_last:
                if seg.end is not None:
                    raise ConfigError("last schedule segment must be unbounded")
            else:
                if seg.end is None or seg.end <= prev_end:
                    raise ConfigError(
                        f"segment {k} end {seg.end} does not extend past {prev_end}")
                prev_end = seg.end
        has_ood = [seg.ood_row is not None for seg in segments]
        if any(has_ood) and not all(has_ood):
            raise ConfigError("either every segment carries an ood row or none does")
        self.segments = tuple(segments)
        self.num_groups = m
        self.has_ood = all(has_ood)

    @staticmethod
    def _coerce(seg):
        if isinstance(seg, ScheduleSegment):
            matrix = np.asarray(seg.matrix, dtype=float)
            ood = None if seg.ood_row is None else np.asarray(seg.ood_row, dtype=float)
            return ScheduleSegment(seg.end, matrix, ood)
        end, matrix = seg[0], np.asarray(seg[1], dtype=float)
        ood = np.asarray(seg[2], dtype=float) if len(seg) > 2 and seg[2] is not None else None
        return ScheduleSegment(end, matrix, ood)

    @classmethod
    def constant(cls, matrix, ood_row=None):
        return cls([ScheduleSegment(None, np.asarray(matrix, dtype=float),
                                    None if ood_row is None else np.asarray(ood_row, dtype=float))])

    def matrix_at(self, step: int) -> np.ndarray:
        return self._segment_at(step).matrix

    def _segment_at(self, step: int) -> ScheduleSegment:
        for seg in self.segments:
            if seg.end is None or step < seg.end:
                return seg
        raise AssertionError("unreachable: last segment is unbounded")

    def spans(self, start: int, steps: int):
        """Yield (segment, span) pairs covering [start, start + steps)."""
        remaining = steps
        cursor = start
        while remaining > 0:
            seg = self._segment_at(cursor)
            span = remaining if seg.end is None else min(remaining, seg.end - cursor)
            yield seg, span
            cursor += span
            remaining -= span


@dataclass(frozen=True)
class TrainerConfig:
    """Configuration for the linear-dynamics trainer.

    ``initial_losses`` is either one vector shared by the three splits or a
    dict keyed by split name.  ``ood_initial`` (optional) attaches a scalar
    out-of-domain loss channel; the schedule must then carry ood rows.
    """

    initial_losses: object
    schedule: DynamicsSchedule
    loss_floor: float = 0.0
    observation_noise: float = 0.0
    gradient_noise: float = 0.0
    seed: int = 0
    ood_initial: object = None


@dataclass(frozen=True)
class StaticLawConfig:
    """Configuration for the static-law endpoint trainer."""

    interaction: np.ndarray
    amplitude: np.ndarray
    asymptote: np.ndarray
    reference_steps: int
    initial_losses: object
    observation_noise: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class TrainerSnapshot:
    owner_id: int
    step: int
    losses: dict
    ood: object
    rng_state: dict = field(repr=False)


def _split_vectors(initial, m, floor, what="initial losses"):
    if isinstance(initial, dict):
        unknown = set(initial) - set(SPLITS)
        if unknown:
            raise ConfigError(f"unknown splits in {what}: {sorted(unknown)}")
        missing = set(SPLITS) - set(initial)
        if missing:
            raise ConfigError(f"{what} missing splits: {sorted(missing)}")
        vectors = {s: np.asarray(initial[s], dtype=float) for s in SPLITS}
    else:
        base = np.asarray(initial, dtype=float)
        vectors = {s: base.copy() for s in SPLITS}
    for split, vec in vectors.items():
        if vec.shape != (m,):
            raise ConfigError(f"{what} for split {split!r} must have {m} entries")
        if not np.all(np.isfinite(vec)):
            raise ConfigError(f"{what} for split {split!r} must be finite")
        if np.any(vec <= floor):
            raise ConfigError(
                f"{what} for split {split!r} must start strictly above {floor}")
    return vectors


class _SimTrainer:
    """State and observation machinery shared by the trainer kinds."""

    def __init__(self, num_groups, losses, observation_noise, seed, rng):
        self.num_groups = num_groups
        self._losses = losses
        self._obs_noise = observation_noise
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.step = 0
        self._ood = None

    def _check_split(self, split):
        if split not in SPLITS:
            raise DimensionError(f"unknown split {split!r}, expected one of {SPLITS}")

    def true_losses(self, split: str = "val") -> np.ndarray:
        self._check_split(split)
        return self._losses[split].copy()

    def observe_losses(self, split: str = "val") -> np.ndarray:
        """Current losses plus fresh observation noise (none when noise is 0)."""
        losses = self.true_losses(split)
        if self._obs_noise > 0:
            losses = losses + self.rng.normal(0.0, self._obs_noise, self.num_groups)
        return losses

    def true_ood_loss(self, split: str = "val") -> float:
        self._check_split(split)
        if self._ood is None:
            raise MixoptError("trainer has no out-of-domain loss channel")
        return float(self._ood[split])

    def observe_ood_loss(self, split: str = "val") -> float:
        value = self.true_ood_loss(split)
        if self._obs_noise > 0:
            value += float(self.rng.normal(0.0, self._obs_noise))
        return value

    def train(self, proportions, steps: int) -> None:
        """Advance ``steps`` training steps on the given mixture."""
        p = validate_proportions(proportions)
        if p.size != self.num_groups:
            raise DimensionError(
                f"mixture has {p.size} groups, trainer has {self.num_groups}")
        if steps < 0 or int(steps) != steps:
            raise DimensionError(f"steps must be a non-negative integer, got {steps}")
        if steps:
            self._advance(p, int(steps))

    def snapshot(self) -> TrainerSnapshot:
        """Capture losses, step counter, and RNG state for later restore."""
        return TrainerSnapshot(
            owner_id=id(self),
            step=self.step,
            losses={s: v.copy() for s, v in self._losses.items()},
            ood=None if self._ood is None else dict(self._ood),
            rng_state=copy.deepcopy(self.rng.bit_generator.state),
        )

    def restore(self, snap: TrainerSnapshot) -> None:
        """Rewind to a snapshot taken from this trainer; bit-identical replay."""
        if not isinstance(snap, TrainerSnapshot) or snap.owner_id != id(self):
            raise SnapshotError("snapshot does not belong to this trainer")
        self.step = snap.step
        self._losses = {s: v.copy() for s, v in snap.losses.items()}
        self._ood = None if snap.ood is None else dict(snap.ood)
        self.rng.bit_generator.state = copy.deepcopy(snap.rng_state)


class LinearTrainer(_SimTrainer):
    """Trainer whose per-step loss drops are linear in the mixture.

    One step on mixture p maps each split's loss vector L to
    max(floor, L - matrix(step) @ p) elementwise.  Within a schedule
    segment the update telescopes, so spans of steps are advanced in
    closed form; results are identical to stepping one at a time.
    """

    def __init__(self, config: TrainerConfig, rng=None):
        schedule = config.schedule
        if not isinstance(schedule, DynamicsSchedule):
            schedule = DynamicsSchedule(schedule)
        m = schedule.num_groups
        if config.observation_noise < 0 or config.gradient_noise < 0:
            raise ConfigError("noise levels must be non-negative")
        losses = _split_vectors(config.initial_losses, m, config.loss_floor)
        super().__init__(m, losses, config.observation_noise, config.seed, rng)
        self.config = config
        self.schedule = schedule
        self.loss_floor = float(config.loss_floor)
        self._grad_noise = config.gradient_noise
        if config.ood_initial is not None:
            if not schedule.has_ood:
                raise ConfigError("ood_initial given but schedule has no ood rows")
            if isinstance(config.ood_initial, dict):
                self._ood = {s: float(config.ood_initial[s]) for s in SPLITS}
            else:
                self._ood = {s: float(config.ood_initial) for s in SPLITS}
            for split, value in self._ood.items():
                if value <= config.loss_floor:
                    raise ConfigError(
                        f"ood loss for split {split!r} must start above the floor")
        elif schedule.has_ood:
            raise ConfigError("schedule has ood rows but no ood_initial was given")

    def _advance(self, p, steps):
        for seg, span in self.schedule.spans(self.step, steps):
            drop = span * (seg.matrix @ p)
            for split in SPLITS:
                self._losses[split] = np.maximum(self.loss_floor,
                                                 self._losses[split] - drop)
            if self._ood is not None:
                ood_drop = span * float(seg.ood_row @ p)
                for split in SPLITS:
                    self._ood[split] = max(self.loss_floor, self._ood[split] - ood_drop)
        self.step += steps

    def gradient_alignment(self) -> np.ndarray:
        """Ground-truth dynamics matrix at the current step plus oracle noise."""
        matrix = self.schedule.matrix_at(self.step).copy()
        if self._grad_noise > 0:
            matrix = matrix + self.rng.normal(0.0, self._grad_noise,
                                              matrix.shape)
        return matrix


class StaticLawTrainer(_SimTrainer):
    """Trainer that lands on a static mixing law at a reference horizon.

    Training ``reference_steps`` steps at a constant mixture p moves each
    group's loss from its initial value exactly to
    asymptote + amplitude * exp(-(interaction @ p)), following a geometric
    path in between.  Mixture changes mid-run compose the per-step factors.
    """

    def __init__(self, config: StaticLawConfig, rng=None):
        a = np.asarray(config.interaction, dtype=float)
        b = np.asarray(config.amplitude, dtype=float)
        c = np.asarray(config.asymptote, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError(f"interaction must be square, got shape {a.shape}")
        m = a.shape[0]
        if b.shape != (m,) or c.shape != (m,):
            raise ConfigError("amplitude and asymptote must have one entry per group")
        if np.any(b <= 0) or np.any(c < 0):
            raise ConfigError("amplitude must be positive and asymptote non-negative")
        if config.reference_steps < 1:
            raise ConfigError("reference_steps must be at least 1")
        if config.observation_noise < 0:
            raise ConfigError("noise levels must be non-negative")
        losses = _split_vectors(config.initial_losses, m, 0.0)
        for split, vec in losses.items():
            if np.any(vec <= c):
                raise ConfigError(
                    f"initial losses for split {split!r} must exceed the asymptote")
        super().__init__(m, losses, config.observation_noise, config.seed, rng)
        self.config = config
        self._interaction = a
        self._amplitude = b
        self._asymptote = c
        self._span = {s: losses[s] - c for s in SPLITS}
        self._horizon = int(config.reference_steps)

    def _advance(self, p, steps):
        # Per-step decay factor chosen so reference_steps of constant p land
        # exactly on the law's endpoint from the construction-time losses.
        target_gap = self._amplitude * np.exp(-(self._interaction @ p))
        for split in SPLITS:
            ratio = (target_gap / self._span[split]) ** (steps / self._horizon)
            gap = self._losses[split] - self._asymptote
            self._losses[split] = self._asymptote + gap * ratio
        self.step += steps

    def gradient_alignment(self) -> np.ndarray:
        raise MixoptError("the static-law trainer has no gradient oracle")
