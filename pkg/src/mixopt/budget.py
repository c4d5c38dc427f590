"""Extra-step budget accounting for mixing methods.

Every method gets one final run of S steps for free.  Anything else it
trains (sweep runs, reference models, proxy runs, per-group probes) is
"extra" and must fit an allowance: 10 * S in the unrestricted setting and
S / 2 in the restricted one.  The ledger enforces the allowance and keeps
an itemized account; the allocation table says how each method splits its
allowance into runs under either setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BudgetError, ConfigError

UNRESTRICTED = "unrestricted"
RESTRICTED = "restricted"

# Methods whose learning phase consumes extra budget.  The stratified
# baseline and the interleaved online method train only their final run.
_SWEEP_METHODS = ("grid_search", "dml")

# (setting, method, num_groups) -> (runs, steps per run) overrides where the
# published allocations deviate from the closed-form rules below.
_ALLOCATION_OVERRIDES = {
    (RESTRICTED, "skill_it", 7): (7, 2814),
}


def extra_allowance(setting: str, final_steps: int) -> int:
    """Total extra steps a method may consume under a budget setting."""
    if setting == UNRESTRICTED:
        return 10 * final_steps
    if setting == RESTRICTED:
        return final_steps // 2
    raise ConfigError(f"unknown budget setting {setting!r}")


@dataclass(frozen=True)
class RunAllocation:
    """How a method splits its extra budget into training runs."""

    runs: int
    steps_per_run: int

    @property
    def total(self) -> int:
        return self.runs * self.steps_per_run


def allocation(setting: str, method: str, num_groups: int,
               final_steps: int) -> RunAllocation:
    """Published run allocation for a method's learning phase.

    Sweep methods (grid search and the static-law fit) use 10 runs, the
    skills-graph method one run per group, the reference-model method two
    runs, and the gradient-alignment method a single proxy run.  Restricted
    allocations shorten the runs so the total stays within half a final run.
    """
    override = _ALLOCATION_OVERRIDES.get((setting, method, num_groups))
    if override is not None:
        return RunAllocation(*override)
    if setting == UNRESTRICTED:
        per_run = {
            "grid_search": final_steps,
            "dml": final_steps,
            "skill_it": final_steps,
            "doremi": final_steps,
            "doge": final_steps,
        }
    elif setting == RESTRICTED:
        per_run = {
            "grid_search": final_steps // 20,
            "dml": final_steps // 20,
            "skill_it": final_steps // (2 * num_groups),
            "doremi": final_steps // 4,
            "doge": final_steps // 2,
        }
    else:
        raise ConfigError(f"unknown budget setting {setting!r}")
    runs = {
        "grid_search": 10,
        "dml": 10,
        "skill_it": num_groups,
        "doremi": 2,
        "doge": 1,
    }
    if method not in runs:
        raise ConfigError(f"method {method!r} has no budgeted learning phase")
    return RunAllocation(runs[method], per_run[method])


@dataclass
class BudgetLedger:
    """Tracks extra training steps consumed against an allowance."""

    final_steps: int
    allowance: int
    consumed: dict = field(default_factory=dict)

    @classmethod
    def for_setting(cls, setting: str, final_steps: int) -> "BudgetLedger":
        return cls(final_steps=final_steps,
                   allowance=extra_allowance(setting, final_steps))

    @property
    def total_consumed(self) -> int:
        return sum(self.consumed.values())

    @property
    def remaining(self) -> int:
        return self.allowance - self.total_consumed

    def check(self, steps: int) -> None:
        """Raise BudgetError if charging ``steps`` would exceed the allowance."""
        if steps > self.remaining:
            raise BudgetError(
                f"requested {steps} extra steps with only {self.remaining} of "
                f"{self.allowance} remaining")

    def charge(self, purpose: str, steps: int) -> None:
        """Record ``steps`` of extra training under an itemized purpose."""
        if steps < 0:
            raise BudgetError(f"cannot charge a negative step count: {steps}")
        self.check(steps)
        self.consumed[purpose] = self.consumed.get(purpose, 0) + steps

    def to_dict(self) -> dict:
        return {
            "final_steps": self.final_steps,
            "allowance": self.allowance,
            "consumed": dict(sorted(self.consumed.items())),
            "total_consumed": self.total_consumed,
        }
