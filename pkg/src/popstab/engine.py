"""Uniform random scheduler: pair drawing, stepping, bounded runs and silence checks.

This is the generic path for any object with ``transition(u, v)``; the
built-in protocols also have a compiled loop in :mod:`popstab._kernels`
that consumes the same random stream.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .rng import InvalidPopulationError, Rng, derive_replica_seed, draw_pair

__all__ = [
    "Configuration",
    "InteractionEvent",
    "RunOutcome",
    "Rng",
    "derive_replica_seed",
    "draw_pair",
    "is_silent",
    "run_until",
    "step",
]


@dataclass
class Configuration:
    states: list
    step_count: int = 0

    def __post_init__(self):
        self.states = list(self.states)
        if len(self.states) < 2:
            raise InvalidPopulationError(f"population size must be >= 2, got {len(self.states)}")

    @property
    def n(self) -> int:
        return len(self.states)

    def counts(self) -> dict:
        """Occupancy count per distinct state."""
        out = {}
        for s in self.states:
            out[s] = out.get(s, 0) + 1
        return out

    def copy(self) -> "Configuration":
        return Configuration(list(self.states), self.step_count)


class InteractionEvent(NamedTuple):
    step: int
    initiator: int
    responder: int
    changed: bool
    old: tuple
    new: tuple


@dataclass
class RunOutcome:
    stop_reason: str  # "predicate_met" or "budget_exhausted"
    interactions_used: int
    final_configuration: Configuration = field(repr=False)


def step(protocol, config: Configuration, rng: Rng, observers=()) -> bool:
    i, j = draw_pair(rng, config.n)
    states = config.states
    old = (states[i], states[j])
    new = protocol.transition(*old)
    states[i], states[j] = new
    config.step_count += 1
    changed = new[0] != old[0] or new[1] != old[1]
    if observers:
        event = InteractionEvent(config.step_count, i, j, changed, old, tuple(new))
        for obs in observers:
            obs(event)
    return changed


def run_until(
    protocol,
    config: Configuration,
    rng: Rng,
    stop_predicate: Callable[[Configuration], bool],
    budget: int,
    observers=(),
) -> RunOutcome:
    if budget < 0:
        raise ValueError("budget must be non-negative")
    used = 0
    while True:
        if stop_predicate(config):
            return RunOutcome("predicate_met", used, config)
        if used >= budget:
            return RunOutcome("budget_exhausted", used, config)
        step(protocol, config, rng, observers)
        used += 1


def is_silent_reference(protocol, config) -> bool:
    """True iff no interaction between two distinct agents can change a state.

    Works over distinct state values; a state meets itself only when at least
    two agents hold it.
    """
    states = getattr(config, "states", config)
    counts = {}
    for s in states:
        counts[s] = counts.get(s, 0) + 1
    for a in counts:
        for b in counts:
            if a == b and counts[a] < 2:
                continue
            if protocol.transition(a, b) != (a, b):
                return False
    return True


def is_silent(protocol, config) -> bool:
    """Same answer as :func:`is_silent_reference`, compiled for the built-in protocols."""
    from .codec import compiled_is_silent

    states = getattr(config, "states", config)
    fast = compiled_is_silent(protocol, states)
    if fast is None:
        return is_silent_reference(protocol, states)
    return fast
