"""Non-self-stabilizing ranking: phase schedule, rank assignment and the
leader-election dispatcher with a pluggable election stage.

States are small frozen dataclasses; exactly one role is live per agent.
``log n`` is base 2 throughout.
"""

import math
from dataclasses import dataclass, replace


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


def counter_bound(c: float, n: int) -> int:
    """``ceil(c * log2 n)``, clamped below at 1."""
    return max(1, math.ceil(c * math.log2(n)))


class InvalidParamsError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Ranked:
    rank: int


@dataclass(frozen=True, slots=True)
class Waiting:
    wait_count: int


@dataclass(frozen=True, slots=True)
class PhaseAgent:
    phase: int


@dataclass(frozen=True, slots=True)
class LeaderElecting:
    le_state: object
    leader_done: int = 0


@dataclass(frozen=True)
class PhaseSchedule:
    """Rank boundaries ``f_1 > f_2 > ... > f_{K+1} = 1``.

    Phase ``k`` hands out the ranks ``f_{k+1} + 1 .. f_k``.
    """

    n: int
    bounds: tuple

    @property
    def K(self) -> int:
        return len(self.bounds) - 1

    def f(self, k: int) -> int:
        return self.bounds[k - 1]

    def phase_ranks(self, k: int) -> range:
        return range(self.f(k + 1) + 1, self.f(k) + 1)


def phase_schedule(n: int) -> PhaseSchedule:
    if n < 2:
        raise InvalidParamsError(f"n must be >= 2, got {n}")
    K = ceil_log2(n)
    f = [n]
    for _ in range(K - 1):
        f.append(-(-f[-1] // 2))
    f.append(1)
    return PhaseSchedule(n, tuple(f))


@dataclass(frozen=True)
class NonSSParams:
    n: int
    c_wait: float = 2.0

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParamsError(f"n must be >= 2, got {self.n}")
        if self.c_wait <= 0:
            raise InvalidParamsError("c_wait must be positive")

    @property
    def K(self) -> int:
        return ceil_log2(self.n)

    @property
    def w_max(self) -> int:
        return counter_bound(self.c_wait, self.n)


@dataclass(frozen=True, slots=True)
class OracleLEState:
    """Substate of the oracle election: only the designated agent counts meetings."""

    designated: bool = False
    meetings: int = 0
    is_leader: int = 0


class OracleLeaderElection:
    """Deterministic stand-in for a real leader election.

    The designated agent finishes on its ``ceil(log2 n)``-th meeting with
    another electing agent and becomes the leader; everyone else stays a
    non-leader forever. ``num_states`` counts the two substates
    (designated / plain); the designated agent's meeting counter is
    scaffolding and not part of the audited state space.
    """

    num_states = 2

    def __init__(self, n: int):
        self.n = n
        self.rounds = max(1, ceil_log2(n))

    def initial(self, designated: bool) -> LeaderElecting:
        return LeaderElecting(OracleLEState(designated=designated), 0)

    def is_leader(self, le_state: OracleLEState) -> int:
        return le_state.is_leader

    def _advance(self, s: LeaderElecting) -> LeaderElecting:
        q = s.le_state
        if not q.designated or s.leader_done:
            return s
        m = q.meetings + 1
        if m >= self.rounds:
            return LeaderElecting(replace(q, meetings=m, is_leader=1), 1)
        return LeaderElecting(replace(q, meetings=m), s.leader_done)

    def transition(self, u: LeaderElecting, v: LeaderElecting):
        return self._advance(u), self._advance(v)


def ranking_transition(u, v, sched: PhaseSchedule, params: NonSSParams):
    """Rank assignment between two agents that are done electing.

    The branch is picked by the initiator's role at the start of the
    interaction, so a leader that just turned waiting does not also count
    down in the same step.
    """
    if not isinstance(v, PhaseAgent):
        return u, v
    K = sched.K

    if isinstance(u, Ranked):
        r = u.rank
        k = v.phase
        width = sched.f(k) - sched.f(k + 1)
        if 1 <= r <= width:
            v = Ranked(sched.f(k + 1) + r)
            if r < width:
                u = Ranked(r + 1)
            elif k < K:
                u = Waiting(params.w_max)
        # the holder of f_k announces the next phase; never past phase K
        if r == sched.f(k) and isinstance(v, PhaseAgent) and k < K:
            v = PhaseAgent(k + 1)

    elif isinstance(u, PhaseAgent):
        top = max(u.phase, v.phase)
        u, v = PhaseAgent(top), PhaseAgent(top)

    elif isinstance(u, Waiting):
        w = u.wait_count - 1
        u = Ranked(1) if w <= 0 else Waiting(w)

    return u, v


def _is_done_leader(s, le) -> bool:
    return isinstance(s, LeaderElecting) and s.leader_done == 1 and le.is_leader(s.le_state) == 1


def space_efficient_transition(u, v, le, sched: PhaseSchedule, params: NonSSParams):
    u_le = isinstance(u, LeaderElecting)
    v_le = isinstance(v, LeaderElecting)
    if u_le and v_le:
        u, v = le.transition(u, v)

    if _is_done_leader(u, le):
        return Waiting(params.w_max), v
    if _is_done_leader(v, le):
        return u, Waiting(params.w_max)

    u_le = isinstance(u, LeaderElecting)
    v_le = isinstance(v, LeaderElecting)
    if u_le != v_le:
        if u_le:
            u = PhaseAgent(1)
        else:
            v = PhaseAgent(1)
        return u, v

    if not u_le and not v_le:
        return ranking_transition(u, v, sched, params)
    return u, v


def nonss_state_count(params: NonSSParams, le_states: int = OracleLeaderElection.num_states) -> int:
    return params.n + params.w_max + params.K + 2 * le_states


def enumerate_nonss_states(params: NonSSParams, le_states=(OracleLEState(False), OracleLEState(True))):
    """Every representable state, with ``le_states`` standing for the election substates."""
    out = [LeaderElecting(q, d) for q in le_states for d in (0, 1)]
    out += [Waiting(w) for w in range(1, params.w_max + 1)]
    out += [PhaseAgent(k) for k in range(1, params.K + 1)]
    out += [Ranked(r) for r in range(1, params.n + 1)]
    return out


def is_start_ranking_config(config, params: NonSSParams, le=None) -> bool:
    """Membership in the start-ranking set: one full waiting leader, no ranks yet."""
    states = getattr(config, "states", config)
    waiting = 0
    for s in states:
        if isinstance(s, Waiting):
            if s.wait_count != params.w_max:
                return False
            waiting += 1
        elif isinstance(s, PhaseAgent):
            if s.phase != 1:
                return False
        elif isinstance(s, LeaderElecting):
            leader = le.is_leader(s.le_state) if le is not None else getattr(s.le_state, "is_leader", 0)
            if leader:
                return False
        else:
            return False
    return waiting == 1


class NonSSProtocol:
    """Space-efficient ranking bundled with its schedule and election plugin."""

    name = "nonss"

    def __init__(self, params: NonSSParams, le=None):
        self.params = params
        self.sched = phase_schedule(params.n)
        self.le = le if le is not None else OracleLeaderElection(params.n)

    def transition(self, u, v):
        return space_efficient_transition(u, v, self.le, self.sched, self.params)

    def output(self, s):
        return s.rank if isinstance(s, Ranked) else None

    def initial_configuration(self):
        n = self.params.n
        return [self.le.initial(designated=(i == 0)) for i in range(n)]
