"""Self-stabilizing ranking: reset propagation, coin-based leader election,
liveness-checked ranking and the dispatcher that ties them together.

Every unranked agent carries a synthetic coin that flips each time it is the
responder. Ranked agents carry nothing but their rank.
"""

import math
from collections import Counter
from dataclasses import dataclass, field, replace

from .ranking import (
    InvalidParamsError,
    PhaseAgent,
    PhaseSchedule,
    Ranked,
    Waiting,
    ceil_log2,
    counter_bound,
    phase_schedule,
    ranking_transition,
)


class ContractError(RuntimeError):
    """A transition was called outside its precondition (a dispatcher bug)."""


@dataclass(frozen=True, slots=True)
class Resetting:
    coin: int
    reset_count: int
    delay_count: int

    @property
    def propagating(self) -> bool:
        return self.reset_count > 0

    @property
    def dormant(self) -> bool:
        return self.reset_count == 0


@dataclass(frozen=True, slots=True)
class Electing:
    coin: int
    le_count: int
    coin_count: int
    leader_done: int = 0
    is_leader: int = 0


@dataclass(frozen=True, slots=True)
class MainWaiting:
    coin: int
    alive_count: int
    wait_count: int


@dataclass(frozen=True, slots=True)
class MainPhase:
    coin: int
    alive_count: int
    phase: int


MAIN_TYPES = (Ranked, MainWaiting, MainPhase)
UNRANKED_TYPES = (Resetting, Electing, MainWaiting, MainPhase)


@dataclass(frozen=True)
class SSParams:
    """Population size and counter limits.

    ``l_max``, ``d_max`` and ``r_max`` default to ``ceil(c_live log2 n)``,
    ``l_max`` and ``ceil(2 log2 n)``. ``le_tick_on_dormant`` makes an electing
    initiator spend one unit of its election timer when it meets a dormant
    agent (off by default).
    """

    n: int
    c_wait: float = 2.0
    c_live: float = 4.0
    l_max: int = None
    d_max: int = None
    r_max: int = None
    le_tick_on_dormant: bool = False
    K: int = field(init=False)
    w_max: int = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParamsError(f"n must be >= 2, got {self.n}")
        if self.c_wait <= 0 or self.c_live <= 0:
            raise InvalidParamsError("c_wait and c_live must be positive")
        set_ = object.__setattr__
        set_(self, "K", ceil_log2(self.n))
        set_(self, "w_max", counter_bound(self.c_wait, self.n))
        if self.l_max is None:
            set_(self, "l_max", counter_bound(self.c_live, self.n))
        if self.d_max is None:
            set_(self, "d_max", self.l_max)
        if self.r_max is None:
            set_(self, "r_max", counter_bound(2.0, self.n))
        for name in ("l_max", "d_max", "r_max"):
            if getattr(self, name) < 1:
                raise InvalidParamsError(f"{name} must be >= 1")

    def electing_initial(self, coin: int) -> Electing:
        return Electing(coin, self.l_max, self.K, 0, 0)


def coin_of(s):
    return None if isinstance(s, Ranked) else s.coin


def trigger_reset(s, params: SSParams) -> Resetting:
    coin = 0 if isinstance(s, Ranked) else s.coin
    return Resetting(coin, params.r_max, params.d_max)


def _infect(s, reset_count: int, params: SSParams) -> Resetting:
    coin = 0 if isinstance(s, Ranked) else s.coin
    return Resetting(coin, reset_count, params.d_max)


def propagate_reset_transition(u, v, params: SSParams):
    u_res = isinstance(u, Resetting)
    v_res = isinstance(v, Resetting)
    if not (u_res or v_res):
        return u, v
    u_dormant = u_res and u.dormant
    v_dormant = v_res and v.dormant
    u_prop = u_res and u.propagating
    v_prop = v_res and v.propagating

    if u_prop and v_prop:
        top = max(u.reset_count, v.reset_count) - 1
        u = replace(u, reset_count=top)
        v = replace(v, reset_count=top)
    elif u_prop and not v_res:
        u = replace(u, reset_count=u.reset_count - 1)
        v = _infect(v, u.reset_count, params)
    elif v_prop and not u_res:
        v = replace(v, reset_count=v.reset_count - 1)
        u = _infect(u, v.reset_count, params)
    elif u_prop and v_dormant:
        u = replace(u, reset_count=u.reset_count - 1)
    elif v_prop and u_dormant:
        v = replace(v, reset_count=v.reset_count - 1)

    if u_dormant:
        u = _tick_dormant(u, params)
    if v_dormant:
        v = _tick_dormant(v, params)
    # an agent whose propagation ends with no delay left (only possible from an
    # arbitrary start) wakes at once, so Resetting(0, 0) is never left behind
    u = _wake_if_spent(u, params)
    v = _wake_if_spent(v, params)

    if params.le_tick_on_dormant and v_dormant and isinstance(u, Electing):
        le = u.le_count - 1
        u = trigger_reset(u, params) if le <= 0 else replace(u, le_count=le)
    return u, v


def _wake_if_spent(s, params: SSParams):
    if isinstance(s, Resetting) and s.reset_count == 0 and s.delay_count <= 0:
        return params.electing_initial(s.coin)
    return s


def _tick_dormant(s: Resetting, params: SSParams):
    delay = s.delay_count - 1
    if delay <= 0:
        return params.electing_initial(s.coin)
    return replace(s, delay_count=delay)


def fast_le_transition(u, v, params: SSParams):
    """One election step for initiator ``u``, reading the responder's coin."""
    if not isinstance(u, Electing) or isinstance(v, Ranked):
        raise ContractError(f"fast_le_transition needs an electing initiator and unranked responder: {u!r}, {v!r}")
    le = max(u.le_count - 1, 0)
    done, lead, cc = u.leader_done, u.is_leader, u.coin_count
    if v.coin == 0:
        done = 1
    if not done:
        if cc > 0:
            cc -= 1
        if cc == 0:
            lead, done = 1, 1

    if 2 * le >= params.l_max and lead == 1:
        return MainWaiting(u.coin, params.l_max, params.w_max), v
    if le == 0:
        return trigger_reset(u, params), v
    return Electing(u.coin, le, cc, done, lead), v


def is_productive_pair(u, v, n: int) -> bool:
    """Could this ordered pair make ranking progress (coin aside)?"""
    if not isinstance(v, (MainPhase, PhaseAgent)):
        return False
    if isinstance(u, (MainWaiting, Waiting)):
        return True
    return isinstance(u, Ranked) and u.rank <= (n >> v.phase)


def _project(s):
    if isinstance(s, MainWaiting):
        return Waiting(s.wait_count)
    if isinstance(s, MainPhase):
        return PhaseAgent(s.phase)
    return s


def _lift(before, after, alive):
    """Re-attach coin and liveness counter to a role produced by the base ranking."""
    if isinstance(after, Ranked):
        return after
    if isinstance(after, Waiting):
        return MainWaiting(before.coin, alive, after.wait_count)
    return MainPhase(before.coin, alive, after.phase)


def ranking_plus_transition(u, v, sched: PhaseSchedule, params: SSParams):
    if not (isinstance(u, MAIN_TYPES) and isinstance(v, MAIN_TYPES)):
        raise ContractError(f"ranking_plus_transition needs two main states: {u!r}, {v!r}")
    n = params.n

    # error detection
    if isinstance(u, Ranked) and isinstance(v, Ranked) and u.rank == v.rank:
        return trigger_reset(u, params), v
    if isinstance(u, MainWaiting) and isinstance(v, MainWaiting):
        return trigger_reset(u, params), v

    # liveness checking
    au = None if isinstance(u, Ranked) else u.alive_count
    av = None if isinstance(v, Ranked) else v.alive_count
    if au is not None and av is not None:
        au = av = max(max(au, av) - 1, 0)
        u = replace(u, alive_count=au)
    if isinstance(u, Ranked) and u.rank >= n - 1 and av is not None:
        av = max(av - 1, 0)
    if av is not None:
        v = replace(v, alive_count=av)
        if av == 0:
            return u, trigger_reset(v, params)

    if av is None:
        return u, v
    if v.coin == 0:
        if is_productive_pair(u, v, n):
            v = replace(v, alive_count=params.l_max)
        return u, v

    pu, pv = ranking_transition(_project(u), _project(v), sched, params)
    if isinstance(u, Ranked) and isinstance(pu, Waiting):
        nu = MainWaiting(0, params.l_max, pu.wait_count)
    else:
        nu = _lift(u, pu, au)
    return nu, _lift(v, pv, av)


def stable_transition(u, v, sched: PhaseSchedule, params: SSParams):
    if isinstance(u, Resetting) or isinstance(v, Resetting):
        u, v = propagate_reset_transition(u, v, params)
    else:
        if isinstance(u, Electing) and isinstance(v, Electing):
            u, v = fast_le_transition(u, v, params)
        if isinstance(u, Electing) and isinstance(v, MAIN_TYPES):
            u = MainPhase(u.coin, params.l_max, 1)
        elif isinstance(v, Electing) and isinstance(u, MAIN_TYPES):
            v = MainPhase(v.coin, params.l_max, 1)
        if isinstance(u, MAIN_TYPES) and isinstance(v, MAIN_TYPES):
            u, v = ranking_plus_transition(u, v, sched, params)
    if not isinstance(v, Ranked):
        v = replace(v, coin=1 - v.coin)
    return u, v


def is_reset_trigger(before, after, params: SSParams) -> bool:
    """Did this agent just trigger a reset (as opposed to being infected)?"""
    return (
        not isinstance(before, Resetting)
        and isinstance(after, Resetting)
        and after.reset_count == params.r_max
    )


def electing_state_count(params: SSParams) -> int:
    return (params.l_max + 1) * (params.K + 1) * 4


def ss_state_count(params: SSParams) -> int:
    reset = (params.r_max + 1) * (params.d_max + 1)
    main = (params.l_max + 1) * (params.w_max + params.K)
    return params.n + 2 * (reset + electing_state_count(params) + main)


def enumerate_ss_states(params: SSParams):
    """Yield every representable state (coins included)."""
    for r in range(1, params.n + 1):
        yield Ranked(r)
    for coin in (0, 1):
        for rc in range(params.r_max + 1):
            for dc in range(params.d_max + 1):
                yield Resetting(coin, rc, dc)
        for le in range(params.l_max + 1):
            for cc in range(params.K + 1):
                for done in (0, 1):
                    for lead in (0, 1):
                        yield Electing(coin, le, cc, done, lead)
        for alive in range(params.l_max + 1):
            for w in range(1, params.w_max + 1):
                yield MainWaiting(coin, alive, w)
            for k in range(1, params.K + 1):
                yield MainPhase(coin, alive, k)


def state_in_bounds(s, params: SSParams) -> bool:
    p = params
    if isinstance(s, Ranked):
        return 1 <= s.rank <= p.n
    if s.coin not in (0, 1):
        return False
    if isinstance(s, Resetting):
        return 0 <= s.reset_count <= p.r_max and 0 <= s.delay_count <= p.d_max
    if isinstance(s, Electing):
        return (
            0 <= s.le_count <= p.l_max
            and 0 <= s.coin_count <= p.K
            and s.leader_done in (0, 1)
            and s.is_leader in (0, 1)
        )
    if isinstance(s, MainWaiting):
        return 0 <= s.alive_count <= p.l_max and 1 <= s.wait_count <= p.w_max
    if isinstance(s, MainPhase):
        return 0 <= s.alive_count <= p.l_max and 1 <= s.phase <= p.K
    return False


def _states(config):
    return getattr(config, "states", config)


def is_valid_ranking(config) -> bool:
    """Ranks of the population form a permutation of 1..n."""
    states = _states(config)
    n = len(states)
    seen = set()
    for s in states:
        if not isinstance(s, Ranked) or not 1 <= s.rank <= n or s.rank in seen:
            return False
        seen.add(s.rank)
    return True


def configuration_labels(config, params: SSParams) -> list:
    """Every configuration class the population belongs to, in priority order."""
    states = _states(config)
    n = len(states)
    p = params
    labels = []
    if is_valid_ranking(states):
        labels.append("C_L")
    if any(isinstance(s, Resetting) and s.propagating for s in states):
        labels.append("C_T")
    if all(isinstance(s, Electing) for s in states):
        if (
            all(8 * s.le_count >= 7 * p.l_max and s.leader_done == 1 for s in states)
            and sum(s.is_leader for s in states) == 1
        ):
            labels.append("C_SR+")
    initial = {p.electing_initial(0), p.electing_initial(1)}
    if all((isinstance(s, Resetting) and s.dormant and s.delay_count > 0) or s in initial for s in states):
        coins = Counter(s.coin for s in states)
        if abs(coins[1] - coins[0]) * 4 * math.log2(n) <= n:
            labels.append("C_LE")
    if all(isinstance(s, MAIN_TYPES) for s in states):
        labels.append("C_Main")
    labels.append("other")
    return labels


def classify_configuration(config, params: SSParams) -> str:
    return configuration_labels(config, params)[0]


class StableProtocol:
    """Self-stabilizing ranking with its schedule and parameters bound."""

    name = "stable"

    def __init__(self, params: SSParams):
        self.params = params
        self.sched = phase_schedule(params.n)

    def transition(self, u, v):
        return stable_transition(u, v, self.sched, self.params)

    def output(self, s):
        return s.rank if isinstance(s, Ranked) else None
