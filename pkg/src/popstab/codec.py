"""Translation between state dataclasses and kernel rows."""

import numpy as np

from . import _kernels

from ._kernels import (
    ELECT,
    LE,
    NF,
    PHASE,
    PROTO_NONSS,
    PROTO_STABLE,
    RANKED,
    RESET,
    WAIT,
)
from .ranking import LeaderElecting, NonSSProtocol, OracleLEState, PhaseAgent, Ranked, Waiting
from .stable import Electing, MainPhase, MainWaiting, Resetting, StableProtocol


def encode_state(s) -> tuple:
    if isinstance(s, Ranked):
        return (RANKED, 0, s.rank, 0, 0, 0)
    if isinstance(s, Resetting):
        return (RESET, s.coin, s.reset_count, s.delay_count, 0, 0)
    if isinstance(s, Electing):
        return (ELECT, s.coin, s.le_count, s.coin_count, s.leader_done, s.is_leader)
    if isinstance(s, MainWaiting):
        return (WAIT, s.coin, s.alive_count, s.wait_count, 0, 0)
    if isinstance(s, MainPhase):
        return (PHASE, s.coin, s.alive_count, s.phase, 0, 0)
    if isinstance(s, Waiting):
        return (WAIT, 0, 0, s.wait_count, 0, 0)
    if isinstance(s, PhaseAgent):
        return (PHASE, 0, 0, s.phase, 0, 0)
    if isinstance(s, LeaderElecting):
        q = s.le_state
        if not isinstance(q, OracleLEState):
            raise TypeError("the compiled path only supports the oracle leader election")
        return (LE, 0, int(q.designated), q.meetings, s.leader_done, q.is_leader)
    raise TypeError(f"cannot encode {s!r}")


def decode_row(row, family: str):
    kind, coin, a, b, c, d = (int(x) for x in row)
    if kind == RANKED:
        return Ranked(a)
    if family == "stable":
        if kind == RESET:
            return Resetting(coin, a, b)
        if kind == ELECT:
            return Electing(coin, a, b, c, d)
        if kind == WAIT:
            return MainWaiting(coin, a, b)
        if kind == PHASE:
            return MainPhase(coin, a, b)
    else:
        if kind == WAIT:
            return Waiting(b)
        if kind == PHASE:
            return PhaseAgent(b)
        if kind == LE:
            return LeaderElecting(OracleLEState(bool(a), b, d), c)
    raise ValueError(f"cannot decode row {row!r} for {family}")


def encode_states(states) -> np.ndarray:
    S = np.empty((len(states), NF), np.int64)
    for x, s in enumerate(states):
        S[x] = encode_state(s)
    return S


def decode_states(S, family: str) -> list:
    return [decode_row(row, family) for row in S]


def kernel_params(protocol):
    """``(p, proto_id, family)`` for a built-in protocol object.

    ``p`` is the int tuple laid out as ``P_N .. P_ROUNDS``.
    """
    q = protocol.params
    if isinstance(protocol, StableProtocol):
        p = (q.n, q.K, q.w_max, q.l_max, q.d_max, q.r_max, int(q.le_tick_on_dormant), 0)
        return p, PROTO_STABLE, "stable"
    if isinstance(protocol, NonSSProtocol):
        p = (q.n, q.K, q.w_max, 0, 0, 0, 0, protocol.le.rounds)
        return p, PROTO_NONSS, "nonss"
    raise TypeError(f"no compiled kernel for {type(protocol).__name__}")


def supports(protocol) -> bool:
    """Whether ``protocol`` has a compiled counterpart."""
    if isinstance(protocol, StableProtocol):
        return True
    return isinstance(protocol, NonSSProtocol) and type(protocol.le).__name__ == "OracleLeaderElection"


def compiled_transition(protocol, u, v):
    """Kernel evaluation of one interaction, decoded back to state objects."""
    p, proto, family = kernel_params(protocol)
    u2, v2, _ = _kernels.transition(encode_state(u), encode_state(v), p, proto)
    return decode_row(u2, family), decode_row(v2, family)


def compiled_is_silent(protocol, states):
    """Silence check in the kernel, or ``None`` when the protocol is not built in."""
    if not supports(protocol):
        return None
    counts = {}
    for s in states:
        counts[s] = counts.get(s, 0) + 1
    distinct = list(counts)
    try:
        U = encode_states(distinct)
    except TypeError:
        return None
    c = np.array([counts[s] for s in distinct], np.int64)
    p, proto, _ = kernel_params(protocol)
    return bool(_kernels.is_silent_rows(U, c, p, proto))
