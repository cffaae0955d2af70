import itertools
import math

import pytest

from popstab.ranking import Ranked, phase_schedule
from popstab.stable import (
    ContractError,
    Electing,
    MainPhase,
    MainWaiting,
    Resetting,
    SSParams,
    StableProtocol,
    classify_configuration,
    configuration_labels,
    electing_state_count,
    enumerate_ss_states,
    fast_le_transition,
    is_productive_pair,
    is_valid_ranking,
    propagate_reset_transition,
    ranking_plus_transition,
    ss_state_count,
    stable_transition,
    state_in_bounds,
    trigger_reset,
)

P16 = SSParams(16)


def test_params_defaults():
    p = SSParams(256)
    assert (p.K, p.w_max, p.l_max, p.d_max, p.r_max) == (8, 16, 32, 32, 16)
    with pytest.raises(ValueError):
        SSParams(1)


def test_trigger_reset_examples():
    p = P16
    assert trigger_reset(Ranked(17), p) == Resetting(0, p.r_max, p.d_max)
    assert trigger_reset(MainPhase(1, 5, 3), p) == Resetting(1, p.r_max, p.d_max)
    for s in enumerate_ss_states(p):
        if not isinstance(s, Ranked):
            once = trigger_reset(s, p)
            assert trigger_reset(once, p) == once


def test_propagate_reset_examples():
    p = P16
    el = p.electing_initial(1)
    u, v = propagate_reset_transition(Resetting(0, 5, p.d_max), el, p)
    assert u == Resetting(0, 4, p.d_max) and v == Resetting(1, 4, p.d_max)
    u, v = propagate_reset_transition(Resetting(0, 3, 2), Resetting(1, 7, 2), p)
    assert (u.reset_count, v.reset_count) == (6, 6)
    for partner in (Ranked(3), el, MainPhase(0, 4, 2), Resetting(1, 0, 5)):
        _, v = propagate_reset_transition(partner, Resetting(1, 0, 1), p)
        assert v == Electing(1, p.l_max, p.K, 0, 0)


def test_propagate_reset_ranked_target_gets_coin_zero():
    p = P16
    u, v = propagate_reset_transition(Resetting(1, 4, 3), Ranked(9), p)
    assert u == Resetting(1, 3, 3) and v == Resetting(0, 3, p.d_max)


def test_propagate_meets_dormant():
    p = P16
    u, v = propagate_reset_transition(Resetting(0, 4, 3), Resetting(1, 0, 6), p)
    assert u == Resetting(0, 3, 3) and v == Resetting(1, 0, 5)


def test_propagate_identity_without_resetting():
    p = P16
    for u, v in [(Ranked(1), Ranked(2)), (p.electing_initial(0), MainPhase(1, 3, 1))]:
        assert propagate_reset_transition(u, v, p) == (u, v)


def test_fast_le_examples():
    p = P16
    u, _ = fast_le_transition(Electing(0, p.l_max, 1, 0, 0), Electing(1, 3, 2, 0, 0), p)
    assert u == MainWaiting(0, p.l_max, p.w_max)
    u, _ = fast_le_transition(Electing(1, 5, 3, 0, 0), Electing(0, 9, 2, 0, 0), p)
    assert u == Electing(1, 4, 3, 1, 0)
    u, _ = fast_le_transition(Electing(1, 1, 2, 1, 0), Electing(1, 4, 2, 0, 0), p)
    assert u == Resetting(1, p.r_max, p.d_max)


def test_fast_le_contract():
    p = P16
    with pytest.raises(ContractError):
        fast_le_transition(Ranked(1), Electing(1, 4, 2, 0, 0), p)
    with pytest.raises(ContractError):
        fast_le_transition(Electing(1, 4, 2, 0, 0), Ranked(3), p)


def test_productive_pair_examples():
    assert is_productive_pair(Ranked(2), MainPhase(0, 3, 2), 8)
    assert not is_productive_pair(Ranked(3), MainPhase(0, 3, 2), 8)
    assert is_productive_pair(MainWaiting(0, 3, 4), MainPhase(1, 3, 3), 8)
    assert not is_productive_pair(MainPhase(0, 3, 1), MainPhase(1, 3, 3), 8)


def _rp(u, v, n=8, **kw):
    p = SSParams(n, **kw)
    return ranking_plus_transition(u, v, phase_schedule(n), p), p


def test_ranking_plus_duplicate_rank_resets_initiator():
    (u, v), p = _rp(Ranked(9), Ranked(9), n=16)
    assert u == Resetting(0, p.r_max, p.d_max) and v == Ranked(9)


def test_ranking_plus_two_waiting_reset():
    (u, v), p = _rp(MainWaiting(1, 4, 2), MainWaiting(0, 5, 3))
    assert u == Resetting(1, p.r_max, p.d_max) and v == MainWaiting(0, 5, 3)


def test_ranking_plus_liveness_max_minus_one():
    (u, v), p = _rp(MainWaiting(1, 5, 3), MainPhase(0, 9, 2), n=16)
    # both counters become 8, then v's coin is 0 and the pair is productive
    assert u == MainWaiting(1, 8, 3)
    assert v == MainPhase(0, p.l_max, 2)
    (u, v), p = _rp(MainWaiting(1, 5, 3), MainPhase(1, 9, 2), n=16)
    assert u == MainWaiting(1, 8, 2) and v == MainPhase(1, 8, 2)


def test_ranking_plus_assigns_rank_and_leader_waits():
    (u, v), p = _rp(Ranked(4), MainPhase(1, 7, 1))
    assert v == Ranked(8)
    assert u == MainWaiting(0, p.l_max, p.w_max)


def test_ranking_plus_expired_counter_resets_responder():
    n = 8
    (u, v), p = _rp(Ranked(n), MainPhase(0, 1, 2), n=n)
    assert u == Ranked(n)
    assert v == Resetting(0, p.r_max, p.d_max)


def test_ranking_plus_contract():
    p = P16
    with pytest.raises(ContractError):
        ranking_plus_transition(Resetting(0, 1, 1), Ranked(2), phase_schedule(16), p)


def _st(u, v, p=P16):
    return stable_transition(u, v, phase_schedule(p.n), p)


def test_stable_transition_examples():
    p = P16
    u, v = _st(Electing(1, 9, 3, 0, 0), Ranked(3))
    assert u == MainPhase(1, p.l_max, 1) and v == Ranked(3)
    # untouched unranked responder still toggles its coin
    u, v = _st(Ranked(3), MainPhase(0, 9, 4))
    assert v.coin == 1
    # a responder that becomes ranked keeps no coin
    n = 8
    p8 = SSParams(n)
    u, v = _st(Ranked(4), MainPhase(1, 7, 1), p8)
    assert v == Ranked(8)
    # reset handled alone, coin of v toggles
    el = p.electing_initial(0)
    u, v = _st(Resetting(1, 4, p.d_max), el)
    assert u == Resetting(1, 3, p.d_max) and v == Resetting(1, 3, p.d_max)


def test_state_counts():
    p = SSParams(16)
    assert ss_state_count(p) == len(set(enumerate_ss_states(p)))
    assert electing_state_count(p) == (p.l_max + 1) * (p.K + 1) * 4
    ratios = []
    for e in range(7, 14):
        n = 2**e
        q = SSParams(n)
        ratios.append((ss_state_count(q) - n) / math.log2(n) ** 2)
    assert max(ratios) < 100
    assert max(ratios) / min(ratios) < 1.1


def test_all_transitions_stay_in_bounds_n5():
    p = SSParams(5, r_max=2, d_max=2)
    states = list(enumerate_ss_states(p))
    s = phase_schedule(5)
    for u, v in itertools.product(states, repeat=2):
        u2, v2 = stable_transition(u, v, s, p)
        assert state_in_bounds(u2, p) and state_in_bounds(v2, p)
        assert not (isinstance(u2, Resetting) and u2.reset_count == 0 and u2.delay_count == 0 and u != u2)
        if not isinstance(v, Ranked) and not isinstance(v2, Ranked):
            assert v2.coin != v.coin


def test_phase_only_grows_outside_reset():
    p = SSParams(8)
    s = phase_schedule(8)
    states = [st for st in enumerate_ss_states(p) if not isinstance(st, (Resetting, Electing))]
    for u, v in itertools.product(states, repeat=2):
        for before, after in zip((u, v), stable_transition(u, v, s, p)):
            if isinstance(before, MainPhase) and isinstance(after, MainPhase):
                assert after.phase >= before.phase


def test_classify_examples():
    p = SSParams(8)
    assert classify_configuration([Ranked(r) for r in range(1, 9)], p) == "C_L"
    cfg = [Resetting(0, p.r_max, p.d_max)] + [Ranked(r) for r in range(2, 9)]
    assert classify_configuration(cfg, p) == "C_T"
    cfg = [p.electing_initial(c) for c in (0, 1) * 4]
    assert classify_configuration(cfg, p) == "C_LE"
    assert "C_LE" in configuration_labels(cfg, p)
    cfg = [Electing(0, p.l_max, 1, 1, 1)] + [Electing(1, p.l_max, 2, 1, 0)] * 7
    assert classify_configuration(cfg, p) == "C_SR+"
    cfg = [Ranked(1), MainPhase(0, 3, 1)] + [Ranked(r) for r in range(3, 9)]
    assert classify_configuration(cfg, p) == "C_Main"
    cfg = [Electing(0, 2, 1, 0, 0), Ranked(1)] + [Ranked(r) for r in range(3, 9)]
    assert classify_configuration(cfg, p) == "other"


def test_valid_ranking_examples():
    assert is_valid_ranking([Ranked(1), Ranked(2), Ranked(3)])
    assert not is_valid_ranking([Ranked(1), Ranked(2), Ranked(2)])
    assert not is_valid_ranking([Ranked(1), Ranked(2), MainPhase(0, 3, 1)])


def test_protocol_object():
    proto = StableProtocol(P16)
    assert proto.name == "stable"
    assert proto.output(Ranked(4)) == 4
    assert proto.output(MainPhase(0, 1, 1)) is None
