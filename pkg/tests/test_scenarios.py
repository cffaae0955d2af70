from collections import Counter

import pytest

from popstab.ranking import NonSSParams, Ranked
from popstab.rng import Rng
from popstab.scenarios import NONSS_KINDS, STABLE_KINDS, InvalidScenarioError, ScenarioSpec, build
from popstab.stable import (
    Electing,
    MainPhase,
    Resetting,
    SSParams,
    classify_configuration,
    is_valid_ranking,
    state_in_bounds,
)


def test_fig2_adversarial_n256():
    n = 256
    p = SSParams(n)
    cfg = build(ScenarioSpec("fig2_adversarial", n), p, Rng(1))
    ranked = sorted(s.rank for s in cfg.states if isinstance(s, Ranked))
    assert ranked == list(range(2, n + 1))
    phase = [s for s in cfg.states if isinstance(s, MainPhase)]
    assert len(phase) == 1 and phase[0].alive_count == p.l_max and phase[0].phase == 1
    assert not is_valid_ranking(cfg)
    assert classify_configuration(cfg.states, p) not in ("C_L", "C_T")
    assert not any(isinstance(s, Resetting) for s in cfg.states)


def test_duplicate_ranks_example():
    cfg = build(ScenarioSpec("duplicate_ranks", 4, dup_rank=3), SSParams(4), Rng(0))
    assert Counter(s.rank for s in cfg.states) == Counter([1, 2, 3, 3])
    cfg = build(ScenarioSpec("duplicate_ranks", 4, dup_rank=4), SSParams(4), Rng(0))
    assert Counter(s.rank for s in cfg.states) == Counter([1, 2, 4, 4])


def test_random_arbitrary_reproducible():
    p = SSParams(32)
    a = build(ScenarioSpec("random_arbitrary", 32, seed=9), p, Rng(1))
    b = build(ScenarioSpec("random_arbitrary", 32, seed=9), p, Rng(2))
    assert a.states == b.states
    c = build(ScenarioSpec("random_arbitrary", 32), p, Rng(5))
    d = build(ScenarioSpec("random_arbitrary", 32), p, Rng(5))
    assert c.states == d.states


def test_other_kinds():
    n = 16
    p = SSParams(n)
    cfg = build(ScenarioSpec("fresh_triggered", n), p, Rng(0))
    assert all(s.reset_count == p.r_max and s.delay_count == p.d_max for s in cfg.states)
    cfg = build(ScenarioSpec("all_electing", n), p, Rng(0))
    assert all(s == p.electing_initial(s.coin) for s in cfg.states)
    cfg = build(ScenarioSpec("lone_unranked", n), p, Rng(0))
    assert sorted(s.rank for s in cfg.states if isinstance(s, Ranked)) == list(range(1, n))
    cfg = build(ScenarioSpec("fig3_leader", n), p, Rng(0))
    assert cfg.states[0] == Ranked(1) and all(isinstance(s, Electing) for s in cfg.states[1:])


@pytest.mark.parametrize("kind", STABLE_KINDS)
def test_every_state_in_bounds(kind):
    for n in (2, 3, 17, 64):
        p = SSParams(n)
        for seed in range(5):
            cfg = build(ScenarioSpec(kind, n, seed=seed), p, Rng(seed))
            assert len(cfg.states) == n
            assert all(state_in_bounds(s, p) for s in cfg.states)


def test_aliases_and_protocol():
    assert ScenarioSpec("fig2", 8).kind == "fig2_adversarial"
    assert ScenarioSpec("canonical", 8).protocol == "nonss"
    assert ScenarioSpec("random", 8).protocol == "stable"
    assert NONSS_KINDS == ("canonical",)


def test_invalid_specs():
    with pytest.raises(InvalidScenarioError):
        ScenarioSpec("nonsense", 8)
    with pytest.raises(InvalidScenarioError):
        ScenarioSpec("fig2", 1)
    with pytest.raises(InvalidScenarioError):
        ScenarioSpec("duplicate_ranks", 4, dup_rank=5)
    with pytest.raises(InvalidScenarioError):
        build(ScenarioSpec("fig2", 8), SSParams(9), Rng(0))
    with pytest.raises(InvalidScenarioError):
        build(ScenarioSpec("fig2", 8), NonSSParams(8), Rng(0))
    with pytest.raises(InvalidScenarioError):
        build(ScenarioSpec("canonical", 8), SSParams(8), Rng(0))
