"""Initial configurations: canonical starts and adversarial ones."""

from dataclasses import dataclass

import numpy as np

from .engine import Configuration
from .ranking import NonSSParams, OracleLeaderElection, Ranked
from .stable import MainPhase, Resetting, SSParams, enumerate_ss_states

STABLE_KINDS = (
    "fresh_triggered",
    "all_electing",
    "fig2_adversarial",
    "duplicate_ranks",
    "lone_unranked",
    "random_arbitrary",
    "fig3_leader",
)
NONSS_KINDS = ("canonical",)

ALIASES = {
    "fig2": "fig2_adversarial",
    "fig3": "fig3_leader",
    "duplicate": "duplicate_ranks",
    "lone": "lone_unranked",
    "random": "random_arbitrary",
    "triggered": "fresh_triggered",
    "electing": "all_electing",
}


class InvalidScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    """What to build. ``dup_rank`` only applies to ``duplicate_ranks``;
    ``seed``, when set, makes the build independent of the run's generator."""

    kind: str
    n: int
    dup_rank: int = None
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ALIASES.get(self.kind, self.kind))
        if self.kind not in STABLE_KINDS + NONSS_KINDS:
            raise InvalidScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.n < 2:
            raise InvalidScenarioError(f"n must be >= 2, got {self.n}")
        if self.dup_rank is not None and not 1 <= self.dup_rank <= self.n:
            raise InvalidScenarioError(f"dup_rank must lie in [1, {self.n}]")

    @property
    def protocol(self) -> str:
        return "nonss" if self.kind in NONSS_KINDS else "stable"


def build(spec: ScenarioSpec, params, rng) -> Configuration:
    if params.n != spec.n:
        raise InvalidScenarioError(f"scenario n={spec.n} does not match params n={params.n}")
    g = np.random.default_rng(spec.seed) if spec.seed is not None else rng.generator
    n = spec.n

    if spec.kind == "canonical":
        if not isinstance(params, NonSSParams):
            raise InvalidScenarioError("canonical start belongs to the non-self-stabilizing protocol")
        le = OracleLeaderElection(n)
        return Configuration([le.initial(designated=(i == 0)) for i in range(n)])
    if not isinstance(params, SSParams):
        raise InvalidScenarioError(f"{spec.kind} needs self-stabilizing parameters")

    coins = [int(c) for c in g.integers(0, 2, size=n)]
    p = params
    if spec.kind == "fresh_triggered":
        states = [Resetting(c, p.r_max, p.d_max) for c in coins]
    elif spec.kind == "all_electing":
        states = [p.electing_initial(c) for c in coins]
    elif spec.kind == "fig2_adversarial":
        states = [MainPhase(coins[0], p.l_max, 1)] + [Ranked(r) for r in range(2, n + 1)]
    elif spec.kind == "fig3_leader":
        states = [Ranked(1)] + [p.electing_initial(c) for c in coins[1:]]
    elif spec.kind == "duplicate_ranks":
        dup = spec.dup_rank if spec.dup_rank is not None else int(g.integers(1, n + 1))
        victim = n if dup != n else n - 1
        ranks = [dup if r == victim else r for r in range(1, n + 1)]
        states = [Ranked(ranks[x]) for x in g.permutation(n)]
    elif spec.kind == "lone_unranked":
        states = [MainPhase(coins[0], p.l_max, 1)] + [Ranked(r) for r in range(1, n)]
    else:  # random_arbitrary
        domain = list(enumerate_ss_states(p))
        states = [domain[x] for x in g.integers(0, len(domain), size=n)]
    return Configuration(states)
