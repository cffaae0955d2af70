"""Exhaustive exploration of tiny populations.

Agents are anonymous, so a configuration is the sorted tuple of its states
(a multiset). From each configuration every ordered pair of agents is one
possible interaction.
"""

from collections import Counter, deque
from dataclasses import dataclass, field


def canonical(states) -> tuple:
    return tuple(sorted(states, key=repr))


def successors(transition, config: tuple):
    """Distinct configurations one interaction away (self-loops excluded)."""
    counts = Counter(config)
    out = set()
    keys = list(counts)
    for a in keys:
        for b in keys:
            if a == b and counts[a] < 2:
                continue
            a2, b2 = transition(a, b)
            if a2 == a and b2 == b:
                continue
            nxt = counts.copy()
            nxt[a] -= 1
            nxt[b] -= 1
            nxt[a2] += 1
            nxt[b2] += 1
            out.add(canonical(nxt.elements()))
    return out


@dataclass
class Exploration:
    reachable: int
    targets: int
    stuck: list = field(default_factory=list)  # configurations that can never reach a target
    violations: list = field(default_factory=list)  # configurations failing the invariant
    stuck_starts: list = field(default_factory=list)  # start configurations that cannot reach a target

    @property
    def ok(self) -> bool:
        return not self.stuck and not self.violations


def explore(transition, starts, is_target, invariant=None, limit=None) -> Exploration:
    """Breadth-first search from ``starts`` with target configurations absorbing.

    Afterwards a backward pass marks every configuration that can still reach
    a target; the rest are reported as ``stuck``. Under the uniform random
    scheduler this is exactly "a target is reached with probability 1".
    ``invariant`` (a predicate) is checked on every reachable configuration.
    """
    transition_cache = {}

    def cached(a, b):
        key = (a, b)
        r = transition_cache.get(key)
        if r is None:
            r = transition_cache[key] = transition(a, b)
        return r

    index = {}
    order = []
    preds = []
    queue = deque()
    start_ids = []
    for s in starts:
        c = canonical(s)
        start_ids.append(index.get(c, len(order)))
        if c not in index:
            index[c] = len(order)
            order.append(c)
            preds.append([])
            queue.append(c)
    violations = []
    targets = []
    while queue:
        c = queue.popleft()
        ci = index[c]
        if invariant is not None and not invariant(c):
            violations.append(c)
        if is_target(c):
            targets.append(ci)
            continue
        for nxt in successors(cached, c):
            ni = index.get(nxt)
            if ni is None:
                ni = index[nxt] = len(order)
                order.append(nxt)
                preds.append([])
                queue.append(nxt)
                if limit is not None and len(order) > limit:
                    raise RuntimeError(f"exploration exceeded {limit} configurations")
            preds[ni].append(ci)

    good = bytearray(len(order))
    back = deque(targets)
    for t in targets:
        good[t] = 1
    while back:
        x = back.popleft()
        for y in preds[x]:
            if not good[y]:
                good[y] = 1
                back.append(y)
    stuck = [order[i] for i in range(len(order)) if not good[i]]
    stuck_starts = [order[i] for i in sorted(set(start_ids)) if not good[i]]
    return Exploration(len(order), len(targets), stuck, violations, stuck_starts)
