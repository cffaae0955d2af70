"""Experiment runner: single runs with observers, replica sweeps, CSV export."""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .codec import decode_states, encode_states, kernel_params
from .engine import Configuration
from .ranking import NonSSParams, NonSSProtocol, PhaseAgent, Waiting
from .rng import Rng, derive_replica_seed
from .scenarios import ScenarioSpec, build
from .stable import MainPhase, MainWaiting, Resetting, SSParams, StableProtocol, is_productive_pair
from .stable import is_valid_ranking  # noqa: F401  (re-exported)

DEFAULT_BUDGET_FACTOR = 200


def log2n(n: int) -> float:
    return math.log2(n)


def default_budget(n: int, factor: float = DEFAULT_BUDGET_FACTOR) -> int:
    return int(math.ceil(factor * n * n * log2n(n)))


def silence_window(n: int) -> int:
    return int(math.ceil(10 * n * log2n(n)))


def potential(config, n: int = None) -> float:
    """Sum of 2**-phase over phase agents; 0 during a reset or with no productive pair."""
    states = getattr(config, "states", config)
    n = len(states) if n is None else n
    if any(isinstance(s, Resetting) for s in states):
        return 0.0
    phase = [s for s in states if isinstance(s, (MainPhase, PhaseAgent))]
    if not phase:
        return 0.0
    others = [s for s in states if not isinstance(s, (MainPhase, PhaseAgent))]
    productive = any(isinstance(u, (MainWaiting, Waiting)) for u in others) or any(
        is_productive_pair(u, v, n) for u in others for v in phase
    )
    if not productive:
        return 0.0
    return sum(2.0 ** -s.phase for s in phase)


def make_protocol(params):
    if isinstance(params, SSParams):
        return StableProtocol(params)
    if isinstance(params, NonSSParams):
        return NonSSProtocol(params)
    raise TypeError(f"unsupported params {type(params).__name__}")


@dataclass
class TimeSeriesRow:
    t: int
    ranked_count: int
    avg_phase: float  # None when no phase agent is present
    potential: float
    num_resetting: int
    num_electing: int
    num_waiting: int


@dataclass
class RunRecord:
    scenario: str
    n: int
    seed: int
    replica: int
    budget: int
    interactions_used: int
    t_valid: int = None
    silent_confirmed: bool = False
    reset_times: list = field(default_factory=list)
    t_fraction: dict = field(default_factory=dict)

    @property
    def num_resets(self) -> int:
        return len(self.reset_times)


def _rows_from_series(series) -> list:
    rows = []
    for r in series:
        avg = None if math.isnan(r[_kernels.TS_AVG_PHASE]) else float(r[_kernels.TS_AVG_PHASE])
        rows.append(
            TimeSeriesRow(
                t=int(r[_kernels.TS_T]),
                ranked_count=int(r[_kernels.TS_RANKED]),
                avg_phase=avg,
                potential=float(r[_kernels.TS_POTENTIAL]),
                num_resetting=int(r[_kernels.TS_RESETTING]),
                num_electing=int(r[_kernels.TS_ELECTING]),
                num_waiting=int(r[_kernels.TS_WAITING]),
            )
        )
    return rows


def run_experiment(
    spec: ScenarioSpec,
    params,
    master_seed: int,
    replica_index: int = 0,
    budget: int = None,
    fractions=(),
    sample_every: int = None,
    final_config: list = None,
):
    """Build ``spec``, run until the ranking is valid, then confirm silence.

    After the ranking first becomes valid the run continues for
    ``ceil(10 n log2 n)`` further interactions (not charged to ``budget``);
    ``silent_confirmed`` is set when none of them changed a state. When
    ``final_config`` is a list it receives the final agent states.

    Returns ``(RunRecord, [TimeSeriesRow, ...])``.
    """
    n = spec.n
    budget = default_budget(n) if budget is None else int(budget)
    if budget <= 0:
        raise ValueError("budget must be positive")
    fractions = [float(c) for c in fractions]
    if any(not 0 < c <= 1 for c in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    sample_every = n if sample_every is None else int(sample_every)

    seed = derive_replica_seed(master_seed, replica_index)
    rng = Rng(seed)
    config = build(spec, params, rng)
    protocol = make_protocol(params)
    p, proto, family = kernel_params(protocol)
    S = encode_states(config.states)

    order = sorted(range(len(fractions)), key=lambda q: fractions[q])
    thresholds = np.array([math.ceil(fractions[q] * n - 1e-9) for q in order], np.int64)
    t_frac = np.full(len(order), -1, np.int64)
    t, t_valid, silent, used, series, resets = _kernels.run_loop(
        S, rng.generator, *rng.pair_buffer(n), p, proto, budget, sample_every, thresholds, t_frac, silence_window(n)
    )
    if final_config is not None:
        final_config[:] = decode_states(S, family)

    t_fraction = {}
    for pos, q in enumerate(order):
        t_fraction[fractions[q]] = None if t_frac[pos] < 0 else int(t_frac[pos])
    record = RunRecord(
        scenario=spec.kind,
        n=n,
        seed=seed,
        replica=replica_index,
        budget=budget,
        interactions_used=int(t + used),
        t_valid=None if t_valid < 0 else int(t_valid),
        silent_confirmed=bool(silent == 1),
        reset_times=[int(x) for x in resets],
        t_fraction=t_fraction,
    )
    return record, _rows_from_series(series)


@dataclass
class SweepRow:
    n: int
    fraction: float
    replicas: int
    min_norm: float
    median_norm: float
    p90_norm: float
    max_norm: float
    metric: str


def _quantiles(values):
    if not values:
        return None, None, None, None
    a = np.asarray(values, dtype=float)
    return float(a.min()), float(np.median(a)), float(np.quantile(a, 0.9)), float(a.max())


def sweep(
    ns,
    replicas: int,
    fractions,
    params=None,
    master_seed: int = 0,
    budget_factor: float = DEFAULT_BUDGET_FACTOR,
    scenario: str = "fig3_leader",
    workers: int = 1,
):
    """Replicated runs per ``n``; returns ``(sweep_rows, run_records)``.

    ``params`` maps keyword overrides onto the parameter class; the
    scenario decides which protocol runs. Replica ``r`` of population ``n``
    uses ``derive_replica_seed(master_seed ^ n, r)``. Normalised times are
    ``t_fraction(c) / n**2`` and ``t_valid / (n**2 log2 n)``; runs that did
    not reach a target are left out of its quantiles.
    """
    if not ns:
        raise ValueError("ns must be non-empty")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    overrides = dict(params or {})
    fractions = [float(c) for c in fractions]

    jobs = []
    for n in ns:
        spec = ScenarioSpec(scenario, n)
        cls = NonSSParams if spec.protocol == "nonss" else SSParams
        p = cls(n, **overrides)
        for r in range(replicas):
            jobs.append((spec, p, master_seed ^ n, r, default_budget(n, budget_factor)))

    def run(job):
        spec, p, seed, r, budget = job
        record, _ = run_experiment(spec, p, seed, r, budget, fractions, sample_every=0)
        return record

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(job) for job in jobs]

    rows = []
    for n in ns:
        mine = [rec for rec in records if rec.n == n]
        valid = [rec.t_valid / (n * n * log2n(n)) for rec in mine if rec.t_valid is not None]
        for c in fractions:
            frac = [rec.t_fraction[c] / (n * n) for rec in mine if rec.t_fraction.get(c) is not None]
            rows.append(SweepRow(n, c, replicas, *_quantiles(frac), "t_frac_over_n2"))
            rows.append(SweepRow(n, c, replicas, *_quantiles(valid), "t_valid_over_n2logn"))
    return rows, records


# CSV export

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return ""
    return f"{float(x):.6g}"


def frac_column(c: float) -> str:
    return f"t_frac_{c:g}"


RUN_COLUMNS = ["scenario", "n", "seed", "replica", "budget", "interactions_used", "t_valid", "silent_confirmed", "num_resets"]
TIMESERIES_COLUMNS = ["t", "ranked_count", "avg_phase", "potential", "num_resetting", "num_electing", "num_waiting"]
SWEEP_COLUMNS = ["n", "fraction", "replicas", "min_norm", "median_norm", "p90_norm", "max_norm", "metric"]


def _table(items, kind, fractions):
    if kind == "runs":
        if fractions is None:
            fractions = sorted({c for rec in items for c in rec.t_fraction})
        header = RUN_COLUMNS + [frac_column(c) for c in fractions]
        body = [
            [rec.scenario, rec.n, rec.seed, rec.replica, rec.budget, rec.interactions_used, rec.t_valid,
             rec.silent_confirmed, rec.num_resets] + [rec.t_fraction.get(c) for c in fractions]
            for rec in items
        ]
    elif kind == "timeseries":
        header = TIMESERIES_COLUMNS
        body = [[getattr(row, col) for col in header] for row in items]
    elif kind == "sweep":
        header = SWEEP_COLUMNS
        body = [[getattr(row, col) for col in header] for row in items]
    else:
        raise ValueError(f"unknown table kind {kind!r}")
    return header, body


def _infer_kind(items):
    if not items:
        raise ValueError("cannot infer the CSV layout of an empty list; pass kind=")
    first = items[0]
    if isinstance(first, RunRecord):
        return "runs"
    if isinstance(first, TimeSeriesRow):
        return "timeseries"
    if isinstance(first, SweepRow):
        return "sweep"
    raise TypeError(f"no CSV layout for {type(first).__name__}")


def write_csv(items, path, kind: str = None, fractions=None):
    """Write run records, time-series rows or sweep rows to ``path``.

    ``kind`` is one of ``runs``, ``timeseries``, ``sweep`` and is inferred
    from the items when omitted. Integers are written in full, reals with
    six significant digits and missing values as empty cells.
    """
    items = list(items)
    kind = kind or _infer_kind(items)
    header, body = _table(items, kind, fractions)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in body:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def reference_run(protocol, config: Configuration, rng: Rng, steps: int, observers=()):
    """Advance ``config`` through the pure-Python engine (slow; for cross-checks)."""
    from .engine import step

    for _ in range(steps):
        step(protocol, config, rng, observers)
    return config


def compiled_run(protocol, config: Configuration, rng: Rng, steps: int) -> int:
    """Advance ``config`` by ``steps`` interactions in the compiled loop.

    Consumes the same pair stream as :func:`popstab.engine.step` with the
    same ``rng``, so both paths produce the same trace. Returns how many
    interactions changed a state.
    """
    p, proto, family = kernel_params(protocol)
    S = encode_states(config.states)
    changes = _kernels.run_steps(S, rng.generator, *rng.pair_buffer(config.n), p, proto, int(steps))
    config.states[:] = decode_states(S, family)
    config.step_count += int(steps)
    return int(changes)
