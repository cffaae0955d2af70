"""Command-line front end: ``popstab simulate | sweep | audit-states``.

Exit codes: 0 success, 1 stabilization not observed within the budget,
2 invalid arguments.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .harness import default_budget, run_experiment, sweep, write_csv
from .ranking import InvalidParamsError, NonSSParams, nonss_state_count
from .scenarios import ALIASES, NONSS_KINDS, STABLE_KINDS, InvalidScenarioError, ScenarioSpec
from .stable import SSParams, electing_state_count, enumerate_ss_states, ss_state_count

DEFAULT_FRACTIONS = (0.5, 0.75, 0.9)
DEFAULT_N_LIST = (128, 256, 512, 1024)
STABLE_ONLY = ("c_live", "l_max", "d_max", "r_max")
ENUMERATE_LIMIT = 64  # exhaustive state enumeration is cheap up to here


class UsageError(Exception):
    """Bad flag values or inconsistent configuration (exit code 2)."""


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _range_arg(text):
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return lo, hi


def _add_params(p):
    g = p.add_argument_group("protocol parameters")
    g.add_argument("--c-wait", type=float, help="waiting-counter constant (default 2)")
    g.add_argument("--c-live", type=float, help="liveness-counter constant, stable only (default 4)")
    g.add_argument("--l-max", type=int, help="liveness/election timer bound, stable only")
    g.add_argument("--d-max", type=int, help="reset delay bound, stable only")
    g.add_argument("--r-max", type=int, help="reset propagation bound, stable only")


def _add_common(p):
    p.add_argument("--protocol", choices=("stable", "nonss"), help="protocol to run (default stable)")
    p.add_argument("--scenario", help="initial configuration kind")
    p.add_argument("--seed", type=int, help="master seed (falls back to $POPSTAB_SEED, then 0)")
    p.add_argument("--fractions", type=_float_list, help="comma-separated fractions in (0, 1]")
    p.add_argument("--out-dir", help="directory for CSV outputs (default .)")
    p.add_argument("--config", help="JSON file with the same field names as the flags")
    _add_params(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="popstab", description="Population-protocol ranking simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="one run; writes runs.csv and timeseries.csv")
    _add_common(sim)
    sim.add_argument("--n", type=int, help="population size (default 256)")
    sim.add_argument("--budget", type=int, help="interaction budget")
    sim.add_argument("--budget-factor", type=float, help="budget as a multiple of n^2 log2 n (default 200)")
    sim.add_argument("--sample-every", type=int, help="time-series cadence (default n; 0 disables)")
    sim.add_argument("--dup-rank", type=int, help="duplicated rank for duplicate_ranks")
    sim.add_argument("--scenario-seed", type=int, help="seed making the initial configuration fixed")
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="replicated runs per n; writes sweep.csv and runs.csv")
    _add_common(sw)
    sw.add_argument("--n-list", type=_int_list, help="comma-separated population sizes")
    sw.add_argument("--replicas", type=int, help="replicas per n (default 10)")
    sw.add_argument("--budget-factor", type=float, help="budget as a multiple of n^2 log2 n (default 200)")
    sw.set_defaults(func=cmd_sweep)

    au = sub.add_parser("audit-states", help="state counts and overhead decomposition")
    au.add_argument("--protocol", choices=("stable", "nonss"), help="protocol to audit (default stable)")
    au.add_argument("--n", type=int, help="population size")
    au.add_argument("--n-list", type=_int_list, help="comma-separated population sizes")
    au.add_argument("--sweep", type=_range_arg, metavar="LO:HI", help="powers of two from LO to HI")
    au.add_argument("--config", help="JSON file with the same field names as the flags")
    _add_params(au)
    au.set_defaults(func=cmd_audit_states)
    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def effective_config(args):
    """Flags over config-file values; returns a plain dict of the known fields."""
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command", "config")}
    cfg = _load_config(args.config)
    unknown = sorted(set(cfg) - set(flags))
    if unknown:
        raise UsageError(f"unknown config field(s) for {args.command}: {', '.join(unknown)}")
    merged = dict(cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})
    for key in ("fractions",):
        if isinstance(merged.get(key), str):
            merged[key] = _float_list(merged[key])
    if isinstance(merged.get("n_list"), str):
        merged["n_list"] = _int_list(merged["n_list"])
    if isinstance(merged.get("sweep"), str):
        merged["sweep"] = _range_arg(merged["sweep"])
    return merged


def _seed(cfg):
    if cfg.get("seed") is not None:
        return int(cfg["seed"])
    env = os.environ.get("POPSTAB_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"POPSTAB_SEED must be an integer, got {env!r}")


def _param_overrides(cfg, protocol):
    out = {}
    if cfg.get("c_wait") is not None:
        out["c_wait"] = float(cfg["c_wait"])
    for key in STABLE_ONLY:
        if cfg.get(key) is None:
            continue
        if protocol != "stable":
            raise UsageError(f"--{key.replace('_', '-')} applies to the stable protocol only")
        out[key] = float(cfg[key]) if key == "c_live" else int(cfg[key])
    return out


def _make_params(protocol, n, overrides):
    cls = SSParams if protocol == "stable" else NonSSParams
    try:
        return cls(n, **overrides)
    except InvalidParamsError as exc:
        raise UsageError(str(exc))


def _scenario_kind(cfg, protocol, default):
    kind = cfg.get("scenario") or default
    kind = ALIASES.get(kind, kind)
    allowed = STABLE_KINDS if protocol == "stable" else NONSS_KINDS
    if kind not in allowed:
        raise UsageError(f"scenario {kind!r} is not available for the {protocol} protocol "
                         f"(choose from {', '.join(allowed)})")
    return kind


def _fractions(cfg):
    fr = [float(c) for c in cfg.get("fractions") or DEFAULT_FRACTIONS]
    if any(not 0 < c <= 1 for c in fr):
        raise UsageError("fractions must lie in (0, 1]")
    return fr


def _out_dir(cfg):
    out = Path(cfg.get("out_dir") or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}")
    return out


def _write_sidecar(out, cfg):
    data = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(cfg.items())}
    with open(out / "effective_config.json", "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args):
    cfg = effective_config(args)
    protocol = cfg.get("protocol") or "stable"
    cfg["protocol"] = protocol
    n = int(cfg.get("n") or 256)
    if n < 2:
        raise UsageError(f"--n must be >= 2, got {n}")
    kind = _scenario_kind(cfg, protocol, "fig2_adversarial" if protocol == "stable" else "canonical")
    params = _make_params(protocol, n, _param_overrides(cfg, protocol))
    fractions = _fractions(cfg)
    if cfg.get("budget") is not None:
        budget = int(cfg["budget"])
    else:
        budget = default_budget(n, float(cfg.get("budget_factor") or 200))
    if budget <= 0:
        raise UsageError("budget must be positive")
    sample_every = cfg.get("sample_every")
    sample_every = n if sample_every is None else int(sample_every)
    if sample_every < 0:
        raise UsageError("--sample-every must be >= 0")
    try:
        spec = ScenarioSpec(kind, n, dup_rank=cfg.get("dup_rank"), seed=cfg.get("scenario_seed"))
    except InvalidScenarioError as exc:
        raise UsageError(str(exc))
    seed = _seed(cfg)
    cfg.update(seed=seed, scenario=kind, n=n, budget=budget, fractions=fractions, sample_every=sample_every)
    out = _out_dir(cfg)

    record, rows = run_experiment(spec, params, seed, 0, budget, fractions, sample_every)
    write_csv([record], out / "runs.csv", kind="runs", fractions=fractions)
    write_csv(rows, out / "timeseries.csv", kind="timeseries")
    _write_sidecar(out, cfg)
    t_valid = "none" if record.t_valid is None else record.t_valid
    print(f"scenario={kind} n={n} t_valid={t_valid} resets={record.num_resets} "
          f"silent_confirmed={str(record.silent_confirmed).lower()}")
    return 0 if record.t_valid is not None and record.silent_confirmed else 1


def cmd_sweep(args):
    cfg = effective_config(args)
    protocol = cfg.get("protocol") or "stable"
    cfg["protocol"] = protocol
    ns = [int(n) for n in (cfg.get("n_list") or DEFAULT_N_LIST)]
    if not ns or any(n < 2 for n in ns):
        raise UsageError("--n-list needs population sizes >= 2")
    replicas = cfg.get("replicas")
    replicas = 10 if replicas is None else int(replicas)
    if replicas < 1:
        raise UsageError("--replicas must be >= 1")
    kind = _scenario_kind(cfg, protocol, "fig3_leader" if protocol == "stable" else "canonical")
    overrides = _param_overrides(cfg, protocol)
    for n in ns:
        _make_params(protocol, n, overrides)
    fractions = _fractions(cfg)
    factor = float(cfg.get("budget_factor") or 200)
    if factor <= 0:
        raise UsageError("--budget-factor must be positive")
    seed = _seed(cfg)
    cfg.update(seed=seed, scenario=kind, n_list=ns, replicas=replicas, fractions=fractions, budget_factor=factor)
    out = _out_dir(cfg)

    rows, records = sweep(ns, replicas, fractions, overrides, seed, factor, kind)
    write_csv(rows, out / "sweep.csv", kind="sweep")
    write_csv(records, out / "runs.csv", kind="runs", fractions=fractions)
    _write_sidecar(out, cfg)
    ok = sum(rec.t_valid is not None for rec in records)
    print(f"scenario={kind} runs={len(records)} reached_valid={ok}")
    return 0 if ok == len(records) else 1


def _audit_ns(cfg):
    if cfg.get("sweep"):
        lo, hi = cfg["sweep"]
        if lo < 2 or hi < lo:
            raise UsageError("--sweep needs 2 <= LO <= HI")
        ns, n = [], 1 << max(1, math.ceil(math.log2(lo)))
        while n <= hi:
            ns.append(n)
            n *= 2
        return ns
    if cfg.get("n_list"):
        return [int(n) for n in cfg["n_list"]]
    return [int(cfg.get("n") or 256)]


def cmd_audit_states(args):
    cfg = effective_config(args)
    protocol = cfg.get("protocol") or "stable"
    ns = _audit_ns(cfg)
    if any(n < 2 for n in ns):
        raise UsageError("population sizes must be >= 2")
    overrides = _param_overrides(cfg, protocol)
    ratio_sweep = bool(cfg.get("sweep"))
    for n in ns:
        p = _make_params(protocol, n, overrides)
        lg = math.log2(n)
        if protocol == "nonss":
            total = nonss_state_count(p)
            over = total - n
            line = (f"nonss n={n} states={total} overhead={over} "
                    f"(waiting={p.w_max} phase={p.K} leader_election={total - n - p.w_max - p.K})")
            if ratio_sweep:
                line += f" overhead/log2n={over / lg:.4f}"
        else:
            total = ss_state_count(p)
            over = total - n
            reset = 2 * (p.r_max + 1) * (p.d_max + 1)
            elect = 2 * electing_state_count(p)
            main = 2 * (p.l_max + 1) * (p.w_max + p.K)
            line = (f"stable n={n} states={total} overhead={over} "
                    f"(resetting={reset} electing={elect} waiting_or_phase={main})")
            if n <= ENUMERATE_LIMIT:
                line += f" enumerated={sum(1 for _ in enumerate_ss_states(p))}"
            if ratio_sweep:
                line += f" overhead/log2n^2={over / lg ** 2:.4f}"
        print(line)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"popstab {args.command}: error: {exc}", file=sys.stderr)
        return 2


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
