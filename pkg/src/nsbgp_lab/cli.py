"""``nsbgp-lab`` command line.

Exit codes::

    0  success (converged / all checks pass / SAFE)
    1  input could not be parsed or failed validation
    2  a cycle was found
    3  inconclusive: step limit or oracle budget exhausted
    4  a policy or compliance check failed

``--json`` switches any command to a single JSON document on stdout with
``"schema": "nsbgp-lab/report@1"``.  Output never depends on wall-clock time,
so identical invocations print identical bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import __version__
from .engine import InvalidInstance, OutcomeKind, Schedule, Simulator, write_trace
from .files import (
    FormatError,
    as_to_json,
    dump,
    instance_to_json,
    load_as,
    load_assignments,
    load_attributes,
    load_instance,
)
from .intra_as import (
    Dissemination,
    assign_tunnels,
    check_consistent_export,
    check_hot_potato,
    dissemination_overhead,
    egress_selection,
    render_checks,
    validate_as,
    visible_routes,
)
from .model import Mode, format_path, validate
from .oracle import (
    DEFAULT_SEARCH_LIMIT,
    DEFAULT_STATE_BUDGET,
    SearchSpaceExceeded,
    StateBudgetExceeded,
    enumerate_stable_states,
    exhaustive_search,
)
from .policy import applicable_checks, check_nsbgp_safety
from .scenarios import SCENARIOS, RandomConfig, random_instance
from .service_models import apply_service_models

SCHEMA = "nsbgp-lab/report@1"
EXIT_OK, EXIT_INPUT, EXIT_CYCLE, EXIT_INCONCLUSIVE, EXIT_CHECK = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, lines):
        super().__init__(code)
        self.code = code
        self.lines = lines


def _emit(args, report: dict, text_lines) -> None:
    if args.json:
        out = {"schema": SCHEMA, "command": args.command}
        out.update(report)
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _load_instance(args):
    try:
        inst = load_instance(args.instance)
    except FormatError as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    if getattr(args, "mode", None):
        try:
            target = Mode.parse(args.mode)
        except ValueError as exc:
            raise _Fail(EXIT_INPUT, [f"error: {exc}"])
        if target is Mode.NEIGHBOR_SPECIFIC and inst.mode is not Mode.NEIGHBOR_SPECIFIC:
            inst = inst.as_neighbor_specific()
        elif target is not Mode.NEIGHBOR_SPECIFIC and inst.mode is Mode.NEIGHBOR_SPECIFIC:
            raise _Fail(EXIT_INPUT, [f"error: {args.instance}: cannot run per-neighbor rankings in {target.value} mode"])
        else:
            inst = inst.with_mode(target)
    report = validate(inst)
    if report.errors:
        raise _Fail(EXIT_INPUT, [f"{args.instance}: {v}" for v in report.errors])
    return inst


def _movers(inst) -> list:
    return [u for u in inst.nodes if u != inst.destination]


def _budget(default: int, flag) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("NSBGP_LAB_BUDGET")
    return int(env) if env else default


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    inst = _load_instance(args)
    try:
        schedule = Schedule.parse(args.schedule)
        sim = Simulator(inst)
        max_steps = args.max_steps or sim.default_max_steps
        outcome, steps = sim.simulate(schedule, max_steps, record=bool(args.trace))
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    if args.trace:
        with open(args.trace, "w") as fh:
            write_trace(steps, fh, _movers(inst))
    movers = _movers(inst)
    lines = [
        f"mode: {inst.mode.value}",
        f"schedule: {schedule.describe()}",
        f"max-steps: {max_steps}",
        f"outcome: {outcome.kind.value.upper()} after {outcome.steps} steps",
    ]
    report = {
        "mode": inst.mode.value,
        "schedule": schedule.describe(),
        "max_steps": max_steps,
        "outcome": outcome.kind.value,
        "steps": outcome.steps,
    }
    if outcome.kind is OutcomeKind.CONVERGED:
        lines.append(f"state: {outcome.state.render(movers)}")
        report["state"] = outcome.state.to_dict()
        code = EXIT_OK
    elif outcome.kind is OutcomeKind.CYCLE:
        lines.append(f"cycle of {len(outcome.states)} states entered at step {outcome.entry_step}:")
        lines += [f"  {s.render(movers)}" for s in outcome.states]
        report["entry_step"] = outcome.entry_step
        report["cycle"] = [s.to_dict() for s in outcome.states]
        report["cycle_rendered"] = [s.render(movers) for s in outcome.states]
        code = EXIT_CYCLE
    else:
        code = EXIT_INCONCLUSIVE
    _emit(args, report, lines)
    return code


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    inst = _load_instance(args)
    reports = applicable_checks(inst)
    lines = [f"mode: {inst.mode.value}"] + [r.render() for r in reports]
    _emit(args, {"mode": inst.mode.value, "checks": [r.to_dict() for r in reports]}, lines)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    inst = _load_instance(args)
    limit = _budget(DEFAULT_SEARCH_LIMIT, args.budget)
    max_states = _budget(DEFAULT_STATE_BUDGET, args.budget)
    movers = _movers(inst)
    try:
        stable = enumerate_stable_states(inst, limit)
        result = exhaustive_search(inst, max_states)
    except (SearchSpaceExceeded, StateBudgetExceeded) as exc:
        _emit(args, {"mode": inst.mode.value, "budget": max_states, "verdict": "budget-exceeded", "detail": str(exc)},
              [f"budget exceeded: {exc}"])
        return EXIT_INCONCLUSIVE
    if args.graph:
        result.graph.write_graphml(args.graph)
    ordered = sorted(stable, key=lambda s: s.render(movers))
    noun = "state" if len(ordered) == 1 else "states"
    lines = [f"{len(ordered)} stable {noun}, {result.verdict.value}"]
    lines += [f"  {s.render(movers)}" for s in ordered]
    lines.append(f"reachable states: {len(result.graph.vertices)}")
    report = {
        "mode": inst.mode.value,
        "budget": max_states,
        "search_limit": limit,
        "stable_states": [s.to_dict() for s in ordered],
        "verdict": result.verdict.value,
        "reachable_states": len(result.graph.vertices),
    }
    if result.witness:
        w = result.witness
        lines.append(f"cycle after prefix [{','.join(w.prefix)}] via [{','.join(w.cycle)}]:")
        lines += [f"  {s.render(movers)}" for s in w.states]
        report["witness"] = {
            "prefix": list(w.prefix),
            "cycle": list(w.cycle),
            "states": [s.render(movers) for s in w.states],
        }
    _emit(args, report, lines)
    return EXIT_OK if result.safe else EXIT_CYCLE


# ---------------------------------------------------------------------------
# as


def _parse_forced(items) -> dict:
    out = {}
    for item in items or ():
        router, sep, link = item.partition("=")
        if not sep:
            raise _Fail(EXIT_INPUT, [f"error: --force expects ROUTER=LINK, got {item!r}"])
        out[router] = link
    return out


def cmd_as(args) -> int:
    try:
        as_, options = load_as(args.as_file)
        if args.disseminate:
            as_ = _replace_dissemination(as_, Dissemination.parse(args.disseminate))
        mode = Mode.parse(args.mode) if args.mode else options["mode"]
    except (FormatError, ValueError) as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    report = validate_as(as_)
    if report.errors:
        raise _Fail(EXIT_INPUT, [f"{args.as_file}: {v}" for v in report.errors])
    forced = _parse_forced(args.force) or options["forced"]
    try:
        selection = egress_selection(as_, mode, forced if mode is Mode.CONVENTIONAL else None, options["preferences"])
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])

    counts = {r: len(visible_routes(as_, r)) for r in as_.routers}
    overhead = dissemination_overhead(as_)
    lines = [
        f"AS {as_.name}: mode {mode.value}, dissemination {as_.dissemination.describe()}",
        f"offers: {len(as_.offers)}",
        "visibility: " + ", ".join(f"{r}={counts[r]}" for r in as_.routers),
        "carried:    " + ", ".join(f"{r}={overhead[r]}" for r in as_.routers),
        "selection:",
    ]
    for link in as_.external_links:
        offer = selection[link.link_id]
        lines.append(f"  {link.link_id} -> " + (f"{offer[0]} {format_path(offer[1])}" if offer else "none"))

    wanted = args.check or ["consistent-export", "hot-potato"]
    results = []
    if "consistent-export" in wanted:
        neighbors = [args.neighbor] if args.neighbor else sorted(
            {l.neighbor for l in as_.external_links if sum(m.neighbor == l.neighbor for m in as_.external_links) > 1}
        )
        for nbr in neighbors:
            try:
                results.append(check_consistent_export(as_, nbr, selection))
            except ValueError as exc:
                raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    if "hot-potato" in wanted:
        results.append(check_hot_potato(as_, selection))
    if results:
        lines += ["checks:", render_checks(results)]

    out = {
        "as": as_.name,
        "mode": mode.value,
        "dissemination": as_.dissemination.describe(),
        "offers": len(as_.offers),
        "visibility": counts,
        "carried": overhead,
        "selection": {k: ([v[0], list(v[1])] if v else None) for k, v in selection.items()},
        "checks": [r.to_dict() for r in results],
    }
    if args.tunnels:
        table = assign_tunnels(as_, selection)
        lines.append("tunnels (decapsulated at egress):")
        lines += [f"  {i} => {e}" for i, e in table.entries.items()]
        out["tunnels"] = dict(table.entries)
    _emit(args, out, lines)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _replace_dissemination(as_, diss):
    return replace(as_, dissemination=diss)


# ---------------------------------------------------------------------------
# sweep


def _parse_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    if not sep:
        return range(int(lo), int(lo) + 1)
    return range(int(lo), int(hi) + 1)


def _sweep_one(job) -> dict:
    seed, n_nodes, mode, config, schedules, max_steps = job
    try:
        inst = random_instance(seed, n_nodes, mode, config)
    except ValueError as exc:
        return {"seed": seed, "skipped": str(exc)}
    sim = Simulator(inst)
    row = {"seed": seed, "converged": 0, "cycles": 0, "inconclusive": 0, "max_steps": 0}
    for k in range(schedules):
        outcome = sim.run(Schedule.random(k), max_steps)
        row[{"converged": "converged", "cycle": "cycles", "inconclusive": "inconclusive"}[outcome.kind.value]] += 1
        if outcome.converged:
            row["max_steps"] = max(row["max_steps"], outcome.steps)
    return row


def cmd_sweep(args) -> int:
    seeds = _parse_range(args.seeds)
    mode = Mode.parse(args.mode)
    try:
        config = RandomConfig(safe=args.safe and not args.inject, inject=args.inject)
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    jobs = [(s, args.nodes, mode, config, args.schedules, args.max_steps) for s in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_sweep_one, jobs, chunksize=max(1, len(jobs) // (4 * args.jobs))))
    else:
        rows = [_sweep_one(j) for j in jobs]
    done = [r for r in rows if "skipped" not in r]
    summary = {
        "instances": len(done),
        "skipped": len(rows) - len(done),
        "runs": len(done) * args.schedules,
        "converged": sum(r["converged"] for r in done),
        "cycles": sum(r["cycles"] for r in done),
        "inconclusive": sum(r["inconclusive"] for r in done),
        "instances_with_cycles": sum(1 for r in done if r["cycles"]),
        "max_steps": max((r["max_steps"] for r in done), default=0),
    }
    params = {
        "seeds": args.seeds,
        "nodes": args.nodes,
        "mode": mode.value,
        "safe": config.safe,
        "inject": config.inject,
        "schedules": args.schedules,
        "max_steps": args.max_steps,
    }
    lines = ["  ".join(f"{k}={v}" for k, v in params.items())]
    width = max(len(k) for k in summary)
    lines += [f"{k:<{width}}  {v}" for k, v in summary.items()]
    _emit(args, {"parameters": params, "summary": summary, "rows": rows}, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# scenario, services


def cmd_scenario(args) -> int:
    builder = SCENARIOS[args.name]
    try:
        mode = Mode.parse(args.mode) if args.mode else None
        if args.name in ("fig1", "fig5"):
            diss = Dissemination.parse(args.disseminate) if args.disseminate else None
            data = as_to_json(builder(diss), mode=mode)
        else:
            data = instance_to_json(builder(mode) if mode else builder())
    except ValueError as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    if args.out:
        with open(args.out, "w") as fh:
            dump(data, fh)
    else:
        dump(data, sys.stdout)
    return EXIT_OK


def cmd_services(args) -> int:
    inst = _load_instance(args)
    try:
        attrs = load_attributes(args.attributes)
        owner, assignments, self_model = load_assignments(args.assignments)
        out = apply_service_models(inst, assignments, attrs, owner=owner, self_model=self_model)
    except (FormatError, ValueError, KeyError) as exc:
        raise _Fail(EXIT_INPUT, [f"error: {exc}"])
    safety = check_nsbgp_safety(out)
    rankings = {}
    lines = [f"owner: {owner}"]
    for key in [None] + list(out.neighbors[owner]):
        rf = out.ranking_for(owner, key) if key else out.self_ranking(owner)
        label = "self" if key is None else key
        rankings[label] = [format_path(p) for p in rf.acceptable]
        lines.append(f"  {label}: " + " > ".join(rankings[label]))
    lines.append(safety.render())
    if args.out:
        with open(args.out, "w") as fh:
            dump(instance_to_json(out), fh)
    _emit(args, {"owner": owner, "rankings": rankings, "safety": safety.to_dict()}, lines)
    return EXIT_OK if safety.passed else EXIT_CHECK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsbgp-lab", description="Simulate and verify BGP policy dynamics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="print one JSON report")

    sp = sub.add_parser("run", help="simulate one activation schedule")
    sp.add_argument("instance")
    sp.add_argument("--mode", help="conventional | filter-first | neighbor-specific")
    sp.add_argument("--schedule", default="round-robin", help='round-robin, random:<seed>[:<window>] or "a,b,c"')
    sp.add_argument("--max-steps", type=int, help="default 1000 x number of nodes")
    sp.add_argument("--trace", help="write one JSON record per step to this file")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check", help="static stability conditions")
    sp.add_argument("instance")
    sp.add_argument("--mode")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("oracle", help="stable states and exhaustive schedule search")
    sp.add_argument("instance")
    sp.add_argument("--mode")
    sp.add_argument("--budget", type=int, help="state/search budget (env NSBGP_LAB_BUDGET)")
    sp.add_argument("--graph", help="write the reachable state graph as GraphML")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("as", help="intra-AS selection, compliance checks and tunnels")
    sp.add_argument("as_file")
    sp.add_argument("--mode", help="conventional | filter-first | neighbor-specific")
    sp.add_argument("--check", action="append", choices=("consistent-export", "hot-potato"))
    sp.add_argument("--neighbor", help="neighbor for the consistent-export check (default: all with 2+ links)")
    sp.add_argument("--disseminate", help="single-best | route-reflector | add-paths:<k> | two-class | rcp")
    sp.add_argument("--force", action="append", metavar="ROUTER=LINK", help="force a router's best route")
    sp.add_argument("--tunnels", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_as)

    sp = sub.add_parser("sweep", help="random instances under random fair schedules")
    sp.add_argument("--seeds", default="0..99", help="inclusive range a..b")
    sp.add_argument("--nodes", type=int, default=6)
    sp.add_argument("--mode", default="neighbor-specific")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--safe", dest="safe", action="store_true", default=True)
    g.add_argument("--unsafe", dest="safe", action="store_false")
    sp.add_argument("--inject", choices=("export", "preference", "gadget"))
    sp.add_argument("--schedules", type=int, default=10)
    sp.add_argument("--max-steps", type=int, default=10000)
    sp.add_argument("--jobs", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("scenario", help="dump a built-in scenario")
    sp.add_argument("name", choices=sorted(SCENARIOS))
    sp.add_argument("--mode")
    sp.add_argument("--disseminate")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scenario, json=False)

    sp = sub.add_parser("services", help="per-neighbor rankings from service models")
    sp.add_argument("instance")
    sp.add_argument("attributes")
    sp.add_argument("assignments")
    sp.add_argument("--out", help="write the resulting instance file")
    common(sp)
    sp.set_defaults(func=cmd_services, mode=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as fail:
        for line in fail.lines:
            print(line, file=sys.stderr)
        return fail.code
    except InvalidInstance as exc:
        for v in exc.report.errors:
            print(v, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
