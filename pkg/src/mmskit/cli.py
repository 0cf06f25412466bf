"""Command-line interface and the JSON interchange format.

This is the only module that touches files and process I/O. Rationals
travel as "p/q" strings (bare integers are accepted on input), so the
interchange layer stays float-free. Exit codes: 0 success, 1 input error,
2 search budget exhausted, 3 a proven-guarantee self-check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import bobw, oracle, verify
from .adversarial import HardInstanceSpec, demonstrate_failure, gen_hard1, gen_hard2_responders, gen_ordinal_tight
from .core import Allocation, Instance, PriorityRanking, ThresholdList, as_fraction, bundle_value
from .errors import GuaranteeViolation, InputError, MmsKitError, SearchBudgetExceeded
from .ordinal import run_1_out_of_d
from .rbf import Transcript, priority_thresholds, run_rbf_truthful

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_GUARANTEE = 3

NODE_BUDGET_ENV = "MMSKIT_NODE_BUDGET"


# ---------------------------------------------------------------------------
# JSON encoding / decoding


def rational_str(x: Fraction) -> str:
    return str(x)


def instance_to_json(inst: Instance) -> dict[str, Any]:
    return {
        "agents": inst.num_agents,
        "goods": inst.num_goods,
        "valuations": [[rational_str(v) for v in row] for row in inst.valuations],
    }


def instance_from_json(obj: Any) -> Instance:
    if not isinstance(obj, dict):
        raise InputError("instance file must hold a JSON object")
    try:
        n = obj["agents"]
        m = obj["goods"]
        rows = obj["valuations"]
    except KeyError as exc:
        raise InputError(f"instance file is missing key {exc}") from exc
    if not isinstance(n, int) or not isinstance(m, int) or n < 0 or m < 0:
        raise InputError("'agents' and 'goods' must be non-negative integers")
    if not isinstance(rows, list) or len(rows) != n:
        raise InputError(f"'valuations' must be a list of {n} rows")
    inst = Instance.from_rows(rows, num_goods=m)
    return inst


def allocation_to_json(alloc: Allocation) -> dict[str, Any]:
    return {
        "bundles": [sorted(b) for b in alloc.bundles],
        "unallocated": sorted(alloc.unallocated),
    }


def allocation_from_json(obj: Any) -> Allocation:
    if not isinstance(obj, dict) or "bundles" not in obj:
        raise InputError("allocation file must hold an object with 'bundles'")
    bundles = tuple(frozenset(b) for b in obj["bundles"])
    unallocated = frozenset(obj.get("unallocated", []))
    return Allocation(bundles, unallocated)


def thresholds_to_json(t: ThresholdList) -> list[str]:
    return [rational_str(x) for x in t.taus]


def transcript_to_json(tr: Transcript) -> dict[str, Any]:
    return {
        "agents": tr.num_agents,
        "goods": tr.num_goods,
        "reductions": [
            {
                "type": e.type,
                "agent": e.agent,
                "bundle": sorted(e.bundle),
                "agentsBefore": e.agents_before,
                "goodsBefore": e.goods_before,
            }
            for e in tr.reductions
        ],
        "bagEvents": [
            {k: v for k, v in (("kind", e.kind), ("bag", e.bag), ("agent", e.agent), ("good", e.good)) if v is not None}
            for e in tr.bag_events
        ],
        "initialBags": [sorted(b) for b in tr.initial_bags],
        "phase2Agents": sorted(tr.phase2_agents),
        "phase2Goods": sorted(tr.phase2_goods),
        "ranOutOfGoods": tr.ran_out_of_goods,
        "satisfied": list(tr.satisfied),
    }


def transcript_from_json(obj: Any) -> Transcript:
    from .rbf import BagEvent, ReductionEvent

    try:
        return Transcript(
            num_agents=obj["agents"],
            num_goods=obj["goods"],
            reductions=tuple(
                ReductionEvent(
                    e["type"],
                    frozenset(e["bundle"]),
                    e["agent"],
                    e["agentsBefore"],
                    e["goodsBefore"],
                )
                for e in obj["reductions"]
            ),
            bag_events=tuple(
                BagEvent(e["kind"], e["bag"], agent=e.get("agent"), good=e.get("good"))
                for e in obj["bagEvents"]
            ),
            initial_bags=tuple(frozenset(b) for b in obj["initialBags"]),
            phase2_agents=frozenset(obj["phase2Agents"]),
            phase2_goods=frozenset(obj["phase2Goods"]),
            ran_out_of_goods=obj["ranOutOfGoods"],
            satisfied=tuple(obj["satisfied"]),
        )
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed transcript JSON: {exc}") from exc


def report_to_json(report: verify.GuaranteeReport) -> dict[str, Any]:
    return {
        "perAgent": [
            {
                "agent": c.agent,
                "value": rational_str(c.value),
                "target": rational_str(c.target),
                "ok": c.ok,
            }
            for c in report.checks
        ],
        "allOk": report.all_ok,
    }


def _load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _emit(payload: Any, output: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _node_budget(args: argparse.Namespace) -> int | None:
    if args.node_budget is not None:
        return args.node_budget
    env = os.environ.get(NODE_BUDGET_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"{NODE_BUDGET_ENV} must be an integer, got {env!r}") from exc
    return None


def _parse_thresholds(spec: str, n: int) -> ThresholdList:
    if spec == "default":
        return priority_thresholds(n)
    taus = tuple(as_fraction(part.strip()) for part in spec.split(","))
    if len(taus) != n:
        raise InputError(f"expected {n} thresholds, got {len(taus)}")
    return ThresholdList(taus)


def _parse_ranking(spec: str, n: int) -> PriorityRanking:
    if spec == "identity":
        return PriorityRanking.identity(n)
    ranks = tuple(int(part.strip()) for part in spec.split(","))
    if len(ranks) != n:
        raise InputError(f"expected {n} ranks, got {len(ranks)}")
    return PriorityRanking(ranks)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_mms(args: argparse.Namespace) -> int:
    inst = instance_from_json(_load_json(args.instance))
    budget = _node_budget(args)
    agents = [args.agent] if args.agent is not None else list(range(inst.num_agents))
    results = []
    for agent in agents:
        res = oracle.mms(inst, agent, args.d, node_budget=budget)
        results.append(
            {
                "agent": agent,
                "d": args.d,
                "value": rational_str(res.value),
                "witness": [sorted(p) for p in res.witness.parts],
            }
        )
    _emit({"results": results}, args.output)
    return EXIT_OK


def _cmd_ordinal(args: argparse.Namespace) -> int:
    inst = instance_from_json(_load_json(args.instance))
    result = run_1_out_of_d(inst, node_budget=_node_budget(args))
    per_agent = [
        {
            "agent": i,
            "value": rational_str(value),
            "share": rational_str(share),
            "ok": value >= share,
        }
        for i, (value, share) in enumerate(result.guarantees)
    ]
    payload = {
        "d": result.d,
        "allocation": allocation_to_json(result.allocation),
        "perAgent": per_agent,
        "allOk": all(entry["ok"] for entry in per_agent),
        "earlyTermination": bool(result.run and result.run.terminated_early),
    }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_rbf(args: argparse.Namespace) -> int:
    inst = instance_from_json(_load_json(args.instance))
    n = inst.num_agents
    thresholds = _parse_thresholds(args.thresholds, n)
    ranking = _parse_ranking(args.ranking, n)
    alloc, transcript = run_rbf_truthful(inst, thresholds, ranking)
    structure = verify.check_transcript(transcript)
    per_agent = []
    all_ok = True
    for i in range(n):
        target = thresholds.taus[ranking.rank_of[i]]
        value = bundle_value(inst, i, alloc.bundles[i])
        ok = value >= target
        all_ok &= ok
        per_agent.append(
            {"agent": i, "value": rational_str(value), "target": rational_str(target), "ok": ok}
        )
    payload = {
        "allocation": allocation_to_json(alloc),
        "transcript": transcript_to_json(transcript),
        "thresholds": thresholds_to_json(thresholds),
        "perAgent": per_agent,
        "allOk": all_ok,
        "structureOk": structure.ok,
        "structureViolations": list(structure.violations),
    }
    _emit(payload, args.output)
    if args.thresholds == "default" and not (all_ok and structure.ok):
        raise GuaranteeViolation(
            "a default-threshold run violated its guarantee or structure checks"
        )
    return EXIT_OK


def _cmd_bobw(args: argparse.Namespace) -> int:
    inst = instance_from_json(_load_json(args.instance))
    thresholds = _parse_thresholds(args.thresholds, inst.num_agents)
    dist = bobw.cyclic_rotation_distribution(inst, thresholds)
    payload = {
        "support": [
            {
                "probability": f"1/{len(dist.support)}",
                "ranking": list(ranking.rank_of),
                "allocation": allocation_to_json(alloc),
            }
            for ranking, alloc in dist.support
        ],
        "perAgentExAnte": [rational_str(v) for v in dist.ex_ante],
        "perAgentExPostMin": [rational_str(v) for v in dist.ex_post_min],
    }
    if args.seed is not None:
        ranking, alloc = bobw.sample_allocation(dist, args.seed)
        payload["sample"] = {
            "seed": args.seed,
            "ranking": list(ranking.rank_of),
            "allocation": allocation_to_json(alloc),
        }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.family == "ordinalTight":
        fam = gen_ordinal_tight(args.n)
        payload = instance_to_json(fam.instance)
        payload.update({"family": "ordinalTight", "d": fam.d})
    elif args.family == "hard1":
        if args.i is None:
            raise InputError("hard1 needs --i")
        eps = as_fraction(args.epsilon) if args.epsilon else Fraction(1, 12 * args.n)
        fam = gen_hard1(args.n, args.i, eps)
        payload = instance_to_json(fam.instance)
        payload.update(
            {
                "family": "hard1",
                "i": args.i,
                "alpha": rational_str(fam.alpha),
                "epsilon": rational_str(fam.epsilon),
            }
        )
    else:  # hard2
        if args.i is None or args.k1 is None or args.k2 is None:
            raise InputError("hard2 needs --i, --k1 and --k2")
        fam = gen_hard2_responders(args.n, args.i, args.k1, args.k2, args.t)
        payload = {
            "family": "hard2",
            "n": fam.n,
            "i": fam.i,
            "k1": fam.k1,
            "k2": fam.k2,
            "t": fam.t,
            "alpha": rational_str(fam.alpha),
            "epsilon": rational_str(fam.epsilon),
            "targetAgent": fam.target_agent,
            "targetValuation": [rational_str(v) for v in fam.instance.valuations[0]],
        }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_demo(args: argparse.Namespace) -> int:
    spec = HardInstanceSpec(args.family, args.n, i=args.i, k1=args.k1, k2=args.k2, t=args.t)
    report = demonstrate_failure(spec)
    payload = {
        "family": report.family,
        "n": report.n,
        "thresholds": thresholds_to_json(report.thresholds),
        "witnessAgent": report.witness_agent,
        "witnessValue": rational_str(report.witness_value),
        "witnessTarget": rational_str(report.witness_target),
        "unsatisfied": [
            {"agent": a, "value": rational_str(v), "target": rational_str(t)}
            for a, v, t in report.unsatisfied
        ],
        "reductionCount": report.reduction_count,
        "ranOutOfGoods": report.ran_out_of_goods,
        "allocation": allocation_to_json(report.allocation),
    }
    _emit(payload, args.output)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    inst = instance_from_json(_load_json(args.instance))
    alloc = allocation_from_json(_load_json(args.allocation))
    budget = _node_budget(args)
    if args.mode == "1ood":
        if args.d is None:
            raise InputError("mode '1ood' needs --d")
        report = verify.check_1_out_of_d(inst, alloc, args.d, node_budget=budget)
        payload = {"mode": "1ood", "d": args.d, **report_to_json(report)}
    else:
        thresholds = _parse_thresholds(args.thresholds, inst.num_agents)
        ranking = _parse_ranking(args.ranking, inst.num_agents)
        report = verify.check_t_mms(inst, alloc, ranking, thresholds, node_budget=budget)
        payload = {
            "mode": "tmms",
            "thresholds": thresholds_to_json(thresholds),
            **report_to_json(report),
        }
    _emit(payload, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmskit",
        description="Exact maximin-share fair division: shares, allocations, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--node-budget", type=int, default=None, help="search node budget")
        p.add_argument("--output", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("mms", help="exact share values and witness partitions")
    p.add_argument("instance")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--agent", type=int, default=None)
    add_common(p)
    p.set_defaults(func=_cmd_mms)

    p = sub.add_parser("ordinal", help="allocate via bag filling at d = 4*ceil(n/3)")
    p.add_argument("instance")
    add_common(p)
    p.set_defaults(func=_cmd_ordinal)

    p = sub.add_parser("rbf", help="reductions-and-bag-filling with rank thresholds")
    p.add_argument("instance")
    p.add_argument("--thresholds", default="default", help="'default' or comma list of rationals")
    p.add_argument("--ranking", default="identity", help="'identity' or comma list of ranks")
    add_common(p)
    p.set_defaults(func=_cmd_rbf)

    p = sub.add_parser("bobw", help="cyclic-rotation distribution with exact summaries")
    p.add_argument("instance")
    p.add_argument("--thresholds", default="default")
    p.add_argument("--seed", type=int, default=None, help="draw one allocation reproducibly")
    add_common(p)
    p.set_defaults(func=_cmd_bobw)

    p = sub.add_parser("gen", help="generate a named hard instance family")
    p.add_argument("family", choices=["ordinalTight", "hard1", "hard2"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, default=None, help="target rank (1-based)")
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--t", type=int, default=3)
    p.add_argument("--epsilon", default=None, help="unit fraction, e.g. 1/12")
    add_common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("demo", help="run a hard family and report who falls short")
    p.add_argument("family", choices=["ordinalTight", "hard1", "hard2"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--t", type=int, default=3)
    add_common(p)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("verify", help="check an allocation file against the oracle")
    p.add_argument("instance")
    p.add_argument("allocation")
    p.add_argument("--mode", choices=["1ood", "tmms"], required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--thresholds", default="default")
    p.add_argument("--ranking", default="identity")
    add_common(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SearchBudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except GuaranteeViolation as exc:
        print(f"guarantee violation (this is a bug): {exc}", file=sys.stderr)
        return EXIT_GUARANTEE
    except MmsKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
