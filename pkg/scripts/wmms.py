"""Command-line front end: shares, allocations and their scores, instance generation,
batch experiments and stochastic verification. JSON goes to stdout, logs to stderr.
Run: ./wmms <command> --help
Exit codes: 0 ok, 2 invalid input, 3 solver budget exhausted."""
import argparse
import json
import logging
import os
import sys

from pydantic import ValidationError

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
import config  # noqa: E402,F401  (logging setup)
from config import (DEFAULT_BIDS_PATH, DEFAULT_HEURISTIC_ITERATIONS, DEFAULT_MAX_STATES,  # noqa: E402
                    DEFAULT_TIME_LIMIT, LP_METHOD, SYNTHETIC_BIDS_PER_CATEGORY, SYNTHETIC_CATEGORIES)
from utils.allocation_algorithms import bag_filling, restricted_greedy, round_robin  # noqa: E402
from utils.bid_data import ingest_bids, pool_summary, synthetic_bid_pool  # noqa: E402
from utils.experiment_harness import run_experiment  # noqa: E402
from utils.experiment_models import FAMILIES, GeneratorSpec, load_experiment_config  # noqa: E402
from utils.fair_instance import (InstanceError, allocation_from_json_obj, dump_instance,  # noqa: E402
                                 fairness_score, fraction_text, guarantee_report, load_instance,
                                 ratio_text, to_fraction)
from utils.instance_generators import generate, parse_distribution  # noqa: E402
from utils.lp_rounding import LP_METHODS, lp_allocation  # noqa: E402
from utils.report_writer import decimal_text, emit_report, format_for_path  # noqa: E402
from utils.share_solver import (BudgetExhausted, SolverBudget, compute_shares, heuristic_share,  # noqa: E402
                                wmms_exact)
from utils.stochastic_check import MODELS, verify_stochastic_model  # noqa: E402

logger = logging.getLogger("wmms")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _budget(args) -> SolverBudget:
    return SolverBudget(max_states=args.budget or DEFAULT_MAX_STATES,
                        time_limit=args.time_limit if args.time_limit is not None else DEFAULT_TIME_LIMIT)


def _entitlements_arg(text):
    if text is None or text in ("equal", "random"):
        return text
    return [p.strip() for p in text.split(",") if p.strip()]


def _load_shares(path: str) -> list:
    """A JSON list of numbers, or an object with a "values" list (the `solve` output)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    values = raw.get("values") if isinstance(raw, dict) else raw
    if not isinstance(values, list):
        raise ValueError(f"{path}: expected a list of shares or an object with 'values'")
    return [to_fraction(v) for v in values]



def _load_allocation(instance, path: str):
    """A JSON list of 1-based bundles, or an object with an "allocation" list (the `allocate` output)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    bundles = raw.get("allocation") if isinstance(raw, dict) else raw
    if not isinstance(bundles, list) or not all(isinstance(b, list) for b in bundles):
        raise ValueError(f"{path}: expected a list of bundles or an object with 'allocation'")
    try:
        return allocation_from_json_obj(instance, bundles)
    except TypeError as e:
        raise ValueError(f"{path}: bundle entries must be item numbers ({e})") from None


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _share_obj(agent: int, result, method: str) -> dict:
    # heuristic results count restarts, exact ones explored states
    effort = "restarts" if method == "heuristic-lower-bound" else "states_explored"
    return {
        "agent": agent + 1,
        "value": fraction_text(result.value),
        "witness": result.witness.to_json_obj(),
        "method": method,
        effort: result.states_explored,
    }


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    method = "heuristic-lower-bound" if args.heuristic else "exact"
    agents = [args.agent - 1] if args.agent else list(instance.agents)
    for a in agents:
        if not 0 <= a < instance.agent_count:
            raise ValueError(f"--agent must lie in 1..{instance.agent_count}")

    results = []
    for a in agents:
        if args.heuristic:
            res = heuristic_share(instance, a, args.heuristic, args.seed)
        else:
            res = wmms_exact(instance, a, _budget(args))
        results.append(_share_obj(a, res, method))

    if args.agent:
        _emit(results[0])
    else:
        _emit({"method": method, "values": [r["value"] for r in results], "agents": results})
    return EXIT_OK


# ---------------------------------------------------------------------------
# allocate
# ---------------------------------------------------------------------------

def cmd_allocate(args) -> int:
    instance = load_instance(args.instance)
    shares = None
    if args.shares:
        shares = _load_shares(args.shares)
        if len(shares) != instance.agent_count:
            raise ValueError(f"{args.shares}: expected {instance.agent_count} shares, got {len(shares)}")
    elif args.exact or args.alg != "lp":
        shares = list(compute_shares(instance, "exact", _budget(args)).values)

    out = {"algorithm": args.alg}
    if args.alg == "roundrobin":
        allocation = round_robin(instance)
    elif args.alg == "bagfill":
        thresholds = [s / 2 for s in shares] if args.shares else None
        allocation = bag_filling(instance, thresholds, complete=args.complete, budget=_budget(args))
    elif args.alg == "restricted":
        allocation = restricted_greedy(instance, shares, complete=args.complete)
    else:
        _, allocation, certs = lp_allocation(instance, args.lp_method)
        out["certificates"] = [c.to_json_obj() for c in certs]

    out["allocation"] = allocation.to_json_obj()
    out["complete"] = allocation.complete
    if shares is not None:
        out["shares"] = [fraction_text(s) for s in shares]
        out["guarantee"] = guarantee_report(instance, allocation, shares).to_json_obj()
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _score_or_none(instance, agent, allocation):
    try:
        return fraction_text(fairness_score(instance, agent, allocation))
    except InstanceError:
        return None  # agent values every item at 0


def cmd_evaluate(args) -> int:
    instance = load_instance(args.instance)
    allocation = _load_allocation(instance, args.allocation)
    out = {
        "allocation": allocation.to_json_obj(),
        "complete": allocation.complete,
        "unallocated": [j + 1 for j in allocation.unallocated(instance)],
        "fairness_scores": [_score_or_none(instance, i, allocation) for i in instance.agents],
    }
    shares = None
    if args.shares:
        shares = _load_shares(args.shares)
    elif args.exact:
        shares = list(compute_shares(instance, "exact", _budget(args)).values)
    if shares is not None:
        out["shares"] = [fraction_text(s) for s in shares]
        out["guarantee"] = guarantee_report(instance, allocation, shares).to_json_obj()
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GeneratorSpec(
        family=args.family,
        n=args.n,
        m=args.m,
        epsilon=args.epsilon,
        distributions=args.dist or [],
        entitlements=_entitlements_arg(args.entitlements) or "equal",
        seed=args.seed,
    )
    pool = ingest_bids(args.bids or DEFAULT_BIDS_PATH) if spec.family == "bids" else None
    instance = generate(spec, pool)
    dump_instance(instance, args.output)
    out = {"family": spec.family, "n": instance.agent_count, "m": instance.item_count,
           "seed": spec.seed, "path": args.output}
    if spec.distributions:
        out["distributions"] = [parse_distribution(d).describe() for d in spec.distributions]
    if pool is not None:
        out["pool"] = pool_summary(pool)
    _emit(out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.workers:
        cfg = type(cfg).model_validate({**cfg.model_dump(), "workers": args.workers})
    fmt = format_for_path(args.output)
    if args.bids:
        source = ingest_bids(args.bids)
        logger.info("bid pool: %s", pool_summary(source))
    elif cfg.generator is not None:
        source = cfg.generator
    else:
        source = synthetic_bid_pool(SYNTHETIC_CATEGORIES, SYNTHETIC_BIDS_PER_CATEGORY, cfg.seed)
    report = run_experiment(cfg, source)
    emit_report(report, fmt, args.output)
    _emit({
        "path": args.output,
        "format": fmt,
        "rows": [
            {"m": row.m, "min_ratio": decimal_text(row.min_ratio),
             "min_ratio_exact": None if row.min_ratio is None else ratio_text(row.min_ratio),
             "ratio_label": row.ratio_label, "failures": row.failures}
            for row in report.rows
        ],
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-stochastic
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    result = verify_stochastic_model(
        args.model, args.n, args.m, args.epsilon, args.trials, args.seed,
        distributions=args.dist or None,
        entitlements=_entitlements_arg(args.entitlements),
        strict_variant=args.strict,
    )
    _emit(result.to_json_obj())
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wmms", description="Weighted maxmin share toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def budget_flags(p):
        p.add_argument("--budget", type=int, default=0, help="max explored states for exact solves")
        p.add_argument("--time-limit", type=float, default=None, help="seconds per exact solve")

    p = sub.add_parser("solve", help="compute WMMS values")
    p.add_argument("--instance", required=True)
    p.add_argument("--agent", type=int, default=0, help="1-based agent (default: all)")
    p.add_argument("--heuristic", type=int, default=0, metavar="N",
                   help=f"local-search lower bound with N restarts (e.g. {DEFAULT_HEURISTIC_ITERATIONS})")
    p.add_argument("--seed", type=int, default=0)
    budget_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("allocate", help="run an allocation algorithm")
    p.add_argument("--instance", required=True)
    p.add_argument("--alg", required=True, choices=["roundrobin", "bagfill", "restricted", "lp"])
    group = p.add_mutually_exclusive_group()
    group.add_argument("--shares", help="JSON file with share values")
    group.add_argument("--exact", action="store_true", help="compute exact shares")
    p.add_argument("--complete", action="store_true", help="deal leftover items round-robin")
    p.add_argument("--lp-method", default=LP_METHOD, choices=list(LP_METHODS))
    budget_flags(p)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("evaluate", help="score a given allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--allocation", required=True, help="JSON bundles of 1-based items, or `allocate` output")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--shares", help="JSON file with share values")
    group.add_argument("--exact", action="store_true", help="compute exact shares")
    budget_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--family", required=True, choices=list(FAMILIES))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--epsilon", default=None, help="rational, e.g. 1/100")
    p.add_argument("--dist", action="append", help="uniform:lo,hi | point:v | empirical:v1;v2 (repeatable)")
    p.add_argument("--entitlements", default=None, help="equal | random | comma-separated list")
    p.add_argument("--bids", default=None, help="bid CSV for the bids family")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("experiment", help="run a batch experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--bids", default=None, help="bid CSV (default: synthetic pool or config generator)")
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="OUT.csv or OUT.json")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify-stochastic", help="Monte Carlo check of the stochastic models")
    p.add_argument("--model", required=True, type=str.upper, choices=list(MODELS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--epsilon", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--dist", action="append")
    p.add_argument("--entitlements", default=None, help="equal | random | comma-separated list")
    p.add_argument("--strict", action="store_true", help="check the 1 - 3 epsilon factor")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExhausted as e:
        logger.error("%s (best=%s, upper bound=%s, states=%d)", e,
                     e.best_value, e.upper_bound, e.states_explored)
        return EXIT_BUDGET
    except (ValidationError, ValueError, FileNotFoundError) as e:
        logger.error("%s", e)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
