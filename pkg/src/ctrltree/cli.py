"""Batch command-line driver.

Subcommands: `build` (one tree, optional JSON/DOT/C outputs), `bench`
(a batch of configs, CSV/markdown table), `serve` (HTTP service) and
`simulate` (interactive stepping on a tree file).  Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import format_results, run_experiments
from .builder import BuildConfig, build_tree
from .errors import CtrlTreeError
from .export import export_c, export_dot, export_json, import_json
from .ingest import (
    parse_controller_csv,
    parse_metadata_document,
    parse_strategy_json,
)
from .model import tree_stats
from .simulate import Simulation, parse_transitions


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctrltree")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="build one decision tree")
    build.add_argument("--controller", help="controller CSV file")
    build.add_argument("--strategy-json", help="strategy JSON file")
    build.add_argument("--metadata", help="variable metadata JSON file")
    build.add_argument("--dk", help="domain-knowledge predicate file")
    build.add_argument("--config", help="JSON config file (flags override it)")
    build.add_argument("--impurity", default=None)
    build.add_argument("--determinize", default=None)
    build.add_argument("--seed", type=int, default=None,
                       help="seed for --determinize random")
    build.add_argument("--priority", action="append", default=[],
                       metavar="DOMAIN=VALUE")
    build.add_argument("--tolerance", default=None,
                       help="grouping tolerance (number or 'inf')")
    build.add_argument("--leaf-mode", choices=["single", "common-set"], default=None)
    build.add_argument("--max-depth", type=int, default=None)
    build.add_argument("--out-json")
    build.add_argument("--out-dot")
    build.add_argument("--out-c")
    build.add_argument("--stats", action="store_true",
                       help="print node counts and depth")

    bench = sub.add_parser("bench", help="run a batch of configurations")
    bench.add_argument("--controller", help="controller CSV file")
    bench.add_argument("--strategy-json", help="strategy JSON file")
    bench.add_argument("--metadata")
    bench.add_argument("--configs", required=True,
                       help="JSON array of config documents")
    bench.add_argument("--repeats", type=int, default=1)
    bench.add_argument("--format", choices=["csv", "markdown"], default="csv")
    bench.add_argument("--case", default=None, help="case name in the table")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--port", type=int, default=8642)
    serve.add_argument("--data-dir",
                       default=os.environ.get("CTRLTREE_DATA_DIR", "ctrltree-data"))
    serve.add_argument("--host", default="127.0.0.1")

    sim = sub.add_parser("simulate", help="step a tree interactively on stdin")
    sim.add_argument("--tree", required=True, help="tree JSON file")
    sim.add_argument("--transitions", help="transitions JSON file")
    return parser


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise CtrlTreeError(f"cannot read {path}: {e}") from None


def _load_controller(args, parser):
    if bool(args.controller) == bool(args.strategy_json):
        parser.error("provide exactly one of --controller / --strategy-json")
    meta = objective = None
    if args.metadata:
        doc = parse_metadata_document(_read(args.metadata))
        meta, objective = list(doc.variables), doc.objective
    if args.controller:
        controller = parse_controller_csv(_read(args.controller), meta)
    else:
        controller = parse_strategy_json(_read(args.strategy_json), meta)
    if objective is not None:
        controller.objective = objective
    return controller


def _parse_priorities(entries, parser) -> dict[str, float]:
    out: dict[str, float] = {}
    for entry in entries:
        if "=" not in entry:
            parser.error(f"--priority expects DOMAIN=VALUE, got {entry!r}")
        domain, _, value = entry.partition("=")
        try:
            out[domain.strip()] = float(value)
        except ValueError:
            parser.error(f"--priority {entry!r}: not a number")
    return out


def _config_from_args(args, parser) -> BuildConfig:
    doc = {}
    if args.config:
        doc = json.loads(_read(args.config))
    if args.impurity is not None:
        doc["impurity"] = args.impurity
    if args.determinize is not None:
        doc["determinize"] = args.determinize
    if args.seed is not None:
        doc["seed"] = args.seed
    priorities = _parse_priorities(args.priority, parser)
    if priorities:
        doc["priorities"] = {**doc.get("priorities", {}), **priorities}
    if args.tolerance is not None:
        doc["tolerance"] = ("inf" if args.tolerance.strip().lower() == "inf"
                            else float(args.tolerance))
    if args.leaf_mode is not None:
        doc["leaf_mode"] = args.leaf_mode
    if args.max_depth is not None:
        doc["max_depth"] = args.max_depth
    if args.dk:
        doc["domain_knowledge"] = [
            line for line in _read(args.dk).decode("utf-8").splitlines()
            if line.strip() and not line.strip().startswith("#")]
    return BuildConfig.from_dict(doc)


def _cmd_build(args, parser) -> int:
    controller = _load_controller(args, parser)
    config = _config_from_args(args, parser)
    tree = build_tree(controller, config)
    if args.out_json:
        Path(args.out_json).write_text(export_json(tree))
    if args.out_dot:
        Path(args.out_dot).write_text(export_dot(tree))
    if args.out_c:
        Path(args.out_c).write_text(export_c(tree))
    if args.stats:
        s = tree_stats(tree)
        print(f"nodes={s.total_nodes} inner={s.inner_nodes} depth={s.depth}")
    return 0


def _cmd_bench(args, parser) -> int:
    controller = _load_controller(args, parser)
    docs = json.loads(_read(args.configs))
    if not isinstance(docs, list):
        raise CtrlTreeError("--configs must hold a JSON array of config documents")
    configs = [BuildConfig.from_dict(d) for d in docs]
    case = args.case or Path(args.controller or args.strategy_json).stem
    results = run_experiments(controller, configs, repeats=args.repeats, case=case)
    print(format_results(results, args.format), end="")
    return 0


def _cmd_simulate(args) -> int:
    tree = import_json(_read(args.tree).decode("utf-8"))
    transitions = None
    if args.transitions:
        transitions = parse_transitions(_read(args.transitions), tree)

    def show(path):
        for _, display, branch in path.steps:
            print(f"  {display} -> {'true' if branch else 'false'}")
        print(f"allowed: {', '.join(sorted(path.actions))}")

    first = sys.stdin.readline()
    if not first.strip():
        print("no initial state given", file=sys.stderr)
        return 1
    state = tuple(tok.strip() for tok in first.split(","))
    sim = Simulation(tree, state, transitions)
    show(sim.current_path())
    for line in sys.stdin:
        line = line.strip()
        if not line or line == "quit":
            break
        action, _, rest = line.partition(";")
        next_state = tuple(tok.strip() for tok in rest.split(",")) if rest else None
        try:
            path = sim.step(action.strip(), next_state)
        except CtrlTreeError as e:
            print(f"error: {e}", file=sys.stderr)
            continue
        print(f"state: {', '.join(str(v) for v in sim.state)}")
        show(sim.current_path())
    return 0


def run_cli(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "build":
            return _cmd_build(args, parser)
        if args.command == "bench":
            return _cmd_bench(args, parser)
        if args.command == "serve":
            from .service import serve
            serve(port=args.port, data_dir=args.data_dir, host=args.host)
            return 0
        if args.command == "simulate":
            return _cmd_simulate(args)
    except CtrlTreeError as e:
        print(f"error [{e.kind}]: {e}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as e:
        print(f"error [MalformedJson]: {e}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
