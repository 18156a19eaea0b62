"""Command-line front end: verify, oracle, and replay subcommands.

Exit codes: 0 the program is secure, 1 a violation was found, 2 usage or
parse or internal error, 3 secure up to the depth bound (some executions
were abandoned; warnings go to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .errors import BoundExceededError, CheckerError, ParseError
from .executor import Granularity
from .explorer import Category, Iteration, replay
from .lang import Program, parse
from .monitor import observe
from .oracle import check_program
from .verifier import Verdict, report_to_dict, verify_program

EXIT_SECURE = 0
EXIT_INSECURE = 1
EXIT_ERROR = 2
EXIT_BOUNDED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odcheck",
        description="Check observational determinism of small multithreaded programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--program", required=True, help="path to a .imp source file")
        p.add_argument(
            "--categories",
            help="initial-store categories: a JSON file path, or inline JSON"
            " (defaults to one category built from the declared initial values)",
        )
        p.add_argument("--depth-bound", type=int, default=10000, metavar="N",
                       help="per-execution step limit (default 10000)")
        p.add_argument("--granularity", choices=[g.value for g in Granularity],
                       default=Granularity.STMT.value,
                       help="atomic step size (default stmt)")
        p.add_argument("--report", metavar="FILE", help="write the JSON report here")

    verify = sub.add_parser("verify", help="signature-based verification")
    common(verify)
    verify.add_argument("--fair", type=int, metavar="K",
                        help="prune schedules that starve an enabled thread for more"
                             " than K consecutive steps")
    verify.add_argument("--sig-dir", metavar="DIR",
                        help="persist per-category signature files in DIR")

    oracle = sub.add_parser("oracle", help="brute-force trace census and verdict")
    common(oracle)

    rep = sub.add_parser("replay", help="re-execute a witness iteration from a report")
    rep.add_argument("--report", required=True, metavar="FILE",
                     help="JSON report produced by verify")
    rep.add_argument("--which", choices=["violating", "reference"], default="violating",
                     help="which witness iteration to replay (default violating)")
    rep.add_argument("--category", help="category name (default: the one with a witness)")
    rep.add_argument("--program", help="override the program path stored in the report")
    return parser


def _load_program(path: str) -> Program:
    try:
        source = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CheckerError(f"cannot read {path}: {exc}") from exc
    try:
        return parse(source)
    except ParseError as exc:
        raise CheckerError(f"{path}:{exc.line}:{exc.col}: {exc.message}") from exc


def _load_categories(program: Program, spec: Optional[str]) -> list[Category]:
    if spec is None:
        return [Category.from_names(program)]
    text = spec if spec.lstrip().startswith("{") else Path(spec).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckerError(f"invalid categories JSON: {exc}") from exc
    entries = data.get("categories") if isinstance(data, dict) else None
    if not isinstance(entries, list) or not entries:
        raise CheckerError('categories JSON must look like {"categories": [...]}')
    cats = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise CheckerError(f"category #{i + 1} must be an object")
        cats.append(
            Category.from_names(
                program,
                name=entry.get("name", f"cat{i + 1}"),
                low=entry.get("low"),
                high_domains=entry.get("high_domains"),
            )
        )
    return cats


def _write_report(path: Optional[str], payload: dict) -> None:
    if path is None:
        return
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _format_store(store) -> str:
    return "(" + ", ".join(str(v) for v in store) + ")"


def _cmd_verify(args: argparse.Namespace) -> int:
    program = _load_program(args.program)
    categories = _load_categories(program, args.categories)
    granularity = Granularity(args.granularity)
    report = verify_program(
        program,
        categories,
        args.depth_bound,
        granularity,
        fairness=args.fair,
        sig_dir=args.sig_dir,
    )

    payload = report_to_dict(report)
    payload["program"] = args.program
    payload["granularity"] = granularity.value
    payload["depth_bound"] = args.depth_bound
    payload["fairness"] = args.fair
    payload["generated_at"] = datetime.now(timezone.utc).isoformat()
    _write_report(args.report, payload)

    print(f"verdict: {report.verdict.value}")
    for result in report.categories:
        stats = result.stats
        line = (
            f"category {result.name}: {result.verdict.value}"
            f" ({stats.completed} completed, {result.iterations_checked} checked"
        )
        if stats.depth_exceeded:
            line += f", {stats.depth_exceeded} abandoned"
        if stats.pruned:
            line += f", {stats.pruned} pruned"
        line += ")"
        print(line)
        if result.witness is not None:
            w = result.witness
            print(
                f"  witness: reference schedule {list(w.reference.schedule)},"
                f" violating schedule {list(w.violating.schedule)},"
                f" {w.detail.kind.value}"
                + (f" at change {w.detail.position}" if w.detail.position else " at end")
            )
        if stats.depth_exceeded:
            print(
                f"warning: category {result.name!r}: {stats.depth_exceeded} execution(s)"
                f" exceeded the depth bound ({args.depth_bound}); raise --depth-bound"
                " for full coverage",
                file=sys.stderr,
            )
    if args.report:
        print(f"report written to {args.report}")

    if report.verdict is Verdict.INSECURE:
        return EXIT_INSECURE
    if report.verdict is Verdict.SECURE_UP_TO_BOUND:
        return EXIT_BOUNDED
    return EXIT_SECURE


def _cmd_oracle(args: argparse.Namespace) -> int:
    program = _load_program(args.program)
    categories = _load_categories(program, args.categories)
    granularity = Granularity(args.granularity)
    report = check_program(program, categories, args.depth_bound, granularity)

    payload = {
        "program": args.program,
        "granularity": granularity.value,
        "depth_bound": args.depth_bound,
        "secure": report.secure,
        "categories": [],
    }
    for result in report.categories:
        traces = sorted(result.traces.items())
        executions = sum(result.traces.values())
        print(
            f"category {result.name}: {'secure' if result.secure else 'INSECURE'}"
            f" ({len(traces)} distinct collapsed trace(s) over {executions} execution(s))"
        )
        for trace, count in traces:
            print(f"  {count} x " + " ".join(_format_store(s) for s in trace))
        payload["categories"].append(
            {
                "name": result.name,
                "secure": result.secure,
                "traces": [
                    {"trace": [list(s) for s in trace], "count": count}
                    for trace, count in traces
                ],
            }
        )
    print(f"verdict: {'SECURE' if report.secure else 'INSECURE'}")
    _write_report(args.report, payload)
    return EXIT_SECURE if report.secure else EXIT_INSECURE


def _cmd_replay(args: argparse.Namespace) -> int:
    try:
        payload = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckerError(f"cannot load report {args.report}: {exc}") from exc

    entry = None
    for cat_entry in payload.get("categories", []):
        if args.category is not None:
            if cat_entry.get("name") == args.category:
                entry = cat_entry
                break
        elif cat_entry.get("witness"):
            entry = cat_entry
            break
    if entry is None:
        raise CheckerError(
            f"no category named {args.category!r} in the report"
            if args.category
            else "the report holds no witness to replay"
        )
    witness = entry.get("witness")
    if not witness:
        raise CheckerError(f"category {entry.get('name')!r} has no witness")

    program_path = args.program or payload.get("program")
    if not program_path:
        raise CheckerError("the report names no program; pass --program")
    program = _load_program(program_path)
    category = Category.from_names(
        program,
        name=entry["name"],
        low=entry.get("low"),
        high_domains=entry.get("high_domains"),
    )
    granularity = Granularity(payload.get("granularity", Granularity.STMT.value))

    chosen = witness[args.which]
    high_assignment = {
        program.by_name[name].var_id: value for name, value in chosen["highs"].items()
    }
    iteration = Iteration(high_assignment, tuple(chosen["schedule"]), chosen["ordinal"])

    events = []
    replay(program, category, iteration, granularity, events.append)
    _, trace = observe(program, category.initial_low_store(program), events)
    for store in trace:
        print(_format_store(store))
    return EXIT_SECURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep those codes
        return int(exc.code) if exc.code else 0
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_replay(args)
    except BoundExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except CheckerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
