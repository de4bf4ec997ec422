"""Command-line front end.

Usage::

    earkit extract  --dataset DIR [--descriptors LBP,HOG] [--out DIR]
    earkit evaluate --dataset DIR [--splits FILE] [--k 5] [--seed 0] [--out DIR]
    earkit report   DIR
    earkit split    --dataset DIR --dest FILE [--k 5] [--seed 0]

Settings come from an optional JSON ``--config`` file; command-line flags
override file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import EarkitError
from .pipeline import ExperimentConfig, cmd_evaluate, cmd_extract, cmd_split, load_config, ranked_rows, render_report

log = logging.getLogger("earkit")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--dataset", help="dataset root with one folder per subject")
    p.add_argument("--descriptors", help="comma-separated subset of LBP,LPQ,RILPQ,BSIF,POEM,HOG,DSIFT,GABOR")
    p.add_argument("--splits", help="split/fold list file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--k", type=int, help="number of folds")
    p.add_argument("--measure", action="append", metavar="DESC=MEASURE",
                   help="override the distance for a descriptor, e.g. HOG=COSINE (repeatable)")
    p.add_argument("--bsif-filters", dest="bsif_filters", help="BSIF filter file (default: seeded random bank)")
    p.add_argument("--size", type=int, nargs=2, metavar=("W", "H"), help="preprocessing target size")
    p.add_argument("--jobs", type=int, help="worker processes for extraction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="earkit", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute feature caches")
    _common(p)
    p = sub.add_parser("evaluate", help="run the fold protocol and write the report")
    _common(p)
    p.add_argument("--test", dest="evaluate_test", action="store_true", default=None,
                   help="also score test images against the dev gallery with bootstrap statistics")
    p = sub.add_parser("report", help="print a ranked summary of an evaluation directory")
    p.add_argument("directory")
    p = sub.add_parser("split", help="write a seeded split/fold list")
    _common(p)
    p.add_argument("--dest", required=True, help="output list file")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_config(args.config) if getattr(args, "config", None) else {}
    overrides = {
        "dataset": args.dataset,
        "descriptors": args.descriptors,
        "splits": args.splits,
        "seed": args.seed,
        "out": args.out,
        "k": args.k,
        "bsif_filters": args.bsif_filters,
        "target": args.size,
        "jobs": args.jobs,
        "evaluate_test": getattr(args, "evaluate_test", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.measure:
        measures = dict(data.get("measures") or {})
        for item in args.measure:
            name, _, value = item.partition("=")
            measures[name] = value
        data["measures"] = measures
    return ExperimentConfig.from_mapping(data)


def cmd_report(directory) -> str:
    directory = Path(directory)
    path = directory / "report.json"
    if not path.is_file():
        raise FileNotFoundError(f"no report.json in {directory}")
    report = json.loads(path.read_text(encoding="utf-8"))
    lines = [render_report(report).rstrip("\n"), "", "files:"]
    for name, entry in ranked_rows(report):
        for kind in ("cmc", "roc"):
            for f in entry["curves"][kind]:
                status = "ok" if (directory / f).is_file() else "MISSING"
                lines.append(f"  {f} [{status}]")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            sys.stdout.write(cmd_report(args.directory))
            return 0
        config = resolve_config(args)
        if args.command == "extract":
            for d, path in cmd_extract(config).items():
                print(f"{d}: {path}")
        elif args.command == "evaluate":
            report = cmd_evaluate(config)
            sys.stdout.write(render_report(report))
        elif args.command == "split":
            print(cmd_split(config, args.dest))
    except (EarkitError, OSError) as exc:
        print(f"earkit: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
