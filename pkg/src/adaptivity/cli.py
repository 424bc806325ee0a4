"""Command line entry point: ``simulate``, ``fixture``, ``analyze`` and ``serve``.

Exit codes: 0 on success, 2 on typed domain errors, 1 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from adaptivity._docs import dumps
from adaptivity.config import AdaptationConfig
from adaptivity.errors import AdaptivityError
from adaptivity.fixtures import SHAPES, generate_fixture
from adaptivity.simulator import SyntheticStudent, analyze_log, simulate, write_report

log = logging.getLogger("adaptivity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptivity", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one synthetic student through the planner")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--lexicon", required=True, type=Path)
    p.add_argument("--sessions", required=True, type=int)
    p.add_argument("--ability", type=float, default=0.0)
    p.add_argument("--learning-rate", type=float, default=0.0)
    p.add_argument("--difficulty-scale", type=float, default=1.0)
    p.add_argument("--skip-probability", type=float, default=0.0,
                   help="chance of abandoning a fetched plan without submitting")
    p.add_argument("--age-level", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, default=None, help="adaptation config JSON")
    p.add_argument("--http", default=None, metavar="URL", help="drive a running service instead")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("fixture", help="generate a synthetic graph and lexicon")
    p.add_argument("--shape", required=True, choices=SHAPES)
    p.add_argument("--features", required=True, type=int)
    p.add_argument("--entries-per-feature", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("analyze", help="recompute a report from an event log")
    p.add_argument("--log", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", type=Path, default=None, help="service config JSON")
    return parser


def _summary(report) -> str:
    return (f"student={report.student_id} played={report.sessions_played} "
            f"max_streak={report.max_repetition_streak} rollbacks={report.rollback_count} "
            f"maxed={len(report.sessions_to_max)}")


def run(args: argparse.Namespace) -> None:
    if args.command == "simulate":
        config = AdaptationConfig.from_doc(args.config.read_bytes() if args.config else None)
        student = SyntheticStudent(args.ability, args.learning_rate, args.difficulty_scale,
                                   args.skip_probability, args.age_level)
        report = simulate(json.loads(args.graph.read_bytes()), json.loads(args.lexicon.read_bytes()), student,
                          args.sessions, config, args.seed, args.out, http=args.http)
        print(_summary(report))
    elif args.command == "fixture":
        graph, lexicon = generate_fixture(args.features, args.shape, args.entries_per_feature, args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "graph.json").write_text(dumps(graph) + "\n", encoding="utf-8")
        (args.out / "lexicon.json").write_text(dumps(lexicon) + "\n", encoding="utf-8")
        print(f"wrote {args.out / 'graph.json'} and {args.out / 'lexicon.json'}")
    elif args.command == "analyze":
        report = analyze_log(args.log)
        write_report(report, args.out)
        print(_summary(report))
    elif args.command == "serve":
        from adaptivity.service import serve

        serve(args.config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        run(args)
    except AdaptivityError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
