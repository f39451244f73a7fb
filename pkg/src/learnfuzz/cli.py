"""Command-line entry point: ``learnfuzz learn|fuzz|combined|generate|report|suite``."""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import fields
from pathlib import Path

from learnfuzz.dot import DotParseError
from learnfuzz.harness.generator import GeneratorError, ProblemSpec, generate_problem
from learnfuzz.harness.report import ErrorReport, comparison_table
from learnfuzz.harness.runner import (TECHNIQUES, CampaignConfig, ConfigError, cmd_combined,
                                      cmd_fuzz, cmd_learn, parse_config_text, run_suite,
                                      write_generated)
from learnfuzz.harness.traces import read_traces
from learnfuzz.learner import BINARY_SEARCH, LINEAR_FORWARD
from learnfuzz.program import ExpansionTooLarge, ProgramSyntaxError


def _campaign_flags(p: argparse.ArgumentParser, problem_required: bool = True):
    S = argparse.SUPPRESS
    p.add_argument("--problem", required=problem_required, default=S,
                   help="program (.rp) or machine (.dot) file")
    p.add_argument("--config", help="file of key=value lines mirroring the flags")
    p.add_argument("--out", default=S, help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--budget-secs", type=float, default=S, help="wall-clock budget")
    p.add_argument("--budget-execs", type=lambda s: int(float(s)), default=S,
                   help="fuzzer execution budget")
    p.add_argument("--tester-min-infix", type=int, default=S, help="default 3")
    p.add_argument("--tester-expected-infix", type=int, default=S, help="default 11")
    p.add_argument("--tester-budget", type=lambda s: int(float(s)), default=S,
                   help="random Wp tests per equivalence query (default 100000)")
    p.add_argument("--oracle", choices=("wp", "fuzz", "chain", "perfect"), default=S,
                   help="equivalence oracle for learn (default wp)")
    p.add_argument("--strategy", choices=(BINARY_SEARCH, LINEAR_FORWARD), default=S)
    p.add_argument("--corpus", default=S, help="fuzz corpus directory for --oracle fuzz|chain")
    p.add_argument("--encoding", default=S, help="byte table such as 'a:97,b:98'")
    p.add_argument("--max-states", type=int, default=S)


def build_config(args) -> CampaignConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_text(Path(args.config).read_text()))
    names = {f.name for f in fields(CampaignConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    return CampaignConfig(**values).validate()


def _run(command, args):
    cfg = build_config(args)
    result = command(cfg)
    print(result.report.text(), end="")
    return 0


def _generate(args):
    kw = {}
    names = {f.name for f in fields(ProblemSpec)}
    for item in args.spec or []:
        if "=" not in item:
            raise ConfigError(f"--spec expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.replace("-", "_")
        if k not in names:
            raise ConfigError(f"unknown generator setting {k!r}")
        kw[k] = int(v)
    gen = generate_problem(ProblemSpec(seed=args.seed, **kw))
    path = write_generated(gen, args.out, args.name)
    print(f"wrote {path}")
    print(f"ground-truth states  {gen.ground_truth.n_states}")
    print(f"reachable errors     {' '.join(map(str, sorted(gen.reachable_errors)))}")
    return 0


def _error_ids(path) -> set[int]:
    return {int(t[0]) for t in read_traces(path) if t}


def _read_report(directory: Path) -> dict:
    with open(directory / "report.csv", newline="") as fh:
        return {row["key"]: row["value"] for row in csv.DictReader(fh)}


def _report(args):
    if args.learner or args.fuzzer:
        learner = _error_ids(args.learner) if args.learner else set()
        fuzzer = _error_ids(args.fuzzer) if args.fuzzer else set()
        print(ErrorReport.of(learner, fuzzer).text(), end="")
        return 0
    if not args.runs:
        raise ConfigError("give run directories or --learner/--fuzzer error lists")
    rows = [_read_report(Path(r)) for r in args.runs]
    cols = ["problem", "command", "seed", "states", "hypotheses", "cycles", "execs", "paths",
            "learner-errors", "fuzzer-errors", "total-errors"]
    cols = [c for c in cols if any(c in r for r in rows)]
    print(comparison_table(rows, cols), end="")
    return 0


def _suite(args):
    cfg = build_config(args)
    problems = list(args.problems)
    results = run_suite(problems, args.technique, cfg, args.out_dir, args.workers)
    rows = [dict(r.report.rows, problem=r.problem, errors=len(r.errors)) for r in results]
    cols = ["problem", "states", "execs", "errors"]
    cols = [c for c in cols if any(c in r for r in rows)]
    print(comparison_table(rows, cols), end="")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="learnfuzz",
                                     description="Learn and fuzz reactive programs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("learn", help="active learning with an equivalence oracle")
    _campaign_flags(p)
    p = sub.add_parser("fuzz", help="coverage-guided fuzz campaign")
    _campaign_flags(p)
    p = sub.add_parser("combined", help="fuzz, then learn with the corpus as oracle")
    _campaign_flags(p)
    p = sub.add_parser("generate", help="write a random problem with known errors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--name", default="problem")
    p.add_argument("--spec", action="append", metavar="KEY=VALUE",
                   help="generator setting, e.g. n_modes=6 (repeatable)")
    p = sub.add_parser("report", help="tabulate runs or compare error lists")
    p.add_argument("runs", nargs="*", help="run output directories")
    p.add_argument("--learner", help="error list of the learner")
    p.add_argument("--fuzzer", help="error list of the fuzzer")
    p = sub.add_parser("suite", help="one technique over many problems")
    _campaign_flags(p, problem_required=False)
    p.add_argument("problems", nargs="+")
    p.add_argument("--technique", choices=TECHNIQUES, default="learn-wp")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", default="suite-out")
    return parser


_HANDLERS = {"learn": lambda a: _run(cmd_learn, a), "fuzz": lambda a: _run(cmd_fuzz, a),
             "combined": lambda a: _run(cmd_combined, a), "generate": _generate,
             "report": _report, "suite": _suite}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ProgramSyntaxError, DotParseError, GeneratorError, ExpansionTooLarge,
            OSError) as exc:
        print(f"learnfuzz: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
