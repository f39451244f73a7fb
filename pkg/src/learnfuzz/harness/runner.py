"""Campaigns: learn, fuzz and the combined pipeline, plus suites of them.

Each command writes its artifacts into an output directory. ``report.txt``
and ``report.csv`` never contain wall-clock figures, so two runs with the
same seed and no budget cut-off produce identical reports; timings go to
``timing.csv``.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from learnfuzz.dot import from_dot, to_dot
from learnfuzz.fsm import MealyMachine, access_sequences, error_id_of
from learnfuzz.fuzzer.campaign import Corpus, FuzzConfig, FuzzStats, fuzz_campaign, \
    write_stats_csv
from learnfuzz.fuzzer.encoding import ByteEncoding
from learnfuzz.harness.report import ErrorReport, RunReport, extract_errors
from learnfuzz.harness.traces import format_traces, read_traces
from learnfuzz.learner import BINARY_SEARCH, LearnerConfig, LearnerStats, learn
from learnfuzz.oracle import ChainedOracle, FuzzCorpusOracle, PerfectOracle, RandomWpOracle
from learnfuzz.program import expand, load_program
from learnfuzz.targets import FsmTarget, ProgramTarget, QueryCache
from learnfuzz.tester import RandomWpParams

TECHNIQUES = ("learn-wp", "fuzz-only", "learn-fuzz-combined")
ORACLES = ("wp", "fuzz", "chain", "perfect")


class ConfigError(ValueError):
    pass


@dataclass
class CampaignConfig:
    problem: str = ""
    out: str = "out"
    seed: int = 0
    budget_secs: float | None = None
    budget_execs: int | None = None
    tester_min_infix: int = 3
    tester_expected_infix: int = 11
    tester_budget: int = 100_000
    oracle: str = "wp"
    strategy: str = BINARY_SEARCH
    max_states: int | None = None
    corpus: str | None = None           # corpus directory for --oracle fuzz/chain in learn
    encoding: str | None = None         # "label:byte,..." table
    fuzz_share: float = 0.5             # share of the wall budget the combined fuzz phase may use
    havoc_rounds: int = 64
    havoc_intensity: int = 8
    splice_rounds: int = 8
    max_len: int = 64
    replay_crashes: bool = True
    replay_queue: bool = True

    def validate(self):
        if self.budget_secs is not None and self.budget_secs < 0:
            raise ConfigError("budget-secs must not be negative")
        if self.budget_execs is not None and self.budget_execs <= 0:
            raise ConfigError("budget-execs must be positive")
        if self.oracle not in ORACLES:
            raise ConfigError(f"oracle must be one of {', '.join(ORACLES)}")
        if not 0 < self.fuzz_share <= 1:
            raise ConfigError("fuzz-share must be within (0, 1]")
        RandomWpParams(self.tester_min_infix, self.tester_expected_infix, self.tester_budget)
        return self

    def tester_params(self, salt: int = 0) -> RandomWpParams:
        return RandomWpParams(self.tester_min_infix, self.tester_expected_infix,
                              self.tester_budget, self.seed * 7919 + salt)

    def fuzz_config(self) -> FuzzConfig:
        return FuzzConfig(havoc_rounds=self.havoc_rounds, havoc_intensity=self.havoc_intensity,
                          splice_rounds=self.splice_rounds, max_len=self.max_len)

    def settings(self) -> dict:
        skip = {"problem", "out", "seed"}
        return {f.name.replace("_", "-"): getattr(self, f.name) for f in fields(self)
                if f.name not in skip}


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_config_text(text: str) -> dict:
    """``key=value`` lines (keys as the long flags, dashes or underscores)."""
    types = {f.name: f.type for f in fields(CampaignConfig)}
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        name = key.lstrip("-").replace("-", "_")
        if name not in types:
            raise ConfigError(f"config line {n}: unknown key {key!r}")
        kind = types[name]
        try:
            if value.lower() in ("none", ""):
                values[name] = None
            elif "bool" in kind:
                values[name] = _BOOLS[value.lower()]
            elif "int" in kind:
                values[name] = int(float(value)) if "e" in value.lower() else int(value)
            elif "float" in kind:
                values[name] = float(value)
            else:
                values[name] = value
        except (KeyError, ValueError):
            raise ConfigError(f"config line {n}: bad value {value!r} for {key}") from None
    return values


# --- problems ----------------------------------------------------------------

@dataclass
class Problem:
    name: str
    target: object                      # ProgramTarget or FsmTarget
    encoding: ByteEncoding
    ground_truth: MealyMachine | None = None
    known_errors: set | None = None

    def truth(self) -> MealyMachine:
        if self.ground_truth is None:
            program = getattr(self.target, "program", None)
            if program is None:
                raise ConfigError("no ground truth available for this problem")
            from learnfuzz.fsm import minimize
            self.ground_truth = minimize(expand(program).machine)
        return self.ground_truth


def default_encoding(alphabet, table: str | None = None) -> ByteEncoding:
    if table:
        return ByteEncoding.parse_table(alphabet, table)
    try:
        return ByteEncoding.for_alphabet(alphabet)
    except ValueError:
        return ByteEncoding.by_index(alphabet)


def load_problem(path, encoding: str | None = None, seed: int = 0) -> Problem:
    """A ``.rp`` program or a ``.dot`` machine; ``NAME.errors`` beside it lists known errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"problem file {path} not found")
    text = path.read_text()
    if path.suffix == ".dot":
        machine = from_dot(text)
        target = FsmTarget(machine, seed)
        truth = machine
    else:
        target = ProgramTarget(load_program(text, seed))
        truth = None
    known = None
    side = path.with_suffix(".errors")
    if side.is_file():
        known = {int(t[0]) for t in read_traces(side) if t}
    return Problem(path.stem, target, default_encoding(target.inputs, encoding), truth, known)


def problem_from_generated(gen, name: str | None = None, encoding: str | None = None) -> Problem:
    target = ProgramTarget(gen.program)
    return Problem(name or f"gen-{gen.spec.seed}", target,
                   default_encoding(target.inputs, encoding), gen.ground_truth,
                   set(gen.reachable_errors))


def write_generated(gen, directory, name: str = "problem") -> Path:
    """Writes NAME.rp, NAME.dot (minimal ground truth) and NAME.errors."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rp = directory / f"{name}.rp"
    rp.write_text(gen.program.to_text())
    (directory / f"{name}-truth.dot").write_text(to_dot(gen.ground_truth))
    exp = gen.expansion
    lines = ["# error-id depth : shortest witness"]
    for e in sorted(exp.error_depth):
        lines.append(f"{e} {exp.error_depth[e]}  # {gen.program.inputs.format(exp.error_witness[e])}")
    (directory / f"{name}.errors").write_text("\n".join(lines) + "\n")
    return rp


# --- witnesses ---------------------------------------------------------------

def learner_error_witnesses(hypothesis: MealyMachine) -> dict[int, tuple]:
    """Shortest known word per error id: access sequence plus the erroring input."""
    acc = access_sequences(hypothesis)
    found: dict[int, tuple] = {}
    for q in sorted(acc, key=lambda s: (len(acc[s]), acc[s])):
        for a in range(len(hypothesis.inputs)):
            e = error_id_of(hypothesis.outputs[hypothesis.lam[q][a]])
            if e is not None and e not in found:
                found[e] = acc[q] + (a,)
    return found


def confirm_errors(target, witnesses: dict) -> set[int]:
    """Error ids whose witness raises that very error on a fresh instance."""
    return {e for e, w in witnesses.items() if target.execute(w)[1] == e}


def crash_witnesses(corpus: Corpus, encoding: ByteEncoding) -> dict[int, tuple]:
    found: dict[int, tuple] = {}
    for c in corpus.crashes:
        w = tuple(encoding.sanitize(c.trace))
        if c.error not in found or len(w) < len(found[c.error]):
            found[c.error] = w
    return found


def _write_errors(path: Path, witnesses: dict, confirmed: set, alphabet):
    lines = ["# error-id : witness input word"]
    for e in sorted(witnesses):
        mark = "" if e in confirmed else " UNCONFIRMED"
        lines.append(f"{e}  # {alphabet.format(witnesses[e])}{mark}")
    path.write_text("\n".join(lines) + "\n")


# --- results -----------------------------------------------------------------

@dataclass
class CampaignResult:
    command: str
    problem: str
    learner_errors: set = field(default_factory=set)
    fuzzer_errors: set = field(default_factory=set)
    states: int | None = None
    hypotheses: int | None = None
    complete: bool | None = None
    stats: object = None                # LearnerStats
    fuzz_stats: FuzzStats | None = None
    hypothesis: MealyMachine | None = None
    corpus: Corpus | None = None
    oracles_exhausted: dict = field(default_factory=dict)
    report: RunReport | None = None
    timing: dict = field(default_factory=dict)

    @property
    def errors(self) -> set[int]:
        return self.learner_errors | self.fuzzer_errors


def _learn_phase(problem: Problem, oracle, cfg: CampaignConfig, out: Path | None,
                 budget_secs: float | None):
    cache = QueryCache(problem.target)
    hyp_dir = None
    if out is not None:
        hyp_dir = out / "hypotheses"
        hyp_dir.mkdir(parents=True, exist_ok=True)

    def sink(h, n):
        if hyp_dir is not None:
            (hyp_dir / f"hyp-{n:04d}.dot").write_text(to_dot(h, f"hyp{n}"))

    lconf = LearnerConfig(cfg.strategy, budget_secs, cfg.max_states)
    hyp, stats = learn(cache, oracle, lconf, sink)
    if out is not None:
        with open(out / "learn-stats.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("round", "states", "mqs", "tqs", "elapsed-ms"))
            for r in stats.history:
                w.writerow((r.round, r.states, r.mqs, r.tqs, r.elapsed_ms))
    witnesses = learner_error_witnesses(hyp)
    confirmed = confirm_errors(problem.target, witnesses)
    if out is not None:
        _write_errors(out / "learner-errors.txt", witnesses, confirmed, problem.target.inputs)
    return hyp, stats, confirmed


def _fuzz_phase(problem: Problem, cfg: CampaignConfig, out: Path | None, budget_execs,
                budget_secs):
    corpus, fstats = fuzz_campaign(problem.target, problem.encoding, budget_execs=budget_execs,
                                   budget_secs=budget_secs, seed=cfg.seed,
                                   config=cfg.fuzz_config())
    witnesses = crash_witnesses(corpus, problem.encoding)
    confirmed = confirm_errors(problem.target, witnesses)
    if out is not None:
        corpus.save(out / "corpus")
        write_stats_csv(fstats, out / "fuzz-stats.csv")
        _write_errors(out / "fuzzer-errors.txt", witnesses, confirmed, problem.target.inputs)
    return corpus, fstats, confirmed


def _make_oracle(problem: Problem, cfg: CampaignConfig, corpus: Corpus | None, kind: str):
    target = problem.target
    if kind == "perfect":
        return PerfectOracle(problem.truth(), target)
    wp = RandomWpOracle(target, cfg.tester_params())
    if kind == "wp":
        return wp
    if corpus is None:
        raise ConfigError(f"oracle {kind!r} needs a fuzz corpus")
    replay = FuzzCorpusOracle(target, corpus, problem.encoding, cfg.replay_crashes,
                              cfg.replay_queue)
    return replay if kind == "fuzz" else ChainedOracle([replay, wp])


def _learn_rows(report: RunReport, hyp, stats: LearnerStats):
    report.add("states", hyp.n_states)
    report.add("hypotheses", stats.hypotheses)
    report.add("rounds", stats.rounds)
    report.add("membership-queries", stats.mq_posed)
    report.add("membership-executions", stats.mq_executed)
    report.add("test-queries", stats.test_queries)
    report.add("complete", stats.complete)


def _fuzz_rows(report: RunReport, fstats: FuzzStats):
    report.add("cycles", fstats.cycles)
    report.add("execs", fstats.execs)
    report.add("paths", fstats.paths)
    report.add("crashes", len(fstats.crashes))


def _finish(result: CampaignResult, report: RunReport, out: Path | None):
    result.report = report
    if out is not None:
        (out / "report.txt").write_text(report.text())
        (out / "report.csv").write_text(report.csv())
        with open(out / "timing.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("phase", "seconds"))
            for k, v in result.timing.items():
                w.writerow((k, f"{v:.3f}"))
    return result


FROM_CONFIG = object()      # default for ``out``: use ``cfg.out``; None writes nothing


def _prepare(problem, cfg: CampaignConfig, out, fuzzing: bool = False):
    cfg.validate()
    if fuzzing and cfg.budget_execs is None and not cfg.budget_secs:
        raise ConfigError("fuzzing needs --budget-execs or a positive --budget-secs")
    if isinstance(problem, (str, Path)):
        problem = load_problem(problem, cfg.encoding, cfg.seed)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    return problem, out


def cmd_learn(cfg: CampaignConfig, problem=None, out=FROM_CONFIG) -> CampaignResult:
    """Learn with the configured oracle (random Wp by default)."""
    problem, out = _prepare(problem if problem is not None else cfg.problem, cfg,
                            cfg.out if out is FROM_CONFIG else out)
    t0 = time.perf_counter()
    corpus = Corpus.load(cfg.corpus) if cfg.corpus else None
    oracle = _make_oracle(problem, cfg, corpus, cfg.oracle)
    hyp, stats, errors = _learn_phase(problem, oracle, cfg, out, cfg.budget_secs)
    result = CampaignResult("learn", problem.name, learner_errors=errors, states=hyp.n_states,
                            hypotheses=stats.hypotheses, complete=stats.complete, stats=stats,
                            hypothesis=hyp, timing={"learn": time.perf_counter() - t0})
    report = RunReport("learn", problem.name, cfg.seed, cfg.settings(),
                       known_errors=problem.known_errors)
    _learn_rows(report, hyp, stats)
    report.errors = ErrorReport({"learner": errors})
    return _finish(result, report, out)


def cmd_fuzz(cfg: CampaignConfig, problem=None, out=FROM_CONFIG) -> CampaignResult:
    problem, out = _prepare(problem if problem is not None else cfg.problem, cfg,
                            cfg.out if out is FROM_CONFIG else out, fuzzing=True)
    t0 = time.perf_counter()
    corpus, fstats, errors = _fuzz_phase(problem, cfg, out, cfg.budget_execs, cfg.budget_secs)
    result = CampaignResult("fuzz", problem.name, fuzzer_errors=errors, fuzz_stats=fstats,
                            corpus=corpus, timing={"fuzz": time.perf_counter() - t0})
    report = RunReport("fuzz", problem.name, cfg.seed, cfg.settings(),
                       known_errors=problem.known_errors)
    _fuzz_rows(report, fstats)
    report.errors = ErrorReport({"fuzzer": errors})
    return _finish(result, report, out)


def cmd_combined(cfg: CampaignConfig, problem=None, out=FROM_CONFIG) -> CampaignResult:
    """Fuzz first, then learn against [corpus replay, random Wp].

    ``budget_secs`` bounds the whole pipeline; the fuzz phase stops at
    ``budget_execs`` or at ``fuzz_share`` of the wall budget, whichever
    comes first.
    """
    problem, out = _prepare(problem if problem is not None else cfg.problem, cfg,
                            cfg.out if out is FROM_CONFIG else out, fuzzing=True)
    t0 = time.perf_counter()
    fuzz_secs = None if cfg.budget_secs is None else cfg.budget_secs * cfg.fuzz_share
    corpus, fstats, fuzz_errors = _fuzz_phase(problem, cfg, out, cfg.budget_execs, fuzz_secs)
    t1 = time.perf_counter()
    replay = FuzzCorpusOracle(problem.target, corpus, problem.encoding, cfg.replay_crashes,
                              cfg.replay_queue)
    wp = RandomWpOracle(problem.target, cfg.tester_params())
    remaining = None if cfg.budget_secs is None else max(0.0, cfg.budget_secs - (t1 - t0))
    hyp, stats, learn_errors = _learn_phase(problem, ChainedOracle([replay, wp]), cfg, out,
                                            remaining)
    exhausted = {"fuzz-corpus": replay.exhausted, "random-wp": stats.complete}
    result = CampaignResult("combined", problem.name, learn_errors, fuzz_errors, hyp.n_states,
                            stats.hypotheses, stats.complete, stats, fstats, hyp, corpus,
                            exhausted, timing={"fuzz": t1 - t0,
                                               "learn": time.perf_counter() - t1})
    report = RunReport("combined", problem.name, cfg.seed, cfg.settings(),
                       known_errors=problem.known_errors)
    _fuzz_rows(report, fstats)
    _learn_rows(report, hyp, stats)
    report.add("corpus-oracle-exhausted", replay.exhausted)
    report.add("tester-exhausted", stats.complete)
    report.add("corpus-counterexamples", replay.counterexamples)
    report.errors = ErrorReport.of(learn_errors, fuzz_errors)
    return _finish(result, report, out)


COMMANDS = {"learn-wp": cmd_learn, "fuzz-only": cmd_fuzz, "learn-fuzz-combined": cmd_combined}


def _suite_job(args):
    technique, cfg_dict, problem, out = args
    cfg = CampaignConfig(**cfg_dict)
    if technique == "learn-wp":
        cfg.oracle = "wp"
    res = COMMANDS[technique](cfg, problem, out)
    res.hypothesis = res.corpus = None      # keep the pickled result small
    return res


def run_suite(problems: list, technique: str, cfg: CampaignConfig, out=None,
              workers: int = 1) -> list[CampaignResult]:
    """Runs ``technique`` on each problem; each gets its own output subdirectory."""
    if technique not in COMMANDS:
        raise ConfigError(f"technique must be one of {', '.join(TECHNIQUES)}")
    jobs = []
    for i, p in enumerate(problems):
        sub = None if out is None else Path(out) / f"{i:03d}-{getattr(p, 'name', Path(str(p)).stem)}"
        jobs.append((technique, asdict(cfg), p, sub))
    if workers <= 1:
        return [_suite_job(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_suite_job, jobs))
