"""Coverage-guided fuzz campaign over a target.

The queue is processed in strict FIFO passes. Each entry gets the
deterministic stages once, then a havoc stage, then splice-and-havoc with
random partners whose coverage differs. Candidates are sanitized to input
words and executed on a fresh instance with a cleared bitmap.
"""
from __future__ import annotations

import csv
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from learnfuzz.fuzzer.bitmap import CoverageMap, TraceBitmap, classify
from learnfuzz.fuzzer.encoding import ByteEncoding
from learnfuzz.fuzzer.mutations import deterministic_mutations, havoc, splice

_ZERO = bytes(65536)
STATS_COLUMNS = ("cycles", "execs", "paths", "crashes")


@dataclass
class QueueEntry:
    trace: bytes
    signature: frozenset
    discovered_at: int
    det_done: bool = False


@dataclass
class Crash:
    error: int
    trace: bytes
    discovered_at: int


@dataclass
class FuzzConfig:
    havoc_rounds: int = 64
    havoc_intensity: int = 8
    splice_rounds: int = 8
    max_len: int = 64
    stats_interval: int = 10_000


@dataclass
class FuzzStats:
    cycles: int = 0
    execs: int = 0
    paths: int = 0
    crashes: list = field(default_factory=list)     # [(error id, trace)]
    history: list = field(default_factory=list)     # rows of STATS_COLUMNS
    elapsed_s: float = 0.0

    @property
    def errors(self) -> set[int]:
        return {e for e, _ in self.crashes}

    def row(self):
        return (self.cycles, self.execs, self.paths, len(self.crashes))


@dataclass
class Corpus:
    queue: list = field(default_factory=list)       # QueueEntry
    crashes: list = field(default_factory=list)     # Crash

    def traces(self, crashes_first: bool = True, include_crashes: bool = True,
               include_queue: bool = True) -> list[bytes]:
        crash = [c.trace for c in self.crashes] if include_crashes else []
        queue = [q.trace for q in self.queue] if include_queue else []
        return crash + queue if crashes_first else queue + crash

    def save(self, directory: Path):
        directory = Path(directory)
        (directory / "queue").mkdir(parents=True, exist_ok=True)
        (directory / "crashes").mkdir(parents=True, exist_ok=True)
        for n, entry in enumerate(self.queue):
            (directory / "queue" / f"id-{n:06d}.trace").write_bytes(entry.trace)
        for n, crash in enumerate(self.crashes):
            (directory / "crashes" / f"err-{crash.error}-{n:06d}.trace").write_bytes(crash.trace)

    @classmethod
    def load(cls, directory: Path) -> "Corpus":
        """Traces only; signatures are left empty (they are recomputed on demand)."""
        directory = Path(directory)
        corpus = cls()
        queue = sorted((directory / "queue").glob("id-*.trace"),
                       key=lambda p: int(p.stem.split("-")[1]))
        for p in queue:
            corpus.queue.append(QueueEntry(p.read_bytes(), frozenset(), -1, True))
        pat = re.compile(r"err-(\d+)-(\d+)\Z")
        crashes = []
        for p in (directory / "crashes").glob("err-*.trace"):
            m = pat.match(p.stem)
            if m:
                crashes.append((int(m.group(2)), int(m.group(1)), p.read_bytes()))
        corpus.crashes = [Crash(e, t, -1) for _, e, t in sorted(crashes)]
        return corpus


def write_stats_csv(stats: FuzzStats, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        w.writerows(stats.history)


def default_seeds(encoding: ByteEncoding) -> list[bytes]:
    """One single-byte trace per valid input symbol."""
    return [bytes([b]) for b in encoding.symbol_byte]


class _Stop(Exception):
    pass


class FuzzCampaign:
    def __init__(self, target, encoding: ByteEncoding, seed: int = 0,
                 config: FuzzConfig | None = None, budget_execs: int | None = None,
                 budget_secs: float | None = None, stop_on_errors=None):
        if budget_execs is None and budget_secs is None:
            raise ValueError("a fuzz campaign needs an exec or time budget")
        if (budget_execs is not None and budget_execs <= 0) or \
                (budget_secs is not None and budget_secs <= 0):
            raise ValueError("budgets must be positive")
        self.target = target
        self.encoding = encoding
        self.rng = random.Random(seed)
        self.config = config or FuzzConfig()
        self.budget_execs = budget_execs
        self.budget_secs = budget_secs
        self.stop_on_errors = set(stop_on_errors) if stop_on_errors else None
        self.corpus = Corpus()
        self.stats = FuzzStats()
        self.coverage = CoverageMap()
        self.crash_coverage = CoverageMap()
        self.bitmap = TraceBitmap()
        self._discovered = bytearray()
        self._discovered_set: set[int] = set()
        self._deadline = None
        self._errors: set[int] = set()
        # an input word always behaves the same, so each one runs at most once
        self._seen: set[bytes] = set()

    # -- execution ----------------------------------------------------------

    def _check_budget(self):
        s = self.stats
        if self.budget_execs is not None and s.execs >= self.budget_execs:
            raise _Stop
        if self._deadline is not None and s.execs % 256 == 0 \
                and time.perf_counter() >= self._deadline:
            raise _Stop
        if self.stop_on_errors is not None and self.stop_on_errors <= self._errors:
            raise _Stop

    def run_one(self, trace: bytes, parent_word: bytes | None = None) -> bool:
        """Execute a candidate; returns True when it was queued."""
        word = self.encoding.sanitize(trace)
        if not word or word == parent_word or word in self._seen:
            return False
        self._check_budget()
        self._seen.add(word)
        bm = self.bitmap
        bm.bytes[:] = _ZERO
        bm.prev = 0
        _, err = self.target.execute(word, bm)
        s = self.stats
        s.execs += 1
        if self.config.stats_interval and s.execs % self.config.stats_interval == 0:
            s.history.append(s.row())
        if err is not None:
            novel = self.crash_coverage.absorb_bitmap(bm)
            if err not in self._errors or novel:
                self._errors.add(err)
                s.crashes.append((err, bytes(trace)))
                self.corpus.crashes.append(Crash(err, bytes(trace), s.execs))
            return False
        if not self.coverage.absorb_bitmap(bm):
            return False
        self._enqueue(bytes(trace), classify(bm))
        return True

    def _enqueue(self, trace, signature):
        self.corpus.queue.append(QueueEntry(trace, signature, self.stats.execs))
        self.stats.paths = len(self.corpus.queue)
        for b in trace:
            if b not in self._discovered_set:
                self._discovered_set.add(b)
                self._discovered.append(b)

    # -- stages -------------------------------------------------------------

    def _fuzz_entry(self, entry: QueueEntry):
        cfg = self.config
        parent = self.encoding.sanitize(entry.trace)
        if not entry.det_done:
            for mutant in deterministic_mutations(entry.trace):
                self.run_one(mutant, parent)
            entry.det_done = True
        disc = bytes(self._discovered)
        for _ in range(cfg.havoc_rounds):
            self.run_one(havoc(entry.trace, self.rng, cfg.havoc_intensity, disc, cfg.max_len),
                         parent)
        queue = self.corpus.queue
        for _ in range(cfg.splice_rounds):
            partners = [q for q in queue if q.signature != entry.signature]
            if not partners:
                break
            other = partners[self.rng.randrange(len(partners))]
            mixed = splice(entry.trace, other.trace, self.rng)[:cfg.max_len]
            self.run_one(havoc(mixed, self.rng, cfg.havoc_intensity, disc, cfg.max_len),
                         parent)

    def run(self, seeds: list[bytes] | None = None) -> tuple[Corpus, FuzzStats]:
        seeds = seeds if seeds is not None else default_seeds(self.encoding)
        if not seeds:
            raise ValueError("at least one seed trace is required")
        t0 = time.perf_counter()
        self._deadline = None if self.budget_secs is None else t0 + self.budget_secs
        try:
            for trace in seeds:
                self.run_one(trace)
            if not self.corpus.queue:
                raise ValueError("no seed trace exercises the target")
            while True:
                before = self.stats.execs
                i = 0
                while i < len(self.corpus.queue):
                    self._fuzz_entry(self.corpus.queue[i])
                    i += 1
                self.stats.cycles += 1
                if self.stats.execs == before:
                    # every candidate of a full pass was a repeat: the word space is spent
                    break
        except _Stop:
            pass
        s = self.stats
        if not s.history or s.history[-1] != s.row():
            s.history.append(s.row())
        s.elapsed_s = time.perf_counter() - t0
        return self.corpus, s


def fuzz_campaign(target, encoding: ByteEncoding, seeds=None, budget_execs=None,
                  budget_secs=None, seed: int = 0, config: FuzzConfig | None = None,
                  stop_on_errors=None) -> tuple[Corpus, FuzzStats]:
    campaign = FuzzCampaign(target, encoding, seed, config, budget_execs, budget_secs,
                            stop_on_errors)
    return campaign.run(seeds)
