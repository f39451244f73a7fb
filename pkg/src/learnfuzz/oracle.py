"""Equivalence oracles.

Every oracle answers ``find_counterexample(hypothesis, deadline=None)`` with
a :class:`Counterexample` or None, and counts the words it ran on the target
in ``test_queries``.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass

from learnfuzz.fsm import MealyMachine, equivalent
from learnfuzz.fuzzer.encoding import ByteEncoding
from learnfuzz.learner import BudgetExhausted
from learnfuzz.tester import RandomWpParams, TesterStats, build_wp_context, run_tester, \
    trim_counterexample


@dataclass(frozen=True)
class Counterexample:
    word: tuple
    target_output: tuple      # output labels
    hypothesis_output: tuple


def _verdict(word, target, hypothesis) -> Counterexample:
    t = tuple(target.outputs[o] for o in target.query(word))
    h = tuple(hypothesis.outputs[o] for o in hypothesis.run(word))
    return Counterexample(tuple(word), t, h)


def _labels_translation(target, hypothesis):
    return [hypothesis.outputs.labels.index(lab) if lab in hypothesis.outputs else -1
            for lab in target.outputs.labels]


class PerfectOracle:
    """Exact equivalence against a known machine; the target confirms the verdict."""

    def __init__(self, ground_truth: MealyMachine, target=None):
        self.ground_truth = ground_truth
        self.target = target
        self.calls = 0
        self.test_queries = 0

    def find_counterexample(self, hypothesis, deadline=None):
        self.calls += 1
        same, ce = equivalent(self.ground_truth, hypothesis)
        if same:
            return None
        if self.target is None:
            t = tuple(self.ground_truth.outputs[o] for o in self.ground_truth.run(ce))
            h = tuple(hypothesis.outputs[o] for o in hypothesis.run(ce))
            return Counterexample(ce, t, h)
        self.test_queries += 1
        return _verdict(ce, self.target, hypothesis)


class RandomWpOracle:
    """Randomized Wp testing, ``params.budget`` tests per call."""

    def __init__(self, target, params: RandomWpParams | None = None):
        self.target = target
        self.params = params or RandomWpParams()
        self.rng = random.Random(self.params.seed)
        self.calls = 0
        self.test_queries = 0
        self.stats = TesterStats()

    def find_counterexample(self, hypothesis, deadline=None):
        self.calls += 1
        ctx = build_wp_context(hypothesis)
        before = self.stats.tests
        ce, _ = run_tester(self.target, ctx, self.params, self.rng, deadline, self.stats)
        self.test_queries += self.stats.tests - before
        if ce is None:
            if deadline is not None and time.perf_counter() >= deadline:
                raise BudgetExhausted
            return None
        return _verdict(ce, self.target, hypothesis)


class FuzzCorpusOracle:
    """Replays fuzzer traces (crashes first) against the hypothesis.

    A cursor remembers how far the corpus has been replayed; it rewinds
    whenever a different hypothesis is presented.
    """

    def __init__(self, target, corpus, encoding: ByteEncoding, use_crashes: bool = True,
                 use_queue: bool = True):
        self.target = target
        self.encoding = encoding
        self.crash_traces = [c.trace for c in corpus.crashes] if use_crashes else []
        self.queue_traces = [q.trace for q in corpus.queue] if use_queue else []
        self.calls = 0
        self.test_queries = 0
        self.exhausted = False
        self.counterexamples = 0
        self._fingerprint = None
        self._crash_pos = 0
        self._queue_pos = 0

    def add(self, trace: bytes, crash: bool = False):
        """Append a trace; already replayed positions are not revisited."""
        (self.crash_traces if crash else self.queue_traces).append(bytes(trace))

    def find_counterexample(self, hypothesis, deadline=None):
        self.calls += 1
        fp = hypothesis.fingerprint()
        if fp != self._fingerprint:
            self._fingerprint = fp
            self._crash_pos = self._queue_pos = 0
        translate = _labels_translation(self.target, hypothesis)
        for name in ("_crash_pos", "_queue_pos"):
            traces = self.crash_traces if name == "_crash_pos" else self.queue_traces
            while getattr(self, name) < len(traces):
                trace = traces[getattr(self, name)]
                setattr(self, name, getattr(self, name) + 1)
                word = tuple(self.encoding.sanitize(trace))
                if not word:
                    continue
                self.test_queries += 1
                got = tuple(translate[o] for o in self.target.query(word))
                expected = hypothesis.run(word)
                if got != expected:
                    self.exhausted = False
                    self.counterexamples += 1
                    return _verdict(trim_counterexample(word, got, expected),
                                    self.target, hypothesis)
        self.exhausted = True
        return None


class ChainedOracle:
    """Asks each oracle in turn; the first counterexample wins."""

    def __init__(self, oracles):
        if not oracles:
            raise ValueError("a chain needs at least one oracle")
        self.oracles = list(oracles)

    @property
    def test_queries(self):
        return sum(o.test_queries for o in self.oracles)

    @property
    def calls(self):
        return [o.calls for o in self.oracles]

    def find_counterexample(self, hypothesis, deadline=None):
        for oracle in self.oracles:
            ce = oracle.find_counterexample(hypothesis, deadline)
            if ce is not None:
                return ce
        return None


def perfect_oracle(ground_truth, target=None):
    return PerfectOracle(ground_truth, target)


def chained_oracle(oracles):
    return ChainedOracle(oracles)


def fuzz_corpus_oracle(target, corpus, encoding, **kw):
    return FuzzCorpusOracle(target, corpus, encoding, **kw)
