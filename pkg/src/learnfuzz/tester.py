"""Wp-method conformance testing against a hypothesis."""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from learnfuzz.fsm import (MealyMachine, Word, access_sequences, pairwise_discriminators,
                           state_cover)

SUITE_CAP = 10 ** 7


class IndistinguishableStatesError(ValueError):
    """The hypothesis has two equivalent states, so it is not minimal."""


class SuiteTooLarge(RuntimeError):
    pass


@dataclass
class WpContext:
    hypothesis: MealyMachine
    state_cover: list
    transition_cover: list
    local_sets: dict            # state -> tuple of discriminators (E_q)
    global_set: tuple           # union of all local sets


def _word_key(w):
    return (len(w), w)


def build_wp_context(hypothesis: MealyMachine) -> WpContext:
    acc = access_sequences(hypothesis)
    n = hypothesis.n_states
    if len(acc) != n:
        raise ValueError("hypothesis has unreachable states")
    discs = pairwise_discriminators(hypothesis)
    local: dict[int, set] = {q: set() for q in range(n)}
    for p in range(n):
        for q in range(p + 1, n):
            w = discs.get((p, q))
            if w is None:
                raise IndistinguishableStatesError(f"states {p} and {q} are equivalent")
            local[p].add(w)
            local[q].add(w)
    local_sets = {q: tuple(sorted(ws, key=_word_key)) for q, ws in local.items()}
    union = tuple(sorted(set().union(*local.values()), key=_word_key))
    cover = state_cover(hypothesis)
    k = len(hypothesis.inputs)
    return WpContext(hypothesis, cover, [s + (a,) for s in cover for a in range(k)],
                     local_sets, union)


def suite_size(ctx: WpContext, m: int) -> int:
    """Number of words :func:`deterministic_wp_suite` yields for bound ``m``."""
    h = ctx.hypothesis
    n, k = h.n_states, len(h.inputs)
    if m < n:
        raise ValueError(f"bound m={m} below the hypothesis size {n}")
    counts = np.zeros(n, dtype=object)
    for w in ctx.transition_cover:
        counts[h.state_after(w)] += 1
    delta = np.array(h.delta, dtype=np.int64)
    for _ in range(m - n + 1):
        nxt = np.zeros(n, dtype=object)
        for a in range(k):
            np.add.at(nxt, delta[:, a], counts)
        counts = nxt
    return int(sum(counts[q] * max(1, len(ctx.local_sets[q])) for q in range(n)))


def deterministic_wp_suite(ctx: WpContext, m: int, cap: int = SUITE_CAP, force: bool = False):
    """Lazily yield ``u·v·w`` for u in S·I, v in I^l (l = m-n+1), w in E_q."""
    size = suite_size(ctx, m)
    if size > cap and not force:
        raise SuiteTooLarge(f"suite has {size} words, above the cap of {cap}")
    return _suite_words(ctx, m - ctx.hypothesis.n_states + 1)


def _suite_words(ctx, length):
    h = ctx.hypothesis
    k = len(h.inputs)
    for u in ctx.transition_cover:
        q = h.state_after(u)
        for v in itertools.product(range(k), repeat=length):
            r = h.state_after(v, q)
            for w in ctx.local_sets[r] or ((),):
                yield u + v + w


@dataclass
class RandomWpParams:
    min_infix_len: int = 3
    expected_infix_len: int = 11
    budget: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.min_infix_len < 0 or self.expected_infix_len < self.min_infix_len:
            raise ValueError("need 0 <= min_infix_len <= expected_infix_len")


def sample_infix_length(params: RandomWpParams, rng: random.Random) -> int:
    """min + G where G is geometric on {0, 1, ...} with mean expected - min."""
    extra_mean = params.expected_infix_len - params.min_infix_len
    if extra_mean == 0:
        return params.min_infix_len
    p = 1.0 / (extra_mean + 1)
    u = 1.0 - rng.random()           # in (0, 1]
    return params.min_infix_len + int(math.floor(math.log(u) / math.log(1.0 - p)))


def sample_random_wp(ctx: WpContext, params: RandomWpParams, rng: random.Random) -> Word:
    h = ctx.hypothesis
    k = len(h.inputs)
    prefix = ctx.state_cover[rng.randrange(len(ctx.state_cover))]
    infix = tuple(rng.randrange(k) for _ in range(sample_infix_length(params, rng)))
    suffixes = ctx.local_sets[h.state_after(prefix + infix)]
    suffix = suffixes[rng.randrange(len(suffixes))] if suffixes else ()
    return prefix + infix + suffix


@dataclass
class TesterStats:
    tests: int = 0
    symbols: int = 0
    counterexample_found: bool = False
    ce_length: int = 0
    history: list = field(default_factory=list)

    def csv_row(self):
        return [self.tests, self.symbols, int(self.counterexample_found), self.ce_length]


def trim_counterexample(word: Word, target_out, hyp_out) -> Word:
    """Shortest prefix of ``word`` whose outputs already disagree."""
    for i, (x, y) in enumerate(zip(target_out, hyp_out)):
        if x != y:
            return tuple(word[:i + 1])
    return tuple(word)


def run_tester(target, ctx: WpContext, params: RandomWpParams,
               rng: random.Random | None = None, deadline: float | None = None,
               stats: TesterStats | None = None):
    """Random Wp testing; returns (counterexample or None, TesterStats).

    ``target.query`` is called directly: test words go around the
    membership cache. Outputs are compared by label.
    """
    rng = rng or random.Random(params.seed)
    stats = stats or TesterStats()
    h = ctx.hypothesis
    translate = [h.outputs.labels.index(lab) if lab in h.outputs else -1
                 for lab in target.outputs.labels]
    for i in range(params.budget):
        if deadline is not None and i % 256 == 0 and time.perf_counter() >= deadline:
            return None, stats
        word = sample_random_wp(ctx, params, rng)
        expected = h.run(word)
        got = tuple(translate[o] for o in target.query(word))
        stats.tests += 1
        stats.symbols += len(word)
        if got != expected:
            ce = trim_counterexample(word, got, expected)
            stats.counterexample_found = True
            stats.ce_length = len(ce)
            return ce, stats
    return None, stats
