"""TTT active learning of Mealy machines.

The learner keeps a prefix-closed set of access words, one per hypothesis
state, and a discrimination tree whose inner nodes hold discriminators and
whose leaves hold states. Counterexamples are split into ``u, a, v`` such
that ``v`` separates the target states reached by ``[u]a`` and ``[ua]``; the
corresponding leaf is split with ``v`` as a temporary discriminator. Temporary
discriminators are later replaced by final ones of the form ``a`` or ``a·w``
with ``w`` already final, which keeps the final discriminators suffix-closed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from learnfuzz.fsm import MealyMachine, Word
from learnfuzz.targets import QueryCache

BINARY_SEARCH = "binary-search"
LINEAR_FORWARD = "linear-forward"


class NotACounterexample(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """The tree and the access words disagree; indicates a learner bug."""


class BudgetExhausted(Exception):
    """Raised by equivalence oracles that ran out of time."""


class Node:
    __slots__ = ("parent", "label", "depth", "discriminator", "final", "children", "state")

    def __init__(self, parent=None, label=None, state=None):
        self.parent = parent
        self.label = label
        self.depth = 0 if parent is None else parent.depth + 1
        self.discriminator = None
        self.final = False
        self.children: dict[int, Node] = {}
        self.state = state

    @property
    def is_leaf(self):
        return self.discriminator is None

    def leaves(self):
        if self.is_leaf:
            yield self
            return
        for lab in sorted(self.children):
            yield from self.children[lab].leaves()

    def inner_nodes(self):
        if self.is_leaf:
            return
        yield self
        for lab in sorted(self.children):
            yield from self.children[lab].inner_nodes()

    def set_parent(self, parent, label):
        self.parent, self.label = parent, label
        parent.children[label] = self
        stack = [self]
        while stack:
            n = stack.pop()
            n.depth = 0 if n.parent is None else n.parent.depth + 1
            stack.extend(n.children.values())


@dataclass(frozen=True)
class Decomposition:
    u: Word
    a: int
    v: Word
    access_u: Word      # access word of the hypothesis state reached by u
    access_ua: Word     # access word of the hypothesis state reached by u·a


@dataclass
class RoundStats:
    round: int
    states: int
    mqs: int
    tqs: int
    elapsed_ms: int


@dataclass
class LearnerStats:
    hypotheses: int = 0
    states: int = 0
    rounds: int = 0
    mq_posed: int = 0
    mq_executed: int = 0
    test_queries: int = 0
    elapsed_s: float = 0.0
    complete: bool = False
    history: list = field(default_factory=list)
    learner: object = field(default=None, repr=False)


@dataclass
class LearnerConfig:
    strategy: str = BINARY_SEARCH
    budget_secs: float | None = None
    max_states: int | None = None


class TTTLearner:
    """Incremental TTT state; ``mq`` maps an input word to its output word."""

    def __init__(self, inputs, outputs, mq: Callable[[Word], tuple],
                 strategy: str = BINARY_SEARCH):
        if strategy not in (BINARY_SEARCH, LINEAR_FORWARD):
            raise ValueError(f"unknown decomposition strategy {strategy!r}")
        self.inputs = inputs
        self.outputs = outputs
        self.k = len(inputs)
        self.mq = mq
        self.strategy = strategy
        self.root = Node(state=0)
        self.access: list[Word] = [()]
        self.leaf: list[Node] = [self.root]
        self.succ: list[list[Node | None]] = []
        self.out: list[list[int]] = []
        self.decompositions: list[Decomposition] = []
        self._pending: list[int] = [0]
        self._close()

    # -- queries ------------------------------------------------------------

    def last_output(self, word: Word) -> int:
        return self.mq(word)[-1]

    @property
    def n_states(self):
        return len(self.access)

    # -- tree operations ----------------------------------------------------

    def sift(self, prefix: Word, start: Node | None = None) -> Node:
        """Descend from ``start`` (the root by default) to a leaf.

        An output with no matching child creates a new state right there,
        with ``prefix`` as its access word.
        """
        node = self.root if start is None else start
        while not node.is_leaf:
            lab = self.last_output(prefix + node.discriminator)
            child = node.children.get(lab)
            if child is None:
                return self._new_state(prefix, node, lab)
            node = child
        return node

    def _new_state(self, access: Word, parent: Node, label: int) -> Node:
        q = len(self.access)
        leaf = Node(state=q)
        leaf.set_parent(parent, label)
        self.access.append(access)
        self.leaf.append(leaf)
        self._pending.append(q)
        return leaf

    def _close(self):
        """Fill in transitions of states created since the last call."""
        while self._pending:
            q = self._pending.pop(0)
            while len(self.succ) <= q:
                self.succ.append([None] * self.k)
                self.out.append([0] * self.k)
            for a in range(self.k):
                w = self.access[q] + (a,)
                self.out[q][a] = self.last_output(w)
                self.succ[q][a] = self.sift(w)

    def _resift(self, targets: set[int], start: Node):
        """Re-sift every transition currently pointing to a state in ``targets``."""
        for q in range(len(self.succ)):
            row = self.succ[q]
            for a in range(self.k):
                if row[a] is not None and row[a].state in targets:
                    row[a] = self.sift(self.access[q] + (a,), start)
        self._close()

    def lca(self, nodes) -> Node:
        nodes = list(nodes)
        cur = nodes[0]
        for other in nodes[1:]:
            x, y = cur, other
            while x.depth > y.depth:
                x = x.parent
            while y.depth > x.depth:
                y = y.parent
            while x is not y:
                x, y = x.parent, y.parent
            cur = x
        return cur

    # -- hypothesis ---------------------------------------------------------

    def state_after(self, word: Word, state: int = 0) -> int:
        q = state
        for a in word:
            q = self.succ[q][a].state
        return q

    def hypothesis(self) -> MealyMachine:
        delta = [[node.state for node in row] for row in self.succ]
        return MealyMachine(self.inputs, self.outputs, delta, self.out, 0)

    def hypothesis_output(self, word: Word, state: int = 0) -> tuple:
        q, out = state, []
        for a in word:
            out.append(self.out[q][a])
            q = self.succ[q][a].state
        return tuple(out)

    def check_access_words(self):
        """Every access word must lead to its own state in the hypothesis."""
        for q, acc in enumerate(self.access):
            if self.state_after(acc) != q:
                raise InconsistencyError(f"access word of state {q} leads elsewhere")

    # -- counterexamples ----------------------------------------------------

    def _agrees_after(self, x: Word, i: int, hyp_out: tuple) -> bool:
        """Does replacing x[:i] by its access word keep the rest of the answer?"""
        acc = self.access[self.state_after(x[:i])]
        return self.mq(acc + x[i:])[len(acc):] == hyp_out[i:]

    def decompose(self, x: Word, strategy: str | None = None) -> Decomposition:
        x = tuple(x)
        strategy = strategy or self.strategy
        hyp_out = self.hypothesis_output(x)
        if not x or self.mq(x) == hyp_out:
            raise NotACounterexample(f"target and hypothesis agree on {x!r}")
        if strategy == LINEAR_FORWARD:
            i = 1
            while not self._agrees_after(x, i, hyp_out):
                i += 1
            split = i - 1
        elif strategy == BINARY_SEARCH:
            lo, hi = 0, len(x)     # P(lo) false, P(hi) true
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self._agrees_after(x, mid, hyp_out):
                    hi = mid
                else:
                    lo = mid
            split = lo
        else:
            raise ValueError(f"unknown decomposition strategy {strategy!r}")
        u, a, v = x[:split], x[split], x[split + 1:]
        qu = self.state_after(u)
        dec = Decomposition(u, a, v, self.access[qu], self.access[self.succ[qu][a].state])
        self.decompositions.append(dec)
        return dec

    def refine(self, dec: Decomposition):
        """Split the leaf of the state reached by ``u·a`` using ``v``."""
        qu = self.state_after(dec.u)
        old_leaf = self.succ[qu][dec.a]
        new_access = self.access[qu] + (dec.a,)
        o_new = self.mq(new_access + dec.v)[len(new_access):]
        o_old = self.mq(self.access[old_leaf.state] + dec.v)[len(self.access[old_leaf.state]):]
        j = next((i for i in range(len(dec.v)) if o_new[i] != o_old[i]), None)
        if j is None:
            raise InconsistencyError("decomposition suffix does not separate the states")
        disc = dec.v[:j + 1]

        inner = Node()
        inner.discriminator = disc
        if old_leaf.parent is None:
            self.root = inner
        else:
            inner.set_parent(old_leaf.parent, old_leaf.label)
        old_leaf.set_parent(inner, o_old[j])
        self._new_state(new_access, inner, o_new[j])
        self._resift({old_leaf.state}, inner)

    # -- finalization -------------------------------------------------------

    def temporary_blocks(self) -> list[Node]:
        return [n for n in self.root.inner_nodes()
                if not n.final and (n.parent is None or n.parent.final)]

    def _candidate(self, block: Node):
        states = [leaf.state for leaf in block.leaves()]
        best = None
        for a in range(self.k):
            if len({self.out[q][a] for q in states}) > 1:
                cand = (a,)
            else:
                succ = {id(self.succ[q][a]): self.succ[q][a] for q in states}
                if len(succ) < 2:
                    continue
                top = self.lca(succ.values())
                if not top.final:
                    continue
                cand = (a,) + top.discriminator
            if best is None or len(cand) < len(best):
                best = cand
        return best

    def finalize_discriminators(self) -> bool:
        """Finalize blocks while possible; True when no temporary node is left."""
        while True:
            blocks = self.temporary_blocks()
            if not blocks:
                return True
            for block in blocks:
                if self._finalize_block(block):
                    break
            else:
                return False

    def _finalize_block(self, block: Node) -> bool:
        cand = self._candidate(block)
        if cand is None:
            return False
        states = [leaf.state for leaf in block.leaves()]
        labels = {q: self.last_output(self.access[q] + cand) for q in states}
        classes = sorted(set(labels.values()))
        if len(classes) < 2:
            return False
        top = Node()
        top.discriminator = cand
        top.final = True
        if block.parent is None:
            self.root = top
        else:
            top.set_parent(block.parent, block.label)
        for lab in classes:
            sub = _restrict(block, {q for q in states if labels[q] == lab})
            sub.set_parent(top, lab)
        self._resift(set(states), top)
        return True

    def find_inconsistency(self) -> Word | None:
        """A word on which the hypothesis contradicts a label stored in the tree."""
        for node in self.root.inner_nodes():
            d = node.discriminator
            for lab, child in sorted(node.children.items()):
                for leaf in child.leaves():
                    q = leaf.state
                    if self.hypothesis_output(d, q)[-1] != lab:
                        return self.access[q] + d
        return None

    def stabilize(self):
        """Finalize everything, resolving stuck blocks through internal counterexamples."""
        while not self.finalize_discriminators():
            ce = self.find_inconsistency()
            if ce is None:
                raise InconsistencyError("finalization blocked on a consistent hypothesis")
            self.process_counterexample(ce, finalize=False)

    def process_counterexample(self, ce: Word, finalize: bool = True) -> int:
        """Refine until ``ce`` stops being a counterexample; returns refinements made."""
        ce = tuple(ce)
        count = 0
        while self.mq(ce) != self.hypothesis_output(ce):
            self.refine(self.decompose(ce))
            count += 1
            if finalize:
                self.stabilize()
        if count == 0:
            raise NotACounterexample(f"target and hypothesis agree on {ce!r}")
        return count

    def final_discriminators(self) -> set[Word]:
        return {n.discriminator for n in self.root.inner_nodes() if n.final}


def _restrict(node: Node, states: set[int]) -> Node | None:
    """Copy of the subtree keeping only ``states``; unary inner nodes are dropped."""
    if node.is_leaf:
        return node if node.state in states else None
    kids = {}
    for lab, child in node.children.items():
        sub = _restrict(child, states)
        if sub is not None:
            kids[lab] = sub
    if not kids:
        return None
    if len(kids) == 1:
        return next(iter(kids.values()))
    copy = Node()
    copy.discriminator = node.discriminator
    copy.final = node.final
    for lab, sub in kids.items():
        sub.set_parent(copy, lab)
    return copy


def is_suffix_closed(words: set) -> bool:
    return all(w[i:] in words for w in words for i in range(1, len(w)))


def _counterexample_word(verdict):
    if verdict is None:
        return None
    return tuple(getattr(verdict, "word", verdict))


def learn(target, eq_oracle, config: LearnerConfig | None = None,
          sink: Callable[[MealyMachine, int], None] | None = None):
    """Learn ``target``; returns (hypothesis, LearnerStats).

    ``eq_oracle.find_counterexample(hypothesis, deadline)`` returns a
    counterexample (a word, or an object with ``.word``) or None.
    """
    config = config or LearnerConfig()
    cache = target if isinstance(target, QueryCache) else QueryCache(target)
    t0 = time.perf_counter()
    deadline = None if config.budget_secs is None else t0 + config.budget_secs
    stats = LearnerStats()
    learner = TTTLearner(cache.inputs, cache.outputs, cache.query, config.strategy)
    tq0 = getattr(eq_oracle, "test_queries", 0)

    def snapshot(hyp):
        stats.hypotheses += 1
        stats.states = hyp.n_states
        stats.mq_posed = cache.queries
        stats.mq_executed = cache.executions
        stats.test_queries = getattr(eq_oracle, "test_queries", 0) - tq0
        stats.elapsed_s = time.perf_counter() - t0
        stats.history.append(RoundStats(stats.rounds, hyp.n_states, cache.executions,
                                        stats.test_queries, int(stats.elapsed_s * 1000)))
        if sink is not None:
            sink(hyp, stats.hypotheses)

    hyp = learner.hypothesis()
    snapshot(hyp)
    while True:
        if deadline is not None and time.perf_counter() >= deadline:
            break
        if config.max_states is not None and hyp.n_states >= config.max_states:
            break
        try:
            ce = _counterexample_word(eq_oracle.find_counterexample(hyp, deadline))
        except BudgetExhausted:
            break
        if ce is None:
            stats.complete = True
            break
        stats.rounds += 1
        learner.process_counterexample(ce)
        hyp = learner.hypothesis()
        snapshot(hyp)
    stats.mq_posed = cache.queries
    stats.mq_executed = cache.executions
    stats.test_queries = getattr(eq_oracle, "test_queries", 0) - tq0
    stats.elapsed_s = time.perf_counter() - t0
    stats.learner = learner
    return hyp, stats
