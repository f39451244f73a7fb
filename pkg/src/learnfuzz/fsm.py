"""Mealy machines and the automata algorithms the rest of the package uses.

Words are tuples of symbol ids; an :class:`Alphabet` owns the id <-> label
mapping. Machines are complete and deterministic by construction.
"""
from __future__ import annotations

import random
import re
from collections import deque
from typing import Iterable, Sequence

import numpy as np

from learnfuzz import _kernels

Word = tuple  # tuple[int, ...]

INVALID = "invalid"
HALTED = "halted"
_ERROR_RE = re.compile(r"error_(\d+)\Z")


def error_label(error_id: int) -> str:
    return f"error_{error_id}"


def error_id_of(label: str) -> int | None:
    """Error id encoded by a reserved output label, or None."""
    m = _ERROR_RE.match(label)
    return int(m.group(1)) if m else None


class AlphabetError(ValueError):
    pass


class UnreachableStateError(ValueError):
    pass


class Alphabet:
    """Ordered set of symbol labels; a symbol's id is its position."""

    __slots__ = ("labels", "_index")

    def __init__(self, labels: Iterable[str]):
        labels = tuple(labels)
        if not labels:
            raise AlphabetError("alphabet must not be empty")
        for lab in labels:
            if not isinstance(lab, str) or not lab or any(c.isspace() for c in lab):
                raise AlphabetError(f"bad symbol label {lab!r}")
            if "/" in lab or '"' in lab:
                raise AlphabetError(f"label {lab!r} may not contain '/' or '\"'")
        if len(set(labels)) != len(labels):
            raise AlphabetError("duplicate labels in alphabet")
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i: int) -> str:
        return self.labels[i]

    def __contains__(self, label) -> bool:
        return label in self._index

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return f"Alphabet({list(self.labels)!r})"

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise AlphabetError(f"symbol {label!r} not in alphabet") from None

    def word(self, labels: str | Iterable[str]) -> Word:
        """Parse a word given as labels; a string is split on whitespace."""
        if isinstance(labels, str):
            labels = labels.split()
        return tuple(self.index(lab) for lab in labels)

    def format(self, word: Sequence[int]) -> str:
        return " ".join(self.labels[s] for s in word)

    def check(self, word: Sequence[int]) -> None:
        n = len(self.labels)
        for s in word:
            if not isinstance(s, (int, np.integer)) or s < 0 or s >= n:
                raise AlphabetError(f"symbol {s!r} not in alphabet of size {n}")


class MealyMachine:
    """Complete deterministic Mealy machine over dense integer states.

    ``delta[q][a]`` is the successor and ``lam[q][a]`` the output id of
    state ``q`` on input ``a``.
    """

    def __init__(self, inputs: Alphabet, outputs: Alphabet,
                 delta: Sequence[Sequence[int]], lam: Sequence[Sequence[int]],
                 initial: int = 0):
        self.inputs = inputs
        self.outputs = outputs
        self.delta = tuple(tuple(int(x) for x in row) for row in delta)
        self.lam = tuple(tuple(int(x) for x in row) for row in lam)
        self.initial = int(initial)
        n, k = len(self.delta), len(inputs)
        if n == 0:
            raise ValueError("machine needs at least one state")
        if len(self.lam) != n:
            raise ValueError("transition and output tables differ in size")
        if not 0 <= self.initial < n:
            raise ValueError(f"initial state {initial} out of range")
        for q in range(n):
            if len(self.delta[q]) != k or len(self.lam[q]) != k:
                raise ValueError(f"state {q} is not input-complete")
            for a in range(k):
                if not 0 <= self.delta[q][a] < n:
                    raise ValueError(f"transition ({q}, {a}) leaves the state set")
                if not 0 <= self.lam[q][a] < len(outputs):
                    raise ValueError(f"output of ({q}, {a}) not in output alphabet")
        self._kernel = None

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def __repr__(self):
        return (f"MealyMachine(states={self.n_states}, inputs={len(self.inputs)}, "
                f"outputs={len(self.outputs)})")

    @property
    def kernel(self):
        if self._kernel is None:
            k = len(self.inputs)
            self._kernel = _kernels.MealyKernel(
                [x for row in self.delta for x in row],
                [x for row in self.lam for x in row],
                self.n_states, k, self.initial)
        return self._kernel

    def fingerprint(self) -> tuple:
        return (self.inputs.labels, self.outputs.labels, self.initial, self.delta, self.lam)

    def run(self, word: Sequence[int], state: int | None = None) -> Word:
        try:
            return self.kernel.run(word, -1 if state is None else state)
        except (ValueError, TypeError, OverflowError):
            self.inputs.check(word)
            raise

    def state_after(self, word: Sequence[int], state: int | None = None) -> int:
        try:
            return self.kernel.final_state(word, -1 if state is None else state)
        except (ValueError, TypeError, OverflowError):
            self.inputs.check(word)
            raise


def run(machine: MealyMachine, word: Sequence[int]) -> Word:
    """Output word produced from the initial state."""
    return machine.run(word)


def access_sequences(machine: MealyMachine) -> dict[int, Word]:
    """Shortest, lexicographically least access word for each reachable state."""
    acc = {machine.initial: ()}
    queue = deque([machine.initial])
    while queue:
        q = queue.popleft()
        for a, nxt in enumerate(machine.delta[q]):
            if nxt not in acc:
                acc[nxt] = acc[q] + (a,)
                queue.append(nxt)
    return acc


def access_sequence(machine: MealyMachine, state: int) -> Word:
    acc = access_sequences(machine)
    if state not in acc:
        raise UnreachableStateError(f"state {state} is not reachable")
    return acc[state]


def state_cover(machine: MealyMachine) -> list[Word]:
    """Access words of all reachable states, in breadth-first order."""
    return sorted(access_sequences(machine).values(), key=lambda w: (len(w), w))


def transition_cover(machine: MealyMachine) -> list[Word]:
    k = len(machine.inputs)
    return [w + (a,) for w in state_cover(machine) for a in range(k)]


def _flat(machine):
    return ([x for row in machine.delta for x in row],
            [x for row in machine.lam for x in row])


def find_discriminator(machine: MealyMachine, q: int, q2: int) -> Word | None:
    """Shortest word separating ``q`` from ``q2``, or None if they are equivalent."""
    n = machine.n_states
    if not (0 <= q < n and 0 <= q2 < n):
        raise ValueError("state index out of range")
    d, lam = _flat(machine)
    return _kernels.product_bfs(d, lam, n, q, d, lam, n, q2, len(machine.inputs),
                                list(range(len(machine.outputs))))


def pairwise_discriminators(machine: MealyMachine) -> dict[tuple[int, int], Word]:
    """Shortest separating word for every distinguishable pair ``p < q``.

    Same words (and tie-breaking) as :func:`find_discriminator`, computed for
    all pairs at once by refining a distance matrix.
    """
    n, k = machine.n_states, len(machine.inputs)
    delta = np.array(machine.delta, dtype=np.int64).reshape(n, k)
    lam = np.array(machine.lam, dtype=np.int64).reshape(n, k)
    inf = n * n + 1
    differ = lam[:, None, :] != lam[None, :, :]          # n x n x k
    dist = np.where(differ.any(axis=2), 1, inf)
    while True:
        best = dist.copy()
        for a in range(k):
            succ = dist[np.ix_(delta[:, a], delta[:, a])] + 1
            succ = np.where(differ[:, :, a], inf, succ)
            np.minimum(best, succ, out=best)
        if np.array_equal(best, dist):
            break
        dist = best

    memo: dict[tuple[int, int], Word] = {}

    def word(p, q):
        key = (p, q)
        if key in memo:
            return memo[key]
        dpq = dist[p, q]
        for a in range(k):
            if differ[p, q, a]:
                if dpq == 1:
                    memo[key] = (a,)
                    return memo[key]
                continue
            if dist[delta[p, a], delta[q, a]] == dpq - 1:
                memo[key] = (a,) + word(int(delta[p, a]), int(delta[q, a]))
                return memo[key]
        raise AssertionError("inconsistent distance matrix")

    out = {}
    for p in range(n):
        for q in range(p + 1, n):
            if dist[p, q] < inf:
                out[(p, q)] = word(p, q)
    return out


def _output_translation(m1: MealyMachine, m2: MealyMachine) -> list[int]:
    return [m1.outputs._index.get(lab, -1) for lab in m2.outputs.labels]


def equivalent(m1: MealyMachine, m2: MealyMachine) -> tuple[bool, Word | None]:
    """Decide equivalence; on failure also return a shortest counterexample.

    Outputs are compared by label, so the output alphabets may differ in
    order or content.
    """
    if m1.inputs != m2.inputs:
        raise AlphabetError("machines have different input alphabets")
    d1, l1 = _flat(m1)
    d2, l2 = _flat(m2)
    ce = _kernels.product_bfs(d1, l1, m1.n_states, m1.initial, d2, l2, m2.n_states,
                              m2.initial, len(m1.inputs), _output_translation(m1, m2))
    return ce is None, ce


def reachable(machine: MealyMachine) -> MealyMachine:
    """Drop unreachable states; states are renumbered in BFS order."""
    acc = access_sequences(machine)
    order = sorted(acc, key=lambda q: (len(acc[q]), acc[q]))
    return _renumber(machine, order)


def _renumber(machine, order):
    new = {q: i for i, q in enumerate(order)}
    delta = [[new[machine.delta[q][a]] for a in range(len(machine.inputs))] for q in order]
    lam = [list(machine.lam[q]) for q in order]
    return MealyMachine(machine.inputs, machine.outputs, delta, lam, new[machine.initial])


def minimize(machine: MealyMachine) -> MealyMachine:
    """Minimal equivalent machine (reachable part, Moore-style refinement)."""
    m = reachable(machine)
    n, k = m.n_states, len(m.inputs)
    block = {}
    cls = [block.setdefault(m.lam[q], len(block)) for q in range(n)]
    while True:
        sig = {}
        new = [sig.setdefault((cls[q],) + tuple(cls[m.delta[q][a]] for a in range(k)), len(sig))
               for q in range(n)]
        if len(sig) == len(set(cls)):
            break
        cls = new
    # representatives in first-seen order keep the initial state as block 0
    reps = {}
    for q in range(n):
        reps.setdefault(cls[q], q)
    delta = [[cls[m.delta[reps[c]][a]] for a in range(k)] for c in range(len(reps))]
    lam = [list(m.lam[reps[c]]) for c in range(len(reps))]
    return reachable(MealyMachine(m.inputs, m.outputs, delta, lam, cls[m.initial]))


def with_output(machine: MealyMachine, state: int, symbol: int, output: int) -> MealyMachine:
    """Copy of ``machine`` with one transition output replaced."""
    lam = [list(row) for row in machine.lam]
    lam[state][symbol] = output
    return MealyMachine(machine.inputs, machine.outputs, machine.delta, lam, machine.initial)


def random_mealy(n_states: int, n_inputs: int, n_outputs: int, rng: random.Random,
                 minimal: bool = True, max_tries: int = 1000,
                 input_labels: Sequence[str] | None = None,
                 output_labels: Sequence[str] | None = None) -> MealyMachine:
    """Random complete machine with every state reachable from state 0.

    With ``minimal`` the generator retries until no two states are
    equivalent.
    """
    if minimal and n_outputs < 2 and n_states > 1:
        raise ValueError("a minimal machine with several states needs two outputs")
    inputs = Alphabet(input_labels or [f"i{a}" for a in range(n_inputs)])
    outputs = Alphabet(output_labels or [f"o{b}" for b in range(n_outputs)])
    for _ in range(max_tries):
        delta = [[None] * n_inputs for _ in range(n_states)]
        for q in range(1, n_states):
            free = [(p, a) for p in range(q) for a in range(n_inputs) if delta[p][a] is None]
            p, a = rng.choice(free)
            delta[p][a] = q
        for p in range(n_states):
            for a in range(n_inputs):
                if delta[p][a] is None:
                    delta[p][a] = rng.randrange(n_states)
        lam = [[rng.randrange(n_outputs) for _ in range(n_inputs)] for _ in range(n_states)]
        m = MealyMachine(inputs, outputs, delta, lam, 0)
        if not minimal or minimize(m).n_states == n_states:
            return m
    raise RuntimeError("could not generate a minimal machine")
