"""Systems under learning and the membership-query cache.

A target exposes two views of the same behaviour:

* ``execute(word, bitmap)`` runs a fresh instance and stops at the first
  error, like a crashing process would;
* ``query(word)`` is the Mealy view the learner sees, one output per input.
  After an error every further input answers ``halted``.
"""
from __future__ import annotations

import random

from learnfuzz.fsm import HALTED, Alphabet, MealyMachine, error_id_of
from learnfuzz.program import ReactiveProgram, _run_kernel
from learnfuzz import _kernels


class NondeterminismError(RuntimeError):
    """Two executions of the same prefix produced different outputs."""


class ProgramTarget:
    def __init__(self, program: ReactiveProgram):
        self.program = program
        self.inputs: Alphabet = program.inputs
        self.outputs: Alphabet = program.outputs
        self._halted = program.outputs.index(HALTED)
        self.executions = 0
        self.symbols = 0

    def execute(self, word, bitmap=None):
        """Returns (output ids, error id or None); ``bitmap`` is a TraceBitmap."""
        self.executions += 1
        if bitmap is None:
            outs, err, _ = _run_kernel(self.program, word, None, 0)
        else:
            outs, err, bitmap.prev = _run_kernel(self.program, word, bitmap.bytes, bitmap.prev)
        self.symbols += len(outs)
        return outs, (err or None)

    def query(self, word) -> tuple:
        outs, err = self.execute(word)
        if err is not None and len(outs) < len(word):
            outs = outs + (self._halted,) * (len(word) - len(outs))
        return outs


class FsmTarget:
    """A Mealy machine dressed up as a target.

    Outputs labelled ``error_<id>`` count as errors for :meth:`execute`.
    Every (state, input) edge gets a pseudo-random coverage location.
    """

    def __init__(self, machine: MealyMachine, seed: int = 0):
        self.machine = machine
        self.inputs = machine.inputs
        self.outputs = machine.outputs
        n, k = machine.n_states, len(machine.inputs)
        rng = random.Random(seed)
        self.locations = [rng.randrange(65536) for _ in range(n * k)]
        errs = [error_id_of(lab) or 0 for lab in machine.outputs]
        self._kernel = _kernels.MealyKernel(
            [x for row in machine.delta for x in row], [x for row in machine.lam for x in row],
            n, k, machine.initial, self.locations, errs)
        self.executions = 0
        self.symbols = 0

    def execute(self, word, bitmap=None):
        self.executions += 1
        try:
            if bitmap is None:
                outs, err, _ = self._kernel.execute(word)
            else:
                outs, err, bitmap.prev = self._kernel.execute(word, bitmap.bytes, bitmap.prev)
        except (ValueError, TypeError, OverflowError):
            self.inputs.check(word)
            raise
        self.symbols += len(outs)
        return outs, (err or None)

    def query(self, word) -> tuple:
        self.executions += 1
        self.symbols += len(word)
        return self.machine.run(word)


def wrap_fsm(machine: MealyMachine, seed: int = 0) -> FsmTarget:
    return FsmTarget(machine, seed)


class QueryCache:
    """Prefix-tree cache in front of a target's ``query``.

    ``queries`` counts every question asked, ``executions`` only those that
    reached the target.
    """

    def __init__(self, target):
        self.target = target
        self.inputs = target.inputs
        self.outputs = target.outputs
        self._root: dict = {}
        self.queries = 0
        self.executions = 0

    def lookup(self, word):
        node = self._root
        out = []
        for a in word:
            entry = node.get(a)
            if entry is None:
                return None
            out.append(entry[0])
            node = entry[1]
        return tuple(out)

    def query(self, word) -> tuple:
        word = tuple(word)
        self.queries += 1
        hit = self.lookup(word)
        if hit is not None:
            return hit
        outs = tuple(self.target.query(word))
        self.executions += 1
        self.insert(word, outs)
        return outs

    def insert(self, word, outs):
        node = self._root
        for i, (a, o) in enumerate(zip(word, outs)):
            entry = node.get(a)
            if entry is None:
                entry = node[a] = (o, {})
            elif entry[0] != o:
                raise NondeterminismError(
                    f"output {o} at position {i} of {word!r} contradicts cached {entry[0]}")
            node = entry[1]

    def __len__(self):
        count, stack = 0, [self._root]
        while stack:
            node = stack.pop()
            count += len(node)
            stack.extend(child for _, child in node.values())
        return count


def membership_query(target, word) -> tuple:
    """Output word of ``target`` on ``word`` (through its cache, if it is one)."""
    return target.query(word)
