"""Random reactive problems with a known set of reachable errors.

A problem is a visible mode machine (one rule per mode and input) plus
hidden chains. A chain follows a fixed walk of ordinary transitions, copying
their outputs, and counts its progress in a private variable. Any other input
resets the count. The last step of the walk raises the chain's error. From the
outside, a chain in progress looks exactly like the mode machine until the
final input, so only coverage feedback reveals partial progress.
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from learnfuzz.fsm import MealyMachine, minimize
from learnfuzz.program import Expansion, ReactiveProgram, expand, load_program


class GeneratorError(ValueError):
    pass


@dataclass
class ProblemSpec:
    n_inputs: int = 10
    n_modes: int = 12
    n_outputs: int = 4
    visible_errors: int = 2
    hidden_errors: int = 2
    hidden_length: int = 7
    max_start_depth: int = 1
    invalid_cells: int = 6
    seed: int = 0
    max_states: int = 100_000

    def __post_init__(self):
        if not 1 <= self.n_inputs <= 26:
            raise GeneratorError("n_inputs must be within 1..26")
        if self.n_modes < 1 or self.n_outputs < 1 or self.hidden_length < 1:
            raise GeneratorError("sizes must be positive")


@dataclass
class GeneratedProblem:
    spec: ProblemSpec
    program: ReactiveProgram
    expansion: Expansion
    ground_truth: MealyMachine          # minimal machine of the expansion
    visible: set
    hidden: set

    @property
    def reachable_errors(self) -> set[int]:
        return self.expansion.reachable_errors

    @property
    def error_depth(self) -> dict:
        return self.expansion.error_depth


def _mode_depths(delta, start=0):
    depth = {start: 0}
    queue = deque([start])
    while queue:
        m = queue.popleft()
        for nxt in delta[m]:
            if nxt is not None and nxt not in depth:
                depth[nxt] = depth[m] + 1
                queue.append(nxt)
    return depth


def _build_text(spec, letters, outputs, delta, lam, cell_error, chains):
    lines = [f"# generated problem, seed {spec.seed}",
             f"inputs: {' '.join(letters)}",
             f"outputs: {' '.join(outputs)}",
             f"var mode 0..{spec.n_modes - 1} = 0"]
    progress = [f"p{c}" for c in range(len(chains))]
    for name in progress:
        lines.append(f"var {name} 0..{spec.hidden_length} = 0")
    resets = [f"{p} := 0" for p in progress]

    def assigns(mode, keep=None):
        parts = [] if mode is None else [f"mode := {mode}"]
        parts += [r for i, r in enumerate(resets) if i != keep]
        return ", ".join(parts)

    for c, (walk, err) in enumerate(chains):
        last = len(walk) - 1
        for j in range(last, -1, -1):
            m, a = walk[j]
            guard = f"{progress[c]} == {j} && mode == {m} && in == {letters[a]}"
            if j == last:
                lines.append(f"rule {guard} -> ; error {err}")
            else:
                body = ", ".join(x for x in (f"mode := {delta[m][a]}",
                                             f"{progress[c]} := {j + 1}",
                                             assigns(None, keep=c)) if x)
                lines.append(f"rule {guard} -> {body}; emit {outputs[lam[m][a]]}")
    for m in range(spec.n_modes):
        for a in range(spec.n_inputs):
            guard = f"mode == {m} && in == {letters[a]}"
            if (m, a) in cell_error:
                lines.append(f"rule {guard} -> ; error {cell_error[(m, a)]}")
            elif delta[m][a] is not None:
                lines.append(f"rule {guard} -> {assigns(delta[m][a])}; emit {outputs[lam[m][a]]}")
    if resets:
        lines.append(f"rule true -> {', '.join(resets)}; emit invalid")
    return "\n".join(lines) + "\n"


def generate_problem(spec: ProblemSpec, max_attempts: int = 200) -> GeneratedProblem:
    """Draw problems from ``spec.seed`` until every planted error is reachable."""
    rng = random.Random(spec.seed)
    for _ in range(max_attempts):
        problem = _attempt(spec, rng)
        if problem is not None:
            return problem
    raise GeneratorError("could not plant all errors; loosen the problem settings")


def _attempt(spec, rng):
    k, n = spec.n_inputs, spec.n_modes
    letters = [chr(ord("a") + i) for i in range(k)]
    outputs = [f"o{i}" for i in range(spec.n_outputs)]
    delta = [[None] * k for _ in range(n)]
    tree = set()
    for m in range(1, n):
        free = [(p, a) for p in range(m) for a in range(k) if delta[p][a] is None]
        p, a = rng.choice(free)
        delta[p][a] = m
        tree.add((p, a))
    lam = [[rng.randrange(spec.n_outputs) for _ in range(k)] for _ in range(n)]
    spare = [(m, a) for m in range(n) for a in range(k) if (m, a) not in tree]
    rng.shuffle(spare)
    if len(spare) < spec.visible_errors + spec.invalid_cells:
        raise GeneratorError("not enough free cells for errors and invalid inputs")
    cell_error = {}
    for i in range(spec.visible_errors):
        cell_error[spare.pop()] = i + 1
    invalid = {spare.pop() for _ in range(spec.invalid_cells)}
    for m, a in spare:
        delta[m][a] = rng.randrange(n)
    for m, a in invalid:
        delta[m][a] = None

    depth = _mode_depths(delta)
    starts = [m for m in range(n) if depth.get(m, n) <= spec.max_start_depth]
    used = set()
    chains = []
    for c in range(spec.hidden_errors):
        walk = None
        for _ in range(100):
            m = rng.choice(starts)
            cells = []
            for _ in range(spec.hidden_length):
                options = [a for a in range(k) if delta[m][a] is not None
                           and (m, a) not in used and (m, a) not in cell_error]
                if not options:
                    break
                a = rng.choice(options)
                cells.append((m, a))
                m = delta[m][a]
            if len(cells) == spec.hidden_length:
                walk = cells
                break
        if walk is None:
            return None
        used.update(walk)
        chains.append((walk, spec.visible_errors + c + 1))

    text = _build_text(spec, letters, outputs, delta, lam, cell_error, chains)
    program = load_program(text, seed=spec.seed)
    expansion = expand(program, spec.max_states)
    planted = set(cell_error.values()) | {e for _, e in chains}
    if expansion.reachable_errors != planted:
        return None
    return GeneratedProblem(spec, program, expansion, minimize(expansion.machine),
                            set(cell_error.values()), {e for _, e in chains})
