"""Guarded-command reactive programs.

A program is a list of rules over bounded integer variables. On every input
the first rule whose guard holds fires: its assignments run in order, then it
emits an output or raises an error (which halts the run). When no guard holds
an implicit default rule emits ``invalid`` and changes nothing.

Text format::

    # comment
    inputs: a b c
    outputs: x y
    var s 0..3 = 0
    wrap                       # optional: wrap instead of clamp on overflow
    rule in == a && s == 0 -> s := 1; emit x
    rule in == c && s == 1 -> ; error 7

Two routes execute a program: :class:`TargetInstance` walks the syntax tree,
:func:`execute` runs the compiled kernel. Tests hold them against each other.
"""
from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, field

from learnfuzz import _kernels
from learnfuzz._pure import (OP_ADD, OP_AND, OP_CONST, OP_EQ, OP_GE, OP_GT, OP_INPUT,
                             OP_LE, OP_LT, OP_MUL, OP_NE, OP_NEG, OP_NOT, OP_OR,
                             OP_SUB, OP_VAR, _wrap64)
from learnfuzz.fsm import HALTED, INVALID, Alphabet, MealyMachine, error_label

LABEL_RE = re.compile(r"[A-Za-z0-9_.]+\Z")
NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = {"in", "true", "false", "rule", "var", "emit", "error", "wrap",
            "inputs", "outputs"}
MAX_VARS = 256
MAX_STACK = 64
BOUND_LIMIT = 1 << 31  # variable bounds stay within +-2^31


class ProgramSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class HaltedError(RuntimeError):
    """Raised when stepping an instance that already hit an error."""


class ExpansionTooLarge(RuntimeError):
    pass


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: int

    def eval(self, vals, sym):
        return self.value

    def text(self, prog):
        return str(self.value) if self.value >= 0 else f"({self.value})"


@dataclass(frozen=True)
class Var:
    index: int

    def eval(self, vals, sym):
        return vals[self.index]

    def text(self, prog):
        return prog.var_names[self.index]


@dataclass(frozen=True)
class InputIs:
    """``in == label`` (or ``!=`` when ``negate``)."""
    symbol: int
    negate: bool = False

    def eval(self, vals, sym):
        return int((sym == self.symbol) != self.negate)

    def text(self, prog):
        return f"in {'!=' if self.negate else '=='} {prog.inputs[self.symbol]}"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: object

    def eval(self, vals, sym):
        x = self.arg.eval(vals, sym)
        if self.op == "-":
            return _wrap64(-x)
        return 0 if x else 1

    def text(self, prog):
        return f"{self.op}({self.arg.text(prog)})"


_ARITH = {"+": lambda a, b: _wrap64(a + b), "-": lambda a, b: _wrap64(a - b),
          "*": lambda a, b: _wrap64(a * b)}
_COMPARE = {"==": lambda a, b: a == b, "!=": lambda a, b: a != b,
            "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
            ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
            "&&": lambda a, b: bool(a) and bool(b), "||": lambda a, b: bool(a) or bool(b)}
_OPCODE = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "==": OP_EQ, "!=": OP_NE,
           "<": OP_LT, "<=": OP_LE, ">": OP_GT, ">=": OP_GE, "&&": OP_AND, "||": OP_OR}


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object

    def eval(self, vals, sym):
        a = self.left.eval(vals, sym)
        b = self.right.eval(vals, sym)
        if self.op in _ARITH:
            return _ARITH[self.op](a, b)
        return int(_COMPARE[self.op](a, b))

    def text(self, prog):
        return f"({self.left.text(prog)} {self.op} {self.right.text(prog)})"


def _compile(expr, code):
    """Append postfix code for ``expr``; returns the stack depth it needs."""
    if isinstance(expr, Const):
        code += [OP_CONST, expr.value]
        return 1
    if isinstance(expr, Var):
        code += [OP_VAR, expr.index]
        return 1
    if isinstance(expr, InputIs):
        code += [OP_INPUT, OP_CONST, expr.symbol, OP_NE if expr.negate else OP_EQ]
        return 2
    if isinstance(expr, Unary):
        depth = _compile(expr.arg, code)
        code.append(OP_NEG if expr.op == "-" else OP_NOT)
        return depth
    left = _compile(expr.left, code)
    right = _compile(expr.right, code)
    code.append(_OPCODE[expr.op])
    return max(left, right + 1)


# --- program ---------------------------------------------------------------

@dataclass(frozen=True)
class GuardedRule:
    guard: object
    assignments: tuple          # ((var index, expr), ...)
    output: str | None          # emitted label, None for error rules
    error: int | None
    location: int


@dataclass(frozen=True)
class StepResult:
    output: str
    error: int | None = None


@dataclass
class ReactiveProgram:
    inputs: Alphabet
    outputs: Alphabet
    var_names: tuple
    bounds: tuple               # ((lo, hi), ...)
    initial: tuple
    rules: tuple
    default_location: int
    wrap: bool = False
    declared_outputs: tuple = ()
    _kernel: object = field(default=None, init=False, repr=False, compare=False)

    @property
    def error_ids(self) -> list[int]:
        return sorted(r.error for r in self.rules if r.error is not None)

    @property
    def locations(self) -> list[int]:
        return [r.location for r in self.rules] + [self.default_location]

    def bound(self, var: int, x: int) -> int:
        lo, hi = self.bounds[var]
        if lo <= x <= hi:
            return x
        if self.wrap:
            return lo + (x - lo) % (hi - lo + 1)
        return lo if x < lo else hi

    @property
    def kernel(self):
        if self._kernel is None:
            self._kernel = self._build_kernel()
        return self._kernel

    def _build_kernel(self):
        code: list[int] = []
        gs, ge, as_, ae = [], [], [], []
        avar, acs, ace = [], [], []
        depth = 1
        for rule in self.rules:
            gs.append(len(code))
            depth = max(depth, _compile(rule.guard, code))
            ge.append(len(code))
            as_.append(len(avar))
            for var, expr in rule.assignments:
                avar.append(var)
                acs.append(len(code))
                depth = max(depth, _compile(expr, code))
                ace.append(len(code))
            ae.append(len(avar))
        # implicit default rule
        gs.append(len(code))
        ge.append(len(code))
        as_.append(len(avar))
        ae.append(len(avar))
        rule_out = [self.outputs.index(r.output if r.error is None else error_label(r.error))
                    for r in self.rules] + [self.outputs.index(INVALID)]
        rule_err = [r.error or 0 for r in self.rules] + [0]
        return _kernels.ProgramKernel(
            code, gs, ge, as_, ae, avar, acs, ace, rule_out, rule_err, self.locations,
            [b[0] for b in self.bounds], [b[1] for b in self.bounds], list(self.initial),
            self.wrap, len(self.inputs), depth)

    def to_text(self) -> str:
        lines = [f"inputs: {' '.join(self.inputs)}",
                 f"outputs: {' '.join(self.declared_outputs)}"]
        for name, (lo, hi), init in zip(self.var_names, self.bounds, self.initial):
            lines.append(f"var {name} {lo}..{hi} = {init}")
        if self.wrap:
            lines.append("wrap")
        for r in self.rules:
            assigns = ", ".join(f"{self.var_names[v]} := {e.text(self)}" for v, e in r.assignments)
            action = f"emit {r.output}" if r.error is None else f"error {r.error}"
            lines.append(f"rule {r.guard.text(self)} -> {assigns}; {action}")
        return "\n".join(lines) + "\n"


# --- parser ----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(->|:=|==|!=|<=|>=|&&|\|\||[-+*<>!(),;])|([A-Za-z0-9_.]+)|(\S))")
_VAR_RE = re.compile(r"var\s+(\S+)\s+(-?\d+)\s*\.\.\s*(-?\d+)\s*=\s*(-?\d+)\s*\Z")


class _RuleParser:
    def __init__(self, text, line, offset, inputs, var_index):
        self.line = line
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                break
            if m.group(3):
                raise ProgramSyntaxError(f"unexpected character {m.group(3)!r}", line,
                                         offset + m.start(3) + 1)
            kind = "op" if m.group(1) else "word"
            start = m.start(1) if m.group(1) else m.start(2)
            self.tokens.append((kind, m.group(1) or m.group(2), offset + start + 1))
            pos = m.end()
        self.tokens.append(("end", "", offset + len(text.rstrip()) + 1))
        self.i = 0
        self.inputs = inputs
        self.var_index = var_index

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ProgramSyntaxError(message, self.line, tok[2])

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "end":
            self.fail(f"expected {value!r}, found {tok[1] or 'end of line'!r}", tok)
        return tok

    # precedence: || < && < comparison < +,- < * < unary
    def expr(self):
        left = self.conj()
        while self.peek()[1] == "||":
            self.take()
            left = Binary("||", left, self.conj())
        return left

    def conj(self):
        left = self.comparison()
        while self.peek()[1] == "&&":
            self.take()
            left = Binary("&&", left, self.comparison())
        return left

    def comparison(self):
        tok = self.peek()
        if tok == ("word", "in", tok[2]):
            self.take()
            op = self.take()
            if op[1] not in ("==", "!="):
                self.fail("'in' must be compared with == or !=", op)
            lab = self.take()
            if lab[0] != "word":
                self.fail("expected an input label", lab)
            if lab[1] not in self.inputs:
                self.fail(f"unknown input {lab[1]!r}", lab)
            return InputIs(self.inputs.index(lab[1]), op[1] == "!=")
        left = self.sum()
        if self.peek()[1] in ("==", "!=", "<", "<=", ">", ">="):
            op = self.take()[1]
            left = Binary(op, left, self.sum())
        return left

    def sum(self):
        left = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            left = Binary(op, left, self.product())
        return left

    def product(self):
        left = self.unary()
        while self.peek()[1] == "*":
            self.take()
            left = Binary("*", left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok[1] in ("-", "!") and tok[0] == "op":
            self.take()
            return Unary(tok[1], self.unary())
        return self.atom()

    def atom(self):
        tok = self.take()
        if tok[0] == "op" and tok[1] == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok[0] == "word":
            w = tok[1]
            if w.isdigit():
                v = int(w)
                if v >= BOUND_LIMIT:
                    self.fail("integer constant beyond 2^31", tok)
                return Const(v)
            if w == "true":
                return Const(1)
            if w == "false":
                return Const(0)
            if w in self.var_index:
                return Var(self.var_index[w])
            self.fail(f"unknown variable {w!r}", tok)
        self.fail(f"expected an expression, found {tok[1] or 'end of line'!r}", tok)

    def rule(self, outputs):
        guard = self.expr()
        self.expect("->")
        assigns = []
        if self.peek()[1] not in (";", "emit", "error"):
            while True:
                name = self.take()
                if name[0] != "word" or name[1] not in self.var_index:
                    self.fail(f"expected a variable to assign, found {name[1]!r}", name)
                self.expect(":=")
                assigns.append((self.var_index[name[1]], self.expr()))
                if self.peek()[1] != ",":
                    break
                self.take()
        if self.peek()[1] == ";":
            self.take()
        action = self.take()
        arg = self.take()
        if action[1] == "emit":
            if arg[0] != "word" or arg[1] not in outputs:
                self.fail(f"unknown output {arg[1]!r}", arg)
            result = (tuple(assigns), arg[1], None)
        elif action[1] == "error":
            if (arg[0] != "word" or not arg[1].isdigit()
                    or not 0 < int(arg[1]) < BOUND_LIMIT):
                self.fail("error id must be a positive integer", arg)
            result = (tuple(assigns), None, int(arg[1]))
        else:
            self.fail("expected 'emit' or 'error'", action)
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r} after action")
        return guard, result


def _depth(expr):
    return _compile(expr, [])


def load_program(text: str, seed: int = 0) -> ReactiveProgram:
    """Parse program text. ``seed`` drives the instrumentation locations."""
    inputs = outputs = None
    var_names, bounds, initial = [], [], []
    var_index: dict[str, int] = {}
    wrap = False
    parsed_rules = []
    error_lines: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        col = len(body) - len(body.lstrip()) + 1
        head = stripped.split(None, 1)[0]
        if head in ("inputs:", "outputs:"):
            labels = stripped.split()[1:]
            for lab in labels:
                if not LABEL_RE.match(lab):
                    raise ProgramSyntaxError(f"bad label {lab!r}", lineno, body.index(lab) + 1)
            if len(set(labels)) != len(labels):
                raise ProgramSyntaxError("duplicate label", lineno, col)
            if head == "inputs:":
                if inputs is not None:
                    raise ProgramSyntaxError("inputs declared twice", lineno, col)
                if not labels:
                    raise ProgramSyntaxError("no inputs declared", lineno, col)
                inputs = Alphabet(labels)
            else:
                if outputs is not None:
                    raise ProgramSyntaxError("outputs declared twice", lineno, col)
                for lab in labels:
                    if lab == HALTED or lab.startswith("error_"):
                        raise ProgramSyntaxError(f"output label {lab!r} is reserved", lineno,
                                                 body.index(lab) + 1)
                outputs = labels
        elif head == "var":
            m = _VAR_RE.match(stripped)
            if not m:
                raise ProgramSyntaxError("expected 'var NAME LO..HI = INIT'", lineno, col)
            name, lo, hi, init = m.group(1), int(m.group(2)), int(m.group(3)), int(m.group(4))
            if not NAME_RE.match(name) or name in KEYWORDS:
                raise ProgramSyntaxError(f"bad variable name {name!r}", lineno, col + 4)
            if name in var_index:
                raise ProgramSyntaxError(f"variable {name!r} declared twice", lineno, col + 4)
            if not (-BOUND_LIMIT <= lo <= hi <= BOUND_LIMIT):
                raise ProgramSyntaxError("empty bounds or bounds beyond 2^31", lineno, col)
            if not lo <= init <= hi:
                raise ProgramSyntaxError(f"initial value of {name!r} outside {lo}..{hi}",
                                         lineno, col)
            if len(var_names) >= MAX_VARS:
                raise ProgramSyntaxError(f"more than {MAX_VARS} variables", lineno, col)
            var_index[name] = len(var_names)
            var_names.append(name)
            bounds.append((lo, hi))
            initial.append(init)
        elif stripped == "wrap":
            wrap = True
        elif head == "rule":
            if inputs is None or outputs is None:
                raise ProgramSyntaxError("rules must follow the inputs and outputs headers",
                                         lineno, col)
            offset = body.index("rule") + 4
            p = _RuleParser(body[offset:], lineno, offset, inputs, var_index)
            if p.peek()[0] == "end":
                p.fail("missing guard")
            guard, (assigns, out, err) = p.rule(set(outputs) | {INVALID})
            for e in [guard] + [x for _, x in assigns]:
                if _depth(e) > MAX_STACK:
                    raise ProgramSyntaxError("expression nested too deeply", lineno, col)
            if err is not None:
                if err in error_lines:
                    raise ProgramSyntaxError(
                        f"error id {err} already used on line {error_lines[err]}", lineno, col)
                error_lines[err] = lineno
            parsed_rules.append((guard, assigns, out, err))
        else:
            raise ProgramSyntaxError(f"unknown declaration {head!r}", lineno, col)
    if inputs is None:
        raise ProgramSyntaxError("missing 'inputs:' header", 1, 1)
    if outputs is None:
        raise ProgramSyntaxError("missing 'outputs:' header", 1, 1)

    out_labels = list(outputs)
    if INVALID not in out_labels:
        out_labels.append(INVALID)
    out_labels += [error_label(e) for e in sorted(error_lines)]
    out_labels.append(HALTED)
    locs = random.Random(seed).sample(range(65536), len(parsed_rules) + 1)
    rules = tuple(GuardedRule(g, a, o, e, loc) for (g, a, o, e), loc in zip(parsed_rules, locs))
    return ReactiveProgram(inputs, Alphabet(out_labels), tuple(var_names), tuple(bounds),
                           tuple(initial), rules, locs[-1], wrap, tuple(outputs))


# --- execution -------------------------------------------------------------

class TargetInstance:
    """Resettable interpreter over the program's syntax tree.

    ``coverage`` is any object with a ``record(location)`` method, typically
    a :class:`learnfuzz.fuzzer.bitmap.TraceBitmap`.
    """

    def __init__(self, program: ReactiveProgram, coverage=None):
        self.program = program
        self.coverage = coverage
        self.reset()

    def reset(self):
        self.values = list(self.program.initial)
        self.halted = False
        self.captured: list[str] = []

    def step(self, symbol: int | str) -> StepResult:
        if self.halted:
            raise HaltedError("instance halted after an error; reset it first")
        prog = self.program
        sym = prog.inputs.index(symbol) if isinstance(symbol, str) else symbol
        if not 0 <= sym < len(prog.inputs):
            raise ValueError(f"input {symbol!r} outside the alphabet")
        vals = self.values
        fired = None
        for rule in prog.rules:
            if rule.guard.eval(vals, sym):
                fired = rule
                break
        if fired is None:
            loc, result = prog.default_location, StepResult(INVALID)
        else:
            for var, expr in fired.assignments:
                vals[var] = prog.bound(var, expr.eval(vals, sym))
            loc = fired.location
            if fired.error is not None:
                self.halted = True
                result = StepResult(error_label(fired.error), fired.error)
            else:
                result = StepResult(fired.output)
        self.captured.append(result.output)
        if self.coverage is not None:
            self.coverage.record(loc)
        return result


def execute(program: ReactiveProgram, word, coverage=None) -> tuple[tuple, int | None]:
    """Run ``word`` on a fresh instance; stop at the first error.

    Returns output ids and the error id (or None).
    """
    if coverage is None:
        outs, err, _ = _run_kernel(program, word, None, 0)
    else:
        outs, err, coverage.prev = _run_kernel(program, word, coverage.bytes, coverage.prev)
    return outs, (err or None)


def _run_kernel(program, word, bitmap, prev):
    try:
        return program.kernel.execute(bytes(word) if len(program.inputs) <= 256 else word,
                                      bitmap, prev)
    except (ValueError, TypeError, OverflowError):
        program.inputs.check(word)
        raise


@dataclass
class Expansion:
    """Explicit-state Mealy semantics of a program.

    After an error the machine sits in an absorbing state answering
    ``halted`` to everything.
    """
    machine: MealyMachine
    valuations: list            # per state; None for the halted sink
    error_depth: dict           # error id -> length of the shortest word raising it
    error_witness: dict         # error id -> that word

    @property
    def reachable_errors(self) -> set[int]:
        return set(self.error_depth)


def expand(program: ReactiveProgram, max_states: int = 100_000) -> Expansion:
    kernel = program.kernel
    k = len(program.inputs)
    outputs = program.outputs
    halted_out = outputs.index(HALTED)
    rule_err = [r.error for r in program.rules] + [None]
    rule_out = [outputs.index(r.output if r.error is None else error_label(r.error))
                for r in program.rules] + [outputs.index(INVALID)]
    start = tuple(program.initial)
    index = {start: 0}
    valuations = [start]
    access = [()]
    delta, lam = [], []
    sink = None
    error_depth, witness = {}, {}
    queue = deque([start])
    while queue:
        vals = queue.popleft()
        q = index[vals]
        drow, lrow = [], []
        for a in range(k):
            new, r = kernel.transition(vals, a)
            lrow.append(rule_out[r])
            if rule_err[r] is not None:
                e = rule_err[r]
                if e not in error_depth:
                    error_depth[e] = len(access[q]) + 1
                    witness[e] = access[q] + (a,)
                if sink is None:
                    sink = len(valuations)
                    valuations.append(None)
                    access.append(access[q] + (a,))
                drow.append(sink)
                continue
            if new not in index:
                if len(valuations) >= max_states:
                    raise ExpansionTooLarge(f"more than {max_states} reachable states")
                index[new] = len(valuations)
                valuations.append(new)
                access.append(access[q] + (a,))
                queue.append(new)
            drow.append(index[new])
        while len(delta) <= q:
            delta.append(None)
            lam.append(None)
        delta[q], lam[q] = drow, lrow
    n = len(valuations)
    while len(delta) < n:
        delta.append(None)
        lam.append(None)
    if sink is not None:
        delta[sink] = [sink] * k
        lam[sink] = [halted_out] * k
    machine = MealyMachine(program.inputs, outputs, delta, lam, 0)
    return Expansion(machine, valuations, error_depth, witness)
