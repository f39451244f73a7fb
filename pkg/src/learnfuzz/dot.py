"""DOT (graphviz) serialization of Mealy machines.

Layout written by :func:`to_dot`::

    digraph mealy {
        __start [shape=none, label=""];
        s0 [shape=circle];
        __start -> s0;
        s0 -> s1 [label="a/x"];
    }
"""
from __future__ import annotations

import re

from learnfuzz.fsm import Alphabet, MealyMachine


class DotParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


def to_dot(machine: MealyMachine, name: str = "mealy") -> str:
    lines = [f"digraph {name} {{", '    __start [shape=none, label=""];']
    for q in range(machine.n_states):
        lines.append(f"    s{q} [shape=circle];")
    lines.append(f"    __start -> s{machine.initial};")
    ins, outs = machine.inputs, machine.outputs
    for q in range(machine.n_states):
        for a in range(len(ins)):
            lines.append(f'    s{q} -> s{machine.delta[q][a]} '
                         f'[label="{ins[a]}/{outs[machine.lam[q][a]]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<arrow>->)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<id>[A-Za-z0-9_.]+)
  | (?P<punct>[{}\[\];,=])
""", re.VERBOSE | re.DOTALL)


def _tokenize(text):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DotParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind != "ws":
            if kind == "string":
                value = value[1:-1].replace('\\"', '"')
            yield kind, value, line, col
        nl = value.count("\n") if kind == "ws" else 0
        if nl:
            line += nl
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text):
        self.tokens = list(_tokenize(text))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind, value=None):
        tok = self.next()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            raise DotParseError(f"expected {want!r}, got {tok[1]!r}", tok[2], tok[3])
        return tok

    def attrs(self):
        out = {}
        if self.peek()[1] != "[":
            return out
        self.next()
        while self.peek()[1] != "]":
            key = self.next()
            if key[0] not in ("id", "string"):
                raise DotParseError(f"bad attribute name {key[1]!r}", key[2], key[3])
            self.expect("punct", "=")
            val = self.next()
            if val[0] not in ("id", "string"):
                raise DotParseError(f"bad attribute value {val[1]!r}", val[2], val[3])
            out[key[1]] = (val[1], val[2], val[3])
            if self.peek()[1] in (",", ";"):
                self.next()
        self.next()
        return out


def from_dot(text: str) -> MealyMachine:
    """Parse the layout produced by :func:`to_dot`.

    Unknown attributes are ignored; input and output alphabets are ordered by
    first appearance on edges.
    """
    p = _Parser(text)
    tok = p.next()
    if tok[1] == "strict":
        tok = p.next()
    if tok[1] != "digraph":
        raise DotParseError("expected 'digraph'", tok[2], tok[3])
    if p.peek()[0] in ("id", "string"):
        p.next()
    p.expect("punct", "{")
    nodes: list[str] = []
    edges = []
    initial = None
    while p.peek()[1] != "}":
        tok = p.next()
        if tok[0] == "eof":
            raise DotParseError("unterminated graph", tok[2], tok[3])
        if tok[1] == ";":
            continue
        if tok[0] not in ("id", "string"):
            raise DotParseError(f"unexpected {tok[1]!r}", tok[2], tok[3])
        if tok[1] in ("graph", "node", "edge") and p.peek()[1] == "[":
            p.attrs()
            continue
        if p.peek()[0] == "arrow":
            p.next()
            dst = p.next()
            if dst[0] not in ("id", "string"):
                raise DotParseError("expected edge target", dst[2], dst[3])
            attrs = p.attrs()
            if tok[1] == "__start":
                initial = (dst[1], dst[2], dst[3])
                continue
            if "label" not in attrs:
                raise DotParseError("edge without label", tok[2], tok[3])
            label, line, col = attrs["label"]
            if "/" not in label:
                raise DotParseError(f"edge label {label!r} lacks '/'", line, col)
            inp, out = label.split("/", 1)
            if not inp or not out:
                raise DotParseError(f"edge label {label!r} has an empty side", line, col)
            for name in (tok[1], dst[1]):
                if name not in nodes:
                    nodes.append(name)
            edges.append((tok[1], dst[1], inp, out, tok[2], tok[3]))
        else:
            p.attrs()
            if tok[1] != "__start" and tok[1] not in nodes:
                nodes.append(tok[1])
    p.next()
    if initial is None:
        raise DotParseError("no initial state (missing __start edge)", *p.peek()[2:])
    if initial[0] not in nodes:
        raise DotParseError(f"unknown initial state {initial[0]!r}", initial[1], initial[2])

    if all(re.fullmatch(r"s\d+", n) for n in nodes):
        nodes.sort(key=lambda n: int(n[1:]))
    index = {n: i for i, n in enumerate(nodes)}
    in_labels: list[str] = []
    out_labels: list[str] = []
    for _, _, inp, out, _, _ in edges:
        if inp not in in_labels:
            in_labels.append(inp)
        if out not in out_labels:
            out_labels.append(out)
    if not in_labels:
        raise DotParseError("machine has no transitions", 1, 1)
    inputs, outputs = Alphabet(in_labels), Alphabet(out_labels)
    n, k = len(nodes), len(inputs)
    delta = [[None] * k for _ in range(n)]
    lam = [[None] * k for _ in range(n)]
    for src, dst, inp, out, line, col in edges:
        q, a = index[src], inputs.index(inp)
        if delta[q][a] is not None:
            raise DotParseError(f"duplicate transition {src} --{inp}-->", line, col)
        delta[q][a] = index[dst]
        lam[q][a] = outputs.index(out)
    for q in range(n):
        for a in range(k):
            if delta[q][a] is None:
                raise DotParseError(f"state {nodes[q]} has no transition on {inputs[a]!r}", 1, 1)
    return MealyMachine(inputs, outputs, delta, lam, index[initial[0]])
