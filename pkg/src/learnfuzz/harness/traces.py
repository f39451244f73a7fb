"""Plain-text trace files: one trace per line, whitespace-separated input labels."""
from __future__ import annotations

from pathlib import Path

from learnfuzz.fsm import Alphabet


class TraceFileError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_traces(text: str, alphabet: Alphabet | None = None) -> list:
    """Label tuples, or id tuples when ``alphabet`` is given. Blank lines are skipped."""
    traces = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        labels = tuple(line.split())
        if alphabet is None:
            traces.append(labels)
            continue
        try:
            traces.append(tuple(alphabet.index(lab) for lab in labels))
        except (KeyError, ValueError) as exc:
            raise TraceFileError(f"unknown input label ({exc})", n) from None
    return traces


def format_traces(traces, alphabet: Alphabet | None = None, comment: str | None = None) -> str:
    lines = [f"# {comment}"] if comment else []
    for t in traces:
        lines.append(" ".join(alphabet[a] for a in t) if alphabet is not None else " ".join(t))
    return "\n".join(lines) + "\n"


def read_traces(path, alphabet: Alphabet | None = None) -> list:
    return parse_traces(Path(path).read_text(), alphabet)


def write_traces(path, traces, alphabet: Alphabet | None = None, comment: str | None = None):
    Path(path).write_text(format_traces(traces, alphabet, comment))
