"""Error accounting across techniques and the report tables."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from learnfuzz.fsm import MealyMachine, error_id_of


def extract_errors(hypothesis: MealyMachine) -> set[int]:
    """Error ids appearing on any transition of ``hypothesis``."""
    used = {o for row in hypothesis.lam for o in row}
    return {e for o in used if (e := error_id_of(hypothesis.outputs[o])) is not None}


@dataclass
class ErrorReport:
    found: dict                          # technique -> set of error ids

    @classmethod
    def of(cls, learner: set, fuzzer: set) -> "ErrorReport":
        return cls({"learner": set(learner), "fuzzer": set(fuzzer)})

    @property
    def union(self) -> set[int]:
        return set().union(*self.found.values()) if self.found else set()

    def unique(self, technique: str) -> set[int]:
        others = [s for t, s in self.found.items() if t != technique]
        return self.found[technique] - set().union(*others)

    def cell(self, technique: str) -> str:
        return f"{len(self.found[technique])} ({len(self.unique(technique))})"

    def lines(self) -> list[str]:
        out = [f"{t}: {self.cell(t)}" for t in self.found]
        out.append(f"total: {len(self.union)}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def error_report(learner_set, fuzzer_set) -> ErrorReport:
    return ErrorReport.of(learner_set, fuzzer_set)


@dataclass
class RunReport:
    """Everything a subcommand reports, minus wall-clock time."""

    command: str
    problem: str
    seed: int
    settings: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)        # (key, value)
    errors: ErrorReport | None = None
    known_errors: set | None = None

    def add(self, key, value):
        self.rows.append((key, value))

    def _pairs(self):
        pairs = [("command", self.command), ("problem", self.problem), ("seed", self.seed)]
        pairs += sorted(self.settings.items())
        pairs += self.rows
        if self.errors is not None:
            for t in self.errors.found:
                pairs.append((f"{t}-errors", self.errors.cell(t)))
                pairs.append((f"{t}-error-ids", " ".join(map(str, sorted(self.errors.found[t])))))
            pairs.append(("total-errors", len(self.errors.union)))
            if self.known_errors is not None:
                pairs.append(("known-errors", len(self.known_errors)))
                pairs.append(("found/known", f"{len(self.errors.union & self.known_errors)}"
                                             f"/{len(self.known_errors)}"))
        return pairs

    def text(self) -> str:
        pairs = self._pairs()
        width = max(len(k) for k, _ in pairs)
        body = [f"{k:<{width}}  {v}" for k, v in pairs]
        if self.errors is not None:
            body += ["", "errors found"] + ["  " + line for line in self.errors.lines()]
        return "\n".join(body) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("key", "value"))
        w.writerows(self._pairs())
        return buf.getvalue()


def comparison_table(rows: list[dict], columns: list[str]) -> str:
    """Plain fixed-width table, one row per problem."""
    cells = [columns] + [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
                     for row in cells) + "\n"
