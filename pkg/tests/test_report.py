import pytest
from hypothesis import given, strategies as st

from learnfuzz.fsm import Alphabet, MealyMachine
from learnfuzz.harness.report import (ErrorReport, RunReport, comparison_table, error_report,
                                      extract_errors)
from learnfuzz.harness.traces import (TraceFileError, format_traces, parse_traces,
                                      read_traces, write_traces)

AB = Alphabet(["a", "b"])


def test_problem_ten_row_format():
    rep = error_report(set(range(1, 46)), set(range(1, 46)))
    assert rep.lines() == ["learner: 45 (0)", "fuzzer: 45 (0)", "total: 45"]


def test_fuzzer_only():
    rep = error_report(set(), {3})
    assert rep.cell("fuzzer") == "1 (1)" and rep.cell("learner") == "0 (0)"
    assert rep.lines()[-1] == "total: 1"


def test_overlapping_sets():
    rep = error_report({1, 2}, {2, 3})
    assert rep.lines() == ["learner: 2 (1)", "fuzzer: 2 (1)", "total: 3"]


@given(st.sets(st.integers(0, 60)), st.sets(st.integers(0, 60)))
def test_arithmetic_matches_set_operations(a, b):
    rep = ErrorReport.of(a, b)
    assert rep.unique("learner") == a - b and rep.unique("fuzzer") == b - a
    assert rep.union == a | b
    assert rep.cell("learner") == f"{len(a)} ({len(a - b)})"


def test_extract_errors():
    outs = Alphabet(["x", "error_7", "halted"])
    plain = MealyMachine(AB, outs, [[0, 0]], [[0, 0]])
    assert extract_errors(plain) == set()
    erring = MealyMachine(AB, outs, [[0, 1], [1, 1]], [[0, 1], [2, 2]])
    assert extract_errors(erring) == {7}


def test_run_report_text_and_csv():
    rep = RunReport("learn", "demo", 3, {"budget-secs": 5}, known_errors={1, 2})
    rep.add("states", 9)
    rep.errors = ErrorReport({"learner": {1}})
    assert rep.text() == (
        "command            learn\n"
        "problem            demo\n"
        "seed               3\n"
        "budget-secs        5\n"
        "states             9\n"
        "learner-errors     1 (1)\n"
        "learner-error-ids  1\n"
        "total-errors       1\n"
        "known-errors       2\n"
        "found/known        1/2\n"
        "\n"
        "errors found\n"
        "  learner: 1 (1)\n"
        "  total: 1\n")
    csv_lines = rep.csv().splitlines()
    assert csv_lines[0] == "key,value"
    assert "states,9" in csv_lines and "seed,3" in csv_lines


def test_comparison_table_alignment():
    table = comparison_table([{"p": "a", "n": 10}, {"p": "bbb", "n": 2}], ["p", "n"])
    assert table.splitlines() == ["p    n", "a    10", "bbb  2"]


# -- trace files ------------------------------------------------------------

def test_parse_traces_comments_and_blanks():
    text = "# header\na b a\n\n  b  # trailing\n"
    assert parse_traces(text) == [("a", "b", "a"), ("b",)]
    assert parse_traces(text, AB) == [(0, 1, 0), (1,)]


def test_unknown_label_reports_line():
    with pytest.raises(TraceFileError) as exc:
        parse_traces("a\nb c\n", AB)
    assert exc.value.line == 2


def test_trace_file_roundtrip(tmp_path):
    traces = [(0, 1), (1, 1, 0), ()]
    path = tmp_path / "t.txt"
    write_traces(path, traces, AB, comment="saved")
    assert read_traces(path, AB) == [t for t in traces if t]
    assert format_traces([("a",)]) == "a\n"
