from importlib.resources import files

import pytest

from learnfuzz.cli import build_config, main, make_parser

DEMO = str(files("learnfuzz").joinpath("data/demo.rp"))


def test_defaults_config_file_and_flags(tmp_path):
    conf = tmp_path / "c.cfg"
    conf.write_text("seed = 5\ntester-budget = 200\nbudget-secs = 9\n")
    args = make_parser().parse_args(["learn", "--problem", DEMO, "--config", str(conf),
                                     "--seed", "7"])
    cfg = build_config(args)
    assert (cfg.seed, cfg.tester_budget, cfg.budget_secs) == (7, 200, 9.0)
    assert cfg.tester_min_infix == 3 and cfg.tester_expected_infix == 11


def test_learn_prints_report(tmp_path, capsys):
    assert main(["learn", "--problem", DEMO, "--out", str(tmp_path), "--tester-budget",
                 "1000"]) == 0
    out = capsys.readouterr().out
    assert out == (tmp_path / "report.txt").read_text()
    assert "learner: 2 (2)" in out


def test_fuzz_and_report_tables(tmp_path, capsys):
    assert main(["fuzz", "--problem", DEMO, "--out", str(tmp_path / "f"),
                 "--budget-execs", "3000"]) == 0
    assert main(["learn", "--problem", DEMO, "--out", str(tmp_path / "l"),
                 "--tester-budget", "1000"]) == 0
    capsys.readouterr()
    assert main(["report", "--learner", str(tmp_path / "l" / "learner-errors.txt"),
                 "--fuzzer", str(tmp_path / "f" / "fuzzer-errors.txt")]) == 0
    assert capsys.readouterr().out == "learner: 2 (0)\nfuzzer: 2 (0)\ntotal: 2\n"
    assert main(["report", str(tmp_path / "f"), str(tmp_path / "l")]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[:2] == ["problem", "command"]
    assert len(table) == 3


def test_generate(tmp_path, capsys):
    assert main(["generate", "--seed", "2", "--out", str(tmp_path), "--name", "p",
                 "--spec", "n_modes=4", "--spec", "n-inputs=5"]) == 0
    assert {p.name for p in tmp_path.iterdir()} == {"p.rp", "p-truth.dot", "p.errors"}
    assert "reachable errors" in capsys.readouterr().out


def test_combined_and_suite(tmp_path, capsys):
    assert main(["combined", "--problem", DEMO, "--out", str(tmp_path / "c"),
                 "--budget-execs", "3000", "--tester-budget", "1000"]) == 0
    assert "corpus-oracle-exhausted" in capsys.readouterr().out
    assert main(["suite", DEMO, DEMO, "--technique", "fuzz-only", "--budget-execs", "1000",
                 "--out-dir", str(tmp_path / "s")]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize("argv", [
    ["learn", "--problem", "/nonexistent.rp"],
    ["fuzz", "--problem", DEMO],
    ["generate", "--spec", "bogus=1"],
    ["learn", "--problem", DEMO, "--budget-execs", "-1"],
])
def test_errors_exit_two(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("learnfuzz: error:")


def test_bad_program_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.rp"
    bad.write_text("inputs: a\nrule ??\n")
    assert main(["learn", "--problem", str(bad)]) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
