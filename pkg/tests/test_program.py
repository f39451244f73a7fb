import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from learnfuzz import _kernels, _pure
from learnfuzz.fsm import equivalent
from learnfuzz.fuzzer.bitmap import TraceBitmap
from learnfuzz.program import (HaltedError, ProgramSyntaxError, TargetInstance, execute, expand,
                               load_program)
from learnfuzz.targets import ProgramTarget, wrap_fsm
from oracles import HandSimulator, reference_bitmap
from programs import program_texts

SAMPLE = (Path(__file__).parent.parent / "docs" / "sample.rp").read_text()


class LocationLog:
    def __init__(self):
        self.locations = []

    def record(self, loc):
        self.locations.append(loc)


def sample_simulator():
    # count, mode; rules mirror docs/sample.rp
    return HandSimulator((0, 0), [
        (lambda v, s: s == 0, lambda v, s: [v[0] + 1, v[1]], "x"),
        (lambda v, s: s == 1, lambda v, s: [0, 1 - v[1]], "y"),
        (lambda v, s: s == 2 and v[0] >= 2, lambda v, s: v, ("error", 7)),
    ], [(0, 3), (0, 1)])


def step_loop(program, word, coverage=None):
    inst = TargetInstance(program, coverage)
    outs = []
    for a in word:
        r = inst.step(a)
        outs.append(program.outputs.index(r.output))
        if r.error is not None:
            return tuple(outs), r.error
    return tuple(outs), None


# -- loading ------------------------------------------------------------------

def test_zero_rules_emit_invalid():
    p = load_program("inputs: a\noutputs:\n")
    inst = TargetInstance(p)
    assert [inst.step("a").output for _ in range(3)] == ["invalid"] * 3


def test_sample_loads_with_distinct_locations():
    p = load_program(SAMPLE)
    assert len(p.rules) == 3 and len(p.var_names) == 2 and p.error_ids == [7]
    assert len({r.location for r in p.rules}) == 3
    assert all(0 <= loc < 65536 for loc in p.locations)


def test_locations_depend_on_seed_only():
    assert load_program(SAMPLE, seed=4).locations == load_program(SAMPLE, seed=4).locations
    assert load_program(SAMPLE, seed=4).locations != load_program(SAMPLE, seed=5).locations


def test_malformed_guard_reports_position():
    text = "inputs: a\noutputs: x\nvar x 0..1 = 0\nrule x < -> ; emit x\n"
    with pytest.raises(ProgramSyntaxError) as info:
        load_program(text)
    assert info.value.line == 4
    assert info.value.column == text.splitlines()[3].index("->") + 1


@pytest.mark.parametrize("text,fragment", [
    ("inputs: a\noutputs: x\nrule true -> ; error 1\nrule true -> ; error 1\n", "already used"),
    ("inputs: a\noutputs: x\nvar v 0..3 = 9\n", "outside"),
    ("inputs: a\noutputs: x\nrule in == b -> ; emit x\n", "unknown input"),
    ("inputs: a\noutputs: x\nrule true -> ; emit zz\n", "unknown output"),
    ("outputs: x\n", "inputs"),
    ("inputs: a\noutputs: halted\n", "reserved"),
    ("inputs: a\noutputs: x\nrule true -> w := 1; emit x\n", "variable"),
    ("inputs: a\noutputs: x\nrule true -> ; error 0\n", "positive"),
    ("inputs: a\noutputs: x\nbogus\n", "unknown declaration"),
])
def test_load_errors(text, fragment):
    with pytest.raises(ProgramSyntaxError, match=fragment):
        load_program(text)


def test_output_alphabet_layout():
    p = load_program(SAMPLE)
    assert p.outputs.labels == ("x", "y", "invalid", "error_7", "halted")


# -- stepping and executing -------------------------------------------------------

def test_default_rule_leaves_variables():
    p = load_program(SAMPLE)
    inst = TargetInstance(p)
    inst.step("a")
    before = list(inst.values)
    assert inst.step("c").output == "invalid"
    assert inst.values == before


def test_error_halts_instance():
    p = load_program(SAMPLE)
    inst = TargetInstance(p)
    for s in "aa":
        inst.step(s)
    r = inst.step("c")
    assert (r.output, r.error) == ("error_7", 7)
    assert inst.halted and inst.captured == ["x", "x", "error_7"]
    with pytest.raises(HaltedError):
        inst.step("a")
    inst.reset()
    assert not inst.halted and inst.captured == [] and inst.values == [0, 0]


def test_execute_empty_word():
    assert execute(load_program(SAMPLE), ()) == ((), None)


def test_execute_stops_at_error():
    p = load_program(SAMPLE)
    outs, err = execute(p, p.inputs.word("a a c b a"))
    assert err == 7 and len(outs) == 3 and p.outputs[outs[-1]] == "error_7"


def test_sample_matches_hand_simulation_on_all_length_four_words():
    p = load_program(SAMPLE)
    sim = sample_simulator()
    for w in itertools.product(range(3), repeat=4):
        outs, err = execute(p, w)
        expected, expected_err = sim.run(w)
        assert tuple(p.outputs[o] for o in outs) == expected
        assert err == expected_err


def test_clamp_and_wrap():
    base = "inputs: a\noutputs: x\nvar v 0..2 = 0\n{}rule true -> v := v + 1; emit x\n"
    clamp = load_program(base.format(""))
    wrap = load_program(base.format("wrap\n"))
    for p, expected in ((clamp, [1, 2, 2, 2]), (wrap, [1, 2, 0, 1])):
        inst = TargetInstance(p)
        seen = []
        for _ in range(4):
            inst.step("a")
            seen.append(inst.values[0])
        assert seen == expected


def kernel_of(program, impl, monkeypatch):
    monkeypatch.setattr(_kernels, "ProgramKernel", impl.ProgramKernel)
    return program._build_kernel()


@given(program_texts(), st.lists(st.integers(0, 3), max_size=25), st.integers(0, 99))
def test_interpreter_and_kernels_agree(monkeypatch_module, prog, raw, seed):
    text, k = prog
    program = load_program(text, seed)
    word = tuple(a % k for a in raw)
    log = LocationLog()
    ast_outs, ast_err = step_loop(program, word, log)
    bm = TraceBitmap()
    outs, err = execute(program, word, bm)
    assert (outs, err) == (ast_outs, ast_err)
    ref, prev = reference_bitmap(log.locations)
    assert bytes(bm.bytes) == bytes(ref) and bm.prev == prev
    pure = kernel_of(program, _pure, monkeypatch_module)
    pure_bytes = bytearray(65536)
    p_outs, p_err, p_prev = pure.execute(bytes(word), pure_bytes, 0)
    assert (tuple(p_outs), p_err or None, p_prev) == (outs, err, prev)
    assert pure_bytes == bm.bytes
    if err is None:
        assert len(outs) == len(word)
    else:
        assert len(outs) <= len(word)


@pytest.fixture(scope="module")
def monkeypatch_module():
    mp = pytest.MonkeyPatch()
    yield mp
    mp.undo()


@given(program_texts(), st.lists(st.integers(0, 3), max_size=15))
def test_fresh_instances_are_identical(prog, raw):
    text, k = prog
    program = load_program(text, 3)
    word = tuple(a % k for a in raw)
    a, b = TraceBitmap(), TraceBitmap()
    assert execute(program, word, a) == execute(program, word, b)
    assert a.bytes == b.bytes


@given(program_texts(), st.lists(st.integers(0, 3), max_size=15))
def test_text_round_trip_preserves_behaviour(prog, raw):
    text, k = prog
    program = load_program(text, 1)
    again = load_program(program.to_text(), 1)
    word = tuple(a % k for a in raw)
    assert execute(program, word) == execute(again, word)
    assert again.outputs == program.outputs


def test_out_of_alphabet_input_rejected():
    p = load_program(SAMPLE)
    with pytest.raises(ValueError):
        execute(p, (0, 5))


# -- explicit-state expansion -----------------------------------------------------

def test_expansion_matches_program_on_random_words():
    p = load_program(SAMPLE)
    exp = expand(p)
    fsm = wrap_fsm(exp.machine)
    target = ProgramTarget(p)
    rng = random.Random(0)
    for _ in range(10_000):
        w = tuple(rng.randrange(3) for _ in range(rng.randrange(12)))
        assert fsm.query(w) == target.query(w)
        assert fsm.execute(w)[1] == target.execute(w)[1]


def test_expansion_error_depth_is_shortest_crash():
    p = load_program(SAMPLE)
    exp = expand(p)
    assert exp.reachable_errors == {7}
    shortest = next(w for n in range(6) for w in itertools.product(range(3), repeat=n)
                    if execute(p, w)[1] == 7)
    assert exp.error_depth[7] == len(shortest) == 3
    assert execute(p, exp.error_witness[7])[1] == 7


@given(program_texts(max_vars=2, max_rules=6))
def test_expansion_equivalent_to_itself_after_round_trip(prog):
    text, _ = prog
    p = load_program(text)
    exp = expand(p)
    again = expand(load_program(p.to_text()))
    assert equivalent(exp.machine, again.machine)[0]
    for e, w in exp.error_witness.items():
        assert execute(p, w)[1] == e and len(w) == exp.error_depth[e]
