import random

import pytest
from hypothesis import given, strategies as st

from learnfuzz.fsm import (Alphabet, AlphabetError, MealyMachine, UnreachableStateError,
                           access_sequence, access_sequences, equivalent, find_discriminator,
                           minimize, pairwise_discriminators, random_mealy, run, state_cover,
                           transition_cover, with_output)
from oracles import (bfs_distances, brute_counterexample, brute_discriminator, labels,
                     step_run, step_state)

AB = Alphabet(["a", "b"])
XY = Alphabet(["x", "y"])


def machines(max_states=4, max_inputs=3, max_outputs=3, minimal=False):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_states))
        k = draw(st.integers(1, max_inputs))
        o = draw(st.integers(2 if minimal else 1, max_outputs))
        seed = draw(st.integers(0, 2 ** 32))
        return random_mealy(n, k, o, random.Random(seed), minimal=minimal and n > 1)
    return build()


def cycle2():
    return MealyMachine(Alphabet(["a"]), XY, [[1], [0]], [[0], [1]])


# -- run -------------------------------------------------------------------

def test_run_empty_word():
    m = random_mealy(3, 2, 2, random.Random(1))
    assert run(m, ()) == ()


def test_run_single_state_constant():
    m = MealyMachine(Alphabet(["a"]), Alphabet(["x"]), [[0]], [[0]])
    assert m.outputs.format(run(m, m.inputs.word("a a a"))) == "x x x"


def test_run_matches_step_loop_on_five_states():
    rng = random.Random(5)
    m = random_mealy(5, 3, 3, rng)
    w = tuple(rng.randrange(3) for _ in range(6))
    assert run(m, w) == step_run(m, w)


def test_run_rejects_foreign_symbol():
    m = cycle2()
    with pytest.raises(AlphabetError):
        m.run((0, 3))


@given(machines(6, 4, 4), st.lists(st.integers(0, 3), max_size=30), st.data())
def test_run_length_prefix_and_step_loop(m, raw, data):
    k = len(m.inputs)
    w = tuple(a % k for a in raw)
    out = m.run(w)
    assert len(out) == len(w)
    assert out == step_run(m, w)
    cut = data.draw(st.integers(0, len(w)))
    assert out[:cut] == m.run(w[:cut])
    assert m.state_after(w) == step_state(m, w)


# -- access sequences and covers ---------------------------------------------

def test_access_initial_is_empty():
    assert access_sequence(cycle2(), 0) == ()


def test_access_in_cycle():
    assert access_sequence(cycle2(), 1) == (0,)


def test_access_unreachable_state():
    m = MealyMachine(Alphabet(["a"]), XY, [[0], [1]], [[0], [0]])
    with pytest.raises(UnreachableStateError):
        access_sequence(m, 1)


def test_access_lengths_match_bfs_on_twenty_states():
    m = random_mealy(20, 3, 2, random.Random(20), minimal=False)
    dist = bfs_distances(m)
    acc = access_sequences(m)
    assert set(acc) == set(dist)
    for q, w in acc.items():
        assert len(w) == dist[q]
        assert m.state_after(w) == q


@given(machines(6, 3, 2))
def test_access_sequences_shortest_lexicographic_and_prefix_closed(m):
    acc = access_sequences(m)
    words = set(acc.values())
    for q, w in acc.items():
        assert all(w[:i] in words for i in range(len(w)))
        # nothing shorter or lexicographically smaller of the same length reaches q
        from oracles import words_upto
        first = next(v for v in words_upto(len(m.inputs), len(w)) if step_state(m, v) == q)
        assert first == w


def test_covers_single_state():
    m = MealyMachine(AB, XY, [[0, 0]], [[0, 1]])
    assert state_cover(m) == [()]
    assert sorted(transition_cover(m)) == [(0,), (1,)]


def test_state_cover_of_cycle():
    assert sorted(state_cover(cycle2())) == [(), (0,)]


@given(machines(8, 3, 2))
def test_state_cover_size_is_reachable_count(m):
    cover = state_cover(m)
    assert len(cover) == len(bfs_distances(m))
    assert len(transition_cover(m)) == len(cover) * len(m.inputs)


# -- discriminators ------------------------------------------------------------

def test_discriminator_none_for_duplicate_rows():
    m = MealyMachine(AB, XY, [[1, 1], [1, 1]], [[0, 1], [0, 1]])
    assert find_discriminator(m, 0, 1) is None


def test_discriminator_length_one():
    m = MealyMachine(AB, XY, [[1, 1], [0, 0]], [[0, 0], [1, 0]])
    assert find_discriminator(m, 0, 1) == (0,)


def test_discriminators_on_ten_state_machine_replay():
    m = random_mealy(10, 3, 2, random.Random(10))
    for p in range(10):
        for q in range(p + 1, 10):
            w = find_discriminator(m, p, q)
            assert w is not None
            assert step_run(m, w, p) != step_run(m, w, q)
            assert w == brute_discriminator(m, p, q, len(w))


@given(machines(4, 3, 3))
def test_discriminator_agrees_with_enumeration(m):
    n = m.n_states
    pairs = pairwise_discriminators(m)
    for p in range(n):
        for q in range(p + 1, n):
            expected = brute_discriminator(m, p, q, n)
            assert find_discriminator(m, p, q) == expected
            assert pairs.get((p, q)) == expected


# -- equivalence ----------------------------------------------------------------

def test_equivalent_to_itself_and_minimized():
    m = random_mealy(12, 3, 2, random.Random(3), minimal=False)
    assert equivalent(m, m) == (True, None)
    assert equivalent(m, minimize(m)) == (True, None)


def test_flipped_output_gives_counterexample():
    m = random_mealy(8, 2, 2, random.Random(8))
    acc = access_sequences(m)
    q, a = 5, 1
    flipped = with_output(m, q, a, 1 - m.lam[q][a])
    same, ce = equivalent(m, flipped)
    assert not same
    assert ce == brute_counterexample(m, flipped, len(acc[q]) + 1)
    assert m.run(ce) != flipped.run(ce)


def test_equivalent_rejects_alphabet_mismatch():
    m = MealyMachine(AB, XY, [[0, 0]], [[0, 0]])
    other = MealyMachine(Alphabet(["a"]), XY, [[0]], [[0]])
    with pytest.raises(AlphabetError):
        equivalent(m, other)


def test_equivalence_compares_output_labels():
    m = MealyMachine(AB, XY, [[0, 0]], [[0, 1]])
    swapped = MealyMachine(AB, Alphabet(["y", "x"]), [[0, 0]], [[1, 0]])
    assert equivalent(m, swapped)[0]


@st.composite
def machine_pairs(draw):
    k = draw(st.integers(1, 3))
    inputs = Alphabet([f"i{a}" for a in range(k)])

    def one():
        n = draw(st.integers(1, 4))
        delta = [[draw(st.integers(0, n - 1)) for _ in range(k)] for _ in range(n)]
        lam = [[draw(st.integers(0, 1)) for _ in range(k)] for _ in range(n)]
        return MealyMachine(inputs, XY, delta, lam)
    return one(), one()


@given(machine_pairs())
def test_equivalent_agrees_with_brute_force(pair):
    m1, m2 = pair
    same, ce = equivalent(m1, m2)
    expected = brute_counterexample(m1, m2, m1.n_states * m2.n_states)
    assert same == (expected is None)
    assert ce == expected


@given(machines(3, 2, 2), machines(3, 2, 2), machines(3, 2, 2))
def test_equivalence_is_an_equivalence_relation(a, b, c):
    a, b, c = (MealyMachine(AB, XY, [[r[0], r[-1]] for r in m.delta],
                            [[r[0] % 2, r[-1] % 2] for r in m.lam]) for m in (a, b, c))
    eq = lambda x, y: equivalent(x, y)[0]
    assert eq(a, a)
    assert eq(a, b) == eq(b, a)
    if eq(a, b) and eq(b, c):
        assert eq(a, c)


@given(machines(7, 3, 3))
def test_minimize_preserves_behaviour(m):
    small = minimize(m)
    assert equivalent(m, small)[0]
    assert small.n_states <= m.n_states
    assert minimize(small).n_states == small.n_states


def test_random_mealy_is_minimal_and_reachable():
    m = random_mealy(30, 4, 3, random.Random(30))
    assert minimize(m).n_states == 30
    assert len(bfs_distances(m)) == 30


def test_alphabet_rules():
    with pytest.raises(AlphabetError):
        Alphabet([])
    with pytest.raises(AlphabetError):
        Alphabet(["a", "a"])
    with pytest.raises(AlphabetError):
        Alphabet(["a/b"])
    with pytest.raises(AlphabetError):
        Alphabet(["a b"])
    assert AB.word("b a") == (1, 0)
    assert AB.format((1, 0)) == "b a"


def test_machine_rejects_incomplete_tables():
    with pytest.raises(ValueError):
        MealyMachine(AB, XY, [[0]], [[0]])
    with pytest.raises(ValueError):
        MealyMachine(AB, XY, [[0, 2]], [[0, 0]])
    with pytest.raises(ValueError):
        MealyMachine(AB, XY, [[0, 0]], [[0, 0]], initial=1)


def test_output_labels_helper():
    m = cycle2()
    assert labels(m, m.run((0, 0))) == ("x", "y")
