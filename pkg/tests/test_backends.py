"""The compiled kernels and the pure-Python fallback must agree exactly."""
import random

import pytest
from hypothesis import given, strategies as st

from learnfuzz import _kernels, _pure
from learnfuzz.fsm import random_mealy

_speedups = pytest.importorskip("learnfuzz._speedups")


def flat(m):
    return [x for r in m.delta for x in r], [x for r in m.lam for x in r]


def kernels(m, locs=None, errs=None):
    d, lam = flat(m)
    k = len(m.inputs)
    return [impl.MealyKernel(d, lam, m.n_states, k, m.initial, locs, errs)
            for impl in (_pure, _speedups)]


def test_selected_backend_reported():
    assert _kernels.BACKEND in ("pure", "compiled")


@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 10 ** 6),
       st.lists(st.integers(0, 3), max_size=40), st.data())
def test_mealy_kernels_agree(n, k, seed, raw, data):
    rng = random.Random(seed)
    m = random_mealy(n, k, 3, rng, minimal=False)
    w = tuple(a % k for a in raw)
    locs = [rng.randrange(65536) for _ in range(n * k)]
    errs = [0, 0, data.draw(st.sampled_from([0, 5]))]
    pure, fast = kernels(m, locs, errs)
    state = data.draw(st.integers(-1, n - 1))
    assert pure.run(w, state) == fast.run(w, state)
    assert pure.final_state(w, state) == fast.final_state(w, state)
    b1, b2 = bytearray(65536), bytearray(65536)
    r1 = pure.execute(w, b1, 7)
    r2 = fast.execute(bytes(w), b2, 7)
    assert (tuple(r1[0]), r1[1], r1[2]) == (tuple(r2[0]), r2[1], r2[2])
    assert b1 == b2


def test_mealy_kernels_reject_bad_symbols():
    m = random_mealy(2, 2, 2, random.Random(0))
    for kern in kernels(m):
        with pytest.raises((ValueError, OverflowError)):
            kern.run((0, 2))


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_product_bfs_agrees(n1, n2, k, seed):
    rng = random.Random(seed)
    m1 = random_mealy(n1, k, 2, rng, minimal=False)
    m2 = random_mealy(n2, k, 2, rng, minimal=False)
    d1, l1 = flat(m1)
    d2, l2 = flat(m2)
    args = (d1, l1, n1, 0, d2, l2, n2, 0, k, [0, 1])
    assert _pure.product_bfs(*args) == _speedups.product_bfs(*args)


@given(st.lists(st.integers(0, 65535), max_size=200), st.integers(0, 32767))
def test_record_edges_agree(locs, prev):
    a, b = bytearray(65536), bytearray(65536)
    assert _pure.record_edges(a, prev, locs) == _speedups.record_edges(b, prev, locs)
    assert a == b


@given(st.lists(st.dictionaries(st.integers(0, 300), st.integers(0, 255), max_size=20),
                max_size=6))
def test_has_new_bits_agree(maps):
    v1, v2 = bytearray(65536), bytearray(65536)
    for counts in maps:
        bm = bytearray(65536)
        for i, c in counts.items():
            bm[i] = c
        assert _pure.has_new_bits(bytes(bm), v1) == _speedups.has_new_bits(bytes(bm), v2)
        assert v1 == v2


def test_bucket_masks_agree():
    assert bytes(_pure.BUCKET_MASK) == bytes(_speedups.BUCKET_MASK)
