import pytest
from hypothesis import given, strategies as st

from learnfuzz.fsm import Alphabet
from learnfuzz.fuzzer.encoding import ByteEncoding, sanitize

DIGITS = Alphabet(list("12345"))


def test_all_invalid_gives_empty_word():
    enc = ByteEncoding.for_alphabet(DIGITS)
    assert sanitize(b"\x00abc\xff", enc) == ()


def test_ascii_digits_map_directly():
    enc = ByteEncoding.for_alphabet(DIGITS)
    assert sanitize(b"13", enc) == (0, 2)
    assert sanitize(b"x1y3z", enc) == (0, 2)


def test_multichar_labels_need_table():
    alpha = Alphabet(["coin", "vend"])
    with pytest.raises(ValueError, match="table"):
        ByteEncoding.for_alphabet(alpha)
    enc = ByteEncoding.parse_table(alpha, "coin:0x10,vend:32")
    assert sanitize(b"\x10 \x10", enc) == (0, 1, 0)


def test_table_must_be_injective():
    with pytest.raises(ValueError):
        ByteEncoding(Alphabet(["a", "b"]), {"a": 1, "b": 1})


def test_table_must_cover_alphabet():
    with pytest.raises(ValueError):
        ByteEncoding(Alphabet(["a", "b"]), {"a": 1})


def test_by_index():
    enc = ByteEncoding.by_index(Alphabet(["p", "q", "r"]))
    assert sanitize(bytes([2, 9, 0]), enc) == (2, 0)
    assert enc.valid_bytes == b"\x00\x01\x02"


@given(st.binary(max_size=64))
def test_sanitize_idempotent_under_reencoding(trace):
    enc = ByteEncoding.for_alphabet(DIGITS)
    once = enc.encode(sanitize(trace, enc))
    assert enc.encode(sanitize(once, enc)) == once


@given(st.lists(st.integers(0, 4), max_size=30))
def test_encode_then_sanitize_roundtrip(word):
    enc = ByteEncoding.for_alphabet(DIGITS)
    assert sanitize(enc.encode(word), enc) == tuple(word)
