"""Mapping between raw fuzzer bytes and input symbols."""
from __future__ import annotations

from learnfuzz.fsm import Alphabet


class ByteEncoding:
    """Byte <-> symbol table; bytes outside the table are dropped by :meth:`sanitize`.

    Symbols are returned as a ``bytes`` object holding symbol ids, which the
    execution kernels accept directly.
    """

    def __init__(self, alphabet: Alphabet, table: dict[str, int]):
        if len(alphabet) > 256:
            raise ValueError("byte encoding needs at most 256 symbols")
        if set(table) != set(alphabet.labels):
            raise ValueError("encoding table must cover exactly the alphabet")
        if len(set(table.values())) != len(table) or not all(0 <= b < 256 for b in table.values()):
            raise ValueError("encoding bytes must be distinct values in 0..255")
        self.alphabet = alphabet
        self.symbol_byte = bytes(table[lab] for lab in alphabet.labels)
        trans = bytearray(256)
        for sym, b in enumerate(self.symbol_byte):
            trans[b] = sym
        self._translate = bytes(trans)
        self._delete = bytes(b for b in range(256) if b not in set(self.symbol_byte))

    @classmethod
    def for_alphabet(cls, alphabet: Alphabet, table: dict[str, int] | None = None):
        """Single-ASCII-character labels encode as themselves, otherwise ``table`` is required."""
        if table is None:
            if not all(len(lab) == 1 and ord(lab) < 128 for lab in alphabet.labels):
                raise ValueError("labels are not single ASCII characters; "
                                 "an explicit byte table is required")
            table = {lab: ord(lab) for lab in alphabet.labels}
        return cls(alphabet, table)

    @classmethod
    def by_index(cls, alphabet: Alphabet):
        return cls(alphabet, {lab: i for i, lab in enumerate(alphabet.labels)})

    @classmethod
    def parse_table(cls, alphabet: Alphabet, text: str):
        """``label:byte`` pairs separated by commas, e.g. ``A:65,B:66``."""
        table = {}
        for item in text.split(","):
            lab, _, val = item.strip().rpartition(":")
            table[lab] = int(val, 0)
        return cls(alphabet, table)

    @property
    def valid_bytes(self) -> bytes:
        return bytes(sorted(self.symbol_byte))

    def sanitize(self, trace: bytes) -> bytes:
        return bytes(trace).translate(self._translate, self._delete)

    def encode(self, word) -> bytes:
        return bytes(self.symbol_byte[s] for s in word)


def sanitize(trace: bytes, encoding: ByteEncoding) -> tuple:
    """Input word (tuple of symbol ids) denoted by ``trace``; invalid bytes vanish."""
    return tuple(encoding.sanitize(trace))
