"""Pauli strings and the qubit-wise compatibility algebra.

A :class:`PauliString` stores its letters as two bit masks ``x`` and ``z``
(``I=(0,0)``, ``X=(1,0)``, ``Z=(0,1)``, ``Y=(1,1)``). Position ``i`` of the
text form (qubit ``i+1``, leftmost first) lives in bit ``n-1-i``, which is the
same bit that qubit carries in a computational-basis index of a statevector
built with ``np.kron`` ordering. A measured outcome index can therefore be
and-ed directly with a support mask to get the parity of a term.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .errors import DimensionError, IncompatibleError, ParseError

LETTERS = "IXYZ"
_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}


@dataclass(frozen=True)
class PauliString:
    """Immutable n-qubit tensor product of single-qubit Paulis."""

    n: int
    x: int
    z: int

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("a Pauli string needs at least one qubit")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise DimensionError(f"masks do not fit in {self.n} qubits")

    @classmethod
    def from_text(cls, text: str) -> "PauliString":
        return parse_pauli(text)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0)

    @cached_property
    def text(self) -> str:
        return "".join(self.letter(i) for i in range(self.n))

    @property
    def support_mask(self) -> int:
        return self.x | self.z

    def letter(self, i: int) -> str:
        """Letter at 0-based position ``i`` (qubit ``i+1``)."""
        bit = self.n - 1 - i
        return _FROM_XZ[((self.x >> bit) & 1, (self.z >> bit) & 1)]

    @property
    def weight(self) -> int:
        return bin(self.support_mask).count("1")

    def is_identity(self) -> bool:
        return self.support_mask == 0

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"PauliString({self.text!r})"

    def __len__(self):
        return self.n


def parse_pauli(text: str) -> PauliString:
    """Parse ``"XIZY"``-style text. Errors report 1-based positions."""
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    if len(text) == 0:
        raise ParseError("empty Pauli string (zero qubits are not allowed)")
    n = len(text)
    x = z = 0
    for i, c in enumerate(text):
        try:
            bx, bz = _XZ[c]
        except KeyError:
            raise ParseError(f"invalid Pauli letter {c!r} at position {i + 1}") from None
        bit = n - 1 - i
        x |= bx << bit
        z |= bz << bit
    return PauliString(n, x, z)


def format_pauli(p: PauliString) -> str:
    return p.text


def _check(q: PauliString, r: PauliString):
    if q.n != r.n:
        raise DimensionError(f"qubit count mismatch: {q.n} vs {r.n}")


def covers(q: PauliString, r: PauliString) -> bool:
    """True when measuring basis ``r`` also measures ``q`` (``q_i`` is ``r_i`` or I)."""
    _check(q, r)
    s = q.support_mask
    return ((q.x ^ r.x) | (q.z ^ r.z)) & s == 0


def compatible(q: PauliString, r: PauliString) -> bool:
    """Qubit-wise compatibility: letters agree wherever both are non-identity."""
    _check(q, r)
    both = q.support_mask & r.support_mask
    return ((q.x ^ r.x) | (q.z ^ r.z)) & both == 0


def join(q: PauliString, r: PauliString) -> PauliString:
    """Least common covering basis of two compatible strings."""
    if not compatible(q, r):
        raise IncompatibleError(f"{q.text} and {r.text} are not compatible")
    return PauliString(q.n, q.x | r.x, q.z | r.z)


def support(q: PauliString) -> frozenset:
    """1-based qubit positions carrying a non-identity letter."""
    return frozenset(i + 1 for i in range(q.n) if q.support_mask >> (q.n - 1 - i) & 1)


def product_on_common_basis(q: PauliString, r: PauliString) -> PauliString:
    """Product ``q*r`` for strings that agree on their overlapping support.

    Such products carry phase +1 and equal the symmetric-difference string.
    """
    if not compatible(q, r):
        raise IncompatibleError(f"{q.text}*{r.text} carries a non-trivial phase")
    return PauliString(q.n, q.x ^ r.x, q.z ^ r.z)
