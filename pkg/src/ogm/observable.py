"""Weighted Pauli observables and the ``.ham`` text format.

A ``.ham`` file holds one term per line::

    # comment
    0.25 XXI
    -0.5 IZZ
    1.2  III      <- identity lines feed the scalar offset

Duplicate strings are merged with an exactly rounded sum, so the result does
not depend on line order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError
from .pauli import PauliString, parse_pauli


@dataclass(frozen=True)
class WeightedTerm:
    coeff: float
    pauli: PauliString


def _canonical_key(term: WeightedTerm):
    return (-abs(term.coeff), term.pauli.text)


@dataclass(frozen=True)
class Observable:
    """``offset * I + sum_j coeff_j * pauli_j`` in canonical term order.

    Canonical order is descending ``|coeff|`` with ties broken by the Pauli
    text. Every planner relies on it for reproducible output.
    """

    n: int
    terms: tuple
    offset: float = 0.0
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for t in self.terms:
            if t.pauli.n != self.n:
                raise DimensionError(f"term {t.pauli.text} does not act on {self.n} qubits")
        object.__setattr__(self, "_index", {t.pauli: i for i, t in enumerate(self.terms)})
        if len(self._index) != len(self.terms):
            raise ValueError("duplicate Pauli strings; build through from_terms() to merge")

    @classmethod
    def from_terms(cls, n, pairs, offset=0.0, drop_threshold=0.0):
        """Merge ``(coeff, pauli)`` pairs, pull identities into the offset, sort."""
        buckets = {}
        offsets = [float(offset)]
        for coeff, pauli in pairs:
            if isinstance(pauli, str):
                pauli = parse_pauli(pauli)
            if isinstance(coeff, complex):
                raise ParseError(f"complex coefficient {coeff!r} for {pauli.text}; only real coefficients are supported")
            coeff = float(coeff)
            if not math.isfinite(coeff):
                raise ParseError(f"non-finite coefficient for {pauli.text}")
            if pauli.n != n:
                raise DimensionError(f"term {pauli.text} has {pauli.n} qubits, expected {n}")
            if pauli.is_identity():
                offsets.append(coeff)
            else:
                buckets.setdefault(pauli, []).append(coeff)
        terms = []
        for pauli, cs in buckets.items():
            c = math.fsum(cs)
            if c != 0.0 and abs(c) > drop_threshold:
                terms.append(WeightedTerm(c, pauli))
        terms.sort(key=_canonical_key)
        return cls(n, tuple(terms), math.fsum(offsets))

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    @property
    def paulis(self) -> list:
        return [t.pauli for t in self.terms]

    def index_of(self, pauli: PauliString) -> int:
        return self._index[pauli]

    def __contains__(self, pauli):
        return pauli in self._index

    def l1_norm(self) -> float:
        return l1_norm(self)

    def locality(self) -> int:
        return locality(self)


def l1_norm(obs: Observable) -> float:
    return math.fsum(abs(t.coeff) for t in obs.terms)


def locality(obs: Observable) -> int:
    """Largest support size over the terms (0 when there are none)."""
    return max((t.pauli.weight for t in obs.terms), default=0)


def _parse_coeff(tok, lineno):
    low = tok.lower()
    if "j" in low:
        raise ParseError(f"line {lineno}: complex coefficient {tok!r}; only real coefficients are supported")
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: malformed coefficient {tok!r}") from None


def parse_observable(text: str, drop_threshold: float = 0.0) -> Observable:
    pairs = []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<coeff> <pauli>', got {raw.strip()!r}")
        coeff = _parse_coeff(parts[0], lineno)
        try:
            pauli = parse_pauli(parts[1])
        except ParseError as e:
            raise ParseError(f"line {lineno}: {e}") from None
        if n is None:
            n = pauli.n
        elif pauli.n != n:
            raise DimensionError(f"line {lineno}: {pauli.n}-qubit term in a {n}-qubit observable")
        pairs.append((coeff, pauli))
    if n is None:
        raise ParseError("observable has no terms (qubit count unknown)")
    return Observable.from_terms(n, pairs, drop_threshold=drop_threshold)


def format_observable(obs: Observable) -> str:
    lines = []
    if obs.offset != 0.0 or not obs.terms:
        lines.append(f"{obs.offset!r} {'I' * obs.n}")
    lines.extend(f"{t.coeff!r} {t.pauli.text}" for t in obs.terms)
    return "\n".join(lines) + "\n"


def load_observable(path, drop_threshold: float = 0.0) -> Observable:
    return parse_observable(Path(path).read_text(), drop_threshold=drop_threshold)


def save_observable(obs: Observable, path):
    Path(path).write_text(format_observable(obs))
