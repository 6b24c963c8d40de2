"""Measurement outcomes aggregated per basis, and their JSON form.

An outcome is an ``n``-bit index in the rotated frame: bit ``n-1-i`` set
means qubit ``i+1`` read ``-1``. In JSON it is written as a sign string,
``"+-+"`` for ``(+1, -1, +1)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError
from .pauli import PauliString, parse_pauli
from .simulator import BornCache, StateVector, sample_counts

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class BasisCounts:
    """Histogram of outcomes for one basis."""

    basis: PauliString
    outcomes: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        o = np.ascontiguousarray(self.outcomes, dtype=np.uint64)
        c = np.ascontiguousarray(self.counts, dtype=np.int64)
        if o.shape != c.shape or o.ndim != 1:
            raise ValueError("outcomes and counts must be 1-D arrays of equal length")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if o.size and int(o.max()) >> self.basis.n:
            raise DimensionError(f"outcome index does not fit in {self.basis.n} qubits")
        object.__setattr__(self, "outcomes", o)
        object.__setattr__(self, "counts", c)

    @property
    def shots(self) -> int:
        return int(self.counts.sum())


def encode_outcome(index: int, n: int) -> str:
    return "".join("-" if (index >> (n - 1 - i)) & 1 else "+" for i in range(n))


def decode_outcome(text: str) -> int:
    index = 0
    for ch in text:
        if ch not in "+-":
            raise ParseError(f"outcome {text!r} must consist of '+' and '-'")
        index = (index << 1) | (ch == "-")
    return index


def from_measurements(records) -> list:
    """Aggregate single-shot ``MeasurementRecord`` objects into per-basis histograms."""
    tallies = {}
    for r in records:
        index = 0
        for v in r.outcomes:
            if v not in (1, -1):
                raise ValueError(f"outcome values must be +1 or -1, got {v!r}")
            index = (index << 1) | (v == -1)
        hist = tallies.setdefault(r.basis, {})
        hist[index] = hist.get(index, 0) + 1
    out = []
    for basis, hist in tallies.items():
        keys = sorted(hist)
        out.append(BasisCounts(basis, np.array(keys, dtype=np.uint64), np.array([hist[k] for k in keys])))
    return out


def simulate_list(state: StateVector, mlist, seed: int = 0, cache: BornCache = None) -> list:
    """Sample every entry of a measurement list on ``state`` from one seeded stream."""
    if mlist.n != state.n:
        raise DimensionError(f"list acts on {mlist.n} qubits, state has {state.n}")
    cache = cache if cache is not None and cache.state is state else BornCache(state)
    rng = np.random.default_rng(seed)
    out = []
    for basis, shots in mlist.entries:
        o, c = sample_counts(cache.probabilities(basis), shots, rng)
        out.append(BasisCounts(basis, o, c))
    return out


def records_to_dict(records, n: int) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "n": n,
        "records": [
            {
                "basis": r.basis.text,
                "shots": r.shots,
                "counts": {encode_outcome(int(o), n): int(c) for o, c in zip(r.outcomes, r.counts)},
            }
            for r in records
        ],
    }


def records_from_dict(d) -> list:
    try:
        if d.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"unsupported records format_version {d.get('format_version')!r}")
        n = int(d["n"])
        out = []
        for r in d["records"]:
            basis = parse_pauli(r["basis"])
            if basis.n != n:
                raise DimensionError(f"record basis {basis.text} does not act on {n} qubits")
            items = sorted((decode_outcome(k), int(v)) for k, v in r["counts"].items())
            if any(len(k) != n for k in r["counts"]):
                raise DimensionError(f"outcome length differs from {n} in record {basis.text}")
            out.append(BasisCounts(basis, np.array([k for k, _ in items], dtype=np.uint64),
                                   np.array([v for _, v in items], dtype=np.int64)))
            if "shots" in r and int(r["shots"]) != out[-1].shots:
                raise ParseError(f"record {basis.text}: shots {r['shots']} != sum of counts {out[-1].shots}")
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed records document: {e}") from None
    return out


def save_records(records, n: int, path):
    Path(path).write_text(json.dumps(records_to_dict(records, n), indent=2) + "\n")


def load_records(path) -> list:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    return records_from_dict(data)
