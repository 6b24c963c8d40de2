"""Dense statevector backend for desk-scale checks (up to 16 qubits).

Amplitude index ``k`` uses ``np.kron`` ordering: qubit 1 is the most
significant bit. A sampled outcome is returned as an index in the rotated
frame, so bit ``n-1-i`` set means qubit ``i+1`` read ``-1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as sla

from . import kernels
from .errors import DimensionError, ParseError, SolverError
from .observable import Observable
from .pauli import PauliString

MAX_QUBITS = 16
NORM_TOL = 1e-10
DENSE_LIMIT = 10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
_ROTATION = {"X": _H, "Y": _H @ _SDG}


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise DimensionError(f"statevectors support 1..{MAX_QUBITS} qubits, got {self.n}")
        a = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if a.shape != (2 ** self.n,):
            raise DimensionError(f"expected {2 ** self.n} amplitudes, got {a.shape}")
        norm = float(np.vdot(a, a).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DimensionError(f"state is not normalised (|psi|^2 = {norm!r})")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_amplitudes(cls, amps):
        amps = np.asarray(amps, dtype=np.complex128)
        n = int(round(np.log2(amps.size)))
        if 2 ** n != amps.size:
            raise DimensionError(f"{amps.size} amplitudes is not a power of two")
        return cls(n, amps / np.linalg.norm(amps))


@dataclass(frozen=True)
class MeasurementRecord:
    basis: PauliString
    outcomes: tuple


def basis_state(n: int, index: int = 0) -> StateVector:
    a = np.zeros(2 ** n, dtype=complex)
    a[index] = 1.0
    return StateVector(n, a)


def ghz_state(n: int) -> StateVector:
    a = np.zeros(2 ** n, dtype=complex)
    a[0] = a[-1] = 1 / np.sqrt(2)
    return StateVector(n, a)


def random_real_state(n: int, seed: int = 0) -> StateVector:
    """Amplitudes drawn uniformly from [-1, 1], then normalised."""
    rng = np.random.default_rng(seed)
    return StateVector.from_amplitudes(rng.uniform(-1.0, 1.0, 2 ** n))


def random_state(n: int, seed: int = 0) -> StateVector:
    """Haar-random pure state (complex Gaussian amplitudes)."""
    rng = np.random.default_rng(seed)
    return StateVector.from_amplitudes(rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n))


def _check_dims(state: StateVector, n: int):
    if state.n != n:
        raise DimensionError(f"state has {state.n} qubits, operator acts on {n}")


def pauli_expectation(state: StateVector, q: PauliString) -> float:
    _check_dims(state, q.n)
    v = kernels.pauli_expectation(state.amplitudes, q.x, q.z)
    if abs(v.imag) > 1e-10:
        raise ValueError(f"<{q.text}> has imaginary part {v.imag!r}")
    return float(v.real)


def expectation(state: StateVector, obs: Observable) -> float:
    _check_dims(state, obs.n)
    total = sum(t.coeff * pauli_expectation(state, t.pauli) for t in obs.terms)
    return float(total + obs.offset)


def _dense_hamiltonian(obs: Observable) -> np.ndarray:
    dim = 2 ** obs.n
    idx = np.arange(dim, dtype=np.uint64)
    h = np.zeros((dim, dim), dtype=complex)
    for t in obs.terms:
        x, z = np.uint64(t.pauli.x), np.uint64(t.pauli.z)
        sign = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(float)
        phase = 1j ** (bin(t.pauli.x & t.pauli.z).count("1") % 4)
        h[(idx ^ x).astype(np.intp), idx.astype(np.intp)] += t.coeff * phase * sign
    h[np.diag_indices(dim)] += obs.offset
    return h


def apply_observable(obs: Observable, psi: np.ndarray) -> np.ndarray:
    xs, zs = kernels.pauli_masks(obs.paulis)
    return kernels.apply_pauli_sum(psi, xs, zs, obs.coeffs) + obs.offset * psi


def ground_state(obs: Observable, tolerance: float = 1e-8, maxiter: int = 10000):
    """Lowest eigenpair ``(StateVector, energy)``; residual ``||H psi - E psi|| <= tolerance``."""
    if not 1 <= obs.n <= MAX_QUBITS:
        raise DimensionError(f"ground_state supports 1..{MAX_QUBITS} qubits")
    if obs.n <= DENSE_LIMIT:
        w, v = np.linalg.eigh(_dense_hamiltonian(obs))
        energy, psi = float(w[0]), v[:, 0]
    else:
        dim = 2 ** obs.n
        op = sla.LinearOperator((dim, dim), matvec=lambda v: apply_observable(obs, v.ravel()), dtype=complex)
        v0 = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
        try:
            w, v = sla.eigsh(op, k=1, which="SA", tol=tolerance * 1e-2, maxiter=maxiter, v0=v0)
        except sla.ArpackNoConvergence as e:
            raise SolverError("Lanczos iteration did not converge") from e
        energy, psi = float(w[0]), v[:, 0]
    psi = psi / np.linalg.norm(psi)
    k = int(np.argmax(np.abs(psi)))
    psi = psi * (abs(psi[k]) / psi[k])
    residual = float(np.linalg.norm(apply_observable(obs, psi) - energy * psi))
    if residual > tolerance:
        raise SolverError(f"ground state residual {residual:.3e} exceeds {tolerance:.1e}", residual)
    return StateVector(obs.n, psi), energy


def basis_probabilities(state: StateVector, basis: PauliString) -> np.ndarray:
    """Born distribution over outcome indices after rotating into ``basis``."""
    _check_dims(state, basis.n)
    n = state.n
    t = state.amplitudes.reshape((2,) * n)
    for i in range(n):
        u = _ROTATION.get(basis.letter(i))
        if u is not None:
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [i])), 0, i)
    p = np.abs(t.reshape(-1)) ** 2
    return p / p.sum()


def sample_counts(probs: np.ndarray, shots: int, rng) -> tuple:
    """``(outcome_indices, counts)`` for ``shots`` i.i.d. draws, outcomes ascending."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    counts = rng.multinomial(shots, probs)
    nz = np.flatnonzero(counts)
    return nz.astype(np.uint64), counts[nz].astype(np.int64)


def outcome_signs(index: int, n: int) -> tuple:
    return tuple(-1 if (index >> (n - 1 - i)) & 1 else 1 for i in range(n))


def measure(state: StateVector, basis: PauliString, shots: int, seed: int = 0) -> list:
    """``shots`` single-shot records; identity positions are read out in Z."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(2 ** state.n, size=shots, p=basis_probabilities(state, basis))
    return [MeasurementRecord(basis, outcome_signs(int(k), state.n)) for k in idx]


class BornCache:
    """Memoises rotated Born distributions of one state, keyed by basis."""

    def __init__(self, state: StateVector, maxsize: int = 4096):
        self.state = state
        self.maxsize = maxsize
        self._cache = {}

    def probabilities(self, basis: PauliString) -> np.ndarray:
        # identity positions are read out in Z, so I and Z share one distribution
        key = (basis.x, basis.x | basis.z)
        p = self._cache.get(key)
        if p is None:
            p = basis_probabilities(self.state, basis)
            if len(self._cache) >= self.maxsize:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = p
        return p


def save_state(state: StateVector, path):
    lines = [str(state.n)] + [f"{float(a.real)!r} {float(a.imag)!r}" for a in state.amplitudes]
    Path(path).write_text("\n".join(lines) + "\n")


def load_state(path) -> StateVector:
    """Text file: qubit count on the first line, then one ``re im`` pair per amplitude."""
    rows = [r.split("#", 1)[0].strip() for r in Path(path).read_text().splitlines()]
    rows = [r for r in rows if r]
    try:
        n = int(rows[0])
        amps = np.array([complex(float(a), float(b)) for a, b in (r.split() for r in rows[1:])])
    except (IndexError, ValueError) as e:
        raise ParseError(f"{path}: malformed state file ({e})") from None
    if amps.size != 2 ** n:
        raise DimensionError(f"{path}: header says {n} qubits but {amps.size} amplitudes follow")
    return StateVector(n, amps)
