"""Hot-loop kernels, compiled when available.

The Cython build (``ogm._ckernels``) is used when it imports; otherwise the
numpy implementation in ``ogm._pykernels`` takes over. Set
``OGM_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the active one.

All kernels take Pauli masks as ``uint64`` arrays, so they cover up to 64
qubits; :func:`pauli_masks` enforces that limit.
"""
import os

import numpy as np

from . import _pykernels
from .errors import DimensionError

MAX_KERNEL_QUBITS = 64

_impl = _pykernels
BACKEND = "python"
if os.environ.get("OGM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def get_backend(name=None):
    """Return the kernel module for ``name`` ('cython' or 'python'), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def pauli_masks(paulis):
    """``(x, z)`` uint64 mask arrays for a sequence of PauliStrings."""
    paulis = list(paulis)
    if paulis and paulis[0].n > MAX_KERNEL_QUBITS:
        raise DimensionError(f"kernels support at most {MAX_KERNEL_QUBITS} qubits")
    x = np.fromiter((p.x for p in paulis), dtype=np.uint64, count=len(paulis))
    z = np.fromiter((p.z for p in paulis), dtype=np.uint64, count=len(paulis))
    return x, z


def cover_matrix(terms, bases):
    """``C[j, k] = 1`` iff term ``j`` is covered by basis ``k``."""
    tx, tz = pauli_masks(terms)
    bx, bz = pauli_masks(bases)
    return _impl.cover_matrix(tx, tz, bx, bz).astype(bool)


def parity_sums(outcomes, counts, supps):
    """Per-support sum of ``count * (-1)^parity(outcome & supp)``."""
    return _impl.parity_sums(
        np.ascontiguousarray(outcomes, dtype=np.uint64),
        np.ascontiguousarray(counts, dtype=np.int64),
        np.ascontiguousarray(supps, dtype=np.uint64),
    )


def pauli_expectation(psi, x, z):
    return _impl.pauli_expectation(np.ascontiguousarray(psi, dtype=np.complex128), np.uint64(x), np.uint64(z))


def apply_pauli_sum(psi, xs, zs, coeffs):
    return _impl.apply_pauli_sum(
        np.ascontiguousarray(psi, dtype=np.complex128),
        np.ascontiguousarray(xs, dtype=np.uint64),
        np.ascontiguousarray(zs, dtype=np.uint64),
        np.ascontiguousarray(coeffs, dtype=np.float64),
    )


def compatibility_matrix(paulis):
    """Symmetric boolean matrix of qubit-wise compatibility (numpy, no kernel)."""
    x, z = pauli_masks(paulis)
    s = x | z
    diff = (x[:, None] ^ x[None, :]) | (z[:, None] ^ z[None, :])
    return (diff & s[:, None] & s[None, :]) == 0
