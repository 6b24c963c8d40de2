"""Pure numpy fallback for the compiled kernels in ``_ckernels.pyx``."""
import numpy as np

_CHUNK = 1 << 20


def _parity(a):
    return np.bitwise_count(a) & 1


def cover_matrix(tx, tz, bx, bz):
    supp = (tx | tz)[:, None]
    diff = (tx[:, None] ^ bx[None, :]) | (tz[:, None] ^ bz[None, :])
    return ((diff & supp) == 0).astype(np.uint8)


def parity_sums(outcomes, counts, supps):
    m = supps.shape[0]
    out = np.zeros(m, dtype=np.float64)
    if outcomes.size == 0 or m == 0:
        return out
    step = max(1, _CHUNK // m)
    for lo in range(0, outcomes.shape[0], step):
        o = outcomes[lo:lo + step, None]
        sign = 1 - 2 * _parity(o & supps[None, :]).astype(np.int64)
        out += counts[lo:lo + step] @ sign
    return out


def _phase(x, z):
    return 1j ** (int(np.bitwise_count(np.uint64(x) & np.uint64(z))) % 4)


def pauli_expectation(psi, x, z):
    idx = np.arange(psi.shape[0], dtype=np.uint64)
    sign = 1 - 2 * _parity(idx & np.uint64(z)).astype(np.float64)
    return complex(np.vdot(psi[idx ^ np.uint64(x)], sign * psi) * _phase(x, z))


def apply_pauli_sum(psi, xs, zs, coeffs):
    idx = np.arange(psi.shape[0], dtype=np.uint64)
    out = np.zeros_like(psi, dtype=np.complex128)
    for x, z, c in zip(xs, zs, coeffs):
        sign = 1 - 2 * _parity(idx & z).astype(np.float64)
        out[idx ^ x] += (c * _phase(x, z)) * sign * psi
    return out
