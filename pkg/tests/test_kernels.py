import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import pauli_matrix
from ogm import kernels
from ogm.errors import DimensionError
from ogm.pauli import PauliString, compatible, covers, parse_pauli

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def impl(request):
    return kernels.get_backend(request.param)


def masks(rng, count, n):
    return (rng.integers(0, 2 ** n, size=count, dtype=np.uint64),
            rng.integers(0, 2 ** n, size=count, dtype=np.uint64))


def test_compiled_backend_is_active():
    # the editable install builds the extension; the fallback is still exercised below
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_cover_matrix_matches_definition(seed):
    rng = np.random.default_rng(seed)
    n = 4
    tx, tz = masks(rng, 9, n)
    bx, bz = masks(rng, 7, n)
    expect = np.array([[covers(PauliString(n, int(a), int(b)), PauliString(n, int(c), int(d)))
                        for c, d in zip(bx, bz)] for a, b in zip(tx, tz)])
    for name in BACKENDS:
        got = kernels.get_backend(name).cover_matrix(tx, tz, bx, bz).astype(bool)
        assert np.array_equal(got, expect)


def test_compatibility_matrix():
    ps = [parse_pauli(t) for t in ["XIZ", "IXZ", "ZII", "YYY"]]
    expect = np.array([[compatible(a, b) for b in ps] for a in ps])
    assert np.array_equal(kernels.compatibility_matrix(ps), expect)


def test_parity_sums(impl):
    rng = np.random.default_rng(0)
    outcomes = rng.integers(0, 64, size=500, dtype=np.uint64)
    counts = rng.integers(0, 9, size=500, dtype=np.int64)
    supps = np.array([0, 1, 5, 63, 40], dtype=np.uint64)
    expect = [sum(int(c) * (-1) ** bin(int(o) & int(s)).count("1") for o, c in zip(outcomes, counts)) for s in supps]
    assert impl.parity_sums(outcomes, counts, supps) == pytest.approx(expect)


def test_pauli_expectation_and_matvec(impl):
    rng = np.random.default_rng(1)
    n = 4
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    psi /= np.linalg.norm(psi)
    texts = ["XYZI", "YYII", "ZIZX", "IIIY"]
    ps = [parse_pauli(t) for t in texts]
    coeffs = rng.standard_normal(len(ps))
    for p, t in zip(ps, texts):
        exact = np.vdot(psi, pauli_matrix(t) @ psi)
        assert impl.pauli_expectation(psi, np.uint64(p.x), np.uint64(p.z)) == pytest.approx(exact, abs=1e-12)
    xs, zs = kernels.pauli_masks(ps)
    dense = sum(c * pauli_matrix(t) for c, t in zip(coeffs, texts))
    assert np.allclose(impl.apply_pauli_sum(psi, xs, zs, coeffs), dense @ psi, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_on_large_inputs():
    rng = np.random.default_rng(2)
    fast, slow = kernels.get_backend("cython"), kernels.get_backend("python")
    tx, tz = masks(rng, 200, 40)
    bx, bz = masks(rng, 150, 40)
    assert np.array_equal(fast.cover_matrix(tx, tz, bx, bz), slow.cover_matrix(tx, tz, bx, bz))
    o = rng.integers(0, 2 ** 40, size=3000, dtype=np.uint64)
    c = rng.integers(1, 5, size=3000, dtype=np.int64)
    s = rng.integers(0, 2 ** 40, size=60, dtype=np.uint64)
    assert np.array_equal(fast.parity_sums(o, c, s), slow.parity_sums(o, c, s))


def test_mask_width_limit():
    with pytest.raises(DimensionError):
        kernels.pauli_masks([parse_pauli("X" * 65)])


def test_pure_python_switch():
    env = dict(os.environ, OGM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ogm.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
