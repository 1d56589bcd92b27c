import ast
import os
import subprocess
import sys

import numpy as np
import pytest

from moire_spectra import _kernels
from moire_spectra.models import (
    CoupledChain,
    HoppingParams,
    ReducedChain,
    hopping_eval,
    interlayer_offset,
    reduced_coupling,
    reduced_radius,
)
from moire_spectra.truncation import assemble, build_window, eigenvalues

BACKENDS = [pytest.param(_kernels.pure, id="python")]
if _kernels.compiled is not None:
    BACKENDS.append(pytest.param(_kernels.compiled, id="compiled"))


def _reduced_args(model, ns, tol=1e-12):
    h = model.hopping
    return (np.asarray(ns, dtype=np.int64), model.theta, model.b, h.A, h.B, h.Lz,
            reduced_radius(h, model.theta, tol))


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("b", [0.0, 0.2, -1.7])
def test_reduced_matrix_matches_scalar(backend, b):
    model = ReducedChain(b=b)
    ns = np.arange(-25, 26)
    M = backend.reduced_coupling_matrix(*_reduced_args(model, ns))
    S = np.array([[reduced_coupling(model, int(i), int(j)) for j in ns] for i in ns])
    np.testing.assert_allclose(M, S, rtol=1e-14, atol=1e-17)
    assert np.array_equal(M, M.T)


@pytest.mark.skipif(_kernels.compiled is None, reason="compiled backend not built")
def test_compiled_is_bitwise_scalar():
    model = ReducedChain(b=0.37)
    ns = np.arange(-15, 16)
    M = _kernels.compiled.reduced_coupling_matrix(*_reduced_args(model, ns))
    S = np.array([[reduced_coupling(model, int(i), int(j)) for j in ns] for i in ns])
    assert np.array_equal(M, S)


@pytest.mark.parametrize("backend", BACKENDS)
def test_interlayer_block_matches_scalar(backend):
    model = CoupledChain(b=0.3, hopping=HoppingParams(1.2, 1.5, 0.8))
    h = model.hopping
    n1, n2 = np.arange(-10, 11), np.arange(-14, 15)
    M = backend.interlayer_block(n1, n2, model.theta, model.b, h.A, h.B, h.Lz)
    S = np.array([[hopping_eval(h, interlayer_offset(model.theta, model.b, int(i), int(j))) for j in n2]
                  for i in n1])
    np.testing.assert_allclose(M, S, rtol=1e-14, atol=0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_amplitude(backend):
    model = ReducedChain(hopping=HoppingParams(A=0.0))
    M = backend.reduced_coupling_matrix(*_reduced_args(model, np.arange(-5, 6)))
    assert not M.any()


def test_backend_flag():
    assert _kernels.BACKEND in ("compiled", "python")


def test_env_forces_fallback():
    code = ("from moire_spectra import _kernels; from moire_spectra.models import ReducedChain;"
            "from moire_spectra.truncation import assemble, build_window, eigenvalues;"
            "m = ReducedChain(b=0.2); print(_kernels.BACKEND);"
            "print(repr(eigenvalues(assemble(m, build_window(m, 15))).tolist()))")
    env = dict(os.environ, MOIRE_SPECTRA_PURE_PYTHON="1")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, eigs = res.stdout.splitlines()
    assert backend == "python"
    m = ReducedChain(b=0.2)
    here = eigenvalues(assemble(m, build_window(m, 15)))
    np.testing.assert_allclose(ast.literal_eval(eigs), here, atol=1e-13)
