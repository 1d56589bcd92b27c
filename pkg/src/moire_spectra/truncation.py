"""Finite windows, Dirichlet truncations and their spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .models import (
    DEFAULT_TAIL_TOL,
    AlmostMathieu,
    Anderson,
    CoupledChain,
    OperatorModel,
    ReducedChain,
    SiteIndex,
    disorder_values,
    is_single_chain,
    potential_am,
    reduced_radius,
)


@dataclass(frozen=True)
class LatticeWindow:
    """Sites kept by the truncation, sorted by ``(layer, n)``.

    ``ns1`` and ``ns2`` hold the integer indices of the layer-1 and layer-2
    sites; rows of the truncated matrix list layer 1 first, then layer 2.
    """

    model_kind: str
    L: float
    ns1: np.ndarray
    ns2: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def card1(self) -> int:
        return int(self.ns1.size)

    @property
    def card2(self) -> int:
        return int(self.ns2.size)

    @property
    def total(self) -> int:
        return self.card1 + self.card2

    @property
    def sites(self) -> list[SiteIndex]:
        return [SiteIndex(1, int(n)) for n in self.ns1] + [SiteIndex(2, int(n)) for n in self.ns2]

    def row(self, site: SiteIndex) -> int:
        """Row of ``site`` in the truncated matrix; ``KeyError`` if absent."""
        layer, n = site
        ns = self.ns1 if layer == 1 else self.ns2
        offset = 0 if layer == 1 else self.card1
        if ns.size and ns[0] <= n <= ns[-1]:
            return offset + int(n - ns[0])
        raise KeyError(f"site {tuple(site)} is outside the window")

    def __contains__(self, site) -> bool:
        try:
            self.row(SiteIndex(*site))
        except KeyError:
            return False
        return True


def _arange(lo, hi):
    return np.arange(lo, hi + 1, dtype=np.int64)


def build_window(model: OperatorModel, L: float) -> LatticeWindow:
    """Window ``Lambda_L`` for ``model``.

    Single chains keep ``n in [-L, L]``.  The coupled chain additionally keeps
    the layer-2 sites whose physical position ``(1 - theta) n + b`` lies in
    ``[-L, L]``, which requires ``L > |b|``.
    """
    if not L > 0:
        raise ValueError(f"window size L must be > 0, got {L}")
    m = math.floor(L)
    ns1 = _arange(-m, m)
    if is_single_chain(model):
        return LatticeWindow(model.kind, float(L), ns1)
    if not L > abs(model.b):
        raise ValueError(f"coupled-chain window needs L > |b|; got L={L}, b={model.b}")
    c = 1.0 - model.theta
    ns2 = _arange(-math.floor((L + model.b) / c), math.floor((L - model.b) / c))
    return LatticeWindow(model.kind, float(L), ns1, ns2)


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense symmetric matrix of ``1_Lambda H 1_Lambda`` on a window."""

    window: LatticeWindow
    matrix: np.ndarray

    def index(self, site: SiteIndex) -> int:
        return self.window.row(site)


def _tridiagonal(ns, hop):
    N = ns.size
    M = np.zeros((N, N))
    if N > 1:
        nn = np.flatnonzero(np.diff(ns) == 1)
        M[nn, nn + 1] = hop
        M[nn + 1, nn] = hop
    return M


def _single_chain_matrix(model, ns, tail_tol):
    if isinstance(model, AlmostMathieu):
        M = _tridiagonal(ns, -1.0)
        diag = [potential_am(model.alpha, model.lam, model.phase, int(n)) for n in ns]
        M[np.diag_indices(ns.size)] = diag
        return M
    if isinstance(model, Anderson):
        M = _tridiagonal(ns, -1.0)
        M[np.diag_indices(ns.size)] = disorder_values(model.law, ns)
        return M
    if isinstance(model, ReducedChain):
        hop = model.hopping
        radius = reduced_radius(hop, model.theta, tail_tol)
        C = _kernels.reduced_coupling_matrix(
            np.ascontiguousarray(ns, dtype=np.int64), model.theta, model.b,
            hop.A, hop.B, hop.Lz, radius)
        return _tridiagonal(ns, 1.0) + C
    raise TypeError(f"unsupported model {type(model).__name__}")


def _coupled_matrix(model, ns1, ns2):
    hop = model.hopping
    N1, N2 = ns1.size, ns2.size
    M = np.zeros((N1 + N2, N1 + N2))
    M[:N1, :N1] = _tridiagonal(ns1, 1.0)
    M[N1:, N1:] = _tridiagonal(ns2, 1.0)
    block = _kernels.interlayer_block(
        np.ascontiguousarray(ns1, dtype=np.int64), np.ascontiguousarray(ns2, dtype=np.int64),
        model.theta, model.b, hop.A, hop.B, hop.Lz)
    M[:N1, N1:] = block
    M[N1:, :N1] = block.T
    return M


def _matrix_on(model, ns1, ns2, tail_tol):
    if isinstance(model, CoupledChain):
        return _coupled_matrix(model, ns1, ns2)
    return _single_chain_matrix(model, ns1, tail_tol)


def assemble(model: OperatorModel, window: LatticeWindow,
             tail_tol: float = DEFAULT_TAIL_TOL) -> TruncatedOperator:
    """Assemble the truncated Hamiltonian on ``window`` (Dirichlet cutoff)."""
    if window.model_kind != model.kind:
        raise ValueError(f"window was built for {window.model_kind}, not {model.kind}")
    M = _matrix_on(model, window.ns1, window.ns2, tail_tol)
    M.setflags(write=False)
    return TruncatedOperator(window, M)


def eigenvalues(op: TruncatedOperator) -> np.ndarray:
    """All eigenvalues of the truncated matrix, ascending."""
    if not np.all(np.isfinite(op.matrix)):
        raise ValueError("truncated matrix has non-finite entries")
    return np.linalg.eigvalsh(op.matrix)


def required_pad(model: OperatorModel, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Smallest exterior padding for which dropped couplings are below ``tail_tol``.

    For the coupled chain the per-row sum of couplings to sites farther than
    ``P`` is at most ``2 A exp(-B P) / (1 - exp(-B (1 - theta)))``.  The
    reduced chain couplings vanish identically beyond twice the cutoff radius.
    """
    if not tail_tol > 0.0:
        raise ValueError(f"tail_tol must be > 0, got {tail_tol}")
    if isinstance(model, CoupledChain):
        hop = model.hopping
        if hop.A == 0.0:
            return 1.0
        c = 1.0 - model.theta
        pref = 2.0 * hop.A / (1.0 - math.exp(-hop.B * c))
        return max(1.0, math.log(pref / tail_tol) / hop.B)
    if isinstance(model, ReducedChain):
        return math.floor(2.0 * reduced_radius(model.hopping, model.theta, tail_tol)) + 1.0
    return 1.0


def truncation_trace_defect(model: OperatorModel, window: LatticeWindow,
                            outer_pad: float | None = None,
                            tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Trace norm of the coupling block between the window and its exterior.

    This is ``tr|H_L - 1_Lambda H|``; the exterior is cut at ``outer_pad``
    beyond the window edge, which changes the result by at most
    ``tail_tol * total``.  Divide by ``window.total`` for ``epsilon(L)``.
    """
    need = required_pad(model, tail_tol)
    if outer_pad is None:
        outer_pad = need
    elif outer_pad < need:
        raise ValueError(f"outer_pad={outer_pad} is below the analytic requirement {need:.6g}")
    outer = build_window(model, window.L + math.ceil(outer_pad))
    M = _matrix_on(model, outer.ns1, outer.ns2, tail_tol)
    inside = np.array([outer.row(s) for s in window.sites], dtype=np.int64)
    mask = np.ones(outer.total, dtype=bool)
    mask[inside] = False
    block = M[np.ix_(inside, np.flatnonzero(mask))]
    if block.size == 0:
        return 0.0
    return float(np.linalg.svd(block, compute_uv=False).sum())


def norm_bound(model: OperatorModel, window: LatticeWindow,
               tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """A priori bound on the spectral radius of the truncation (row-sum style)."""
    if isinstance(model, AlmostMathieu):
        return 2.0 + model.lam
    if isinstance(model, Anderson):
        return 2.0 + float(np.max(np.abs(disorder_values(model.law, window.ns1))))
    op = assemble(model, window, tail_tol)
    return float(np.max(np.abs(op.matrix).sum(axis=1)))
