"""Density-of-states measures: empirical, local, smoothed and limiting."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .models import (
    DEFAULT_TAIL_TOL,
    CoupledChain,
    HoppingParams,
    ReducedChain,
    SiteIndex,
)
from .truncation import TruncatedOperator, assemble, build_window, eigenvalues

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class EmpiricalDOS:
    """Atomic measure with atoms at ``energies`` (ascending) and masses ``weights``."""

    energies: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.energies.shape != self.weights.shape:
            raise ValueError("energies and weights must have the same shape")
        if np.any(self.weights < 0):
            raise ValueError("atom weights must be nonnegative")
        if self.energies.size > 1 and np.any(np.diff(self.energies) < 0):
            raise ValueError("atoms must be sorted by energy")

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return int(self.energies.size)

    def cdf(self, x) -> np.ndarray:
        """Right-continuous distribution function at the points ``x``."""
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cum[np.searchsorted(self.energies, x, side="right")]

    def reflected(self) -> "EmpiricalDOS":
        """Image of the measure under ``E -> -E``."""
        return EmpiricalDOS(-self.energies[::-1], self.weights[::-1].copy())


@dataclass(frozen=True)
class DOSCurve:
    grid: np.ndarray
    density: np.ndarray
    kernel: str
    bandwidth: float

    def mass(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


@dataclass(frozen=True)
class LimitingDOSEstimate:
    """Quadrature estimate of a limiting DOS measure.

    ``nodes`` maps each averaged family (``"b"`` for the reduced chain,
    ``"b1"``/``"b2"`` for the coupled chain) to its quadrature shifts.
    """

    mixture: EmpiricalDOS
    nodes: dict
    layer_weights: tuple[float, float] | None = None

    def sidecar(self) -> dict:
        out = {"nodes": {k: [float(b) for b in v] for k, v in self.nodes.items()},
               "total_weight": self.mixture.total_weight}
        if self.layer_weights is not None:
            out["layer_weights"] = {"w1": self.layer_weights[0], "w2": self.layer_weights[1]}
        return out


def empirical_dos(eigs, cardinality: int) -> EmpiricalDOS:
    """Normalised counting measure of the eigenvalues of a truncation."""
    eigs = np.sort(np.asarray(eigs, dtype=float))
    if eigs.size != cardinality:
        raise ValueError(f"expected {cardinality} eigenvalues, got {eigs.size}")
    return EmpiricalDOS(eigs, np.full(eigs.size, 1.0 / cardinality))


def integrate(dos: EmpiricalDOS, g):
    """Integral of ``g`` against the measure; ``g`` is applied to the atom array."""
    return np.sum(dos.weights * np.asarray(g(dos.energies)))


def mixture(measures, weights=None) -> EmpiricalDOS:
    """Convex combination of atomic measures (equal weights by default)."""
    measures = list(measures)
    if weights is None:
        weights = [1.0 / len(measures)] * len(measures)
    E = np.concatenate([m.energies for m in measures])
    W = np.concatenate([w * m.weights for m, w in zip(measures, weights)])
    order = np.argsort(E, kind="stable")
    return EmpiricalDOS(E[order], W[order])


def resolvent_trace_avg(op: TruncatedOperator, z: complex) -> complex:
    """Normalised trace of the resolvent ``(H_L - z)^-1`` via the spectrum."""
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("z must be nonreal")
    E = eigenvalues(op)
    return complex(np.mean(1.0 / (E - z)))


def _kernel(kind, x, eta):
    if kind == "gaussian":
        return np.exp(-0.5 * (x / eta) ** 2) / (eta * math.sqrt(2.0 * math.pi))
    if kind == "lorentzian":
        return eta / (math.pi * (x * x + eta * eta))
    raise ValueError(f"unknown kernel {kind!r}")


def smooth(dos: EmpiricalDOS, kernel: str = "gaussian", bandwidth: float = 0.05,
           grid=None) -> DOSCurve:
    """Broaden every atom with a normalised kernel of width ``bandwidth``."""
    if not bandwidth > 0.0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    if grid is None:
        lo, hi = dos.energies[0] - 5 * bandwidth, dos.energies[-1] + 5 * bandwidth
        grid = np.linspace(lo, hi, 1001)
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    density = np.empty(grid.size)
    chunk = max(1, 2_000_000 // max(1, dos.energies.size))
    for s in range(0, grid.size, chunk):
        g = grid[s:s + chunk]
        density[s:s + chunk] = _kernel(kernel, g[:, None] - dos.energies[None, :], bandwidth) @ dos.weights
    return DOSCurve(grid, density, kernel, float(bandwidth))


def ks_distance(a: EmpiricalDOS, b: EmpiricalDOS) -> float:
    """Sup distance between the distribution functions of two probability measures."""
    for name, m in (("a", a), ("b", b)):
        if abs(m.total_weight - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"measure {name} is not normalised (total weight {m.total_weight})")
    x = np.concatenate([a.energies, b.energies])
    return float(np.max(np.abs(a.cdf(x) - b.cdf(x)), initial=0.0))


def ks_to_cdf(dos: EmpiricalDOS, cdf) -> float:
    """Sup distance between an atomic measure and a continuous distribution function."""
    F = np.asarray(cdf(dos.energies), dtype=float)
    right = np.cumsum(dos.weights)
    left = right - dos.weights
    return float(max(np.max(np.abs(right - F)), np.max(np.abs(left - F))))


def free_chain_cdf(sign: float = 1.0):
    """Distribution function of the infinite free chain ``sign * 2 cos k``, ``k ~ U(0, pi)``."""
    def F(E):
        x = np.clip(sign * np.asarray(E, dtype=float) / 2.0, -1.0, 1.0)
        return 1.0 - np.arccos(x) / np.pi if sign > 0 else np.arccos(x) / np.pi
    return F


def local_dos(op: TruncatedOperator, site: SiteIndex) -> EmpiricalDOS:
    """Spectral measure of ``delta_site``: atoms ``(E_j, |v_j(site)|^2)``."""
    try:
        row = op.index(SiteIndex(*site))
    except KeyError:
        raise ValueError(f"site {tuple(site)} is outside the window") from None
    E, V = decomposition(op)
    return EmpiricalDOS(E, V[row] ** 2)


def site_averaged_local_dos(op: TruncatedOperator) -> EmpiricalDOS:
    """Average of ``local_dos`` over all window sites."""
    E, V = decomposition(op)
    return EmpiricalDOS(E, (V ** 2).mean(axis=0))


def decomposition(op: TruncatedOperator):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of ``op``.

    Cached on the operator, which is immutable.
    """
    cached = op.__dict__.get("_eigh")
    if cached is None:
        if not np.all(np.isfinite(op.matrix)):
            raise ValueError("truncated matrix has non-finite entries")
        E, V = np.linalg.eigh(op.matrix)
        E.setflags(write=False)
        V.setflags(write=False)
        cached = (E, V)
        object.__setattr__(op, "_eigh", cached)
    return cached


# --------------------------------------------------------------------------
# limiting measures


def midpoint_nodes(period: float, M: int) -> np.ndarray:
    """Midpoint rule nodes ``(k + 1/2) period / M`` for ``k = 0..M-1``."""
    if M < 1:
        raise ValueError(f"node count must be >= 1, got {M}")
    return (np.arange(M) + 0.5) * period / M


def layer_weights(theta: float) -> tuple[float, float]:
    """Weights ``((1 - theta)/(2 - theta), 1/(2 - theta))`` of the two layers."""
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    return (1.0 - theta) / (2.0 - theta), 1.0 / (2.0 - theta)


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def limiting_dos_reduced(theta: float, hopping: HoppingParams, L: float, M: int,
                         tail_tol: float = DEFAULT_TAIL_TOL,
                         workers: int = 1) -> LimitingDOSEstimate:
    """Average the reduced-chain DOS over ``M`` midpoint shifts in ``[0, 1 - theta)``."""
    nodes = midpoint_nodes(1.0 - theta, M)

    def one(b):
        model = ReducedChain(theta=theta, b=float(b), hopping=hopping)
        win = build_window(model, L)
        return empirical_dos(eigenvalues(assemble(model, win, tail_tol)), win.total)

    parts = _map(one, nodes, workers)
    return LimitingDOSEstimate(mixture(parts), {"b": nodes})


def limiting_dos_coupled(theta: float, hopping: HoppingParams, L: float, M1: int, M2: int,
                         tail_tol: float = DEFAULT_TAIL_TOL,
                         workers: int = 1) -> LimitingDOSEstimate:
    """Layer-weighted average of origin local DOS measures of the coupled chain.

    The layer-2 origin term is averaged over ``M1`` shifts in ``[0, 1)`` and
    the layer-1 origin term over ``M2`` shifts in ``[0, 1 - theta)``.
    """
    nodes1 = midpoint_nodes(1.0, M1)
    nodes2 = midpoint_nodes(1.0 - theta, M2)
    if not L > max(nodes1.max(), nodes2.max()):
        raise ValueError(f"L={L} must exceed the largest sampled shift")
    w1, w2 = layer_weights(theta)

    def one(task):
        layer, b = task
        model = CoupledChain(theta=theta, b=float(b), hopping=hopping)
        op = assemble(model, build_window(model, L), tail_tol)
        E, V = np.linalg.eigh(op.matrix)
        row = op.index(SiteIndex(layer, 0))
        return EmpiricalDOS(E, V[row] ** 2)

    tasks = [(1, b) for b in nodes2] + [(2, b) for b in nodes1]
    parts = _map(one, tasks, workers)
    weights = [w1 / M2] * M2 + [w2 / M1] * M1
    return LimitingDOSEstimate(mixture(parts, weights), {"b1": nodes1, "b2": nodes2}, (w1, w2))
