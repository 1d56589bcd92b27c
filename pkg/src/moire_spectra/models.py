"""Operator families and their matrix elements on lattice sites.

Four families are provided: the almost-Mathieu operator, the Anderson model,
the incommensurate coupled chain and its reduced single-chain version.  Each
is described by an immutable parameter record; all matrix elements are pure
functions of the record and the two sites.

Sign conventions are kept family by family.  The almost-Mathieu and Anderson
operators use the discrete Laplacian with a minus sign (off-diagonal ``-1``);
the chain models carry bare nearest-neighbour terms (off-diagonal ``+1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Union

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TWIST = 1.0 - 1.0 / math.sqrt(2.0)
DEFAULT_TAIL_TOL = 1e-12

_U64 = (1 << 64) - 1


class SiteIndex(NamedTuple):
    """A lattice site: ``layer`` is 1 or 2, ``n`` the integer index within it."""

    layer: int
    n: int


@dataclass(frozen=True)
class HoppingParams:
    """Interlayer hopping ``h(eta) = A exp(-B sqrt(eta^2 + Lz^2))``."""

    A: float = 1.0
    B: float = 2.0
    Lz: float = 1.0

    def __post_init__(self):
        if not (self.A >= 0.0 and math.isfinite(self.A)):
            raise ValueError(f"hopping amplitude A must be >= 0, got {self.A}")
        if not self.B > 0.0:
            raise ValueError(f"hopping decay B must be > 0, got {self.B}")
        if not self.Lz > 0.0:
            raise ValueError(f"interchain distance Lz must be > 0, got {self.Lz}")


@dataclass(frozen=True)
class DisorderLaw:
    """Single-site law of the Anderson potential together with its key.

    ``offset`` realises the ergodic shift: the law with ``offset = x`` returns
    at site ``n`` the raw sample of site ``n - x``.
    """

    kind: str = "uniform"
    low: float = -1.0
    high: float = 1.0
    mean: float = 0.0
    std: float = 1.0
    seed: int = 0
    offset: int = 0

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.low <= self.high:
                raise ValueError(f"uniform law needs low <= high, got [{self.low}, {self.high}]")
        elif self.kind == "gaussian":
            if not self.std > 0.0:
                raise ValueError(f"gaussian law needs std > 0, got {self.std}")
        else:
            raise ValueError(f"unknown disorder kind {self.kind!r}")

    def shifted(self, x: int) -> "DisorderLaw":
        """Law of the shifted configuration ``(T_x omega)_n = omega_{n-x}``."""
        return replace(self, offset=self.offset + int(x))


def _check_unit_interval(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly in (0, 1), got {value}")


@dataclass(frozen=True)
class AlmostMathieu:
    alpha: float = GOLDEN
    lam: float = 2.0
    phase: float = 0.0

    kind = "almost-mathieu"

    def __post_init__(self):
        _check_unit_interval("alpha", self.alpha)
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.phase < 2.0 * math.pi:
            raise ValueError(f"phase must lie in [0, 2pi), got {self.phase}")


@dataclass(frozen=True)
class Anderson:
    law: DisorderLaw = field(default_factory=DisorderLaw)

    kind = "anderson"


@dataclass(frozen=True)
class CoupledChain:
    theta: float = DEFAULT_TWIST
    b: float = 0.0
    hopping: HoppingParams = field(default_factory=HoppingParams)

    kind = "coupled-chain"

    def __post_init__(self):
        _check_unit_interval("theta", self.theta)
        if not math.isfinite(self.b):
            raise ValueError(f"interlayer shift b must be finite, got {self.b}")


@dataclass(frozen=True)
class ReducedChain:
    theta: float = DEFAULT_TWIST
    b: float = 0.0
    hopping: HoppingParams = field(default_factory=HoppingParams)

    kind = "reduced-chain"

    def __post_init__(self):
        _check_unit_interval("theta", self.theta)
        if not math.isfinite(self.b):
            raise ValueError(f"interlayer shift b must be finite, got {self.b}")


OperatorModel = Union[AlmostMathieu, Anderson, CoupledChain, ReducedChain]
SINGLE_CHAIN = (AlmostMathieu, Anderson, ReducedChain)


def is_single_chain(model: OperatorModel) -> bool:
    return isinstance(model, SINGLE_CHAIN)


# --------------------------------------------------------------------------
# scalar kernels


def hopping_eval(h: HoppingParams, eta: float) -> float:
    """Evaluate the interlayer hopping function at horizontal offset ``eta``."""
    return h.A * math.exp(-h.B * math.sqrt(eta * eta + h.Lz * h.Lz))


def potential_am(alpha: float, lam: float, phase: float, n: int) -> float:
    """Almost-Mathieu on-site potential ``lam * cos(2 pi alpha n + phase)``."""
    return lam * math.cos(2.0 * math.pi * alpha * n + phase)


def _raw_disorder(law: DisorderLaw, n: int) -> float:
    # One Philox block per site; the site index sits in the second counter
    # word so the per-site streams can never overlap.
    bitgen = np.random.Philox(key=law.seed & _U64, counter=(n & _U64) << 64)
    gen = np.random.Generator(bitgen)
    if law.kind == "uniform":
        return law.low + (law.high - law.low) * gen.random()
    return law.mean + law.std * gen.standard_normal()


def disorder_value(law: DisorderLaw, n: int) -> float:
    """Anderson potential at site ``n``; a pure function of the law and ``n``."""
    return _raw_disorder(law, int(n) - law.offset)


def disorder_values(law: DisorderLaw, ns) -> np.ndarray:
    return np.array([disorder_value(law, int(n)) for n in ns], dtype=float)


def reduced_radius(hopping: HoppingParams, theta: float, tail_tol: float) -> float:
    """Cutoff radius for the fictitious-chain sum of the reduced model.

    Terms whose fictitious site lies farther than the radius from either
    endpoint are dropped.  With ``h(eta) <= A exp(-B|eta|)`` the dropped part
    of any element is at most

        A^2 exp(-B R) * (R / c + 1 + 2 / (1 - exp(-2 B c))),   c = 1 - theta,

    and the returned radius makes this bound ``<= tail_tol``.
    """
    if not tail_tol > 0.0:
        raise ValueError(f"tail_tol must be > 0, got {tail_tol}")
    A, B = hopping.A, hopping.B
    if A == 0.0:
        return 0.0
    c = 1.0 - theta
    tail_sum = 1.0 + 2.0 / (1.0 - math.exp(-2.0 * B * c))

    def bound(R):
        return A * A * math.exp(-B * R) * (R / c + tail_sum)

    R = max(0.0, math.log(A * A * tail_sum / tail_tol) / B)
    while bound(R) > tail_tol:
        # fixed-point step of bound(R) = tail_tol, nudged up so it terminates
        R = math.log(A * A * (R / c + tail_sum) / tail_tol) / B + 1e-9 * (1.0 + R)
    return R


def reduced_range(n: int, n2: int, theta: float, b: float, radius: float) -> tuple[int, int]:
    """Inclusive range of fictitious sites ``n'`` kept for the pair ``(n, n2)``."""
    c = 1.0 - theta
    lo_site, hi_site = min(n, n2), max(n, n2)
    lo = math.ceil((hi_site - radius - b) / c)
    hi = math.floor((lo_site + radius - b) / c)
    return lo, hi


def reduced_coupling(model: ReducedChain, n: int, n2: int,
                     tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Effective coupling of the reduced chain between sites ``n`` and ``n2``.

    Sums ``h(n - c n' - b) h(n2 - c n' - b)`` over fictitious sites ``n'``
    (``c = 1 - theta``) in ascending order, truncated so that the dropped
    tail is below ``tail_tol``.  The result is exactly symmetric in the pair.
    """
    if not tail_tol > 0.0:
        raise ValueError(f"tail_tol must be > 0, got {tail_tol}")
    hop = model.hopping
    if hop.A == 0.0:
        return 0.0
    radius = reduced_radius(hop, model.theta, tail_tol)
    lo, hi = reduced_range(n, n2, model.theta, model.b, radius)
    c = 1.0 - model.theta
    A, B, Lz2 = hop.A, hop.B, hop.Lz * hop.Lz
    total = 0.0
    for k in range(lo, hi + 1):
        p = c * k
        e1 = (n - p) - model.b
        e2 = (n2 - p) - model.b
        total += (A * math.exp(-B * math.sqrt(e1 * e1 + Lz2))) * (A * math.exp(-B * math.sqrt(e2 * e2 + Lz2)))
    return total


def interlayer_offset(theta: float, b: float, n1: int, n2: int) -> float:
    """Horizontal offset between layer-1 site ``n1`` and layer-2 site ``n2``."""
    return (n1 - (1.0 - theta) * n2) - b


def position(model: OperatorModel, site: SiteIndex) -> float:
    """Physical x coordinate of a site."""
    if site.layer == 1:
        return float(site.n)
    return (1.0 - model.theta) * site.n + model.b


def _check_site(model, site):
    if site.layer not in (1, 2):
        raise ValueError(f"layer must be 1 or 2, got {site.layer}")
    if site.layer == 2 and is_single_chain(model):
        raise ValueError(f"{model.kind} is a single-chain model; layer-2 site {site} is invalid")


def _element(model, i, j, tail_tol):
    if isinstance(model, AlmostMathieu):
        if i.n == j.n:
            return potential_am(model.alpha, model.lam, model.phase, i.n)
        return -1.0 if abs(i.n - j.n) == 1 else 0.0
    if isinstance(model, Anderson):
        if i.n == j.n:
            return disorder_value(model.law, i.n)
        return -1.0 if abs(i.n - j.n) == 1 else 0.0
    if isinstance(model, ReducedChain):
        hop = 1.0 if abs(i.n - j.n) == 1 else 0.0
        return hop + reduced_coupling(model, i.n, j.n, tail_tol)
    if isinstance(model, CoupledChain):
        if i.layer == j.layer:
            return 1.0 if abs(i.n - j.n) == 1 else 0.0
        return hopping_eval(model.hopping, interlayer_offset(model.theta, model.b, i.n, j.n))
    raise TypeError(f"unsupported model {type(model).__name__}")


def matrix_element(model: OperatorModel, i: SiteIndex, j: SiteIndex,
                   tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Matrix element ``<delta_i, H delta_j>`` of the infinite operator.

    Symmetry is exact: the pair is put in a canonical order before
    evaluation, so ``matrix_element(m, i, j) == matrix_element(m, j, i)``.
    """
    i, j = SiteIndex(*i), SiteIndex(*j)
    _check_site(model, i)
    _check_site(model, j)
    if (j.layer, j.n) < (i.layer, i.n):
        i, j = j, i
    return _element(model, i, j, tail_tol)
