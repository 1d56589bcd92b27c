"""Circle rotations, shift covariance, Birkhoff averages and Weyl sums."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .models import (
    DEFAULT_TAIL_TOL,
    AlmostMathieu,
    Anderson,
    CoupledChain,
    OperatorModel,
    ReducedChain,
)
from .truncation import LatticeWindow, _matrix_on

RESONANCE_GUARD = 1e-12


@dataclass(frozen=True)
class CircleRotation:
    """The map ``x -> x + direction * step  (mod modulus)`` on ``[0, modulus)``."""

    modulus: float
    step: float
    direction: int = 1

    def __post_init__(self):
        if not self.modulus > 0.0:
            raise ValueError(f"modulus must be > 0, got {self.modulus}")
        if self.direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction}")

    @classmethod
    def almost_mathieu(cls, alpha: float) -> "CircleRotation":
        """Phase rotation ``theta -> theta - 2 pi alpha`` on ``[0, 2 pi)``."""
        return cls(2.0 * math.pi, 2.0 * math.pi * alpha, -1)

    @classmethod
    def reduced_shift(cls, theta: float) -> "CircleRotation":
        """Shift ``b -> b - 1 (mod 1 - theta)`` of the reduced chain."""
        return cls(1.0 - theta, 1.0, -1)

    @classmethod
    def layer1_cell(cls, theta: float) -> "CircleRotation":
        """Layer-1 shift ``b -> b + 1`` restricted to the layer-2 cell ``[0, 1 - theta)``."""
        return cls(1.0 - theta, 1.0, 1)

    @classmethod
    def layer2_cell(cls, theta: float) -> "CircleRotation":
        """Layer-2 shift ``b -> b - (1 - theta)`` restricted to the layer-1 cell ``[0, 1)``."""
        return cls(1.0, 1.0 - theta, -1)

    @property
    def rotation_number(self) -> float:
        return self.direction * self.step / self.modulus


def _wrap(y, m):
    r = y % m
    # float % can round up to the modulus itself for tiny negative y
    return 0.0 if r >= m else r


def rotate(rot: CircleRotation, x: float, k: int) -> float:
    """Apply the rotation ``k`` times to ``x``."""
    if not 0.0 <= x < rot.modulus:
        raise ValueError(f"x={x} is outside [0, {rot.modulus})")
    if k == 0:
        return x
    return _wrap(x + rot.direction * k * rot.step, rot.modulus)


def orbit(rot: CircleRotation, x0: float, ks) -> np.ndarray:
    """Vectorised ``rotate`` over an integer array ``ks``."""
    if not 0.0 <= x0 < rot.modulus:
        raise ValueError(f"x0={x0} is outside [0, {rot.modulus})")
    ks = np.asarray(ks)
    pts = np.mod(x0 + rot.direction * ks * rot.step, rot.modulus)
    pts[pts >= rot.modulus] = 0.0
    return pts


# --------------------------------------------------------------------------
# covariance


def shifted_model(model: OperatorModel, x: int, law: str | None = None):
    """Transformed model together with the per-layer index offsets.

    Returns ``(model', d1, d2)`` such that, for every pair of sites,
    ``<(l, n)| H' |(l', n')> = <(l, n + d_l)| H |(l', n' + d_l')>``.
    """
    if isinstance(model, AlmostMathieu):
        phase = rotate(CircleRotation.almost_mathieu(model.alpha), model.phase, x)
        return replace(model, phase=phase), -x, 0
    if isinstance(model, Anderson):
        return replace(model, law=model.law.shifted(x)), -x, 0
    if isinstance(model, ReducedChain):
        # b -> b - x mod (1 - theta) is conjugation by U_x^dagger, which
        # moves sites the other way: H_r(T_x b)_{n,m} = H_r(b)_{n+x,m+x}.
        rot = CircleRotation.reduced_shift(model.theta)
        b = _wrap(model.b, rot.modulus)
        return replace(model, b=rotate(rot, b, x)), x, 0
    if isinstance(model, CoupledChain):
        if law == "layer1":
            return replace(model, b=model.b + x), -x, 0
        if law == "layer2":
            return replace(model, b=model.b - (1.0 - model.theta) * x), 0, -x
        raise ValueError("coupled chain needs law='layer1' or law='layer2'")
    raise TypeError(f"unsupported model {type(model).__name__}")


def covariance_residual(model: OperatorModel, x: int, window: LatticeWindow,
                        tail_tol: float = DEFAULT_TAIL_TOL,
                        law: str | None = None) -> float:
    """Largest matrix-element mismatch of the shift covariance identity.

    Compares the transformed model on every window pair whose shifted image
    also lies in the window.  For the coupled chain ``law`` selects the
    layer-1 or layer-2 shift; ``None`` returns the larger of the two.
    """
    if isinstance(model, CoupledChain) and law is None:
        return max(covariance_residual(model, x, window, tail_tol, "layer1"),
                   covariance_residual(model, x, window, tail_tol, "layer2"))
    if abs(x) >= window.L:
        raise ValueError(f"shift x={x} exits the window of half-width {window.L}")
    if x == 0:
        return 0.0
    shifted, d1, d2 = shifted_model(model, x, law)
    src, dst = [], []
    for layer, d in ((1, d1), (2, d2)):
        ns = window.ns1 if layer == 1 else window.ns2
        for n in ns:
            target = (layer, int(n) + d)
            if target in window:
                src.append(window.row((layer, int(n))))
                dst.append(window.row(target))
    if not src:
        raise ValueError(f"shift x={x} leaves no pair inside the window")
    src, dst = np.array(src), np.array(dst)
    M_shift = _matrix_on(shifted, window.ns1, window.ns2, tail_tol)
    M_ref = _matrix_on(model, window.ns1, window.ns2, tail_tol)
    return float(np.max(np.abs(M_shift[np.ix_(src, src)] - M_ref[np.ix_(dst, dst)])))


# --------------------------------------------------------------------------
# Birkhoff averages and Weyl sums


def birkhoff_average(f, x0: float, rot: CircleRotation, N: int):
    """Symmetric orbit average ``(2N+1)^-1 sum_{n=-N}^{N} f(T^n x0)``.

    ``f`` must accept a numpy array of points.  Summation is numpy's pairwise
    reduction, so the result does not depend on how the caller parallelises.
    """
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    pts = orbit(rot, x0, np.arange(-N, N + 1))
    vals = np.asarray(f(pts))
    return vals.sum() / (2 * N + 1)


def fourier_mode(m: int, modulus: float = 1.0):
    """The observable ``x -> exp(2 pi i m x / modulus)``."""
    def mode(x):
        return np.exp(2j * np.pi * m * np.asarray(x) / modulus)
    return mode


def _denominator(m, alpha):
    return abs(1.0 - cmath.exp(-2j * math.pi * m * alpha))


def birkhoff_bound(coefficients: dict, alpha: float, N: int) -> float:
    """Bound ``sum_m 4|c_m| / ((2N+1) |1 - exp(-2 pi i m alpha)|)`` on the
    deviation of the symmetric average from the mean, over modes ``m != 0``."""
    total = 0.0
    for m, c in coefficients.items():
        if m == 0:
            continue
        total += 4.0 * abs(c) / ((2 * N + 1) * _denominator(m, alpha))
    return total


def weyl_sum(m: int, alpha: float, N: int) -> complex:
    """Closed form of ``sum_{n=-N}^{N} exp(-2 pi i m alpha n)``."""
    if m == 0:
        raise ValueError("mode m must be nonzero")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    denom = 1.0 - _turn(-m, alpha, 1)
    if abs(denom) <= RESONANCE_GUARD:
        raise ValueError(f"resonant rotation: |1 - exp(-2 pi i m alpha)| = {abs(denom):.3g} for m={m}")
    num = _turn(m, alpha, N) - _turn(-m, alpha, N + 1)
    return num / denom


def _turn(m, alpha, k):
    # exp(2 pi i m alpha k) with m alpha k reduced mod 1 exactly; a float alpha
    # is a dyadic rational, so large k loses no phase digits
    t = float((Fraction(alpha) * (m * k)) % 1)
    return cmath.exp(2j * math.pi * t)


def weyl_bound(m: int, alpha: float) -> float:
    return 2.0 / _denominator(m, alpha)


def orbit_fill(x0: float, rot: CircleRotation, N: int, bins: int) -> float:
    """Smallest fraction of the forward orbit ``T^0 x0 .. T^{N-1} x0`` in any bin."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if N < bins:
        raise ValueError(f"need N >= bins, got N={N}, bins={bins}")
    pts = orbit(rot, x0, np.arange(N))
    idx = np.minimum((pts / rot.modulus * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return float(counts.min() / N)
