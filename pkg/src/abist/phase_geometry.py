"""Phase function, stationary points, soliton velocities and cones.

Conventions: alpha < 0, x > 0, t > 0, and velocity windows 0 < v1 < v2.
With these signs f(v) = sqrt(-alpha / (4 v)) is real and decreasing, so a
velocity window [v1, v2] maps to the spectral annulus f(v2) < |k| < f(v1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import errors


def _nonzero(k: complex) -> complex:
    k = complex(k)
    if k == 0:
        raise errors.ZeroSpectralParameter("spectral parameter k must be nonzero")
    return k


def theta(k: complex, x: float, t: float, alpha: float) -> complex:
    """theta(k) = k x / t - alpha / (4 k)."""
    k = _nonzero(k)
    if not t > 0:
        raise errors.ValidationError("theta needs t > 0")
    return k * x / t - alpha / (4.0 * k)


def two_i_t_theta(k, x: float, t: float, alpha: float):
    """The exponent 2 i t theta(k) = 2 i k x - i alpha t / (2 k), defined at t = 0 too."""
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise errors.ZeroSpectralParameter("spectral parameter k must be nonzero")
    return 2j * k * x - 0.5j * alpha * t / k


def re_i_theta(k: complex, k0: float, alpha: float) -> float:
    """Re(i theta) written through the stationary point: Im(k) alpha/4 (1/k0^2 - 1/|k|^2)."""
    k = _nonzero(k)
    return k.imag * alpha / 4.0 * (1.0 / k0**2 - 1.0 / abs(k) ** 2)


def stationary_point(x: float, t: float, alpha: float) -> float:
    """k0 = sqrt(-alpha t / (4 x)); the phase points are +k0 and -k0."""
    if alpha * x >= 0:
        raise errors.WrongSignRegime(f"need alpha*x < 0, got alpha={alpha}, x={x}")
    if not t > 0:
        raise errors.ValidationError("need t > 0")
    return math.sqrt(-alpha * t / (4.0 * x))


def soliton_velocity(k_j: complex, alpha: float) -> float:
    """v = -alpha / (4 |k_j|^2)."""
    k_j = _nonzero(k_j)
    return -alpha / (4.0 * abs(k_j) ** 2)


def velocity_to_modulus(v: float, alpha: float) -> float:
    """f(v) = sqrt(-alpha / (4 v)), the inverse of ``soliton_velocity`` in |k|."""
    if not v > 0 or not alpha < 0:
        raise errors.ValidationError("f(v) is real only for v > 0 and alpha < 0")
    return math.sqrt(-alpha / (4.0 * v))


@dataclass(frozen=True)
class ConeSpec:
    """Space-time cone {x = x0 + v t : x1 <= x0 <= x2, v1 <= v <= v2}."""

    x1: float
    x2: float
    v1: float
    v2: float

    def __post_init__(self) -> None:
        if not self.x1 <= self.x2:
            raise errors.ValidationError(f"cone needs x1 <= x2, got {self.x1}, {self.x2}")
        if not 0 < self.v1 < self.v2:
            raise errors.ValidationError(f"cone needs 0 < v1 < v2, got {self.v1}, {self.v2}")

    @classmethod
    def parse(cls, text: str) -> "ConeSpec":
        """Parse the CLI form "x1,x2,v1,v2"."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise errors.ValidationError(f"--cone expects x1,x2,v1,v2; got {text!r}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise errors.ValidationError(f"--cone has a non-numeric entry: {text!r}") from exc
        return cls(*vals)

    def contains(self, x: float, t: float) -> bool:
        return self.x1 + self.v1 * t <= x <= self.x2 + self.v2 * t

    def cross_section(self, t: float) -> tuple[float, float]:
        return self.x1 + self.v1 * t, self.x2 + self.v2 * t


def spectral_interval(cone: ConeSpec, alpha: float) -> tuple[float, float]:
    """The open annulus (f(v2), f(v1)) of moduli whose solitons travel inside the cone."""
    lo, hi = velocity_to_modulus(cone.v2, alpha), velocity_to_modulus(cone.v1, alpha)
    if not lo < hi:
        raise errors.EmptyInterval(f"spectral interval ({lo}, {hi}) is empty")
    return lo, hi


@dataclass(frozen=True)
class SpectrumPartition:
    """Index sets of modes, by cone annulus and by the circle |k| = k0."""

    inside: tuple[int, ...] = ()
    above: tuple[int, ...] = ()
    below: tuple[int, ...] = ()
    delta_minus: tuple[int, ...] = ()
    delta_plus: tuple[int, ...] = ()


def partition_spectrum(
    modes: Sequence[complex],
    k0: float | None,
    interval: tuple[float, float] | None,
    rel_guard: float = 1e-12,
) -> SpectrumPartition:
    """Split mode indices by |k_j| against k0 and against the annulus (lo, hi).

    A modulus equal (to relative ``rel_guard``) to k0 or to an annulus
    endpoint is rejected.  Either classification may be skipped by
    passing None.
    """
    moduli = [abs(complex(getattr(m, "k", m))) for m in modes]
    inside, above, below, dm, dp = [], [], [], [], []

    def same(a: float, b: float) -> bool:
        return abs(a - b) <= rel_guard * max(a, b)

    for j, mod in enumerate(moduli):
        if interval is not None:
            lo, hi = interval
            if same(mod, lo) or same(mod, hi):
                raise errors.DegenerateBoundary(f"|k_{j}| = {mod} sits on an endpoint of the spectral interval")
            (inside if lo < mod < hi else above if mod > hi else below).append(j)
        if k0 is not None:
            if same(mod, k0):
                raise errors.DegenerateBoundary(f"|k_{j}| = {mod} equals k0")
            (dm if mod < k0 else dp).append(j)
    return SpectrumPartition(tuple(inside), tuple(above), tuple(below), tuple(dm), tuple(dp))


def decay_rate_mu(excluded_modes: Iterable[complex], cone: ConeSpec, alpha: float) -> float:
    """mu = min over excluded modes of Im k_j * dist(v(k_j), [v1, v2]); +inf if none."""
    mu = math.inf
    for m in excluded_modes:
        k = complex(getattr(m, "k", m))
        v = soliton_velocity(k, alpha)
        if cone.v1 <= v <= cone.v2:
            raise errors.ModeInsideCone(f"mode {k} travels at v={v}, inside [{cone.v1}, {cone.v2}]")
        dist = cone.v1 - v if v < cone.v1 else v - cone.v2
        mu = min(mu, k.imag * dist)
    return mu
