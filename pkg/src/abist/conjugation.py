"""Scalar conjugation functions built from the reflection coefficient.

nu(s) = -(1/2 pi) log(1 + |r(s)|^2) is sampled on the real k-grid and
interpolated by a cubic spline (which also bridges the excluded gap
around k = 0; outside the sampled range nu is taken to be 0).

delta(k) = exp(i int_{-k0}^{k0} nu(s) / (s - k) ds) solves the scalar
problem delta_+ = delta_- (1 + |r|^2) on (-k0, k0).  Every Cauchy integral
here is evaluated as

    int (nu(s) - nu(s*)) / (s - k) ds + nu(s*) int ds / (s - k),

with s* the point of the interval nearest to k and the second integral in
closed form, so accuracy does not degrade as k approaches the contour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import errors
from .spectral_transform import DiscreteMode, ScatteringData

CUT_GUARD = 1e-3
POLE_GUARD = 1e-6
N_PANELS = 20
N_NODES = 10

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def panel_rule(a: float, b: float, n_panels: int = N_PANELS, n_nodes: int = N_NODES, breaks: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [a, b].

    Extra ``breaks`` inside (a, b) become panel edges; the panel budget is
    shared between the pieces in proportion to their length.
    """
    pts = sorted({a, b, *[float(c) for c in breaks if a < c < b]})
    xg, wg = _gl(n_nodes)
    nodes, weights = [], []
    length = b - a
    for lo, hi in zip(pts[:-1], pts[1:]):
        m = max(1, int(round(n_panels * (hi - lo) / length)))
        edges = np.linspace(lo, hi, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes.append((mid[:, None] + half[:, None] * xg[None, :]).ravel())
        weights.append((half[:, None] * wg[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


class NuFunction:
    """nu(s) = -(1/2 pi) log(1 + |r(s)|^2), sampled and spline-interpolated."""

    def __init__(self, kgrid: np.ndarray, nu: np.ndarray) -> None:
        self.kgrid = np.asarray(kgrid, dtype=float)
        self.values = np.asarray(nu, dtype=float)
        self.k_lo = float(self.kgrid[0])
        self.k_hi = float(self.kgrid[-1])
        self._spline = CubicSpline(self.kgrid, self.values) if self.kgrid.size >= 4 else None
        self.identically_zero = bool(np.all(self.values == 0.0))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.identically_zero or self._spline is None:
            return np.zeros_like(s)
        out = self._spline(s)
        return np.where((s < self.k_lo) | (s > self.k_hi), 0.0, out)

    @classmethod
    def zero(cls) -> "NuFunction":
        return cls(np.array([-1.0, 1.0]), np.zeros(2))


def nu_of(r_samples, kgrid=None) -> NuFunction:
    """Build nu from reflection data.

    Accepts ScatteringData, a list of ScatteringSample, or an array of r
    values together with ``kgrid``.
    """
    if isinstance(r_samples, ScatteringData):
        kgrid, r = r_samples.kgrid, r_samples.r
    elif kgrid is None:
        kgrid = np.array([s.k for s in r_samples])
        r = np.array([s.r for s in r_samples])
    else:
        r = np.asarray(r_samples, dtype=complex)
    r = np.asarray(r)
    if not np.all(np.isfinite(r)):
        raise errors.ValidationError("reflection samples must be finite")
    nu = -np.log1p(np.abs(r) ** 2) / (2.0 * math.pi)
    return NuFunction(np.asarray(kgrid, dtype=float), nu)


def _log_ratio(k: complex, a: float, b: float) -> complex:
    """int_a^b ds / (s - k) for k off [a, b]: log((k - b) / (k - a)), principal branch."""
    return complex(np.log((k - b) / (k - a)))


def cauchy_integral(nu: NuFunction, a: float, b: float, k: complex, n_panels: int = N_PANELS, n_nodes: int = N_NODES) -> complex:
    """int_a^b nu(s) / (s - k) ds for k off the segment."""
    k = complex(k)
    s_star = min(max(k.real, a), b)
    s, w = panel_rule(a, b, n_panels, n_nodes, breaks=(s_star,))
    nu_star = float(nu(s_star))
    smooth = np.sum(w * (nu(s) - nu_star) / (s - k))
    return complex(smooth + nu_star * _log_ratio(k, a, b))


def delta_eval(nu: NuFunction, k0: float, k: complex, cut_guard: float = CUT_GUARD, **quad) -> complex:
    """delta(k) = exp(i int_{-k0}^{k0} nu(s) / (s - k) ds)."""
    k = complex(k)
    if k.imag == 0.0 and -k0 - cut_guard < k.real < k0 + cut_guard:
        raise errors.TooCloseToCut(f"k = {k.real} is within {cut_guard} of the cut [-k0, k0]")
    if nu.identically_zero:
        return 1.0 + 0j
    return complex(np.exp(1j * cauchy_integral(nu, -k0, k0, k, **quad)))


def delta_boundary(nu: NuFunction, k0: float, k: float, side: str, cut_guard: float = CUT_GUARD, **quad) -> complex:
    """Boundary value delta_+ (from Im k > 0) or delta_- on the cut (-k0, k0)."""
    if side not in ("plus", "minus"):
        raise errors.ValidationError(f"side must be 'plus' or 'minus', got {side!r}")
    k = float(k)
    if not abs(k) < k0 - cut_guard:
        raise errors.TooCloseToEndpoint(f"k = {k} is within {cut_guard} of an endpoint +-{k0}")
    n_panels = quad.get("n_panels", N_PANELS)
    n_nodes = quad.get("n_nodes", N_NODES)
    s, w = panel_rule(-k0, k0, n_panels, n_nodes, breaks=(k,))
    nu_k = float(nu(k))
    pv = float(np.sum(w * (nu(s) - nu_k) / (s - k))) + nu_k * math.log((k0 - k) / (k0 + k))
    sgn = 1.0 if side == "plus" else -1.0
    return complex(np.exp(1j * (pv + sgn * 1j * math.pi * nu_k)))


def blaschke(k: complex, poles: Sequence[complex], pole_guard: float = POLE_GUARD) -> complex:
    """prod_j (k - conj(k_j)) / (k - k_j)."""
    out = 1.0 + 0j
    for kj in poles:
        kj = complex(kj)
        if abs(k - kj) < pole_guard:
            raise errors.PoleHit(f"k = {k} is within {pole_guard} of the pole {kj}")
        out *= (k - kj.conjugate()) / (k - kj)
    return out


def T_eval(nu: NuFunction, k0: float, delta_minus_modes: Sequence[complex], k: complex, **kw) -> complex:
    """T(k) = prod_{Delta^-} (k - conj k_j)/(k - k_j) * delta(k)."""
    k = complex(k)
    poles = [complex(getattr(m, "k", m)) for m in delta_minus_modes]
    return blaschke(k, poles) * delta_eval(nu, k0, k, **kw)


def delta0(nu: NuFunction, k0: float, sign: int, method: str = "window", **quad) -> complex:
    """Regular part of delta at the endpoint sign*k0.

    Near the endpoints

        delta(k) ~ delta0(+k0) (k - k0)^{i nu(k0)},
        delta(k) ~ delta0(-k0) (-(k + k0))^{-i nu(-k0)},

    with principal powers (both branch cuts lie along the contour), so
    delta0 is unimodular.  ``window`` subtracts nu(+-k0) only on a window of
    unit length next to the endpoint (clipped to the interval);
    ``reduced`` subtracts it on the whole interval.  The two agree
    identically and serve as cross-checks of each other.
    """
    if sign not in (1, -1):
        raise errors.ValidationError("sign must be +1 or -1")
    if nu.identically_zero:
        return 1.0 + 0j
    n_panels = quad.get("n_panels", N_PANELS)
    n_nodes = quad.get("n_nodes", N_NODES)
    p = sign * k0
    nu_p = float(nu(p))
    if method == "window":
        if sign > 0:
            a, b = max(k0 - 1.0, -k0), k0
            width = k0 - a
        else:
            a, b = -k0, min(-k0 + 1.0, k0)
            width = b + k0
    elif method == "reduced":
        a, b, width = -k0, k0, 2.0 * k0
    else:
        raise errors.ValidationError(f"unknown method {method!r}")
    s, w = panel_rule(-k0, k0, n_panels, n_nodes, breaks=(a, b))
    chi = ((s >= a) & (s <= b)).astype(float)
    integral = float(np.sum(w * (nu(s) - chi * nu_p) / (s - p)))
    # the windowed log term leaves width^{-+ i nu} after the singular power is factored out
    return complex(np.exp(1j * integral) * width ** (-1j * nu_p * sign))


def T0_at_phase(nu: NuFunction, k0: float, delta_minus_modes: Sequence[complex], sign: int, method: str = "window", **quad) -> complex:
    """T0(+-k0): Blaschke product at +-k0 times the regular part of delta."""
    poles = [complex(getattr(m, "k", m)) for m in delta_minus_modes]
    return blaschke(complex(sign * k0), poles) * delta0(nu, k0, sign, method, **quad)


def endpoint_power(k: complex, k0: float, nu_p: float, sign: int) -> complex:
    """The singular factor that T0(sign*k0) multiplies near sign*k0."""
    if sign > 0:
        return complex(np.power(complex(k - k0), 1j * nu_p))
    return complex(np.power(complex(-(k + k0)), -1j * nu_p))


def trace_s11(modes: Sequence, nu: NuFunction, k: complex, n_panels: int = 200, n_nodes: int = N_NODES) -> complex:
    """s11(k) = prod (k - k_j)/(k - conj k_j) * exp(-i int_R nu(z)/(z - k) dz)."""
    k = complex(k)
    if k.imag == 0.0:
        raise errors.ValidationError("trace formula is evaluated off the real axis")
    poles = [complex(getattr(m, "k", m)) for m in modes]
    prod = 1.0 + 0j
    for kj in poles:
        if abs(k - kj.conjugate()) < POLE_GUARD:
            raise errors.PoleHit(f"k = {k} hits the pole conj({kj})")
        prod *= (k - kj) / (k - kj.conjugate())
    if nu.identically_zero:
        return prod
    integral = cauchy_integral(nu, nu.k_lo, nu.k_hi, k, n_panels=n_panels, n_nodes=n_nodes)
    return complex(prod * np.exp(-1j * integral))


@dataclass(frozen=True)
class ConjugationData:
    k0: float
    nu_at_k0: float
    nu_at_minus_k0: float
    T0_plus: complex
    T0_minus: complex


def conjugation_data(nu: NuFunction, k0: float, delta_minus_modes: Sequence = ()) -> ConjugationData:
    return ConjugationData(
        k0,
        float(nu(k0)),
        float(nu(-k0)),
        T0_at_phase(nu, k0, delta_minus_modes, +1),
        T0_at_phase(nu, k0, delta_minus_modes, -1),
    )


def _blaschke_zero_product(k: complex, ks: Sequence[complex]) -> complex:
    """s_{11,Delta}(k) = prod_n (k - k_n)/(k - conj k_n)."""
    out = 1.0 + 0j
    for kn in ks:
        out *= (k - kn) / (k - kn.conjugate())
    return out


def modulate_constants(
    modes: Sequence[DiscreteMode],
    partition,
    nu: NuFunction,
    k0: float,
    interval: tuple[float, float] | None = None,
    variant: str = "cone",
) -> list[DiscreteMode]:
    """Modulated norming constants.

    ``cone``: for in-annulus modes c_j -> c_j prod_{n in K(I), n != j}
    ((k_j - k_n)/(k_j - conj k_n))^2; all other modes unchanged.

    ``tilde``: with s_- (k) = prod_{n in Delta^-} (k - k_n)/(k - conj k_n),
    modes in Delta^- become ``flipped`` with c_j^{-1} s_-'(k_j)^{-2}
    delta(k_j)^2, and the rest get c_j s_-(k_j)^2 delta(k_j)^{-2}.
    """
    ks = [complex(m.k) for m in modes]
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            if abs(ks[i] - ks[j]) < POLE_GUARD:
                raise errors.PoleHit(f"modes {ks[i]} and {ks[j]} coincide")
    out: list[DiscreteMode] = []
    if variant == "cone":
        inside = set(partition.inside)
        for j, m in enumerate(modes):
            c = complex(m.c)
            if j in inside:
                for n in inside:
                    if n != j:
                        c *= ((ks[j] - ks[n]) / (ks[j] - ks[n].conjugate())) ** 2
            out.append(DiscreteMode(m.k, c, m.flipped))
        return out
    if variant != "tilde":
        raise errors.ValidationError(f"unknown variant {variant!r}")
    dm = set(partition.delta_minus)
    dm_ks = [ks[n] for n in sorted(dm)]
    for j, m in enumerate(modes):
        kj = ks[j]
        dj = delta_eval(nu, k0, kj)
        if j in dm:
            others = [ks[n] for n in sorted(dm) if n != j]
            sprime = _blaschke_zero_product(kj, others) / (kj - kj.conjugate())
            out.append(DiscreteMode(kj, dj**2 / (complex(m.c) * sprime**2), True))
        else:
            out.append(DiscreteMode(kj, complex(m.c) * _blaschke_zero_product(kj, dm_ks) ** 2 / dj**2, False))
    return out
