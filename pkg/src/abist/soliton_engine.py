"""Reflectionless Riemann-Hilbert problem and N-soliton synthesis.

M(k) = I + O(1/k) is meromorphic with simple poles.  For an ordinary mode
(k_j, c_j) the first column has a pole at k_j and the second at conj(k_j):

    Res_{k_j} M_1 = w_j M_2(k_j),        Res_{conj k_j} M_2 = -conj(w_j) M_1(conj k_j),

with residue weight w_j = -i c_j exp(2 i t theta(k_j)).  The factor -i
fixes the normalization of c_j so that (k, c) = (xi + i eta, 2 eta) is the
soliton centred at the origin with a real envelope.  A ``flipped`` mode
(produced by the tilde modulation) carries the pole of M_2 at k_j instead,
with weight i c_j exp(-2 i t theta(k_j)); its partner at conj(k_j) obeys
the same conjugate rule.

The fields are read from M = I + M1/k + ...:

    A = 4 i (M1)_12,      B = -(4 i / beta) d/dt (M1)_11.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import errors
from .phase_geometry import two_i_t_theta
from .spectral_transform import DiscreteMode

POLE_GUARD = 1e-6
LIN_TOL = 1e-10
COND_MAX = 1e12
H_T = 1e-4

SIGMA0 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass
class ReflectionlessData:
    modes: list[DiscreteMode]
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        ks = [complex(m.k) for m in self.modes]
        for i in range(len(ks)):
            for j in range(i + 1, len(ks)):
                if abs(ks[i] - ks[j]) < POLE_GUARD:
                    raise errors.SingularSystem(f"modes {ks[i]} and {ks[j]} coincide")


@dataclass
class ResidueRep:
    """M(k) = I + sum_p R1_p e1^T/(k - p) + sum_q R2_q e2^T/(k - q)."""

    poles1: np.ndarray
    res1: np.ndarray  # shape (n1, 2): residue vectors of column 1
    poles2: np.ndarray
    res2: np.ndarray  # shape (n2, 2): residue vectors of column 2
    x: float = 0.0
    t: float = 0.0
    weights1: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    weights2: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    @property
    def m1(self) -> np.ndarray:
        """Coefficient of 1/k in the large-k expansion."""
        out = np.zeros((2, 2), dtype=complex)
        out[:, 0] = self.res1.sum(axis=0)
        out[:, 1] = self.res2.sum(axis=0)
        return out


def _weights(data: ReflectionlessData, x: float, t: float):
    p1, w1, p2, w2 = [], [], [], []
    # overflow is reported by the caller as SingularSystem
    with np.errstate(over="ignore", invalid="ignore"):
        for m in data.modes:
            k = complex(m.k)
            phase = complex(two_i_t_theta(k, x, t, data.alpha))
            if getattr(m, "flipped", False):
                w = 1j * complex(m.c) * np.exp(-phase)
                p2.append(k)
                w2.append(w)
                p1.append(k.conjugate())
                w1.append(-np.conj(w))
            else:
                w = -1j * complex(m.c) * np.exp(phase)
                p1.append(k)
                w1.append(w)
                p2.append(k.conjugate())
                w2.append(-np.conj(w))
    return (np.array(p1, complex), np.array(w1, complex), np.array(p2, complex), np.array(w2, complex))


def solve_reflectionless(data: ReflectionlessData, x: float, t: float) -> ResidueRep:
    """Solve the residue conditions for the rational ansatz.

    Writing u_p = R1_p and v_q = R2_q, the conditions read
    u_p = w_p (e2 + sum_q v_q/(p - q)) and v_q = w_q (e1 + sum_p u_p/(q - p)).
    Both vector components share one 2N x 2N matrix.  It is equilibrated
    by row and column scaling before solving, which keeps far-away solitons
    (huge or tiny weights) from looking ill-conditioned.
    """
    p1, w1, p2, w2 = _weights(data, x, t)
    n1, n2 = p1.size, p2.size
    if n1 + n2 == 0:
        z = np.zeros((0, 2), complex)
        return ResidueRep(p1, z, p2, z.copy(), x, t, w1, w2)
    if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
        raise errors.SingularSystem("residue weights overflow; the evaluation point is too far from the solitons")
    C = 1.0 / (p1[:, None] - p2[None, :])  # 1/(p - q)
    S = np.eye(n1 + n2, dtype=complex)
    S[:n1, n1:] = -w1[:, None] * C
    S[n1:, :n1] = w2[:, None] * C.T
    rhs = np.zeros((n1 + n2, 2), dtype=complex)
    rhs[n1:, 0] = w2
    rhs[:n1, 1] = w1
    row = 1.0 / np.max(np.abs(S), axis=1)
    Sr = S * row[:, None]
    col = 1.0 / np.max(np.abs(Sr), axis=0)
    Ss = Sr * col[None, :]
    cond = np.linalg.cond(Ss)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise errors.SingularSystem(f"residue system condition number {cond:.2e} exceeds {COND_MAX:.0e}")
    y = np.linalg.solve(Ss, rhs * row[:, None])
    sol = y * col[:, None]
    resid = np.max(np.abs(S @ sol - rhs)) / max(1.0, np.max(np.abs(S)) * np.max(np.abs(sol)), np.max(np.abs(rhs)))
    if resid > LIN_TOL:
        raise errors.ResidueMismatch(f"residue conditions violated at relative level {resid:.2e}")
    return ResidueRep(p1, sol[:n1].copy(), p2, sol[n1:].copy(), x, t, w1, w2)


def eval_M(rep: ResidueRep, k: complex, pole_guard: float = POLE_GUARD) -> np.ndarray:
    k = complex(k)
    poles = np.concatenate([rep.poles1, rep.poles2])
    if poles.size and np.min(np.abs(poles - k)) < pole_guard:
        raise errors.PoleHit(f"k = {k} is within {pole_guard} of a pole")
    M = np.eye(2, dtype=complex)
    if rep.poles1.size:
        M[:, 0] += np.sum(rep.res1 / (k - rep.poles1)[:, None], axis=0)
    if rep.poles2.size:
        M[:, 1] += np.sum(rep.res2 / (k - rep.poles2)[:, None], axis=0)
    return M


def residue_residual(rep: ResidueRep) -> float:
    """Largest violation of the residue conditions, evaluated from eval_M's pieces."""
    worst = 0.0
    for j, p in enumerate(rep.poles1):
        col2 = np.array([0, 1], complex) + np.sum(rep.res2 / (p - rep.poles2)[:, None], axis=0)
        worst = max(worst, float(np.max(np.abs(rep.res1[j] - rep.weights1[j] * col2))))
    for j, q in enumerate(rep.poles2):
        col1 = np.array([1, 0], complex) + np.sum(rep.res1 / (q - rep.poles1)[:, None], axis=0)
        worst = max(worst, float(np.max(np.abs(rep.res2[j] - rep.weights2[j] * col1))))
    return worst


def reconstruct_A(rep: ResidueRep) -> complex:
    return complex(4j * rep.m1[0, 1])


def reconstruct_B(reps: Sequence[ResidueRep], h_t: float, beta: float) -> float:
    """B from reps at (t - h_t, t, t + h_t) by a central difference of (M1)_11."""
    if len(reps) != 3:
        raise errors.ValidationError("reconstruct_B needs the reps at t - h, t, t + h")
    d = (reps[2].m1[0, 0] - reps[0].m1[0, 0]) / (2.0 * h_t)
    B = -4j / beta * d
    return float(B.real)


def _B_complex(data: ReflectionlessData, x: float, t: float, h_t: float) -> complex:
    lo = solve_reflectionless(data, x, t - h_t).m1[0, 0]
    hi = solve_reflectionless(data, x, t + h_t).m1[0, 0]
    return complex(-4j / data.beta * (hi - lo) / (2.0 * h_t))


def field_at(data: ReflectionlessData, x: float, t: float, h_t: float = H_T) -> tuple[complex, float]:
    """(A, B) at one space-time point."""
    A = reconstruct_A(solve_reflectionless(data, x, t))
    if not data.modes:
        return A, 0.0
    return A, float(_B_complex(data, x, t, h_t).real)


@dataclass
class SolitonField:
    t: float
    x: np.ndarray
    A: np.ndarray
    B: np.ndarray
    B_imag_max: float
    B_crosscheck: float | None  # max |B_derivative - B_integrated| / max|B|, None if skipped


def synthesize_field(data: ReflectionlessData, x_grid, t: float, h_t: float = H_T, check_B: bool = True, b_tol: float = 1e-4) -> SolitonField:
    """A and B on a grid, with B cross-checked against the second AB equation.

    The second route integrates B_x = -(gamma/2) d_t |A|^2 from the left end
    of the grid (cubic-spline antiderivative of the sampled derivative).  It is only
    meaningful when the field has decayed at the left end; otherwise the
    check is skipped and ``B_crosscheck`` is None.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    A = np.empty(x_grid.size, complex)
    B = np.empty(x_grid.size, complex)
    A_lo = np.empty(x_grid.size, complex)
    A_hi = np.empty(x_grid.size, complex)
    for i, x in enumerate(x_grid):
        lo = solve_reflectionless(data, x, t - h_t)
        mid = solve_reflectionless(data, x, t)
        hi = solve_reflectionless(data, x, t + h_t)
        A[i] = reconstruct_A(mid)
        A_lo[i], A_hi[i] = reconstruct_A(lo), reconstruct_A(hi)
        B[i] = -4j / data.beta * (hi.m1[0, 0] - lo.m1[0, 0]) / (2.0 * h_t)
    b_imag = float(np.max(np.abs(B.imag))) if B.size else 0.0
    B_real = B.real.copy()
    cross = None
    amp = np.max(np.abs(A)) if A.size else 0.0
    if check_B and x_grid.size > 2 and amp > 0 and abs(A[0]) < 1e-6 * amp:
        dt_abs2 = (np.abs(A_hi) ** 2 - np.abs(A_lo) ** 2) / (2.0 * h_t)
        integrand = -0.5 / data.beta * dt_abs2
        B_int = CubicSpline(x_grid, integrand).antiderivative()(x_grid)
        scale = max(np.max(np.abs(B_real)), 1e-300)
        cross = float(np.max(np.abs(B_int - B_real)) / scale)
        if cross > b_tol:
            raise errors.InconsistentB(f"B routes disagree by {cross:.2e} relative (b_tol = {b_tol:g})")
    return SolitonField(t, x_grid, A, B_real, b_imag, cross)


def one_soliton_closed(k1: complex, x, t, alpha: float, beta: float):
    """Closed-form one-soliton (A, B) for k1 = xi + i eta, eta > 0."""
    k1 = complex(k1)
    xi, eta = k1.real, k1.imag
    if not eta > 0:
        raise errors.ValidationError("one-soliton needs Im k1 > 0")
    x = np.asarray(x, dtype=float)
    mod2 = abs(k1) ** 2
    A = 4 * eta / np.cosh(2 * eta * (x + alpha * t / (4 * mod2))) * np.exp(1j * xi * (-2 * x + alpha * t / (2 * mod2)))
    B = -(2 * alpha * eta**2) / (beta * mod2) / np.cosh(eta * (2 * x + alpha * t / (2 * mod2))) ** 2
    return A, B


def mout_at_phase(
    modes: Sequence[DiscreteMode],
    partition,
    nu,
    interval,
    x: float,
    t: float,
    sign: int,
    alpha: float,
    beta: float,
    k0: float | None = None,
) -> np.ndarray:
    """M^out(+-k0) from the tilde-modulated data restricted to the cone annulus."""
    from .conjugation import modulate_constants
    from .phase_geometry import stationary_point

    if k0 is None:
        k0 = stationary_point(x, t, alpha)
    tilde = modulate_constants(modes, partition, nu, k0, interval, variant="tilde")
    kept = [tilde[j] for j in partition.inside]
    rep = solve_reflectionless(ReflectionlessData(kept, alpha, beta), x, t)
    return eval_M(rep, complex(sign * k0))


def cone_gap(modes: Sequence[DiscreteMode], cone, alpha: float, beta: float, t: float, n_points: int = 201, nu=None) -> float:
    """max over the cone cross-section of |A_sol(tilde data) - A_sol(tilde data kept to the annulus)|."""
    from .conjugation import NuFunction, modulate_constants
    from .phase_geometry import partition_spectrum, spectral_interval, stationary_point

    if nu is None:
        nu = NuFunction.zero()
    interval = spectral_interval(cone, alpha)
    lo, hi = cone.cross_section(t)
    worst = 0.0
    for x in np.linspace(lo, hi, n_points):
        k0 = stationary_point(x, t, alpha)
        part = partition_spectrum(modes, k0, interval)
        tilde = modulate_constants(modes, part, nu, k0, interval, variant="tilde")
        full = reconstruct_A(solve_reflectionless(ReflectionlessData(tilde, alpha, beta), x, t))
        kept = [tilde[j] for j in part.inside]
        local = reconstruct_A(solve_reflectionless(ReflectionlessData(kept, alpha, beta), x, t))
        worst = max(worst, abs(full - local))
    return worst
