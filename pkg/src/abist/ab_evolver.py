"""Direct numerical integration of the AB system.

With F = A_t the system becomes an ODE in x at each fixed time,

    F_x = alpha A + beta A B,       B_x = -(gamma/2) (A conj(F) + conj(A) F),

started from (F, B) = (0, 0) at the left end (decaying data).  Time is
then advanced by A_t = F[A].  The quantity (gamma/beta)|F|^2 + B^2 +
(2 alpha/beta) B is an exact first integral of the x-ODE, so its size
measures the slice-solve error.  Every group velocity of the linearized
problem is positive for alpha < 0, so the right end needs no boundary
condition: radiation simply leaves the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from . import errors
from .spectral_transform import InitialProfile

DT_MAX = 0.01
BLOWUP = 1e6
DRIFT_FACTOR = 10.0
DRIFT_FLOOR = 1e-10
B0_TOL = 1e-4
TAIL_TOL = 1e-6


@numba.njit(cache=True)
def _midpoints(A):
    n = A.size
    out = np.empty(n - 1, dtype=np.complex128)
    for i in range(n - 1):
        lo = i - 2
        if lo < 0:
            lo = 0
        if lo > n - 6:
            lo = n - 6
        # Lagrange weights for the target i + 0.5 on nodes lo..lo+5
        s = i + 0.5 - lo
        acc = 0.0 + 0.0j
        for j in range(6):
            w = 1.0
            for m in range(6):
                if m != j:
                    w *= (s - m) / (j - m)
            acc += w * A[lo + j]
        out[i] = acc
    return out


@numba.njit(cache=True)
def _slice_kernel(A, Amid, dx, alpha, beta, gamma):
    n = A.size
    F = np.zeros(n, dtype=np.complex128)
    B = np.zeros(n, dtype=np.float64)
    f = 0.0 + 0.0j
    b = 0.0
    for i in range(n - 1):
        a0 = A[i]
        am = Amid[i]
        a1 = A[i + 1]
        k1f = a0 * (alpha + beta * b)
        k1b = -gamma * (a0 * np.conj(f)).real
        f2 = f + 0.5 * dx * k1f
        b2 = b + 0.5 * dx * k1b
        k2f = am * (alpha + beta * b2)
        k2b = -gamma * (am * np.conj(f2)).real
        f3 = f + 0.5 * dx * k2f
        b3 = b + 0.5 * dx * k2b
        k3f = am * (alpha + beta * b3)
        k3b = -gamma * (am * np.conj(f3)).real
        f4 = f + dx * k3f
        b4 = b + dx * k3b
        k4f = a1 * (alpha + beta * b4)
        k4b = -gamma * (a1 * np.conj(f4)).real
        f = f + dx / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        b = b + dx / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
        F[i + 1] = f
        B[i + 1] = b
    return F, B


def solve_xslice(A_slice, dx: float, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """(A_t, B) on the grid from A alone, by RK4 in x from the left end."""
    A = np.ascontiguousarray(A_slice, dtype=np.complex128)
    if A.size < 6:
        raise errors.ValidationError("need at least six grid points")
    gamma = 1.0 / beta
    F, B = _slice_kernel(A, _midpoints(A), float(dx), float(alpha), float(beta), gamma)
    big = max(np.max(np.abs(F)), np.max(np.abs(B)))
    if not np.isfinite(big) or big > BLOWUP:
        raise errors.BlowUp(f"slice solve produced |F| or |B| = {big:.3g}")
    return F, B


@dataclass
class FieldSnapshot:
    t: float
    x: np.ndarray
    A: np.ndarray
    B: np.ndarray
    A_t: np.ndarray
    alpha: float
    beta: float

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def snapshot_from(t: float, x, A, alpha: float, beta: float) -> FieldSnapshot:
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=complex)
    F, B = solve_xslice(A, x[1] - x[0], alpha, beta)
    return FieldSnapshot(float(t), x, A, B, F, alpha, beta)


def compatibility_residual(snap: FieldSnapshot) -> float:
    """max |(gamma/beta)|A_t|^2 + B^2 + (2 alpha/beta) B|."""
    gamma = 1.0 / snap.beta
    val = gamma / snap.beta * np.abs(snap.A_t) ** 2 + snap.B**2 + 2.0 * snap.alpha / snap.beta * snap.B
    return float(np.max(np.abs(val))) if val.size else 0.0


def _rhs(A, dx, alpha, beta):
    return solve_xslice(A, dx, alpha, beta)[0]


def step(snap: FieldSnapshot, dt: float, dt_max: float = DT_MAX) -> FieldSnapshot:
    """One classical RK4 step in t; B and A_t are refreshed by a final slice solve."""
    if not 0 < dt <= dt_max:
        raise errors.StepUnstable(f"dt = {dt} is outside (0, {dt_max}]")
    a, b, dx = snap.alpha, snap.beta, snap.dx
    A = snap.A
    k1 = snap.A_t
    k2 = _rhs(A + 0.5 * dt * k1, dx, a, b)
    k3 = _rhs(A + 0.5 * dt * k2, dx, a, b)
    k4 = _rhs(A + dt * k3, dx, a, b)
    A_new = A + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    amp = np.max(np.abs(A_new))
    if not np.isfinite(amp) or amp > BLOWUP:
        raise errors.BlowUp(f"|A| reached {amp:.3g}")
    return snapshot_from(snap.t + dt, snap.x, A_new, a, b)


@dataclass
class Trajectory:
    snapshots: list[FieldSnapshot]
    dt: float
    dx: float
    compat_residuals: list[float] = field(default_factory=list)
    max_compat: float = 0.0


def check_tails(snap: FieldSnapshot, tol: float = TAIL_TOL) -> None:
    ends = [abs(snap.A[0]), abs(snap.A[-1]), abs(snap.B[0]), abs(snap.B[-1])]
    if max(ends) >= tol:
        raise errors.DomainTooSmall(f"field reaches the domain edge: max end value {max(ends):.3g} >= {tol:g}")


def evolve(
    profile: InitialProfile,
    t_final: float,
    dt: float,
    snapshot_every: int | None = None,
    snapshot_times: Sequence[float] | None = None,
    B0=None,
    dt_max: float = DT_MAX,
    tail_check: bool = False,
) -> Trajectory:
    """Integrate from t = 0 to t_final with fixed steps.

    Snapshots are taken every ``snapshot_every`` steps, or at the step
    nearest each requested time in ``snapshot_times``.  The first and the
    last states are always included.  A user-supplied B0 is only compared
    with the B implied by A0; a mismatch raises a ConsistencyWarning.
    """
    if not t_final >= 0:
        raise errors.ValidationError("t_final must be nonnegative")
    if not 0 < dt <= dt_max:
        raise errors.StepUnstable(f"dt = {dt} is outside (0, {dt_max}]")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        raise errors.ValidationError(f"t_final = {t_final} is not a multiple of dt = {dt}")
    snap = snapshot_from(0.0, profile.x, profile.A0, profile.alpha, profile.beta)
    if B0 is not None:
        B0 = np.asarray(B0, dtype=float)
        mismatch = float(np.max(np.abs(B0 - snap.B)))
        if mismatch > B0_TOL:
            errors.warn_consistency(f"supplied B0 differs from the B implied by A0 by {mismatch:.3g}; using the implied one")
    wanted: set[int] = {0, n_steps}
    if snapshot_every:
        wanted.update(range(0, n_steps + 1, int(snapshot_every)))
    if snapshot_times is not None:
        wanted.update(int(round(tt / dt)) for tt in snapshot_times if 0 <= tt <= t_final + 1e-12)
    traj = Trajectory([], dt, snap.dx)
    prev = compatibility_residual(snap)
    traj.max_compat = prev
    scale = DRIFT_FLOOR * max(1.0, float(np.max(np.abs(snap.B))))
    for n in range(n_steps + 1):
        if n > 0:
            snap = step(snap, dt, dt_max)
            snap.t = n * dt
            res = compatibility_residual(snap)
            if res > DRIFT_FACTOR * max(prev, scale):
                raise errors.CompatibilityDrift(f"compatibility residual jumped from {prev:.3g} to {res:.3g} at t = {snap.t:.6g}")
            prev = res
            traj.max_compat = max(traj.max_compat, res)
        if n in wanted:
            if tail_check:
                check_tails(snap)
            traj.snapshots.append(snap)
            traj.compat_residuals.append(prev)
    return traj


def pde_residual(window: Sequence[FieldSnapshot]) -> tuple[float, float]:
    """Centered-difference residuals of both AB equations on the interior.

    Uses the first three snapshots, which must be equally spaced in t.
    Returns (max |A_xt - alpha A - beta A B|, max |B_x + (gamma/2)(|A|^2)_t|)
    evaluated at the middle snapshot.
    """
    if len(window) < 3:
        raise errors.ValidationError("need at least three snapshots")
    s0, s1, s2 = window[:3]
    h0, h1 = s1.t - s0.t, s2.t - s1.t
    if not h0 > 0 or abs(h0 - h1) > 1e-9 * h0:
        raise errors.ValidationError("snapshots must be equally spaced in t")
    dx = s1.dx
    gamma = 1.0 / s1.beta

    def ddx(u):
        return (u[2:] - u[:-2]) / (2 * dx)

    A_xt = (ddx(s2.A) - ddx(s0.A)) / (2 * h0)
    res_a = A_xt - s1.alpha * s1.A[1:-1] - s1.beta * s1.A[1:-1] * s1.B[1:-1]
    dt_abs2 = (np.abs(s2.A[1:-1]) ** 2 - np.abs(s0.A[1:-1]) ** 2) / (2 * h0)
    res_b = ddx(s1.B) + 0.5 * gamma * dt_abs2
    return float(np.max(np.abs(res_a))), float(np.max(np.abs(res_b)))


def peak_position(snap: FieldSnapshot) -> float:
    """Location of max |A|, refined by a parabola through the three top samples."""
    amp = np.abs(snap.A)
    i = int(np.argmax(amp))
    if 0 < i < amp.size - 1:
        y0, y1, y2 = amp[i - 1], amp[i], amp[i + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return float(snap.x[i] + shift * snap.dx)
    return float(snap.x[i])
