"""Field comparison metrics and log-log decay fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import errors
from .formats import FieldTable


@dataclass
class CompareReport:
    linf: float
    l2: float
    grid_overlap: int
    linf_B: float = 0.0
    l2_B: float = 0.0
    decay_slope: float | None = None
    decay_intercept: float | None = None
    t_range: tuple[float, float] | None = None
    per_time: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "linf": self.linf,
            "l2": self.l2,
            "linf_B": self.linf_B,
            "l2_B": self.l2_B,
            "grid_overlap": self.grid_overlap,
            "decay_slope": self.decay_slope,
            "decay_intercept": self.decay_intercept,
            "t_range": list(self.t_range) if self.t_range else None,
            "per_time": self.per_time,
        }


def _align(a: FieldTable, b: FieldTable) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Put b on a's grid inside the common range.

    Identical grids are used as they are.  Otherwise b is resampled
    linearly, which is allowed only when the spacings differ by less than
    a factor of two.
    """
    lo, hi = max(a.x[0], b.x[0]), min(a.x[-1], b.x[-1])
    if not lo < hi:
        raise errors.ValidationError("the two fields have disjoint grids")
    if a.x.size == b.x.size and np.allclose(a.x, b.x, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(a.x)))):
        return a.x, a.A, b.A, a.B, b.B
    ha, hb = np.median(np.diff(a.x)), np.median(np.diff(b.x))
    if max(ha, hb) > 2.0 * min(ha, hb):
        raise errors.ValidationError(f"grid spacings {ha:g} and {hb:g} differ by more than 2x")
    m = (a.x >= lo) & (a.x <= hi)
    x = a.x[m]
    Ab = np.interp(x, b.x, b.A.real) + 1j * np.interp(x, b.x, b.A.imag)
    Bb = np.interp(x, b.x, b.B)
    return x, a.A[m], Ab, a.B[m], Bb


def field_errors(a: FieldTable, b: FieldTable) -> dict:
    x, Aa, Ab, Ba, Bb = _align(a, b)
    dA, dB = np.abs(Aa - Ab), np.abs(Ba - Bb)
    l2 = lambda d: float(np.sqrt(np.trapezoid(d**2, x))) if x.size > 1 else float(d.max(initial=0.0))
    return {
        "t": a.t,
        "linf": float(dA.max(initial=0.0)),
        "l2": l2(dA),
        "linf_B": float(dB.max(initial=0.0)),
        "l2_B": l2(dB),
        "n": int(x.size),
    }


def loglog_fit(t: Sequence[float], err: Sequence[float]) -> tuple[float, float]:
    """Least-squares (slope, intercept) of log(err) against log(t)."""
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    if np.any(t <= 0) or np.any(err <= 0):
        raise errors.ValidationError("log-log fit needs positive times and errors")
    slope, intercept = np.polyfit(np.log(t), np.log(err), 1)
    return float(slope), float(intercept)


def compare_fields(pairs: Sequence[tuple[FieldTable, FieldTable]], min_fit: int = 4) -> CompareReport:
    """Errors for each (a, b) pair, and a decay fit of L-infinity error against t.

    With fewer than ``min_fit`` distinct times no slope is fitted and a
    warning is emitted.
    """
    if not pairs:
        raise errors.ValidationError("nothing to compare")
    rows = [field_errors(a, b) for a, b in pairs]
    rep = CompareReport(
        max(r["linf"] for r in rows),
        max(r["l2"] for r in rows),
        min(r["n"] for r in rows),
        max(r["linf_B"] for r in rows),
        max(r["l2_B"] for r in rows),
        per_time=rows,
    )
    times = sorted({r["t"] for r in rows})
    if len(times) >= min_fit:
        ts = [r["t"] for r in rows]
        rep.decay_slope, rep.decay_intercept = loglog_fit(ts, [r["linf"] for r in rows])
        rep.t_range = (times[0], times[-1])
    elif len(rows) > 1:
        warnings.warn(f"only {len(times)} time samples; decay slope omitted (need {min_fit})", stacklevel=2)
    return rep
