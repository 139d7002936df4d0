"""File formats: canonical JSON, field CSV files and run configuration.

Canonical JSON means sorted keys, fixed separators and every float written
with 17 significant digits, so writing, reading and writing again gives
identical bytes.  Complex numbers are always [re, im] pairs.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import errors
from .spectral_transform import DiscreteMode, InitialProfile, ScatteringData


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        raise errors.ValidationError(f"cannot serialize non-finite value {v}")
    return "%.17g" % v


def canonical_dumps(obj: Any) -> str:
    """Deterministic JSON text; see the module docstring."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return canonical_dumps([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, np.ndarray):
        return canonical_dumps(obj.tolist())
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + canonical_dumps(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_dumps(v) for v in obj) + "]"
    raise errors.ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def write_json(path, obj: Any) -> None:
    Path(path).write_text(canonical_dumps(obj) + "\n")


def read_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise errors.ValidationError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise errors.ValidationError(f"{path} is not valid JSON: {exc}") from exc


def parse_complex(value: Any, what: str = "value") -> complex:
    """A complex number from an [re, im] pair (a bare real number is accepted too)."""
    if isinstance(value, bool):
        raise errors.ValidationError(f"{what}: expected [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        z = complex(float(value), 0.0)
    elif isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        z = complex(float(value[0]), float(value[1]))
    else:
        raise errors.ValidationError(f"{what}: expected [re, im], got {value!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise errors.ValidationError(f"{what}: non-finite entry {value!r}")
    return z


def complex_list(values) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


# --- modes and scattering data -----------------------------------------------------


def modes_to_json(modes) -> list[dict]:
    return [{"k": complex(m.k), "c": complex(m.c), "flipped": bool(m.flipped)} for m in modes]


def modes_from_json(items) -> list[DiscreteMode]:
    if not isinstance(items, list):
        raise errors.ValidationError("modes must be a list of {k, c} objects")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or "k" not in item or "c" not in item:
            raise errors.ValidationError(f"mode {i} must be an object with keys k and c")
        k = parse_complex(item["k"], f"mode {i} k")
        c = parse_complex(item["c"], f"mode {i} c")
        try:
            out.append(DiscreteMode(k, c, bool(item.get("flipped", False))))
        except ValueError as exc:
            raise errors.ValidationError(f"mode {i}: {exc}") from exc
    return out


def scattering_to_json(data: ScatteringData) -> dict:
    return {
        "alpha": data.alpha,
        "beta": data.beta,
        "kgrid": [float(k) for k in data.kgrid],
        "s11": complex_list(data.s11),
        "s12": complex_list(data.s12),
        "modes": modes_to_json(data.modes),
        "unitarity_residual_max": float(np.max(data.unitarity_residual)) if data.kgrid.size else 0.0,
    }


def scattering_from_json(obj: dict) -> ScatteringData:
    try:
        s11 = [parse_complex(v, "s11") for v in obj["s11"]]
        s12 = [parse_complex(v, "s12") for v in obj["s12"]]
        return ScatteringData(
            float(obj["alpha"]),
            float(obj["beta"]),
            np.array(obj["kgrid"], dtype=float),
            np.array(s11),
            np.array(s12),
            modes_from_json(obj.get("modes", [])),
        )
    except (KeyError, TypeError) as exc:
        raise errors.ValidationError(f"malformed scattering data: missing or bad field {exc}") from exc


# --- field snapshots ------------------------------------------------------------


@dataclass
class FieldTable:
    t: float
    alpha: float
    beta: float
    x: np.ndarray
    A: np.ndarray
    B: np.ndarray


def write_field_csv(path, t: float, alpha: float, beta: float, x, A, B) -> None:
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=float)
    lines = [f"# t={_fmt_float(t)} alpha={_fmt_float(alpha)} beta={_fmt_float(beta)}", "x,reA,imA,B"]
    lines += [f"{_fmt_float(a)},{_fmt_float(b.real)},{_fmt_float(b.imag)},{_fmt_float(c)}" for a, b, c in zip(x, A, B)]
    Path(path).write_text("\n".join(lines) + "\n")


_META = re.compile(r"(\w+)=(\S+)")


def read_field_csv(path) -> FieldTable:
    try:
        text = Path(path).read_text().splitlines()
    except FileNotFoundError as exc:
        raise errors.ValidationError(f"file not found: {path}") from exc
    if len(text) < 2 or not text[0].startswith("#") or text[1].strip() != "x,reA,imA,B":
        raise errors.ValidationError(f"{path}: expected a '# t=...' line and the header x,reA,imA,B")
    meta = dict(_META.findall(text[0]))
    try:
        t, alpha, beta = float(meta["t"]), float(meta["alpha"]), float(meta["beta"])
        rows = np.array([[float(v) for v in line.split(",")] for line in text[2:] if line.strip()], dtype=float)
    except (KeyError, ValueError) as exc:
        raise errors.ValidationError(f"{path}: malformed field file ({exc})") from exc
    rows = rows.reshape(-1, 4)
    return FieldTable(t, alpha, beta, rows[:, 0], rows[:, 1] + 1j * rows[:, 2], rows[:, 3])


def format_t(t: float) -> str:
    """Compact time label for file names, e.g. 2.5 -> '2.5', 10.0 -> '10'."""
    return "%.10g" % t


# --- run configuration ------------------------------------------------------------

PROFILE_KINDS = ("sech", "gaussian", "zero", "one_soliton", "random", "samples")


def grid_from(cfg: dict, default=(-30.0, 30.0, 6001)) -> np.ndarray:
    g = cfg.get("grid", {})
    x_min = float(g.get("x_min", default[0]))
    x_max = float(g.get("x_max", default[1]))
    n = int(g.get("n_points", default[2]))
    if not x_min < x_max or n < 2:
        raise errors.ValidationError(f"bad grid: x_min={x_min}, x_max={x_max}, n_points={n}")
    return np.linspace(x_min, x_max, n)


def profile_from_config(cfg: dict, seed: int | None = None) -> InitialProfile:
    """Build the initial slice described by ``cfg["profile"]``.

    Kinds: sech / gaussian (``amplitude``, ``center``, ``width``, optional
    ``phase``), zero, one_soliton (``k1`` as [re, im], optional ``t``),
    random (``n_bumps`` Gaussian bumps drawn with ``seed``) and samples
    (a field CSV at ``file``, whose own grid is used).
    """
    try:
        alpha = float(cfg["alpha"])
        beta = float(cfg["beta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.ValidationError("config needs numeric alpha and beta") from exc
    spec = cfg.get("profile", {"kind": "zero"})
    kind = spec.get("kind", "sech")
    if kind not in PROFILE_KINDS:
        raise errors.ValidationError(f"unknown profile kind {kind!r}; choose from {PROFILE_KINDS}")
    if kind == "samples":
        table = read_field_csv(spec["file"])
        return InitialProfile(table.x, table.A, alpha, beta)
    x = grid_from(cfg)
    if kind == "zero":
        A0 = np.zeros_like(x, dtype=complex)
    elif kind in ("sech", "gaussian"):
        amp = float(spec.get("amplitude", 1.0))
        c = float(spec.get("center", 0.0))
        w = float(spec.get("width", 1.0))
        shape = 1.0 / np.cosh((x - c) / w) if kind == "sech" else np.exp(-(((x - c) / w) ** 2))
        A0 = amp * shape * np.exp(1j * float(spec.get("phase", 0.0)))
    elif kind == "one_soliton":
        from .soliton_engine import one_soliton_closed

        k1 = parse_complex(spec.get("k1"), "profile k1")
        A0, _ = one_soliton_closed(k1, x, float(spec.get("t", 0.0)), alpha, beta)
    else:
        rng = np.random.default_rng(seed if seed is not None else spec.get("seed", 0))
        A0 = np.zeros_like(x, dtype=complex)
        for _ in range(int(spec.get("n_bumps", 3))):
            amp = rng.uniform(0.05, 0.5) * np.exp(2j * np.pi * rng.uniform())
            A0 += amp * np.exp(-((x - rng.uniform(-3, 3)) ** 2) / rng.uniform(0.5, 2.0))
    return InitialProfile(x, A0, alpha, beta)
