"""Command-line entry point ``abist``.

Settings come from a JSON config (``--config``); command-line flags
override config fields, which override built-in defaults.  Exit codes: 0 on
success, 1 for invalid input, 2 when a numerical check fails.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import errors, formats
from .spectral_transform import compute_scattering_data, default_kgrid, find_discrete_spectrum, norming_constants


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg = formats.read_json(path)
    if not isinstance(cfg, dict):
        raise errors.ValidationError("config must be a JSON object")
    return cfg


def _set_threads(n: int | None) -> None:
    if n is None:
        env = os.environ.get("ABIST_THREADS")
        if not env:
            return
        try:
            n = int(env)
        except ValueError as exc:
            raise errors.ValidationError(f"ABIST_THREADS must be an integer, got {env!r}") from exc
    if n < 1:
        raise errors.ValidationError("--threads must be at least 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _pick(flag, cfg: dict, key: str, default):
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _kgrid(args, cfg: dict) -> np.ndarray:
    kg = cfg.get("kgrid", {})
    return default_kgrid(
        float(_pick(args.kmin, kg, "k_min", 0.05)),
        float(_pick(args.kmax, kg, "k_max", 5.0)),
        int(_pick(args.nk, kg, "nk", 200)),
    )


def _t_list(args, cfg: dict) -> list[float]:
    if args.t_list:
        try:
            return [float(v) for v in args.t_list.split(",") if v.strip()]
        except ValueError as exc:
            raise errors.ValidationError(f"--t-list must be comma-separated numbers, got {args.t_list!r}") from exc
    if args.t is not None:
        return [args.t]
    if "t_list" in cfg:
        return [float(v) for v in cfg["t_list"]]
    return [float(cfg.get("t", 0.0))]


def _cone(args, cfg: dict):
    from .phase_geometry import ConeSpec

    text = args.cone if args.cone is not None else cfg.get("cone")
    if text is None:
        raise errors.ValidationError("a cone is required (--cone x1,x2,v1,v2)")
    if isinstance(text, (list, tuple)):
        text = ",".join(str(v) for v in text)
    return ConeSpec.parse(str(text))


def _out(args, default: str) -> str:
    return args.out if args.out else default


# --- commands ----------------------------------------------------------------


def cmd_scatter(args, cfg: dict) -> int:
    profile = formats.profile_from_config(cfg, args.seed)
    data = compute_scattering_data(profile, _kgrid(args, cfg), find_modes=not args.no_modes)
    out = _out(args, "scattering.json")
    formats.write_json(out, formats.scattering_to_json(data))
    print(f"wrote {out}: {data.kgrid.size} samples, {len(data.modes)} modes, "
          f"max unitarity residual {np.max(data.unitarity_residual):.2e}")
    return 0


def cmd_spectrum(args, cfg: dict) -> int:
    profile = formats.profile_from_config(cfg, args.seed)
    modes = norming_constants(profile, find_discrete_spectrum(profile))
    out = _out(args, "modes.json")
    formats.write_json(out, {"modes": formats.modes_to_json(modes)})
    print(f"wrote {out}: {len(modes)} modes")
    return 0


def _modes_input(args, cfg: dict):
    if args.modes:
        obj = formats.read_json(args.modes)
        items = obj.get("modes") if isinstance(obj, dict) else obj
    else:
        items = cfg.get("modes", [])
    return formats.modes_from_json(items)


def cmd_soliton(args, cfg: dict) -> int:
    from .soliton_engine import ReflectionlessData, synthesize_field

    try:
        alpha, beta = float(cfg.get("alpha", -2.0)), float(cfg.get("beta", 1.0))
    except (TypeError, ValueError) as exc:
        raise errors.ValidationError("alpha and beta must be numbers") from exc
    modes = _modes_input(args, cfg)
    x = formats.grid_from(cfg, default=(-20.0, 20.0, 401))
    data = ReflectionlessData(modes, alpha, beta)
    outs = []
    for t in _t_list(args, cfg):
        fld = synthesize_field(data, x, t)
        out = _out(args, "soliton.csv")
        if len(_t_list(args, cfg)) > 1:
            out = f"{Path(out).with_suffix('')}_t{formats.format_t(t)}.csv"
        formats.write_field_csv(out, t, alpha, beta, x, fld.A, fld.B)
        outs.append(out)
    print("wrote " + ", ".join(outs))
    return 0


def cmd_evolve(args, cfg: dict) -> int:
    from .ab_evolver import evolve, peak_position

    ev = cfg.get("evolve", {})
    dt = float(_pick(args.dt, ev, "dt", 0.005))
    t_final = float(_pick(args.t_final, ev, "t_final", 1.0))
    every = int(_pick(args.snapshot_every, ev, "snapshot_every", 0)) or None
    if dt > 0.01:
        raise errors.ValidationError(f"dt = {dt} exceeds dt_max = 0.01")
    profile = formats.profile_from_config(cfg, args.seed)
    traj = evolve(profile, t_final, dt, snapshot_every=every)
    prefix = _out(args, "trajectory")
    files, peaks, times = [], [], []
    for snap in traj.snapshots:
        name = f"{prefix}_t{formats.format_t(snap.t)}.csv"
        formats.write_field_csv(name, snap.t, snap.alpha, snap.beta, snap.x, snap.A, snap.B)
        files.append(Path(name).name)
        times.append(snap.t)
        peaks.append(peak_position(snap))
    meta = {
        "dt": dt,
        "dx": traj.dx,
        "compat_residuals": traj.compat_residuals,
        "max_compat_residual": traj.max_compat,
        "times": times,
        "files": files,
        "peak_positions": peaks,
    }
    if len(times) >= 2 and max(np.max(np.abs(s.A)) for s in traj.snapshots) > 0:
        meta["peak_speed"] = float(np.polyfit(times, peaks, 1)[0])
    formats.write_json(f"{prefix}_meta.json", meta)
    msg = f"wrote {len(files)} snapshots with prefix {prefix}"
    if "peak_speed" in meta:
        msg += f"; peak speed {meta['peak_speed']:.6f}"
    print(msg)
    return 0


def cmd_asymptote(args, cfg: dict) -> int:
    from .pc_asymptotics import AsymptoticModel

    if not args.scattering:
        raise errors.ValidationError("asymptote needs a scattering JSON file (positional argument)")
    data = formats.scattering_from_json(formats.read_json(args.scattering))
    cone = _cone(args, cfg)
    opts = cfg.get("asymptote", {})
    model = AsymptoticModel(
        data,
        cone,
        variant=opts.get("variant", "cone"),
        t0_form=opts.get("t0_form", "T0"),
        b_form=opts.get("b_form", "printed"),
        ln_sign=int(opts.get("ln_sign", -1)),
    )
    prefix = _out(args, "asymptote")
    n = int(opts.get("n_points", args.nx))
    for t in _t_list(args, cfg):
        if not t > 0:
            raise errors.ValidationError("asymptotic evaluation needs t > 0")
        if "grid" in cfg:
            x = formats.grid_from(cfg)
        else:
            lo, hi = cone.cross_section(t)
            x = np.linspace(lo, hi, n)
        A = np.empty(x.size, complex)
        B = np.empty(x.size)
        points = []
        for i, xi in enumerate(x):
            A[i], B[i], coeffs = model.evaluate(float(xi), t)
            points.append({"x": float(xi), **coeffs.to_json()})
        formats.write_field_csv(f"{prefix}_t{formats.format_t(t)}.csv", t, data.alpha, data.beta, x, A, B)
        formats.write_json(f"{prefix}_t{formats.format_t(t)}.json", {"t": t, "points": points})
    print(f"wrote asymptotic fields with prefix {prefix}")
    return 0


def cmd_compare(args, cfg: dict) -> int:
    from .compare import compare_fields

    files = args.files
    if len(files) < 2 or len(files) % 2:
        raise errors.ValidationError("compare takes pairs of field files: A1 B1 [A2 B2 ...]")
    tables = [formats.read_field_csv(f) for f in files]
    pairs = list(zip(tables[0::2], tables[1::2]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = compare_fields(pairs)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _out(args, "report.json")
    formats.write_json(out, report.to_json())
    print(f"wrote {out}: linf={report.linf:.3e} l2={report.l2:.3e}")
    return 0


COMMANDS = {
    "scatter": cmd_scatter,
    "spectrum": cmd_spectrum,
    "soliton": cmd_soliton,
    "evolve": cmd_evolve,
    "asymptote": cmd_asymptote,
    "compare": cmd_compare,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors, so they exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Let '--cone -1,1,0.5,2' through: argparse would take the value for an option."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--cone", "--t-list") and i + 1 < len(argv) and argv[i + 1][:2].lstrip("-")[:1].isdigit() and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output file or prefix")
    common.add_argument("--threads", type=int, help="cap on worker threads (falls back to ABIST_THREADS)")
    common.add_argument("--seed", type=int, help="seed for randomized profiles")
    common.add_argument("--kmin", type=float)
    common.add_argument("--kmax", type=float)
    common.add_argument("--nk", type=int)
    common.add_argument("--cone", help="x1,x2,v1,v2")
    common.add_argument("--t", type=float, help="single evaluation time")
    common.add_argument("--t-list", dest="t_list", help="comma-separated evaluation times")
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", dest="t_final", type=float)

    parser = _Parser(prog="abist", description="Inverse scattering toolkit for the AB system")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("scatter", parents=[common], help="direct scattering transform of a profile")
    p.add_argument("--no-modes", action="store_true", help="skip the discrete spectrum search")
    sub.add_parser("spectrum", parents=[common], help="discrete eigenvalues and norming constants")
    p = sub.add_parser("soliton", parents=[common], help="N-soliton field from a modes file")
    p.add_argument("--modes", help="modes JSON ({\"modes\": [{\"k\": [re, im], \"c\": [re, im]}]})")
    p = sub.add_parser("evolve", parents=[common], help="direct integration of the AB system")
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p = sub.add_parser("asymptote", parents=[common], help="long-time asymptotic field on a cone")
    p.add_argument("scattering", nargs="?", help="scattering JSON from the scatter command")
    p.add_argument("--nx", type=int, default=101, help="points across the cone cross-section")
    p = sub.add_parser("compare", parents=[common], help="error norms and decay fits between field files")
    p.add_argument("files", nargs="*")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        _set_threads(args.threads)
        cfg = _load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except errors.ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except errors.NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid input ({exc})", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
