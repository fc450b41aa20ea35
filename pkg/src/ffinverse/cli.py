"""Command-line front end.

Every option can also be given in a flat ``key = value`` config file
(``--config``); keys are the long option names with dashes or underscores,
and command-line flags override the file.  Exit codes: 0 success or match,
1 mismatch, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from .errors import FFError, InputError
from .flows import THREADS_ENV, PathInC

log = logging.getLogger("ffinverse")

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


# --- parsing helpers --------------------------------------------------------------

def _positive(x: str) -> float:
    v = float(x)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {x!r}")
    return v


def _positive_int(x: str) -> int:
    v = int(x)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {x!r}")
    return v


def _half_integer(x: str) -> float:
    v = float(x)
    if v <= 0 or abs(2 * v - round(2 * v)) > 1e-12:
        raise argparse.ArgumentTypeError(f"spin must be a positive half-integer, got {x!r}")
    return round(2 * v) / 2


def _pair(x: str) -> tuple:
    try:
        a, b = (float(s) for s in x.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {x!r}") from None
    return (a, b)


def _floats(x: str) -> list:
    try:
        v = [float(s) for s in x.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {x!r}") from None
    if not v or any(not (h > 0) for h in v):
        raise argparse.ArgumentTypeError(f"expected positive values, got {x!r}")
    return v


def _coeffs(x: str) -> dict:
    """'1,0:0.3; 0,1:0.2' -> {(1, 0): 0.3, (0, 1): 0.2}."""
    out = {}
    for item in x.replace(" ", "").split(";"):
        if not item:
            continue
        try:
            m, v = item.split(":")
            i, j = (int(s) for s in m.split(","))
            out[(i, j)] = float(v)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad coefficient {item!r}; use 'i,j:value'") from None
    return out


def read_config(path: str) -> dict:
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


# --- output ---------------------------------------------------------------------------

def atomic_write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _read_spectra(path: str):
    from .quantum import spectra_from_csv
    with open(path, encoding="utf-8") as fh:
        return spectra_from_csv(fh.read())


def _normalization(args):
    if args.normalize == "none":
        return None
    from .models import CoupledSpins, quadratic_normalization
    return quadratic_normalization(CoupledSpins(args.t, args.R)).normalization


# --- commands --------------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    from .quantum import joint_spectrum_coupled, spectra_to_csv
    spec = joint_spectrum_coupled(args.j1, args.j2, args.t)
    atomic_write(args.out, spectra_to_csv([spec]))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .invariant import ActionModelParams, TaylorPoly
    from .quantum import Annulus, BSGenerator, JointSpectrum, bs_synthesize, spectra_to_csv
    co = args.coeffs
    order = max([i + j for i, j in co] + [1])
    if order > 4:
        raise InputError("Taylor order must be at most 4")
    S = TaylorPoly(order, co)
    gen = BSGenerator(ActionModelParams(args.K, S, -1), args.hbar,
                      Annulus(args.r_max, args.r_min_factor), g1=args.g1)
    specs = bs_synthesize(gen)
    if args.noise:
        rng = np.random.default_rng(args.seed)
        specs = [JointSpectrum(s.hbar, s.points + rng.uniform(-1, 1, s.points.shape) * args.noise
                               * s.hbar ** 2, s.provenance) for s in specs]
    atomic_write(args.out, spectra_to_csv(specs))
    return EXIT_OK


def _model(args):
    from .models import ChampagneBottle, CoupledSpins
    if args.model == "coupled":
        return CoupledSpins(args.t, args.R, args.h_scale)
    return ChampagneBottle(args.h_scale)


def cmd_invariant_classical(args) -> int:
    from .inverse import classical_invariant
    rep = classical_invariant(_model(args), args.order, args.h, args.annulus)
    out = rep.to_json()
    out["model"] = _model(args).model_id
    atomic_write(args.out, dump_json(out))
    return EXIT_OK


def _chart_kw(args):
    return dict(target=args.target, r_min=args.r_min)


def cmd_invariant_spectral(args) -> int:
    from .inverse import reconstruct_invariant
    specs = _read_spectra(args.input)
    rep = reconstruct_invariant(specs, args.c0, args.order, L=_normalization(args),
                                annulus=args.annulus, n_rings=args.rings, **_chart_kw(args))
    atomic_write(args.out, dump_json(rep.to_json()))
    return EXIT_OK


def cmd_monodromy(args) -> int:
    from .lattice import transport_loop
    specs = _read_spectra(args.input)
    spec = min(specs, key=lambda s: s.hbar)
    L = _normalization(args)
    spec = spec.transformed(np.eye(2) if L is None else L, args.c0)
    loop = PathInC.circle(args.radius, args.centers)
    res = transport_loop(spec, loop, c0=(0.0, 0.0), **_chart_kw(args))
    out = res.to_json()
    out["hbar"] = spec.hbar
    atomic_write(args.out, dump_json(out))
    return EXIT_OK


def cmd_compare(args) -> int:
    from .inverse import compare_systems
    A, B = _read_spectra(args.a), _read_spectra(args.b)
    rep = compare_systems(A, B, args.annulus, args.tol, args.order, args.c0, **_chart_kw(args))
    atomic_write(args.out, dump_json(rep.to_json()))
    print(str(rep.verdict), file=sys.stderr)
    return EXIT_OK if rep.verdict.kind == "Match" else EXIT_MISMATCH


def cmd_plot(args) -> int:
    from .plotting import spectrum_svg
    specs = _read_spectra(args.input)
    atomic_write(args.out, spectrum_svg(specs, args.c0, args.title))
    return EXIT_OK


# --- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ffinverse", description=__doc__.splitlines()[0])
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output file (default: stdout)"):
        sp.add_argument("--config", help="flat 'key = value' file; flags override it")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker processes for flow batches (or ${THREADS_ENV})")
        sp.add_argument("--out", default=None, help=out_help)

    def spins(sp):
        sp.add_argument("--t", type=float, default=0.5)
        sp.add_argument("--R", type=_positive, default=1.0)

    def charts(sp):
        sp.add_argument("--c0", type=_pair, default=(0.0, 0.0), help="singular value 'a,b'")
        sp.add_argument("--target", type=_positive_int, default=100, help="points per chart window")
        sp.add_argument("--r-min", type=float, default=None,
                        help="exclusion radius around c0 (default 25 hbar)")
        sp.add_argument("--normalize", choices=["none", "coupled"], default="none",
                        help="map spectra to normalized coordinates of a model first")
        spins(sp)

    sp = sub.add_parser("spectrum", help="joint spectrum of coupled spins as CSV")
    common(sp)
    sp.add_argument("--model", choices=["coupled"], default="coupled")
    sp.add_argument("--j1", type=_half_integer, default=None)
    sp.add_argument("--j2", type=_half_integer, default=None)
    spins(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("synth", help="synthetic Bohr-Sommerfeld spectra as CSV")
    common(sp)
    sp.add_argument("--coeffs", type=_coeffs, default={}, help="Taylor coefficients 'i,j:v;...'")
    sp.add_argument("--K", type=float, default=0.0)
    sp.add_argument("--hbar", type=_floats, default=[1e-3], help="comma-separated hbar values")
    sp.add_argument("--r-max", type=_positive, default=0.3)
    sp.add_argument("--r-min-factor", type=float, default=25.0)
    sp.add_argument("--g1", type=_pair, default=None, help="constant subprincipal shift 'a,b'")
    sp.add_argument("--noise", type=float, default=0.0, help="uniform noise in units of hbar^2")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("invariant-classical", help="Taylor invariant from Hamiltonian flows")
    common(sp)
    sp.add_argument("--model", choices=["coupled", "champagne"], default="coupled")
    spins(sp)
    sp.add_argument("--h-scale", type=_positive, default=1.0)
    sp.add_argument("--order", type=int, choices=[1, 2, 3, 4], default=3)
    sp.add_argument("--h", type=_positive, default=0.03, help="coarse grid spacing")
    sp.add_argument("--annulus", type=_pair, default=(0.15, 0.35))
    sp.set_defaults(func=cmd_invariant_classical)

    sp = sub.add_parser("invariant-spectral", help="Taylor invariant from a joint spectrum")
    common(sp)
    sp.add_argument("--input", default=None)
    charts(sp)
    sp.add_argument("--order", type=int, choices=[1, 2, 3, 4], default=3)
    sp.add_argument("--annulus", type=_pair, default=None)
    sp.add_argument("--rings", type=_positive_int, default=4)
    sp.set_defaults(func=cmd_invariant_spectral)

    sp = sub.add_parser("monodromy", help="lattice monodromy around c0")
    common(sp)
    sp.add_argument("--input", default=None)
    charts(sp)
    sp.add_argument("--radius", type=_positive, default=0.15)
    sp.add_argument("--centers", type=_positive_int, default=16)
    sp.set_defaults(func=cmd_monodromy)

    sp = sub.add_parser("compare", help="compare the invariants of two spectrum families")
    common(sp)
    sp.add_argument("--a", default=None)
    sp.add_argument("--b", default=None)
    charts(sp)
    sp.add_argument("--order", type=int, choices=[1, 2, 3, 4], default=3)
    sp.add_argument("--annulus", type=_pair, default=None)
    sp.add_argument("--tol", type=_positive, default=0.01)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("plot", help="SVG scatter plot of a spectrum file")
    common(sp, "SVG file (default: stdout)")
    sp.add_argument("--input", default=None)
    sp.add_argument("--c0", type=_pair, default=None)
    sp.add_argument("--title", default=None)
    sp.set_defaults(func=cmd_plot)
    return p


REQUIRED = {"spectrum": ("j1", "j2"), "invariant-spectral": ("input",), "monodromy": ("input",),
            "compare": ("a", "b"), "plot": ("input",)}


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest for a in sub._actions} - {"help", "config"}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            raise UsageError(f"unknown config key(s) for {args.command}: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    missing = [k for k in REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) "
                         + ", ".join("--" + k.replace("_", "-") for k in missing))
    return args


def run(args: argparse.Namespace) -> int:
    if args.threads:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"ffinverse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FFError as exc:
        print(f"ffinverse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except (UsageError, OSError) as exc:
        print(f"ffinverse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
