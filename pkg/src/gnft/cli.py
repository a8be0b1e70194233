"""Command-line driver: forward/inverse transforms, channel propagation, sweeps."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SsfmConfig, propagate, wraparound_margin
from .direct import SearchConfig, gnft
from .envelope import NORMALIZED, PHYSICAL, PhysicalParams
from .inverse import GlmeConfig, KSolitonSpec, glme_solve, ksoliton
from .io import (
    read_envelope,
    read_spectrum,
    write_envelope_csv,
    write_metadata,
    write_spectrum,
)
from .sweeps import run_sweep


def _add_forward(sub):
    p = sub.add_parser("forward", help="direct transform of an envelope file")
    p.add_argument("envelope")
    p.add_argument("--search-box", help="re_min,re_max,im_min,im_max")
    p.add_argument("--mode", default="auto", help="auto | simple | mult:L")
    p.add_argument("--grid", default="32,32", help="seed grid nx,ny")
    p.add_argument("--lam-grid", help="continuous grid min,max,n")
    p.add_argument("--out", default="spectrum.json")
    p.add_argument("--metadata")


def _add_inverse(sub):
    p = sub.add_parser("inverse", help="inverse transform of a spectrum file")
    p.add_argument("spectrum")
    p.add_argument("--method", choices=("glme", "closed"), default="glme")
    p.add_argument("--t-grid", default="-12,0.01,2401", help="t_start,dt,n")
    p.add_argument("--z", type=float, default=0.0, help="closed form: evaluation distance")
    p.add_argument("--quad-n", type=int, default=257)
    p.add_argument("--s-max", type=float)
    p.add_argument("--out", default="envelope.csv")
    p.add_argument("--metadata")


def _add_propagate(sub):
    p = sub.add_parser("propagate", help="split-step propagation of an envelope file")
    p.add_argument("envelope")
    p.add_argument("--params", help="JSON file with beta2,gamma,span_length,n_ase,alpha,t0")
    p.add_argument("--noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--dz", type=float)
    p.add_argument("--z", type=float, help="distance override (required in normalized units)")
    p.add_argument("--out", default="propagated.csv")
    p.add_argument("--metadata")


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run one experiment reproduction")
    p.add_argument("experiment", choices=("truncation", "sampling", "attenuation", "noise", "link"))
    p.add_argument("--config", help="JSON file overriding the experiment defaults")
    p.add_argument("--out", required=True)
    p.add_argument("--metadata")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gnft", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gnft {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_forward(sub)
    _add_inverse(sub)
    _add_propagate(sub)
    _add_sweep(sub)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return {
        "forward": _cmd_forward,
        "inverse": _cmd_inverse,
        "propagate": _cmd_propagate,
        "sweep": _cmd_sweep,
    }[args.command](args)


def _meta_path(args, default_stem: str) -> Path:
    if args.metadata:
        return Path(args.metadata)
    return Path(default_stem).with_suffix(".meta.json")


def _cmd_forward(args) -> int:
    env = read_envelope(args.envelope)
    kwargs = {"mode": args.mode}
    if args.search_box:
        kwargs["box"] = tuple(float(v) for v in args.search_box.split(","))
    if args.grid:
        nx, ny = (int(v) for v in args.grid.split(","))
        kwargs["grid"] = (nx, ny)
    cfg = SearchConfig(**kwargs)
    lam_grid = None
    if args.lam_grid:
        lo, hi, n = args.lam_grid.split(",")
        lam_grid = np.linspace(float(lo), float(hi), int(n))
    spec = gnft(env, cfg, lam_grid)
    write_spectrum(args.out, spec)
    write_metadata(_meta_path(args, args.out), command="forward", mode=args.mode,
                   n_modes=len(spec.modes), envelope=str(args.envelope))
    print(f"wrote {args.out}: {len(spec.modes)} discrete mode(s)")
    return 0


def _cmd_inverse(args) -> int:
    spec = read_spectrum(args.spectrum)
    t_start, dt, n = args.t_grid.split(",")
    t_grid = float(t_start) + float(dt) * np.arange(int(n))
    if args.method == "glme":
        env = glme_solve(spec, GlmeConfig(t_grid, s_max=args.s_max, quad_n=args.quad_n))
    else:
        env = ksoliton(KSolitonSpec(spec.modes, args.z), t_grid)
    write_envelope_csv(args.out, env)
    write_metadata(_meta_path(args, args.out), command="inverse", method=args.method,
                   spectrum=str(args.spectrum))
    print(f"wrote {args.out}: {env.n} samples")
    return 0


def _cmd_propagate(args) -> int:
    env = read_envelope(args.envelope)
    params = None
    if args.params:
        params = PhysicalParams(**json.loads(Path(args.params).read_text()))
    units = env.units
    cfg = SsfmConfig(
        dz=args.dz if args.dz else (0.1 if units == PHYSICAL else 1e-4),
        seed=args.seed,
        noise=args.noise,
        alpha=args.alpha,
        units=units,
    )
    out = propagate(env, params, cfg, z=args.z)
    write_envelope_csv(args.out, out)
    write_metadata(
        _meta_path(args, args.out),
        command="propagate",
        seed=args.seed,
        dz=cfg.dz,
        alpha=cfg.alpha if cfg.alpha is not None else (params.alpha if params else 0.0),
        n_ase=params.n_ase if params else 0.0,
        noise=args.noise,
        wraparound_margin=wraparound_margin(out.samples),
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    config = json.loads(Path(args.config).read_text()) if args.config else {}
    rows = run_sweep(args.experiment, config, out=args.out)
    write_metadata(_meta_path(args, args.out), command="sweep", experiment=args.experiment,
                   config=config, rows=len(rows))
    print(f"wrote {args.out}: {len(rows)} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
