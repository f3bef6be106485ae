"""Command line entry points: ``skytrace run`` and ``skytrace validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ._version import __version__
from .ingest import IngestError, parse_config
from .sweep import build_scene_from_config, make_mapper, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skytrace",
        description="Site-specific radio ray tracing and MIMO channel-rank mapping",
    )
    parser.add_argument("--version", action="version", version=f"skytrace {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a full scenario sweep")
    run_p.add_argument("config", help="scenario config file")
    run_p.add_argument("--workers", type=int, default=1, help="worker processes over sites")
    run_p.add_argument("--out", default=None, help="output directory (default: <config stem>_out)")
    run_p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="accepted and ignored; the pipeline is deterministic (flag reserved)",
    )

    val_p = sub.add_parser("validate", help="parse a config and report scene statistics")
    val_p.add_argument("config", help="scenario config file")
    return parser


def _cmd_run(args) -> int:
    out_dir = Path(args.out) if args.out else Path(args.config).with_suffix("").name + "_out"
    if args.seed is not None:
        print("note: --seed is accepted but ignored (deterministic pipeline)")
    outcome = run_sweep(args.config, workers=max(1, args.workers), out_dir=out_dir)
    print(f"scenario : {outcome.config.name}")
    print(f"scene    : {len(outcome.scene.buildings)} buildings, {len(outcome.scene)} facets")
    for layer in outcome.layers:
        st = layer.stats
        n_cov = st.n_total - st.n_z - st.n_b
        print(
            f"altitude {layer.altitude_m:>6g} m: {n_cov}/{st.n_total} covered, "
            f"P_Z={st.p_z:.3f}, P_B={st.p_b:.3f}"
        )
    print(f"outputs  : {outcome.out_dir}")
    return 0


def _cmd_validate(args) -> int:
    config = parse_config(args.config)
    scene = build_scene_from_config(config)
    make_mapper(config, scene)  # checks the transmitter placement
    nx, ny = config.grid_shape
    print(f"scenario      : {config.name}")
    print(f"config digest : {config.source_digest}")
    print(f"scene digest  : {scene.digest}")
    print(f"buildings     : {len(scene.buildings)}")
    print(f"facets        : {len(scene)}")
    print(f"grid          : {nx} x {ny} = {nx * ny} sites per altitude")
    print(f"altitudes     : {', '.join(f'{a:g} m' for a in config.altitudes_m)}")
    print(f"tx position   : {tuple(round(float(v), 3) for v in config.tx_position)} (ENU meters)")
    print(f"criteria      : {', '.join(config.rank_criteria)}")
    print("config OK")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_validate(args)
    except (IngestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
