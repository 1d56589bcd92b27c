"""``moire-spectra`` command line.

Exit status: 0 when the run's verdict passes (or is an "insufficient ..."
note), 2 when an invariant verdict fails, 1 on configuration or IO errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import EXPERIMENTS, MODELS, RunConfig, load_config, run

# flag name -> config key
_FLAGS = {
    "L": "ladder", "theta": "theta", "lambda": "lam", "alpha": "alpha", "b": "b",
    "nodes": "nodes", "seed": "seed", "threads": "threads", "out": "out",
    "model": "model", "samples": "samples", "phases": "phases",
    "kernel": "kernel", "bandwidth": "bandwidth",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moire-spectra",
                                description="Spectra and DOS experiments for ergodic 1D operators.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--L", help="comma-separated ladder of window sizes")
    p.add_argument("--theta", type=float)
    p.add_argument("--lambda", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--nodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--samples", type=int)
    p.add_argument("--phases", type=int)
    p.add_argument("--kernel", choices=("gaussian", "lorentzian"))
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any other config key; repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg.update(load_config(args.config))
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for flag, key in _FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    cfg.update(overrides)
    cfg.experiment = args.experiment
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        summary = run(cfg)
    except (ValueError, OSError) as exc:
        print(f"moire-spectra: error: {exc}", file=sys.stderr)
        return 1
    verdict = summary["verdict"]
    print(f"{cfg.experiment}: {verdict} -> {cfg.out}")
    return 2 if verdict == "fail" else 0


if __name__ == "__main__":
    sys.exit(main())
