"""``elastic-ep <coupling|states|readout> --config FILE [--out DIR]``.

Outputs go to ``<DIR>/<scenario>/``. The output root is taken from ``--out``,
else from the ``ELASTIC_EP_OUT`` environment variable, else from
``run.output_dir`` in the config, else ``./out``.

Exit codes: 0 success, 2 configuration error, 3 physics-domain error,
4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import load_config
from .errors import ConfigError, ElasticEPError
from .scenarios import RUNNERS

ENV_OUT = "ELASTIC_EP_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("elastic_ep")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elastic-ep", description="Elastic electron-photon coupling scenarios.")
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="YAML scenario file")
    p.add_argument("--out", default=None, help=f"output root (default: ${ENV_OUT}, run.output_dir, ./out)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def output_root(cli_out: Optional[str], config_out: Optional[str]) -> Path:
    for candidate in (cli_out, os.environ.get(ENV_OUT), config_out):
        if candidate:
            return Path(candidate)
    return Path("out")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    scenario = "?"
    try:
        cfg = load_config(args.config)
        scenario = cfg.scenario
        out = output_root(args.out, cfg.run.output_dir) / cfg.scenario
        report = RUNNERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"elastic-ep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ElasticEPError, ArithmeticError) as exc:
        print(f"elastic-ep: [{scenario}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"elastic-ep: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, (value, unit) in report.scalars.items():
        log.info("%s = %.6g %s", name, value, unit)
    print(out / f"{args.command}_report.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
