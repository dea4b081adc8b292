"""``layerspectra <command> --config path [--out dir] [--workers N]``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from ..errors import AdmissibilityError, ConfigError, LayerSpectraError
from .config import load_config
from .records import read_record, write_text
from .report import render_report, render_sweep_report
from .runner import (
    EXIT_INADMISSIBLE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_SCHEMA,
    output_root,
    run_dir_for,
    run_pipeline,
)
from .sweep import run_sweep

log = logging.getLogger("layerspectra")

SINGLE = ("validate", "invariants", "certify", "solve")


def build_parser():
    p = argparse.ArgumentParser(prog="layerspectra", description="Bound states of quantum layers over rotational hypersurfaces.")
    p.add_argument("command", choices=SINGLE + ("sweep", "report"))
    p.add_argument("--config", required=True, help="run configuration (JSON, schema v1)")
    p.add_argument("--out", default=None, help="output root (default: $LAYERSPECTRA_OUT or ./runs)")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep points")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def _report(cfg, root):
    """Render report.md + SVGs from whatever records exist for this config."""
    if cfg.sweep is not None:
        sweep_dir = run_dir_for(root, "sweep", cfg)
        rec = read_record(sweep_dir)
        if rec is None:
            md, svgs = "# Sweep report\n\n_not available: no stored sweep record_\n", {}
        else:
            md, svgs = render_sweep_report(rec)
        target = sweep_dir
    else:
        records, dirs = [], []
        # richest record first so its blobs win the merge
        for cmd in ("certify", "solve", "invariants", "validate"):
            d = run_dir_for(root, cmd, cfg)
            rec = read_record(d)
            if rec is not None:
                records.append(rec)
                dirs.append(d)
        md, svgs = render_report(records, dirs)
        if not records:
            md = md + "\nNo stored records were found for this configuration.\n"
        target = run_dir_for(root, "report", cfg)
    os.makedirs(target, exist_ok=True)
    write_text(os.path.join(target, "report.md"), md)
    for name, text in svgs.items():
        write_text(os.path.join(target, name), text)
    return target


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    if args.workers < 1:
        log.error("--workers must be at least 1")
        return EXIT_SCHEMA
    try:
        cfg = load_config(args.config)
        root = output_root(args.out)
        if args.command == "report":
            target = _report(cfg, root)
            log.info("report written to %s", target)
            return EXIT_OK
        if args.command == "sweep":
            sweep_dir = run_dir_for(root, "sweep", cfg)
            record, code = run_sweep(cfg, sweep_dir, args.workers)
            md, svgs = render_sweep_report(record)
            write_text(os.path.join(sweep_dir, "report.md"), md)
            for name, text in svgs.items():
                write_text(os.path.join(sweep_dir, name), text)
            log.info("%s\n%s", sweep_dir, record["verdict"])
            return code
        run_dir = run_dir_for(root, args.command, cfg)
        record, code = run_pipeline(args.command, cfg, run_dir)
        log.info("%s\n%s", run_dir, record["verdict"])
        return code
    except ConfigError as exc:
        log.error("schema error: %s", exc)
        return EXIT_SCHEMA
    except AdmissibilityError as exc:
        log.error("inadmissible layer: %s", exc)
        return EXIT_INADMISSIBLE
    except (LayerSpectraError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        log.error("numerical failure: %s: %s", type(exc).__name__, exc)
        return EXIT_NUMERICAL


def entry():
    sys.exit(main())
