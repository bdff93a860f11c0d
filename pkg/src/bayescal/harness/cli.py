"""Command-line harness.

.. code-block:: text

    bayescal run <config.toml>        run chains, then diagnose + kl + report
    bayescal diagnose <campaign-dir>  recompute diagnostic reports
    bayescal kl <campaign-dir>        recompute the binned-divergence report
    bayescal report <campaign-dir>    reassemble report.json

Exit status: 0 when every configured chain completed and converged, 1 on a
sampling/diagnostic failure, 2 on a configuration error.  Relative output
directories resolve against ``--out-root``, the ``BAYESCAL_OUT_ROOT``
environment variable, or the configuration file's directory, in that order.
"""
from __future__ import annotations

import argparse
import sys

from ..errors import BayescalError, ConfigError, ValidationError
from .campaign import (OUTPUT_ROOT_ENV, assemble_report, diagnose, kl_report,
                       resolve_outdir, run_campaign)
from .config import load_config

__all__ = ["main", "parse_mesh_spec"]


def parse_mesh_spec(spec: str) -> tuple:
    """``"N1xN2x...:z"`` -> (bins, z); bins an int or per-dimension tuple.

    ``"32:4"`` means 32 bins in every dimension at half-width 4 pooled
    standard deviations; ``"15x15x10"`` sets per-dimension bins and keeps the
    configured z.
    """
    body, sep, ztxt = spec.partition(":")
    z = None
    if sep:
        try:
            z = float(ztxt)
        except ValueError:
            raise ConfigError(f"--mesh: z must be a number, got {ztxt!r}") from None
        if not z > 0:
            raise ConfigError(f"--mesh: z must be positive, got {z}")
    parts = body.split("x")
    try:
        bins = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--mesh: expected N1xN2...[:z], got {spec!r}") from None
    if any(b < 1 for b in bins):
        raise ConfigError(f"--mesh: bin counts must be positive, got {spec!r}")
    return (bins[0] if len(bins) == 1 else bins), z


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bayescal",
        description="Benchmark Bayesian calibration samplers on constitutive "
                    "models.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign from a config file")
    run.add_argument("config", help="path to the TOML run configuration")
    run.add_argument("--out-root", default=None,
                     help=f"root for relative output dirs "
                          f"(overrides ${OUTPUT_ROOT_ENV})")
    run.add_argument("--skip-kl", action="store_true",
                     help="skip the reference-mesh divergence stage")
    run.add_argument("--quiet", action="store_true", help="suppress progress")

    diag = sub.add_parser("diagnose", help="recompute diagnostic reports")
    diag.add_argument("dir", help="campaign directory (holds config.toml)")
    diag.add_argument("--quiet", action="store_true")

    kl = sub.add_parser("kl", help="recompute the binned-divergence report")
    kl.add_argument("dir", help="campaign directory (holds config.toml)")
    kl.add_argument("--mesh", default=None, metavar="N1xN2...[:z]",
                    help='mesh override, e.g. "32x32:4" or "15:3"')
    kl.add_argument("--max-cells", type=int, default=None,
                    help="override the configured reference-cell budget")
    kl.add_argument("--quiet", action="store_true")

    rep = sub.add_parser("report", help="reassemble report.json")
    rep.add_argument("dir", help="campaign directory (holds config.toml)")
    rep.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    say = (lambda msg: None) if args.quiet else (
        lambda msg: print(msg, file=sys.stderr, flush=True))

    try:
        if args.command == "run":
            cfg = load_config(args.config)
            outdir = resolve_outdir(cfg, args.out_root)
            say(f"campaign directory: {outdir}")
            summary = run_campaign(cfg, out_root=args.out_root, log=say)
            diagnose(outdir, log=say)
            if args.skip_kl:
                say("divergence stage skipped (--skip-kl)")
            else:
                try:
                    kl_report(outdir, log=say)
                except ValidationError as exc:
                    say(f"divergence stage skipped: {exc}")
            report = assemble_report(outdir, log=say)
            return 0 if (report["all_completed"] and not summary["failures"]) else 1

        if args.command == "diagnose":
            diagnose(args.dir, log=say)
            report = assemble_report(args.dir, log=say)
            return 0 if report["all_completed"] else 1

        if args.command == "kl":
            bins = z = None
            if args.mesh is not None:
                bins, z = parse_mesh_spec(args.mesh)
            kl_report(args.dir, bins=bins, z=z, max_cells=args.max_cells,
                      log=say)
            report = assemble_report(args.dir, log=say)
            return 0 if report["all_completed"] else 1

        report = assemble_report(args.dir, log=say)
        return 0 if report["all_completed"] else 1

    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except BayescalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
