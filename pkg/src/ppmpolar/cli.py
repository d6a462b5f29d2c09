"""Command-line entry point: ``ppmpolar {capacity,mi,construct,simulate}``.

Negative power ranges must be attached with ``=``, e.g. ``--pav=-20:-10:0.5``.
"""

from __future__ import annotations

import argparse
import logging
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelParams
from .construction import METHODS, construct_mc, construct_surrogate
from .harness import DecoderConfig, run_sweep
from .modulation import bmd_rate, level_mi_profile, ppm_capacity, ppm_capacity_zero_noise
from .polar.code import CodeSpec, read_code_file, write_code_file
from .polar.crc import CrcSpec
from .polar.decode import ListCapacityError
from .polar.transform import is_power_of_two

log = logging.getLogger("ppmpolar")

EXIT_USAGE, EXIT_IO, EXIT_RESOURCE = 2, 3, 4


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[float]:
    """Parse ``start:stop:step`` (inclusive of ``stop`` when the step divides the span) or a single value."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected start:stop:step") from None
    if len(vals) == 1:
        return vals
    if len(vals) != 3:
        raise UsageError(f"bad range {text!r}, expected start:stop:step")
    start, stop, step = vals
    if step <= 0 or stop < start:
        raise UsageError(f"range {text!r} is empty or has a non-positive step")
    count = math.floor((stop - start) / step + 1e-9)
    return [round(start + i * step, 10) for i in range(count + 1)]


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        log.warning("no --seed given, using %d", args.seed)
    return args.seed


def _params(args, p_av_db: float) -> ChannelParams:
    return ChannelParams.from_pav_db(p_av_db, args.nb, args.M)


def _header(args, command: str, **extra) -> dict:
    fields = {"command": command, "version": __version__}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "command", "workers", "verbose"):
            continue
        fields[k] = v
    fields.update(extra)
    return fields


def _write_table(path, header: dict, columns, rows, footer=()) -> None:
    lines = [f"# {k} {v}" for k, v in header.items()]
    lines.append("# " + " ".join(columns))
    lines += [" ".join(repr(float(x)) if isinstance(x, float) else str(x) for x in row) for row in rows]
    lines += list(footer)
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _validate_channel(args) -> None:
    if args.M < 2 or not is_power_of_two(args.M):
        raise UsageError("--M must be a power of two >= 2")
    if args.nb < 0:
        raise UsageError("--nb must be non-negative")


def cmd_capacity(args) -> None:
    _validate_channel(args)
    points = parse_range(args.pav)
    rng = np.random.default_rng(_seed(args))
    rows = []
    for p in points:
        params = _params(args, p)
        if args.nb == 0:
            # noiseless: a detected pulse reveals every label bit, so BMD loses nothing
            cm = bicm = ppm_capacity_zero_noise(params)
            cm_se = bicm_se = 0.0
        else:
            c = ppm_capacity(params, args.samples, rng)
            b = bmd_rate(params, args.samples, rng)
            cm, cm_se, bicm, bicm_se = c.value, c.stderr, b.value, b.stderr
        rows.append((p, cm, bicm, cm_se, bicm_se))
    _write_table(args.out, _header(args, "capacity"), ("P", "cm", "bicm", "cm_se", "bicm_se"), rows)


def cmd_mi(args) -> None:
    _validate_channel(args)
    if args.nb == 0:
        raise UsageError("mi needs --nb > 0")
    points = parse_range(args.pav)
    if len(points) != 1:
        raise UsageError("mi takes a single --pav value")
    params = _params(args, points[0])
    rng = np.random.default_rng(_seed(args))
    prof = level_mi_profile(params, args.samples, rng)
    cap = ppm_capacity(params, args.samples, rng)
    rows = [(j + 1, mi, se) for j, (mi, se) in enumerate(zip(prof.per_level_mi, prof.standard_errors))]
    footer = (
        f"# sum {prof.total!r} {prof.total_stderr!r}",
        f"# M*C {args.M * cap.value!r} {args.M * cap.stderr!r}",
    )
    _write_table(args.out, _header(args, "mi", n_s=params.n_s), ("level", "mi", "stderr"), rows, footer)


def cmd_construct(args) -> None:
    _validate_channel(args)
    if not is_power_of_two(args.n):
        raise UsageError("--n must be a power of two")
    if not 0 < args.rate <= 1:
        raise UsageError("--rate must lie in (0, 1]")
    n_used = args.symbols or args.n
    if not 1 <= n_used <= args.n:
        raise UsageError("--symbols must lie in 1..n")
    points = parse_range(args.pav)
    if len(points) != 1:
        raise UsageError("construct takes a single --pav value")
    params = _params(args, points[0])
    m = params.m
    crc = None if args.crc in (None, "none") else _parse_crc(args.crc)
    k_info = round(args.rate * m * n_used)
    k_total = k_info + (crc.degree if crc else 0)
    if k_total > m * n_used:
        raise UsageError("rate too high to fit the CRC")
    seed = _seed(args)
    if args.method == "mc":
        if args.nb == 0:
            raise UsageError("mc construction needs --nb > 0")
        mask = construct_mc(params, args.n, k_total, args.trials, seed, n_used=n_used, workers=args.workers).frozen_mask
    else:
        if args.nb == 0:
            raise UsageError("surrogate constructions need --nb > 0 to estimate level MIs")
        prof = level_mi_profile(params, args.samples, np.random.default_rng(seed))
        rule = "ga" if args.method == "mi-dga" else "bec"
        mask = construct_surrogate(prof, args.n, k_total, rule, n_used)
    spec = CodeSpec(args.n, m, mask, k_info, crc, n_used)
    meta = {
        "P": points[0], "n_s": repr(params.n_s), "n_b": repr(args.nb), "method": args.method,
        "seed": seed, "samples": args.samples, "trials": args.trials,
    }
    spec.meta.update(meta)
    write_code_file(args.out, spec)


def _parse_crc(text: str) -> CrcSpec:
    try:
        return CrcSpec.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> None:
    try:
        spec = read_code_file(args.code)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read code file {args.code}: {exc}") from exc
    nb = args.nb if args.nb is not None else float(spec.meta.get("n_b", "nan"))
    if not nb >= 0:
        raise UsageError("--nb not given and not recorded in the code file")
    points = parse_range(args.pav)
    if args.lmax < 1 or args.lmax & (args.lmax - 1):
        raise UsageError("--lmax must be a power of two")
    if args.stop_errors < 1 or args.max_frames < 1:
        raise UsageError("--stop-errors and --max-frames must be positive")
    decoder = DecoderConfig(args.lmax, args.lstart, args.minsum, args.exact_metric)
    seed = _seed(args)
    header = _header(args, "simulate", M=1 << spec.m, n=spec.n, m=spec.m, n_used=spec.n_used,
                     k_info=spec.k_info, crc=spec.crc or "none", nb_effective=nb)
    run_sweep(
        spec, nb, points, decoder, args.stop_errors, args.max_frames, seed, args.workers,
        results_path=args.out, hist_path=args.hist or f"{args.out}.hist", resume=args.resume,
        header=header,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppmpolar", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def channel_opts(p, pav_help):
        p.add_argument("--M", type=int, default=64, help="PPM order")
        p.add_argument("--nb", type=float, default=0.2, help="noise photons per slot")
        p.add_argument("--pav", required=True, help=pav_help)
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo symbols")

    p = sub.add_parser("capacity", help="PPM capacity and BMD rate over a power sweep")
    channel_opts(p, "P_av range in dB, start:stop:step")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("mi", help="per-level conditional mutual information")
    channel_opts(p, "P_av in dB")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("construct", help="build a frozen set and write a code file")
    channel_opts(p, "design P_av in dB")
    p.add_argument("--n", type=int, required=True, help="per-level block length")
    p.add_argument("--symbols", type=int, help="transmitted symbols per frame (shortening)")
    p.add_argument("--rate", type=float, default=0.5, help="overall rate k_info / (m n)")
    p.add_argument("--crc", default="none", help="hex:degree, e.g. 0x27cf:14")
    p.add_argument("--method", choices=METHODS, default="mi-dga")
    p.add_argument("--trials", type=int, default=100_000, help="MC construction trials")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="CER/BER campaign for a code file")
    p.add_argument("--code", required=True)
    p.add_argument("--nb", type=float, help="defaults to the code file's n_b")
    p.add_argument("--pav", required=True, help="P_av range in dB, start:stop:step")
    p.add_argument("--lmax", type=int, default=1, help="max list size; 1 selects SC")
    p.add_argument("--lstart", type=int, default=32, help="first list size of the dynamic schedule")
    p.add_argument("--minsum", action="store_true")
    p.add_argument("--exact-metric", action="store_true")
    p.add_argument("--stop-errors", type=int, default=50)
    p.add_argument("--max-frames", type=int, default=10**6)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--hist", help="histogram file, default <out>.hist")
    p.add_argument("--resume", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ppmpolar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ppmpolar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ListCapacityError as exc:
        print(f"ppmpolar: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
