"""Monte Carlo CER/BER campaigns with a frame-error stopping rule.

Every frame draws its information bits and channel noise from its own
random stream, derived from the point seed and the frame index, so results
do not depend on how frames are spread over worker processes.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, sample_symbols
from .polar.code import CodeSpec, encode
from .polar.decode import dynamic_list_decode, sc_decode_frames, scl_decode

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("P", "CER", "BER", "frames", "frame_errors", "bit_errors", "info_bits", "seed", "complete")


@dataclass(frozen=True)
class SweepPoint:
    p_av_db: float
    M: int

    @property
    def n_s(self) -> float:
        return self.M * 10.0 ** (self.p_av_db / 10.0)


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder selection for a campaign.

    ``list_max == 1`` selects multistage SC.  With a CRC, larger values run
    the dynamic list schedule from ``min(list_start, list_max)`` up to
    ``list_max``; without a CRC a fixed list of ``list_max`` is used and the
    best-metric path is taken.
    """

    list_max: int = 1
    list_start: int = 32
    minsum: bool = False
    exact_metric: bool = False

    def list_sizes(self, has_crc: bool) -> list[int]:
        if self.list_max == 1:
            return [1]
        if not has_crc:
            return [self.list_max]
        sizes, L = [], min(self.list_start, self.list_max)
        while L <= self.list_max:
            sizes.append(L)
            L *= 2
        return sizes


@dataclass
class SimRecord:
    point: SweepPoint
    frames: int
    frame_errors: int
    bit_errors: int
    info_bits_per_frame: int
    list_histogram: dict[int, int] = field(default_factory=dict)
    seed: int = 0
    complete: bool = False

    @property
    def cer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ber(self) -> float:
        bits = self.frames * self.info_bits_per_frame
        return self.bit_errors / bits if bits else float("nan")


def frame_rng(seed: int, frame: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(frame,)))


def point_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(master_seed, spawn_key=(index,)).generate_state(1)[0])


def _draw_frame(spec: CodeSpec, params: ChannelParams, seed: int, frame: int):
    rng = frame_rng(seed, frame)
    info = rng.integers(0, 2, size=spec.k_info, dtype=np.uint8)
    _, positions = encode(info, spec)
    return info, sample_symbols(positions, params, rng)


def _run_block(args):
    """Decode frames ``start .. start+count-1``; returns per-frame bit errors and list sizes."""
    spec, params, decoder, seed, start, count = args
    frames = [_draw_frame(spec, params, seed, f) for f in range(start, start + count)]
    info = np.stack([fr[0] for fr in frames])
    if decoder.list_max == 1:
        counts = np.stack([fr[1] for fr in frames])
        decided = spec.extract_info(sc_decode_frames(counts, spec, params, decoder.minsum))
        sizes = np.ones(count, dtype=np.int64)
    else:
        decided = np.empty_like(info)
        sizes = np.empty(count, dtype=np.int64)
        for i, (_, y) in enumerate(frames):
            if spec.crc is not None:
                res = dynamic_list_decode(
                    y, spec, params, decoder.list_max,
                    list_start=min(decoder.list_start, decoder.list_max),
                    minsum=decoder.minsum, exact_metric=decoder.exact_metric,
                )
                decided[i], sizes[i] = res.info, res.list_size
            else:
                res = scl_decode(
                    y, spec, params, decoder.list_max,
                    minsum=decoder.minsum, exact_metric=decoder.exact_metric,
                )
                decided[i], sizes[i] = res.info[0], decoder.list_max
    return (decided != info).sum(axis=1), sizes


def run_point(
    spec: CodeSpec,
    n_b: float,
    p_av_db: float,
    decoder: DecoderConfig = DecoderConfig(),
    stop_errors: int = 50,
    max_frames: int = 10**6,
    seed: int = 0,
    workers: int = 1,
    block: int | None = None,
) -> SimRecord:
    """Simulate frames until ``stop_errors`` frame errors or ``max_frames`` frames.

    A frame is in error when the decided information word differs from the
    transmitted one, whether or not its CRC passed.  The record is flagged
    incomplete when ``max_frames`` is hit first.
    """
    if stop_errors < 1 or max_frames < 1:
        raise ValueError("stop_errors and max_frames must be positive")
    M = 1 << spec.m
    point = SweepPoint(float(p_av_db), M)
    params = ChannelParams(point.n_s, n_b, M)
    if block is None:
        block = 256 if decoder.list_max == 1 else 8
    rec = SimRecord(point, 0, 0, 0, spec.k_info, {L: 0 for L in decoder.list_sizes(spec.crc is not None)}, seed)

    def absorb(bit_errs, sizes) -> bool:
        for be, L in zip(bit_errs.tolist(), sizes.tolist()):
            rec.frames += 1
            rec.bit_errors += be
            rec.frame_errors += be > 0
            rec.list_histogram[L] = rec.list_histogram.get(L, 0) + 1
            if rec.frame_errors >= stop_errors:
                rec.complete = True
                return True
            if rec.frames >= max_frames:
                return True
        return False

    next_frame = 0

    def jobs(k):
        nonlocal next_frame
        out = []
        for _ in range(k):
            count = min(block, max_frames - next_frame)
            if count <= 0:
                break
            out.append((spec, params, decoder, seed, next_frame, count))
            next_frame += count
        return out

    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            while batch := jobs(workers):
                if any(absorb(*r) for r in pool.map(_run_block, batch)):
                    break
    else:
        while batch := jobs(1):
            if absorb(*_run_block(batch[0])):
                break
    log.info(
        "P=%.3f dB frames=%d errors=%d CER=%.3e BER=%.3e",
        p_av_db, rec.frames, rec.frame_errors, rec.cer, rec.ber,
    )
    return rec


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _header_lines(header: dict | None) -> list[str]:
    return [f"# {k} {v}" for k, v in (header or {}).items()]


def format_result_row(rec: SimRecord) -> str:
    vals = (
        rec.point.p_av_db, rec.cer, rec.ber, rec.frames, rec.frame_errors,
        rec.bit_errors, rec.info_bits_per_frame, rec.seed, int(rec.complete),
    )
    return " ".join(_fmt(v) for v in vals)


def format_histogram_block(rec: SimRecord) -> str:
    lines = [f"# P {_fmt(rec.point.p_av_db)}", "# L count"]
    lines += [f"{L} {c}" for L, c in sorted(rec.list_histogram.items())]
    return "\n".join(lines) + "\n\n"


def write_results(results_path, hist_path, records, header: dict | None = None) -> None:
    """Write result and histogram files from scratch."""
    res = _header_lines(header) + ["# " + " ".join(RESULT_COLUMNS)]
    res += [format_result_row(r) for r in records]
    Path(results_path).write_text("\n".join(res) + "\n")
    Path(hist_path).write_text("\n".join(_header_lines(header)) + "\n\n" + "".join(
        format_histogram_block(r) for r in records
    ))


def _append(path, text: str) -> None:
    with open(path, "a") as fh:
        fh.write(text)
        fh.flush()


def read_results(results_path, hist_path, M: int | None = None) -> list[SimRecord]:
    """Parse result and histogram files back into records."""
    header: dict[str, str] = {}
    rows = []
    for line in Path(results_path).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split(None, 1)
            if len(parts) == 2 and parts[0] != "P":
                header[parts[0]] = parts[1]
            continue
        rows.append(line.split())
    if M is None:
        M = int(header.get("M", 0))
    hists: dict[float, dict[int, int]] = {}
    current = None
    for line in Path(hist_path).read_text().splitlines():
        line = line.strip()
        if line.startswith("# P "):
            current = float(line[4:])
            hists[current] = {}
        elif line and not line.startswith("#") and current is not None:
            L, c = line.split()
            hists[current][int(L)] = int(c)
    records = []
    for row in rows:
        p = float(row[0])
        records.append(SimRecord(
            SweepPoint(p, M),
            frames=int(row[3]),
            frame_errors=int(row[4]),
            bit_errors=int(row[5]),
            info_bits_per_frame=int(row[6]),
            list_histogram=hists.get(p, {}),
            seed=int(row[7]),
            complete=bool(int(row[8])),
        ))
    return records


def run_sweep(
    spec: CodeSpec,
    n_b: float,
    points,
    decoder: DecoderConfig = DecoderConfig(),
    stop_errors: int = 50,
    max_frames: int = 10**6,
    seed: int = 0,
    workers: int = 1,
    results_path=None,
    hist_path=None,
    resume: bool = False,
    header: dict | None = None,
) -> list[SimRecord]:
    """Run :func:`run_point` over a list of powers in dB.

    Point ``i`` uses a seed derived from ``seed`` and ``i``.  When output
    paths are given, each record is appended as soon as it completes; with
    ``resume=True`` points already present in ``results_path`` are loaded
    instead of simulated.
    """
    points = [float(p) for p in points]
    done: dict[float, SimRecord] = {}
    if results_path is not None and hist_path is None:
        hist_path = Path(str(results_path) + ".hist")
    if results_path is not None:
        if resume and Path(results_path).exists():
            for rec in read_results(results_path, hist_path, 1 << spec.m):
                done[rec.point.p_av_db] = rec
        else:
            write_results(results_path, hist_path, [], header)
    records = []
    for i, p in enumerate(points):
        if p in done:
            log.info("P=%.3f dB already in %s, skipping", p, results_path)
            records.append(done[p])
            continue
        rec = run_point(spec, n_b, p, decoder, stop_errors, max_frames, point_seed(seed, i), workers)
        records.append(rec)
        if results_path is not None:
            _append(results_path, format_result_row(rec) + "\n")
            _append(hist_path, format_histogram_block(rec))
    return records
