"""Deterministic Monte Carlo bit-error-rate engine.

Work is split into fixed-size batches of codewords. Batch ``b`` at SNR point
``p`` draws its bits, channels and noise from the streams
``(seed, (p, b, tag))``, and batches are reduced strictly in index order with
the stop rule checked after each one. Results are therefore identical for
any worker count; extra batches computed ahead by a pool are discarded.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import channel as ch
from .codec import SchemeConfig, transmit_batch
from .core import ConfigurationError, EnumerationTooLarge
from .detect import detect_indices

__all__ = [
    "StopRule",
    "BerRecord",
    "batch_size",
    "simulate_batch",
    "run_point",
    "run_sweep",
    "default_workers",
    "WORKERS_ENV",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "STCM_WORKERS"
_CELL_BUDGET = 1 << 22


@dataclass(frozen=True)
class StopRule:
    """Stop a point after ``min_bit_errors`` errors or ``max_bits`` bits."""

    min_bit_errors: int = 200
    max_bits: int = 10**8

    def __post_init__(self):
        if self.min_bit_errors < 1 or self.max_bits < 1:
            raise ConfigurationError("stop rule: min_bit_errors and max_bits must be positive")


@dataclass
class BerRecord:
    snr_db: float
    bits: int
    errors: int
    theory: float | None = None
    elapsed: float = 0.0

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else 0.0


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


def batch_size(cfg: SchemeConfig) -> int:
    """Codewords per batch; depends only on the scheme so results never depend on the detector or pool."""
    cells = max(cfg.n_codewords, cfg.n_states * cfg.vector_length)
    return int(min(4096, max(64, _CELL_BUDGET // cells)))


def simulate_batch(
    cfg: SchemeConfig,
    N0: float,
    stream: ch.RngStream,
    n: int,
    method: str = "auto",
    noiseless: bool = False,
) -> tuple[int, int]:
    """Simulate ``n`` codewords; returns ``(bits, bit_errors)``."""
    tx = stream.child(ch.BITS).generator().integers(0, cfg.n_codewords, size=n, dtype=np.int64)
    C = ch.draw_extended_channel(cfg.R, cfg.n_columns, stream.child(ch.CHANNEL), batch=n)
    Y = transmit_batch(cfg, C, tx)
    if not noiseless:
        Y = ch.add_awgn(Y, N0, stream.child(ch.NOISE))
    rx, _ = detect_indices(cfg, Y, C, method)
    errors = int(np.bitwise_count(tx ^ rx).sum())
    return n * cfg.bits_per_codeword, errors


def _batch_task(args):
    cfg, N0, seed, point, b, n, method, noiseless = args
    return simulate_batch(cfg, N0, ch.RngStream(seed, (point, b)), n, method, noiseless)


def _batches(cfg: SchemeConfig, stop: StopRule) -> Iterable[tuple[int, int]]:
    bsz = batch_size(cfg)
    bpc = cfg.bits_per_codeword
    limit = math.ceil(stop.max_bits / bpc)
    b, sent = 0, 0
    while sent < limit:
        n = min(bsz, limit - sent)
        yield b, n
        b += 1
        sent += n


def _point(
    cfg: SchemeConfig,
    snr_db: float,
    stop: StopRule,
    seed: int,
    point: int,
    method: str,
    noiseless: bool,
    pool: Executor | None,
    workers: int,
) -> BerRecord:
    t0 = time.perf_counter()
    N0 = float(cfg.noise_power(snr_db))
    bits = errors = 0
    tasks = ((cfg, N0, seed, point, b, n, method, noiseless) for b, n in _batches(cfg, stop))

    def done() -> bool:
        return errors >= stop.min_bit_errors or bits >= stop.max_bits

    if pool is None:
        for t in tasks:
            nb, ne = _batch_task(t)
            bits += nb
            errors += ne
            if done():
                break
    else:
        pending = []
        exhausted = False
        while True:
            while not exhausted and len(pending) < 2 * workers:
                t = next(tasks, None)
                if t is None:
                    exhausted = True
                else:
                    pending.append(pool.submit(_batch_task, t))
            if not pending:
                break
            nb, ne = pending.pop(0).result()
            bits += nb
            errors += ne
            if done():
                for f in pending:
                    f.cancel()
                break
    rec = BerRecord(float(snr_db), bits, errors, elapsed=time.perf_counter() - t0)
    log.debug("%s %.2f dB: %d/%d errors, %.1fs", cfg.label(), snr_db, errors, bits, rec.elapsed)
    return rec


def _theory(cfg: SchemeConfig, snr_db: float) -> float | None:
    from .analysis import abep_bound

    try:
        return float(abep_bound(cfg, cfg.noise_power(snr_db)))
    except EnumerationTooLarge:
        return None


def run_point(
    cfg: SchemeConfig,
    snr_db: float,
    stop: StopRule = StopRule(),
    seed: int = 0,
    *,
    point_index: int = 0,
    workers: int | None = None,
    method: str = "auto",
    noiseless: bool = False,
    theory: bool = False,
) -> BerRecord:
    """Simulate one E_b/N0 point.

    ``method`` selects the detector (``"auto"`` is the cheapest exact ML;
    ``"bruteforce"`` forces exhaustive search). ``noiseless`` skips the noise
    stream, a debug hook that should yield zero errors.
    """
    return run_sweep(
        cfg, [snr_db], stop, seed, workers=workers, method=method,
        noiseless=noiseless, theory=theory, first_index=point_index,
    )[0]


def run_sweep(
    cfg: SchemeConfig,
    snr_list: Sequence[float],
    stop: StopRule = StopRule(),
    seed: int = 0,
    *,
    workers: int | None = None,
    method: str = "auto",
    noiseless: bool = False,
    theory: bool = False,
    stop_below: float | None = None,
    first_index: int = 0,
) -> list[BerRecord]:
    """Simulate a strictly increasing list of E_b/N0 points.

    Point ``i`` uses stream index ``first_index + i``. If ``stop_below`` is
    set, the sweep ends after the first point whose BER is at or below it.
    """
    snr_list = [float(s) for s in snr_list]
    if not snr_list:
        raise ConfigurationError("snr: the SNR list is empty")
    if any(b <= a for a, b in zip(snr_list, snr_list[1:])):
        raise ConfigurationError("snr: the SNR list must be strictly increasing")
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigurationError(f"workers: must be >= 1, got {workers}")
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    records = []
    try:
        for i, snr in enumerate(snr_list):
            rec = _point(cfg, snr, stop, seed, first_index + i, method, noiseless, pool, workers)
            if theory:
                rec.theory = _theory(cfg, snr)
            records.append(rec)
            if stop_below is not None and rec.bits and rec.ber <= stop_below:
                break
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return records
