"""I.i.d. Rayleigh extended channels, AWGN, and reproducible random streams.

Streams are keyed by ``(seed, stream_id)`` through :class:`numpy.random.SeedSequence`
spawn keys and drive a counter-based Philox generator, so a given block draws
the same samples no matter which worker processes it or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError

__all__ = ["RngStream", "draw_extended_channel", "add_awgn", "complex_normal"]

# Sub-stream tags: bits, channel and noise never share samples.
BITS, CHANNEL, NOISE = 0, 1, 2


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent random stream.

    ``stream_id`` is a tuple of non-negative integers, e.g.
    ``(snr_index, block_index, tag)``.
    """

    seed: int
    stream_id: tuple[int, ...] = ()

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(ss))


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def complex_normal(gen: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples; real and imaginary parts each N(0, variance/2)."""
    g = gen.standard_normal(tuple(shape) + (2,))
    g *= np.sqrt(variance / 2.0)
    return g[..., 0] + 1j * g[..., 1]


def draw_extended_channel(R: int, S: int, rng, batch: int | None = None) -> np.ndarray:
    """Draw an ``R x S`` extended channel matrix with i.i.d. CN(0,1) entries.

    Parameters
    ----------
    R : int
        Receive antennas.
    S : int
        Number of selectable channel states across all transmit antennas
        (``2**M`` for single-antenna MBM, ``2**(M+1)`` for STCM).
    rng : RngStream, numpy Generator or seed
    batch : int, optional
        If given, draw ``batch`` independent matrices, shape ``(batch, R, S)``.
    """
    if R < 1 or S < 1:
        raise ConfigurationError(f"channel dimensions must be positive, got R={R}, S={S}")
    shape = (R, S) if batch is None else (batch, R, S)
    return complex_normal(_generator(rng), shape)


def add_awgn(signal: np.ndarray, N0: float, rng) -> np.ndarray:
    """Return ``signal`` plus i.i.d. CN(0, N0) noise; the input is not modified."""
    if not N0 > 0:
        raise ConfigurationError(f"noise power N0 must be positive, got {N0}")
    signal = np.asarray(signal)
    return signal + complex_normal(_generator(rng), signal.shape, N0)
