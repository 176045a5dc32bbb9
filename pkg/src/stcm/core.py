"""Constellations, bit mappings and scalar helpers shared by the package.

Every constellation is stored *by label*: ``points[v]`` is the point whose
Gray label, read MSB first, is the integer ``v``. Symbol indices used
elsewhere in the package are therefore label values, and the bits of a
symbol index are its label bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import erfc

__all__ = [
    "ConfigurationError",
    "EnumerationTooLarge",
    "Kind",
    "Constellation",
    "build_constellation",
    "unit_constellation",
    "bits_to_int",
    "int_to_bits",
    "bits_to_symbol",
    "symbol_to_bits",
    "bits_to_state_index",
    "gray",
    "q_function",
]


class ConfigurationError(ValueError):
    """Invalid or unsupported configuration."""


class EnumerationTooLarge(ConfigurationError):
    """Raised when a full codeword enumeration would exceed the cap."""


class Kind(str, Enum):
    PSK = "psk"
    QAM = "qam"
    UNIT = "unit"  # single point {1}: carrier with constant parameters


def gray(n):
    """Binary-reflected Gray code of ``n`` (works on ints and int arrays)."""
    return n ^ (n >> 1)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def bits_to_int(bits: Sequence[int]) -> int:
    """MSB-first unsigned integer value of a bit sequence."""
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit values must be 0 or 1, got {b!r}")
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> tuple[int, ...]:
    """MSB-first bits of ``value`` using exactly ``width`` bits."""
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy Q-ary signal set with Gray labels.

    Attributes
    ----------
    kind : Kind
    order : int
        Number of points Q.
    points : numpy.ndarray
        Complex points ordered by label value.
    grid : tuple of int
        ``(levels_i, levels_q)`` for QAM, ``(Q, 0)`` otherwise.
    """

    kind: Kind
    order: int
    points: np.ndarray
    scale: float = 1.0
    grid: tuple[int, int] = (0, 0)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def labels(self) -> list[str]:
        b = self.bits_per_symbol
        return [format(v, f"0{b}b") if b else "" for v in range(self.order)]

    def nearest(self, u: np.ndarray) -> np.ndarray:
        """Label index of the nearest point to each entry of ``u``.

        QAM uses per-axis rounding with clamping, PSK angle-sector rounding;
        both equal the exhaustive nearest-point search.
        """
        u = np.asarray(u)
        if self.kind is Kind.UNIT:
            return np.zeros(u.shape, dtype=np.int64)
        if self.kind is Kind.PSK:
            if self.order == 2:
                return (u.real < 0).astype(np.int64)
            q = np.rint(np.angle(u) * (self.order / (2 * np.pi))).astype(np.int64)
            return gray(q % self.order)
        li, lq = self.grid
        v = u / self.scale
        pi = np.clip(np.rint((v.real + (li - 1)) / 2), 0, li - 1).astype(np.int64)
        pq = np.clip(np.rint((v.imag + (lq - 1)) / 2), 0, lq - 1).astype(np.int64)
        bq = lq.bit_length() - 1
        return (gray(pi) << bq) | gray(pq)

    def nearest_exhaustive(self, u: np.ndarray) -> np.ndarray:
        """Reference nearest-point search over all points (lowest label wins ties)."""
        u = np.asarray(u)
        d = np.abs(u[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)


def unit_constellation() -> Constellation:
    """The one-point set {1} used by SSK and plain MBM."""
    return Constellation(Kind.UNIT, 1, np.array([1.0 + 0j]), grid=(1, 0))


def _psk(order: int) -> Constellation:
    q = np.arange(order)
    pts = np.empty(order, dtype=complex)
    pts[gray(q)] = np.exp(2j * np.pi * q / order)
    if order == 2:
        pts = pts.real + 0j  # exact +1/-1
    elif order == 4:
        pts = np.round(pts.real) + 1j * np.round(pts.imag)
    return Constellation(Kind.PSK, order, pts, grid=(order, 0))


def _qam(order: int) -> Constellation:
    b = order.bit_length() - 1
    bi, bq = (b + 1) // 2, b // 2
    li, lq = 1 << bi, 1 << bq
    levels_i = np.arange(-(li - 1), li, 2, dtype=float)
    levels_q = np.arange(-(lq - 1), lq, 2, dtype=float)
    energy = (li * li - 1) / 3 + (lq * lq - 1) / 3
    scale = 1.0 / np.sqrt(energy)
    pts = np.empty(order, dtype=complex)
    for p in range(li):
        for r in range(lq):
            pts[(gray(p) << bq) | gray(r)] = scale * complex(levels_i[p], levels_q[r])
    return Constellation(Kind.QAM, order, pts, scale=scale, grid=(li, lq))


def build_constellation(kind: Kind | str, order: int) -> Constellation:
    """Build a Gray-labelled unit-energy PSK or QAM constellation.

    QAM with an even number of bits is square; an odd number of bits gives a
    rectangular grid with the extra bit on the in-phase axis (8-QAM is 4x2).

    Raises
    ------
    ConfigurationError
        If ``order`` is not a power of two >= 2 or ``kind`` is unknown.
    """
    try:
        kind = Kind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ConfigurationError(f"unsupported constellation ({kind!r}, {order})") from None
    if kind is Kind.UNIT:
        if order != 1:
            raise ConfigurationError(f"unsupported constellation ({kind.value}, {order})")
        return unit_constellation()
    if not isinstance(order, (int, np.integer)) or order < 2 or not _is_pow2(int(order)):
        raise ConfigurationError(f"unsupported constellation ({kind.value}, {order})")
    return _psk(int(order)) if kind is Kind.PSK else _qam(int(order))


def bits_to_symbol(bits: Sequence[int], c: Constellation) -> complex:
    if len(bits) != c.bits_per_symbol:
        raise ValueError(f"expected {c.bits_per_symbol} bits, got {len(bits)}")
    return complex(c.points[bits_to_int(bits)])


def symbol_to_bits(x: complex, c: Constellation) -> tuple[int, ...]:
    idx = int(c.nearest_exhaustive(np.asarray(x)))
    if abs(c.points[idx] - x) > 1e-9:
        raise ValueError(f"{x!r} is not a point of the constellation")
    return int_to_bits(idx, c.bits_per_symbol)


def bits_to_state_index(bits: Sequence[int]) -> int:
    """Natural mapping of M state bits to a 1-based channel state index."""
    return 1 + bits_to_int(bits)


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))[()]
