"""Scheme configurations, encoders and channel bookkeeping.

A codeword is identified by its integer *index*, the MSB-first value of the
bit block it carries. The block layout is always: channel-state bits
(natural mapping), then the Gray label of ``x1``, then the label of ``x2``.
The index therefore splits as ``(state, s1, s2)`` and every state decomposes
into the 1-based channel-state indices of the transmission matrix.

Two families share one algebraic form. Single-slot schemes (classical SIMO,
SSK, MBM-SIMO, MBM-MIMO) receive ``y = G z + n``; two-slot schemes
(Alamouti, STCM 1-3) receive ``Y = C Z + N``. Both reduce to
``y_eq = c1 x1 + c2 x2 + n_eq`` where ``(c1, c2)`` depend only on the state,
which is what the detectors and the Monte Carlo engine work with.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .core import (
    ConfigurationError,
    Constellation,
    EnumerationTooLarge,
    Kind,
    bits_to_int,
    build_constellation,
    int_to_bits,
    unit_constellation,
)

__all__ = [
    "Scheme",
    "SchemeConfig",
    "StcmCodeword",
    "MbmCodeword",
    "Codeword",
    "encode",
    "decode",
    "codeword_from_index",
    "enumerate_codewords",
    "codeword_matrices",
    "build_equivalent_channel",
    "transmit",
    "DEFAULT_ENUMERATION_CAP",
]

DEFAULT_ENUMERATION_CAP = 2**16


class Scheme(str, Enum):
    SIMO = "simo"
    SSK = "ssk"
    MBM_SIMO = "mbm-simo"
    MBM_MIMO = "mbm-mimo"
    ALAMOUTI = "alamouti"
    STCM1 = "stcm1"
    STCM2 = "stcm2"
    STCM3 = "stcm3"

    @property
    def two_slot(self) -> bool:
        return self in _TWO_SLOT


_TWO_SLOT = {Scheme.ALAMOUTI, Scheme.STCM1, Scheme.STCM2, Scheme.STCM3}
_STCM = {Scheme.STCM1, Scheme.STCM2, Scheme.STCM3}


def _log2(n: int) -> int:
    return n.bit_length() - 1


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of one transmission scheme.

    ``kind`` defaults to PSK for Q=2 and QAM above; it is ignored when Q=1.
    For SSK either ``T`` or ``M`` may be given (``T = 2**M``).
    """

    scheme: Scheme
    M: int = 0
    Q: int = 1
    R: int = 1
    T: int = 0
    kind: Kind | None = None

    def __post_init__(self):
        try:
            scheme = Scheme(self.scheme)
        except ValueError:
            raise ConfigurationError(f"scheme: unknown scheme {self.scheme!r}") from None
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("scheme", scheme)
        M, Q, R, T = int(self.M), int(self.Q), int(self.R), int(self.T)
        if R < 1:
            raise ConfigurationError(f"R: need at least one receive antenna, got {R}")
        if Q < 1 or not _is_pow2(Q):
            raise ConfigurationError(f"Q: constellation order must be a power of two, got {Q}")
        if M < 0:
            raise ConfigurationError(f"M: mirror count must be non-negative, got {M}")

        if scheme is Scheme.SSK:
            if T == 0 and M > 0:
                T = 1 << M
            if T < 2 or not _is_pow2(T):
                raise ConfigurationError(f"T: SSK needs a power-of-two antenna count >= 2, got {T}")
            if Q != 1:
                raise ConfigurationError(f"Q: SSK carries no symbols, Q must be 1, got {Q}")
            M = _log2(T)
        elif scheme in (Scheme.SIMO, Scheme.ALAMOUTI):
            if M != 0:
                raise ConfigurationError(f"M: {scheme.value} uses no RF mirrors, got M={M}")
            if Q < 2:
                raise ConfigurationError(f"Q: {scheme.value} needs Q >= 2, got {Q}")
            T = 1 if scheme is Scheme.SIMO else 2
        else:
            if M < 1:
                raise ConfigurationError(f"M: {scheme.value} needs M >= 1, got {M}")
            if scheme in _STCM and Q < 2:
                raise ConfigurationError(f"Q: {scheme.value} needs Q >= 2, got {Q}")
            T = 1 if scheme is Scheme.MBM_SIMO else 2

        if Q == 1:
            kind = Kind.UNIT
        elif self.kind is None:
            kind = Kind.PSK if Q == 2 else Kind.QAM
        else:
            try:
                kind = Kind(self.kind.lower() if isinstance(self.kind, str) else self.kind)
            except ValueError:
                raise ConfigurationError(f"kind: unknown constellation kind {self.kind!r}") from None
        for name, value in (("M", M), ("Q", Q), ("R", R), ("T", T), ("kind", kind)):
            set_(name, value)

    # -- sizes -------------------------------------------------------------

    @property
    def slots(self) -> int:
        return 2 if self.scheme.two_slot else 1

    @property
    def n_symbols(self) -> int:
        """Symbols per codeword (a Q=1 'symbol' is the constant carrier)."""
        return 2 if self.scheme in _TWO_SLOT or self.scheme is Scheme.MBM_MIMO else 1

    @property
    def symbol_bits(self) -> int:
        return _log2(self.Q)

    @property
    def state_bits(self) -> int:
        s = self.scheme
        if s in (Scheme.SIMO, Scheme.ALAMOUTI):
            return 0
        if s in (Scheme.MBM_MIMO, Scheme.STCM1, Scheme.STCM3):
            return 2 * self.M
        return self.M  # SSK (M = log2 T), MBM-SIMO, STCM2

    @property
    def n_states(self) -> int:
        return 1 << self.state_bits

    @property
    def bits_per_codeword(self) -> int:
        return self.state_bits + self.n_symbols * self.symbol_bits

    @property
    def n_codewords(self) -> int:
        return 1 << self.bits_per_codeword

    @property
    def eta(self) -> float:
        """Spectral efficiency in bits per channel use."""
        return self.bits_per_codeword / self.slots

    @property
    def n_columns(self) -> int:
        """Columns of the extended channel matrix."""
        s = self.scheme
        if s is Scheme.SIMO:
            return 1
        if s is Scheme.SSK:
            return self.T
        if s is Scheme.MBM_SIMO:
            return 1 << self.M
        return 2 << self.M  # two transmit antennas; Alamouti has M = 0

    @property
    def vector_length(self) -> int:
        """Length of the equivalent received vector ``y_eq``."""
        return self.slots * self.R

    @property
    def energy_per_codeword(self) -> float:
        # unit-energy symbols: one per antenna per slot actually transmitting
        return float(self.slots * self.n_symbols if self.scheme.two_slot else self.n_symbols)

    @property
    def energy_per_bit(self) -> float:
        return self.energy_per_codeword / self.bits_per_codeword

    def noise_power(self, ebn0_db) -> np.ndarray | float:
        """N0 for a given E_b/N0 in dB."""
        return self.energy_per_bit / 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)

    @cached_property
    def constellation(self) -> Constellation:
        if self.Q == 1:
            return unit_constellation()
        return build_constellation(self.kind, self.Q)

    def label(self) -> str:
        s = self.scheme.value
        if self.scheme is Scheme.SSK:
            return f"{s}(T={self.T},R={self.R})"
        q = f"{self.Q}-{self.kind.value}" if self.Q > 1 else "Q=1"
        return f"{s}(M={self.M},{q},R={self.R})"

    # -- state layout ------------------------------------------------------

    @cached_property
    def _layout(self) -> tuple[np.ndarray, ...]:
        s = np.arange(self.n_states, dtype=np.int64)
        mask = (1 << self.M) - 1
        sch = self.scheme
        if sch is Scheme.ALAMOUTI:
            z = np.zeros_like(s)
            return z, z, z, z
        if sch is Scheme.STCM1:
            k, l = s >> self.M, s & mask
            return k, l, k, l
        if sch is Scheme.STCM2:
            return s, s, s, s
        if sch is Scheme.STCM3:
            k, l = s >> self.M, s & mask
            return k, l, l, k
        if sch is Scheme.SIMO:
            return (np.zeros_like(s),)
        if sch is Scheme.MBM_MIMO:
            return s >> self.M, (1 << self.M) + (s & mask)
        return (s,)  # SSK, MBM-SIMO

    def state_indices(self) -> tuple[np.ndarray, ...]:
        """Zero-based layout of every state.

        Two-slot schemes return ``(k, l, m, n)`` arrays (state indices within
        each antenna's block of ``2**M`` columns). Single-slot schemes return
        the absolute column position of each transmitted symbol.
        """
        return self._layout

    def split_index(self, idx):
        """Split codeword indices into ``(state, s1, s2)``; ``s2`` is None for one symbol."""
        idx = np.asarray(idx, dtype=np.int64)
        b = self.symbol_bits
        qmask = self.Q - 1
        if self.n_symbols == 2:
            return idx >> (2 * b), (idx >> b) & qmask, idx & qmask
        return idx >> b, idx & qmask, None

    def join_index(self, state, s1, s2=None):
        b = self.symbol_bits
        state = np.asarray(state, dtype=np.int64)
        if self.n_symbols == 2:
            return (state << (2 * b)) | (np.asarray(s1) << b) | np.asarray(s2)
        return (state << b) | np.asarray(s1)


# -- codewords -------------------------------------------------------------


@dataclass(frozen=True)
class StcmCodeword:
    """Two-slot codeword: channel states ``(k, l, m, n)`` (1-based) and symbols.

    ``Z`` is the sparse ``2**(M+1) x 2`` transmission matrix: column 1 holds
    ``x1`` at row k and ``x2`` at row ``2**M + l``; column 2 holds ``-conj(x2)``
    at row m and ``conj(x1)`` at row ``2**M + n``.
    """

    index: int
    k: int
    l: int  # noqa: E741
    m: int
    n: int
    x1: complex
    x2: complex
    M: int

    @property
    def Z(self) -> np.ndarray:
        K = 1 << self.M
        Z = np.zeros((2 * K, 2), dtype=complex)
        Z[self.k - 1, 0] += self.x1
        Z[K + self.l - 1, 0] += self.x2
        Z[self.m - 1, 1] += -np.conj(self.x2)
        Z[K + self.n - 1, 1] += np.conj(self.x1)
        return Z

    matrix = Z


@dataclass(frozen=True)
class MbmCodeword:
    """Single-slot transmission vector with one or two non-zero entries.

    ``states`` are 1-based positions in the extended channel matrix; for
    MBM-MIMO the second one lies in the second antenna's block.
    """

    index: int
    states: tuple[int, ...]
    symbols: tuple[complex, ...]
    size: int

    @property
    def i(self) -> int:
        return self.states[0]

    @property
    def x(self) -> complex:
        return self.symbols[0]

    @property
    def z(self) -> np.ndarray:
        z = np.zeros(self.size, dtype=complex)
        for p, x in zip(self.states, self.symbols):
            z[p - 1] += x
        return z

    @property
    def matrix(self) -> np.ndarray:
        return self.z[:, None]


Codeword = Union[StcmCodeword, MbmCodeword]


def codeword_from_index(cfg: SchemeConfig, index: int) -> Codeword:
    if not 0 <= index < cfg.n_codewords:
        raise ValueError(f"codeword index {index} out of range for {cfg.label()}")
    state, s1, s2 = cfg.split_index(index)
    pts = cfg.constellation.points
    layout = [int(a[state]) for a in cfg.state_indices()]
    if cfg.scheme.two_slot:
        k, l, m, n = (v + 1 for v in layout)
        return StcmCodeword(index, k, l, m, n, complex(pts[s1]), complex(pts[s2]), cfg.M)
    symbols = (complex(pts[s1]),) if s2 is None else (complex(pts[s1]), complex(pts[s2]))
    return MbmCodeword(index, tuple(p + 1 for p in layout), symbols, cfg.n_columns)


def encode(bits: Sequence[int], cfg: SchemeConfig) -> Codeword:
    """Map one bit block to its codeword (state bits first, then symbol labels)."""
    if len(bits) != cfg.bits_per_codeword:
        raise ValueError(
            f"{cfg.label()} takes {cfg.bits_per_codeword} bits per codeword, got {len(bits)}"
        )
    return codeword_from_index(cfg, bits_to_int(bits))


def _symbol_label(c: Constellation, x: complex) -> int:
    idx = int(c.nearest_exhaustive(np.asarray(x)))
    if abs(c.points[idx] - x) > 1e-9:
        raise ValueError(f"{x!r} is not a constellation point")
    return idx


def decode(cw: Codeword, cfg: SchemeConfig) -> tuple[int, ...]:
    """Recover the bit block from a codeword's states and symbols."""
    c = cfg.constellation
    mask = (1 << cfg.M) - 1
    if isinstance(cw, StcmCodeword):
        k, l = cw.k - 1, cw.l - 1
        if cfg.scheme is Scheme.STCM2:
            state = k
        elif cfg.scheme is Scheme.ALAMOUTI:
            state = 0
        else:
            state = (k << cfg.M) | l
        s1, s2 = _symbol_label(c, cw.x1), _symbol_label(c, cw.x2)
    else:
        if cfg.scheme is Scheme.MBM_MIMO:
            k, l = cw.states[0] - 1, cw.states[1] - 1 - (1 << cfg.M)
            state = (k << cfg.M) | (l & mask)
            s1, s2 = _symbol_label(c, cw.symbols[0]), _symbol_label(c, cw.symbols[1])
        else:
            state = cw.states[0] - 1
            s1, s2 = _symbol_label(c, cw.symbols[0]), None
    return int_to_bits(int(cfg.join_index(state, s1, s2)), cfg.bits_per_codeword)


def enumerate_codewords(cfg: SchemeConfig, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Codeword]:
    """All codewords of ``cfg`` in bit-block order."""
    if cfg.n_codewords > cap:
        raise EnumerationTooLarge(
            f"enumeration too large: {cfg.label()} has {cfg.n_codewords} codewords "
            f"(cap {cap}); use the sampled bound instead"
        )
    return [codeword_from_index(cfg, i) for i in range(cfg.n_codewords)]


def codeword_matrices(cfg: SchemeConfig, indices=None) -> np.ndarray:
    """Dense transmission matrices, shape ``(N, n_columns, slots)``."""
    if indices is None:
        indices = np.arange(cfg.n_codewords, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    state, s1, s2 = cfg.split_index(indices)
    pts = cfg.constellation.points
    x1 = pts[s1]
    Z = np.zeros((indices.size, cfg.n_columns, cfg.slots), dtype=complex)
    rows = np.arange(indices.size)
    lay = [a[state] for a in cfg.state_indices()]
    if cfg.scheme.two_slot:
        K = 1 << cfg.M
        x2 = pts[s2]
        k, l, m, n = lay
        np.add.at(Z, (rows, k, 0), x1)
        np.add.at(Z, (rows, K + l, 0), x2)
        np.add.at(Z, (rows, m, 1), -np.conj(x2))
        np.add.at(Z, (rows, K + n, 1), np.conj(x1))
    else:
        np.add.at(Z, (rows, lay[0], 0), x1)
        if s2 is not None:
            np.add.at(Z, (rows, lay[1], 0), pts[s2])
    return Z


# -- channel bookkeeping ---------------------------------------------------


def _check_states(M: int, *idx: int):
    K = 1 << M
    for v in idx:
        if not 1 <= v <= K:
            raise ValueError(f"channel state index {v} outside [1, {K}]")


def build_equivalent_channel(C: np.ndarray, k: int, l: int, m: int, n: int) -> np.ndarray:  # noqa: E741
    """Equivalent ``2R x 2`` channel ``[c1 c2]`` for states ``(k, l, m, n)`` (1-based).

    For receive antenna r the rows are ``(h[k,r], h[K+l,r])`` and
    ``(conj(h[K+n,r]), -conj(h[m,r]))`` with ``K = C.shape[1] // 2``.
    """
    C = np.asarray(C)
    S = C.shape[-1]
    if S < 2 or not _is_pow2(S):
        raise ValueError(f"extended channel must have a power-of-two column count >= 2, got {S}")
    K = S // 2
    _check_states(_log2(K), k, l, m, n)
    R = C.shape[0]
    Ceq = np.empty((2 * R, 2), dtype=complex)
    Ceq[0::2, 0] = C[:, k - 1]
    Ceq[1::2, 0] = np.conj(C[:, K + n - 1])
    Ceq[0::2, 1] = C[:, K + l - 1]
    Ceq[1::2, 1] = -np.conj(C[:, m - 1])
    return Ceq


def transmit(cw: Codeword, C: np.ndarray) -> np.ndarray:
    """Noiseless received signal: ``C @ Z`` (R x 2) or ``G @ z`` (R x 1).

    Only the columns selected by the codeword are touched.
    """
    C = np.asarray(C)
    if isinstance(cw, StcmCodeword):
        K = 1 << cw.M
        if C.shape[1] != 2 * K:
            raise ValueError(f"channel has {C.shape[1]} columns, codeword needs {2 * K}")
        Y = np.empty((C.shape[0], 2), dtype=complex)
        Y[:, 0] = C[:, cw.k - 1] * cw.x1 + C[:, K + cw.l - 1] * cw.x2
        Y[:, 1] = -C[:, cw.m - 1] * np.conj(cw.x2) + C[:, K + cw.n - 1] * np.conj(cw.x1)
        return Y
    if C.shape[1] != cw.size:
        raise ValueError(f"channel has {C.shape[1]} columns, codeword needs {cw.size}")
    y = np.zeros((C.shape[0], 1), dtype=complex)
    for p, x in zip(cw.states, cw.symbols):
        y[:, 0] += C[:, p - 1] * x
    return y


# -- batched helpers (detectors and Monte Carlo engine) ----------------------


def equivalent_columns(cfg: SchemeConfig, C: np.ndarray):
    """Per-state equivalent channel columns for a batch of channels.

    Parameters
    ----------
    C : array, shape (B, R, n_columns)

    Returns
    -------
    c1, c2 : arrays, shape (B, n_states, vector_length)
        ``c2`` is None for single-symbol schemes.
    """
    lay = cfg.state_indices()
    if cfg.scheme.two_slot:
        K = 1 << cfg.M
        k, l, m, n = lay
        Ct = np.swapaxes(C, 1, 2)  # (B, S, R)
        B, R = C.shape[0], C.shape[1]
        c1 = np.empty((B, k.size, R, 2), dtype=complex)
        c2 = np.empty_like(c1)
        c1[..., 0] = Ct[:, k]
        c1[..., 1] = np.conj(Ct[:, K + n])
        c2[..., 0] = Ct[:, K + l]
        c2[..., 1] = -np.conj(Ct[:, m])
        return c1.reshape(B, k.size, 2 * R), c2.reshape(B, k.size, 2 * R)
    Ct = np.swapaxes(C, 1, 2)
    c1 = Ct[:, lay[0]]
    c2 = Ct[:, lay[1]] if len(lay) > 1 else None
    return c1, c2


def receive_vector(cfg: SchemeConfig, Y: np.ndarray) -> np.ndarray:
    """Stack a batch of received matrices ``(B, R, slots)`` into ``y_eq`` ``(B, slots*R)``.

    Two-slot vectors interleave ``y[1,r], conj(y[2,r])`` per receive antenna.
    """
    Y = np.asarray(Y)
    if cfg.scheme.two_slot:
        out = np.empty(Y.shape[:2] + (2,), dtype=complex)
        out[..., 0] = Y[..., 0]
        out[..., 1] = np.conj(Y[..., 1])
        return out.reshape(Y.shape[0], -1)
    return Y.reshape(Y.shape[0], -1)


def transmit_batch(cfg: SchemeConfig, C: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Noiseless ``C Z`` for a batch of channels and codeword indices, ``(B, R, slots)``."""
    state, s1, s2 = cfg.split_index(indices)
    pts = cfg.constellation.points
    x1 = pts[s1][:, None]
    B = C.shape[0]
    b = np.arange(B)
    lay = [a[state] for a in cfg.state_indices()]
    Y = np.empty((B, C.shape[1], cfg.slots), dtype=complex)
    if cfg.scheme.two_slot:
        K = 1 << cfg.M
        x2 = pts[s2][:, None]
        k, l, m, n = lay
        Y[..., 0] = C[b, :, k] * x1 + C[b, :, K + l] * x2
        Y[..., 1] = -C[b, :, m] * np.conj(x2) + C[b, :, K + n] * np.conj(x1)
    else:
        Y[..., 0] = C[b, :, lay[0]] * x1
        if s2 is not None:
            Y[..., 0] += C[b, :, lay[1]] * pts[s2][:, None]
    return Y
