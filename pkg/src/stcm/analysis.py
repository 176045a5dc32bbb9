"""Pairwise error probabilities, ABEP union bounds and diversity analysis.

The union bound over a codebook of N codewords carrying b bits each is

    P_b <= 1/(N b) * sum_{Z != Z'} P(Z -> Z') e(Z, Z')

where the unconditional PEP of a pair depends only on the non-zero
eigenvalues of the Gram matrix ``(Z - Z')^H (Z - Z')`` (at most 2x2 here).
The double sum is therefore reduced once per scheme to a small table of
distinct eigenvalue pairs with accumulated bit-error weights
(:class:`PairSpectrum`), after which a bound at any noise level costs one
quadrature per distinct pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .codec import (
    DEFAULT_ENUMERATION_CAP,
    Codeword,
    Scheme,
    SchemeConfig,
    codeword_matrices,
)
from .core import ConfigurationError, EnumerationTooLarge
from .detect import ml_complexity

__all__ = [
    "QUADRATURE_NODES",
    "RANK_TOL",
    "PairwiseEvent",
    "PairSpectrum",
    "SampledBound",
    "TradeoffRow",
    "pairwise_eigs",
    "gram_eigenvalues",
    "upep",
    "upep_stcm",
    "upep_mbm",
    "pair_spectrum",
    "abep_bound",
    "abep_bound_stcm",
    "abep_bound_mbm",
    "abep_bound_sampled",
    "diversity_min",
    "tradeoff_table",
    "tradeoff_table_at_rate",
]

QUADRATURE_NODES = 64
RANK_TOL = 1e-9
# eigenvalues are grouped after rounding to this many decimals
_GROUP_DECIMALS = 10
_SMALL_C = 0.01


@lru_cache(maxsize=None)
def _nodes(n: int = QUADRATURE_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    theta = (x + 1.0) * (np.pi / 4.0)
    return np.sin(theta) ** 2, w * (np.pi / 4.0)


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _graded(c: np.ndarray, R: int) -> float:
    # panels [0, sqrt(c_min)/4], then x4 geometric growth up to pi/2
    x, w = _legendre(32)
    edges = [0.0]
    e = math.sqrt(float(c[c > 0].min())) / 4.0
    while e < np.pi / 2:
        edges.append(e)
        e *= 4.0
    edges.append(np.pi / 2)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        s2 = np.sin(a + (b - a) / 2.0 * (x + 1.0)) ** 2
        with np.errstate(over="ignore"):  # c/s2 -> inf only where the integrand is exactly 0
            total += np.exp(-R * np.log1p(c[:, None] / s2).sum(axis=0)) @ (w * (b - a) / 2.0)
    return total / np.pi


def upep(lams, R: int, N0, nodes: int = QUADRATURE_NODES):
    """Unconditional PEP by Gauss-Legendre quadrature.

    Evaluates ``(1/pi) int_0^{pi/2} prod_d (1 + lam_d / (4 N0 sin^2 t))^-R dt``.
    A fixed ``nodes``-point rule is exact to rounding once every
    ``lam_d / (4 N0) >= 0.01``; below that (deep in the vacuous low-SNR
    region) the integrand has a boundary layer near t = 0 and a graded
    composite rule is used instead.

    Parameters
    ----------
    lams : array_like, shape (..., D)
        Eigenvalues; zeros contribute a factor of one.
    R : int
        Receive antennas.
    N0 : float or array_like
        Noise power, broadcast against ``lams[..., 0]``.
    """
    lams = np.asarray(lams, dtype=float)
    if lams.ndim == 0:
        lams = lams[None]
    N0 = np.asarray(N0, dtype=float)
    s2, w = _nodes(nodes)
    c = lams / (4.0 * N0[..., None])  # (..., D)
    log_f = -R * np.log1p(c[..., None] / s2).sum(axis=-2)  # (..., nodes)
    out = np.asarray((np.exp(log_f) @ w) / np.pi)
    small = np.any((c > 0) & (c < _SMALL_C), axis=-1)
    if np.any(small):
        c_b = np.broadcast_to(c, small.shape + c.shape[-1:]).reshape(-1, c.shape[-1])
        flat = np.array(out, dtype=float).reshape(-1)
        for pos in np.flatnonzero(small):
            flat[pos] = _graded(c_b[pos], R)
        out = flat.reshape(small.shape)
    return out[()]


@dataclass(frozen=True)
class PairwiseEvent:
    """An ordered error event ``Z -> z_hat`` and its Gram spectrum."""

    z: Codeword
    z_hat: Codeword
    lambdas: tuple[float, ...]
    rank: int
    bit_errors: int

    @property
    def D(self) -> int:
        return self.rank


def gram_eigenvalues(g11, g22, g12):
    """Eigenvalues (descending) of Hermitian 2x2 matrices ``[[g11, g12], [g12*, g22]]``.

    Returns ``(lam1, lam2, rank)`` arrays; eigenvalues below
    ``RANK_TOL * trace`` are set to zero and do not count towards the rank.
    """
    g11 = np.asarray(g11, dtype=float)
    g22 = np.asarray(g22, dtype=float)
    g12 = np.asarray(g12)
    tr = g11 + g22
    disc = np.sqrt((g11 - g22) ** 2 + 4.0 * (g12.real**2 + g12.imag**2))
    lam1 = 0.5 * (tr + disc)
    det = g11 * g22 - (g12.real**2 + g12.imag**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam2 = np.where(lam1 > 0, det / lam1, 0.0)
    tol = RANK_TOL * tr
    lam1 = np.where(lam1 > tol, lam1, 0.0)
    lam2 = np.where(lam2 > tol, lam2, 0.0)
    lam2 = np.minimum(lam2, lam1)
    rank = (lam1 > 0).astype(np.int64) + (lam2 > 0)
    return lam1, lam2, rank


def _matrix(cw) -> np.ndarray:
    m = cw.matrix if hasattr(cw, "matrix") else np.asarray(cw)
    return m if m.ndim == 2 else m[:, None]


def pairwise_eigs(z: Codeword, z_hat: Codeword) -> PairwiseEvent:
    """Gram spectrum, rank and bit errors of the event ``z -> z_hat``."""
    A, B = _matrix(z), _matrix(z_hat)
    if A.shape != B.shape:
        raise ValueError(f"codeword shapes differ: {A.shape} vs {B.shape}")
    d = A - B
    if d.shape[1] == 1:
        g11, g22, g12 = np.vdot(d[:, 0], d[:, 0]).real, 0.0, 0.0
    else:
        g11 = np.vdot(d[:, 0], d[:, 0]).real
        g22 = np.vdot(d[:, 1], d[:, 1]).real
        g12 = np.vdot(d[:, 0], d[:, 1])
    l1, l2, rank = gram_eigenvalues(g11, g22, g12)
    lambdas = tuple(float(v) for v in (l1, l2) if v > 0)
    errors = bin(int(z.index) ^ int(z_hat.index)).count("1") if hasattr(z, "index") else 0
    return PairwiseEvent(z, z_hat, lambdas, int(rank), errors)


def upep_stcm(event: PairwiseEvent, R: int, N0: float) -> float:
    """Unconditional PEP of a two-slot error event."""
    if event.rank == 0:
        raise ValueError("no error event: the two codewords are identical")
    if not N0 > 0:
        raise ConfigurationError(f"N0 must be positive, got {N0}")
    return float(upep(np.array(event.lambdas), R, N0))


def upep_mbm(dist_sq: float, R: int, N0: float) -> float:
    """Unconditional PEP of two single-slot vectors at squared distance ``dist_sq``."""
    if not dist_sq > 0:
        raise ValueError(f"squared distance must be positive, got {dist_sq}")
    if not N0 > 0:
        raise ConfigurationError(f"N0 must be positive, got {N0}")
    return float(upep(np.array([dist_sq]), R, N0))


# -- codebook spectra --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairSpectrum:
    """Distinct eigenvalue pairs of all ordered codeword pairs.

    Attributes
    ----------
    lambdas : (U, 2) array
        Distinct ``(lam1, lam2)`` with ``lam2 = 0`` for rank-one events.
    rank : (U,) int array
    weight : (U,) int array
        Total bit errors of the pairs sharing each spectrum.
    count : (U,) int array
        Number of ordered pairs sharing each spectrum.
    """

    lambdas: np.ndarray
    rank: np.ndarray
    weight: np.ndarray
    count: np.ndarray
    n_codewords: int
    bits_per_codeword: int

    @property
    def d_min(self) -> int:
        return int(self.rank.min())

    def bound(self, R: int, N0):
        """Union bound on the bit error probability at noise power(s) ``N0``."""
        N0 = np.asarray(N0, dtype=float)
        p = upep(self.lambdas, R, N0.reshape(-1, 1))  # (n0, U)
        total = p @ self.weight.astype(float)
        out = total / (self.n_codewords * self.bits_per_codeword)
        return out.reshape(N0.shape)[()]


def _chunk_spectrum(Z: np.ndarray, i0: int, i1: int, two_slot: bool):
    A1 = Z[:, :, 0].T  # (S, N)
    n1 = np.einsum("sn,sn->n", A1.conj(), A1).real
    rows = slice(i0, i1)
    g11 = n1[rows, None] + n1[None, :] - 2.0 * (A1[:, rows].conj().T @ A1).real
    if two_slot:
        A2 = Z[:, :, 1].T
        n2 = np.einsum("sn,sn->n", A2.conj(), A2).real
        d12 = np.einsum("sn,sn->n", A1.conj(), A2)
        g22 = n2[rows, None] + n2[None, :] - 2.0 * (A2[:, rows].conj().T @ A2).real
        p12 = A1[:, rows].conj().T @ A2  # Z1_i^H Z2_j
        p21 = A2[:, rows].conj().T @ A1  # Z2_i^H Z1_j
        g12 = d12[rows, None] - p12 - p21.conj() + d12[None, :]
    else:
        g22 = np.zeros_like(g11)
        g12 = np.zeros(g11.shape, dtype=complex)
    # tiny negatives from cancellation
    np.maximum(g11, 0.0, out=g11)
    np.maximum(g22, 0.0, out=g22)
    return gram_eigenvalues(g11, g22, g12)


@lru_cache(maxsize=64)
def _spectrum_cached(cfg: SchemeConfig, cap: int) -> PairSpectrum:
    N = cfg.n_codewords
    if N > cap:
        raise EnumerationTooLarge(
            f"enumeration too large: {cfg.label()} has {N} codewords (cap {cap}); "
            "use the sampled bound instead"
        )
    Z = codeword_matrices(cfg)
    idx = np.arange(N, dtype=np.int64)
    chunk = max(1, (1 << 21) // N)
    acc: dict[tuple[int, int, int], list[int]] = {}
    scale = 10.0**_GROUP_DECIMALS
    for i0 in range(0, N, chunk):
        i1 = min(N, i0 + chunk)
        l1, l2, rank = _chunk_spectrum(Z, i0, i1, cfg.scheme.two_slot)
        err = np.bitwise_count(idx[i0:i1, None] ^ idx[None, :]).astype(np.int64)
        off = err > 0  # excludes i == j
        l1i = np.rint(l1[off] * scale).astype(np.int64)
        l2i = np.rint(l2[off] * scale).astype(np.int64)
        # two-stage 1-D grouping: sorting structured rows is far slower
        u1, inv1 = np.unique(l1i, return_inverse=True)
        u2, inv2 = np.unique(l2i, return_inverse=True)
        key = (inv1.astype(np.int64) * len(u2) + inv2) * 3 + rank[off]
        ukey, inv = np.unique(key, return_inverse=True)
        w = np.bincount(inv, weights=err[off], minlength=len(ukey))
        c = np.bincount(inv, minlength=len(ukey))
        r = ukey % 3
        j2 = (ukey // 3) % len(u2)
        j1 = (ukey // 3) // len(u2)
        for a, b, rk, wi, ci in zip(
            u1[j1].tolist(), u2[j2].tolist(), r.tolist(), w.tolist(), c.tolist()
        ):
            slot = acc.setdefault((a, b, rk), [0, 0])
            slot[0] += int(round(wi))
            slot[1] += int(ci)
    keys = sorted(acc)
    lam = np.array([[k[0], k[1]] for k in keys], dtype=float) / scale
    return PairSpectrum(
        lambdas=lam,
        rank=np.array([k[2] for k in keys], dtype=np.int64),
        weight=np.array([acc[k][0] for k in keys], dtype=np.int64),
        count=np.array([acc[k][1] for k in keys], dtype=np.int64),
        n_codewords=N,
        bits_per_codeword=cfg.bits_per_codeword,
    )


def pair_spectrum(cfg: SchemeConfig, cap: int = DEFAULT_ENUMERATION_CAP) -> PairSpectrum:
    """Distinct Gram spectra over all ordered pairs of distinct codewords.

    Independent of the receive antenna count; results are cached.
    """
    return _spectrum_cached(replace(cfg, R=1), cap)


class SampledBound(NamedTuple):
    value: float
    half_width: float  # 95% confidence
    n_pairs: int


def abep_bound_sampled(
    cfg: SchemeConfig, N0: float, n_pairs: int = 10**6, seed: int = 0
) -> SampledBound:
    """Monte Carlo estimate of the union bound from uniformly sampled ordered pairs."""
    N = cfg.n_codewords
    rng = np.random.default_rng(seed)
    out = np.empty(n_pairs)
    done = 0
    while done < n_pairs:
        n = min(1 << 16, n_pairs - done)
        i = rng.integers(0, N, size=n, dtype=np.int64)
        j = (i + rng.integers(1, N, size=n, dtype=np.int64)) % N
        d = codeword_matrices(cfg, i) - codeword_matrices(cfg, j)
        g11 = np.einsum("ns,ns->n", d[:, :, 0].conj(), d[:, :, 0]).real
        if cfg.scheme.two_slot:
            g22 = np.einsum("ns,ns->n", d[:, :, 1].conj(), d[:, :, 1]).real
            g12 = np.einsum("ns,ns->n", d[:, :, 0].conj(), d[:, :, 1])
        else:
            g22, g12 = np.zeros(n), np.zeros(n, dtype=complex)
        l1, l2, _ = gram_eigenvalues(g11, g22, g12)
        e = np.bitwise_count(i ^ j)
        out[done : done + n] = upep(np.stack([l1, l2], axis=1), cfg.R, N0) * e
        done += n
    factor = (N - 1) / cfg.bits_per_codeword
    mean = out.mean()
    se = out.std(ddof=1) / math.sqrt(n_pairs) if n_pairs > 1 else float("inf")
    return SampledBound(float(factor * mean), float(1.96 * factor * se), n_pairs)


def abep_bound(cfg: SchemeConfig, N0, cap: int = DEFAULT_ENUMERATION_CAP):
    """Exact union bound on the BER of ``cfg`` at noise power(s) ``N0``."""
    if np.any(np.asarray(N0) <= 0):
        raise ConfigurationError("N0 must be positive")
    return pair_spectrum(cfg, cap).bound(cfg.R, N0)


def abep_bound_stcm(
    cfg: SchemeConfig,
    N0,
    cap: int = DEFAULT_ENUMERATION_CAP,
    sample: bool = False,
    n_pairs: int = 10**6,
    seed: int = 0,
):
    """Union bound for a two-slot scheme.

    When the codebook exceeds ``cap`` and ``sample`` is True, returns a
    :class:`SampledBound` estimate instead of the exact value.
    """
    if not cfg.scheme.two_slot:
        raise ConfigurationError(f"scheme: {cfg.scheme.value} is not a two-slot scheme")
    if cfg.n_codewords > cap and sample:
        return abep_bound_sampled(cfg, float(N0), n_pairs, seed)
    return abep_bound(cfg, N0, cap)


def abep_bound_mbm(M: int, Q: int, R: int, N0):
    """Union bound for MBM-SIMO.

    Plain MBM (Q=1) uses symmetry: every wrong state is at squared distance
    2, so the bound is ``(1/M) sum_j P(2) popcount(j)`` from a fixed
    reference state. Symbol-aided MBM uses the full enumeration.
    """
    if Q == 1:
        weights = sum(bin(j).count("1") for j in range(1, 1 << M))
        return upep(np.array([2.0]), R, np.asarray(N0, dtype=float)) * weights / M
    return abep_bound(SchemeConfig(Scheme.MBM_SIMO, M=M, Q=Q, R=R), N0)


def diversity_min(cfg: SchemeConfig, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """Minimum Gram rank over all ordered pairs of distinct codewords."""
    return pair_spectrum(cfg, cap).d_min


# -- trade-off table -----------------------------------------------------------


@dataclass(frozen=True)
class TradeoffRow:
    scheme: str
    eta: float | None
    d_min: int
    complexity: int | None
    formula: str
    Q: int | None = None


_FORMULAS = {
    Scheme.SIMO: ("Classical SIMO", 1, "Q"),
    Scheme.ALAMOUTI: ("Alamouti's STBC", 2, "2Q"),
    "stbc-sm": ("STBC-SM", 2, "2^(C+1) Q"),
    Scheme.MBM_SIMO: ("MBM-SIMO", 1, "2^M Q"),
    Scheme.MBM_MIMO: ("MBM-MIMO", 1, "2^(2M) Q^2"),
    Scheme.STCM1: ("STCM Scheme 1", 1, "2^(2M+1) Q"),
    Scheme.STCM2: ("STCM Scheme 2", 2, "2^(M+1) Q"),
    Scheme.STCM3: ("STCM Scheme 3", 2, "2^(2M) Q^2"),
}
_ORDER = [
    Scheme.SIMO, Scheme.ALAMOUTI, "stbc-sm", Scheme.MBM_SIMO,
    Scheme.MBM_MIMO, Scheme.STCM1, Scheme.STCM2, Scheme.STCM3,
]


def _stbc_sm_c(T: int) -> int:
    return int(math.floor(math.log2(math.comb(T, 2)))) if T >= 2 else 0


def _row(key, M: int, Q: int, T: int) -> TradeoffRow:
    name, d, formula = _FORMULAS[key]
    if key == "stbc-sm":
        C = _stbc_sm_c(T)
        return TradeoffRow(name, 0.5 * C + math.log2(Q), d, (1 << (C + 1)) * Q, formula, Q)
    cfg = SchemeConfig(key, M=0 if key in (Scheme.SIMO, Scheme.ALAMOUTI) else M, Q=Q)
    return TradeoffRow(name, cfg.eta, d, ml_complexity(cfg), formula, Q)


def tradeoff_table(M: int, Q: int, T: int = 4) -> list[TradeoffRow]:
    """Data rate, transmit diversity and ML complexity of every scheme at fixed (M, Q, T)."""
    rows = []
    for key in _ORDER:
        if key in (Scheme.SIMO, Scheme.ALAMOUTI) and Q < 2:
            rows.append(TradeoffRow(_FORMULAS[key][0], None, _FORMULAS[key][1], None, _FORMULAS[key][2]))
            continue
        rows.append(_row(key, M, Q, T))
    return rows


def tradeoff_table_at_rate(eta: float, M: int, T: int = 4) -> list[TradeoffRow]:
    """Trade-off table with each scheme's Q chosen to reach ``eta`` bpcu.

    Rows that cannot reach ``eta`` with a power-of-two Q (>= 2 where symbols
    are required, >= 1 for MBM) have ``eta``/``complexity`` set to None.
    """
    rows = []
    for key in _ORDER:
        name, d, formula = _FORMULAS[key]
        if key == "stbc-sm":
            sym = eta - 0.5 * _stbc_sm_c(T)
        elif key in (Scheme.SIMO, Scheme.ALAMOUTI):
            sym = eta
        elif key is Scheme.MBM_MIMO:
            sym = (eta - 2 * M) / 2
        elif key is Scheme.STCM2:
            sym = eta - 0.5 * M
        else:
            sym = eta - M
        min_bits = 0 if key in (Scheme.MBM_SIMO, Scheme.MBM_MIMO) else 1
        if sym < min_bits or sym != int(sym):
            rows.append(TradeoffRow(name, None, d, None, formula))
            continue
        rows.append(_row(key, M, 1 << int(sym), T))
    return rows
