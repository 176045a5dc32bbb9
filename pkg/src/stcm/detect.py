"""Maximum-likelihood detectors.

All detectors work on the equivalent model ``y_eq = c1 x1 + c2 x2 + n_eq``
(see :mod:`stcm.codec`), which is an exact rearrangement of
``||Y - C Z||_F``. Expanding the metric,

    ||y - c1 x1 - c2 x2||^2 = ||y||^2 - 2 Re(x1* a1 + x2* a2)
                              + |x1|^2 n1 + |x2|^2 n2 + 2 Re(x1* x2 rho)

with ``a_i = c_i^H y``, ``n_i = ||c_i||^2`` and ``rho = c1^H c2``, so every
candidate costs O(1) once the per-state projections are formed.

Ties resolve to the lowest codeword index.
"""

from __future__ import annotations

import numpy as np

from .codec import (
    Codeword,
    Scheme,
    SchemeConfig,
    codeword_from_index,
)
from .core import ConfigurationError, Constellation

__all__ = [
    "bruteforce_count",
    "conditional_count",
    "ml_complexity",
    "decide_bruteforce",
    "decide_conditional",
    "detect_indices",
    "detect_bruteforce",
    "detect_stcm_conditional",
    "detect_alamouti",
    "supports_conditional",
]

_CONDITIONAL = {Scheme.STCM1, Scheme.STCM2, Scheme.ALAMOUTI}


def supports_conditional(cfg: SchemeConfig) -> bool:
    return cfg.scheme in _CONDITIONAL


def bruteforce_count(cfg: SchemeConfig) -> int:
    """Metric evaluations of an exhaustive search: one per codeword."""
    return cfg.n_codewords


def conditional_count(cfg: SchemeConfig) -> int:
    """Metric evaluations of the conditional detector: ``2 Q`` per state."""
    if not supports_conditional(cfg):
        raise ConfigurationError(
            f"scheme: conditional detection needs orthogonal equivalent channels; "
            f"{cfg.scheme.value} is not supported"
        )
    return cfg.n_states * 2 * cfg.Q


def ml_complexity(cfg: SchemeConfig) -> int:
    """ML decoding complexity of the cheapest exact detector (trade-off table)."""
    if supports_conditional(cfg):
        return conditional_count(cfg)
    return bruteforce_count(cfg)


def _projections(cfg: SchemeConfig, Y: np.ndarray, C: np.ndarray, need_rho: bool):
    """Per-state ``a1, n1, a2, n2, rho`` built from per-column projections.

    With ``p = C^H y_slot1``, ``q = C^H y_slot2`` and ``G = C^H C``, a two-slot
    state ``(k, l, m, n)`` has ``a1 = p[k] + conj(q[K+n])``,
    ``a2 = p[K+l] - conj(q[m])``, ``n1 = G[k,k] + G[K+n,K+n]``,
    ``n2 = G[K+l,K+l] + G[m,m]`` and ``rho = G[k,K+l] - G[m,K+n]``.
    All outputs have shape (B, n_states).
    """
    B = C.shape[0]
    Ch = C.conj()
    p = np.einsum("brs,br->bs", Ch, Y[..., 0])
    norms = np.einsum("brs,brs->bs", C.real, C.real) + np.einsum("brs,brs->bs", C.imag, C.imag)
    sch = cfg.scheme
    K = 1 << cfg.M
    rho = None

    def flat(x):
        return np.ascontiguousarray(np.broadcast_to(x, (B, K, K))).reshape(B, K * K)

    if sch.two_slot:
        q = np.einsum("brs,br->bs", Ch, Y[..., 1])
        p1, p2, q1c, q2c = p[:, :K], p[:, K:], np.conj(q[:, :K]), np.conj(q[:, K:])
        g1, g2 = norms[:, :K], norms[:, K:]
        if need_rho and sch is Scheme.STCM3:
            cross = np.einsum("brs,brt->bst", Ch[:, :, :K], C[:, :, K:])  # G[i, K+j]
        if sch is Scheme.STCM1:  # m = k, n = l
            a1 = flat(p1[:, :, None] + q2c[:, None, :])
            a2 = flat(p2[:, None, :] - q1c[:, :, None])
            n1 = flat(g1[:, :, None] + g2[:, None, :])
            n2 = n1
            if need_rho:
                rho = np.zeros_like(a1)  # G[k,K+l] - G[m,K+n] cancels
            return a1, n1, a2, n2, rho
        if sch is Scheme.STCM3:  # m = l, n = k
            a1 = flat((p1 + q2c)[:, :, None])
            a2 = flat((p2 - q1c)[:, None, :])
            n1 = flat((g1 + g2)[:, :, None])
            n2 = flat((g1 + g2)[:, None, :])
            if need_rho:
                rho = (cross - np.swapaxes(cross, 1, 2)).reshape(B, K * K)
            return a1, n1, a2, n2, rho
        # STCM2 and Alamouti: k = l = m = n
        a1 = p1 + q2c
        a2 = p2 - q1c
        n1 = g1 + g2
        if need_rho:
            rho = np.zeros_like(a1)
        return a1, n1, a2, n1, rho
    lay = cfg.state_indices()
    if sch is Scheme.MBM_MIMO:
        a1, a2 = flat(p[:, :K, None]), flat(p[:, None, K:])
        n1, n2 = flat(norms[:, :K, None]), flat(norms[:, None, K:])
        if need_rho:
            rho = np.einsum("brs,brt->bst", Ch[:, :, :K], C[:, :, K:]).reshape(B, K * K)
        return a1, n1, a2, n2, rho
    return p[:, lay[0]], norms[:, lay[0]], None, None, None


def _point_terms(a, n, pts):
    # -2 Re(conj(x) a) + |x|^2 n for every point, shape (Q, B, S)
    out = np.empty((pts.size,) + a.shape)
    for i, x in enumerate(pts):
        np.multiply(a.real, -2.0 * x.real, out=out[i])
        if x.imag:
            out[i] -= (2.0 * x.imag) * a.imag
        out[i] += (x.real**2 + x.imag**2) * n
    return out


def _pair_search(t1, t2, rho, pts):
    """Exhaustive min over ``(x1, x2)`` for every state.

    Returns the per-state minimum metric and the winning ``x1 * Q + x2``,
    ties going to the lowest pair index.
    """
    Q = pts.size
    best = np.full(t1.shape[1:], np.inf)
    arg = np.zeros(t1.shape[1:], dtype=np.int64)
    m = np.empty_like(best)
    for i in range(Q):
        ci = np.conj(pts[i])
        for j in range(Q):
            c = 2.0 * ci * pts[j]
            np.add(t1[i], t2[j], out=m)
            if rho is not None:
                if c.real:
                    m += c.real * rho.real
                if c.imag:
                    m -= c.imag * rho.imag
            better = m < best
            np.copyto(best, m, where=better)
            arg[better] = i * Q + j
    return best, arg


def _energy(Y: np.ndarray) -> np.ndarray:
    Yf = Y.reshape(Y.shape[0], -1)
    return np.einsum("bl,bl->b", Yf.real, Yf.real) + np.einsum("bl,bl->b", Yf.imag, Yf.imag)


def decide_bruteforce(
    cfg: SchemeConfig, Y: np.ndarray, C: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive ML over all codewords for a batch.

    Parameters
    ----------
    Y : array (B, R, slots)
    C : array (B, R, n_columns)

    Returns
    -------
    indices : int array (B,)
    metrics : float array (B,)
        ``||Y - C Z||_F^2`` of the decision.
    """
    pts = cfg.constellation.points
    a1, n1, a2, n2, rho = _projections(cfg, Y, C, need_rho=True)
    t1 = _point_terms(a1, n1, pts)
    if a2 is None:
        best_q = np.argmin(t1, axis=0)  # (B, S)
        best = np.take_along_axis(t1, best_q[None], axis=0)[0]
        per_state = best_q
    else:
        best, per_state = _pair_search(t1, _point_terms(a2, n2, pts), rho, pts)
    state = np.argmin(best, axis=1)
    b = np.arange(Y.shape[0])
    idx = (state << (cfg.n_symbols * cfg.symbol_bits)) | per_state[b, state]
    return idx.astype(np.int64), best[b, state] + _energy(Y)


def decide_conditional(
    cfg: SchemeConfig, Y: np.ndarray, C: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Conditional ML for orthogonal equivalent channels (STCM 1/2, Alamouti).

    For each state the two symbols are detected independently by matched
    filter projection and nearest-point quantization; the state minimizing
    ``m1 + m2`` wins. Because ``c1^H c2 = 0`` this equals exhaustive ML.
    Returns ``(indices, metrics)`` like :func:`decide_bruteforce`.
    """
    if not supports_conditional(cfg):
        raise ConfigurationError(f"scheme: conditional detection not supported for {cfg.scheme.value}")
    const = cfg.constellation
    pts = const.points
    a1, n1, a2, n2, _ = _projections(cfg, Y, C, need_rho=False)
    s1 = const.nearest(a1 / n1)
    s2 = const.nearest(a2 / n2)
    x1, x2 = pts[s1], pts[s2]
    d = -2.0 * (x1.real * a1.real + x1.imag * a1.imag) + (x1.real**2 + x1.imag**2) * n1
    d -= 2.0 * (x2.real * a2.real + x2.imag * a2.imag)
    d += (x2.real**2 + x2.imag**2) * n2
    state = np.argmin(d, axis=1)
    b = np.arange(Y.shape[0])
    idx = cfg.join_index(state, s1[b, state], s2[b, state])
    return idx.astype(np.int64), d[b, state] + _energy(Y)


def detect_indices(
    cfg: SchemeConfig, Y: np.ndarray, C: np.ndarray, method: str = "auto"
) -> tuple[np.ndarray, int]:
    """Detect a batch ``Y`` (B, R, slots) under channels ``C`` (B, R, n_columns).

    ``method`` is ``"auto"`` (cheapest exact ML), ``"bruteforce"`` or
    ``"conditional"``. Returns the decided codeword indices and the metric
    count per decision.
    """
    if method == "auto":
        method = "conditional" if supports_conditional(cfg) else "bruteforce"
    if method == "conditional":
        idx, _ = decide_conditional(cfg, Y, C)
        return idx, conditional_count(cfg)
    if method == "bruteforce":
        idx, _ = decide_bruteforce(cfg, Y, C)
        return idx, bruteforce_count(cfg)
    raise ConfigurationError(f"method: unknown detection method {method!r}")


def _single(cfg: SchemeConfig, Y: np.ndarray, C: np.ndarray):
    Y = np.asarray(Y, dtype=complex)
    C = np.asarray(C, dtype=complex)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape != (cfg.R, cfg.slots):
        raise ValueError(f"received signal must be {cfg.R}x{cfg.slots}, got {Y.shape}")
    if C.shape != (cfg.R, cfg.n_columns):
        raise ValueError(f"channel must be {cfg.R}x{cfg.n_columns}, got {C.shape}")
    return Y[None], C[None]


def detect_bruteforce(Y: np.ndarray, C: np.ndarray, cfg: SchemeConfig) -> tuple[Codeword, int]:
    """Exhaustive ML decision for one received block."""
    Yb, Cb = _single(cfg, Y, C)
    idx, count = detect_indices(cfg, Yb, Cb, "bruteforce")
    return codeword_from_index(cfg, int(idx[0])), count


def detect_stcm_conditional(Y: np.ndarray, C: np.ndarray, cfg: SchemeConfig) -> tuple[Codeword, int]:
    """Reduced-complexity exact ML for STCM Schemes 1 and 2.

    Raises
    ------
    ConfigurationError
        For Scheme 3 (its equivalent channel is not orthogonal) or any
        non-STCM scheme.
    """
    if cfg.scheme not in (Scheme.STCM1, Scheme.STCM2):
        raise ConfigurationError(
            f"scheme: conditional STCM detection supports stcm1/stcm2 only, got {cfg.scheme.value}"
        )
    Yb, Cb = _single(cfg, Y, C)
    idx, count = detect_indices(cfg, Yb, Cb, "conditional")
    return codeword_from_index(cfg, int(idx[0])), count


def detect_alamouti(
    Y: np.ndarray, H: np.ndarray, constellation: Constellation
) -> tuple[tuple[complex, complex], int]:
    """Alamouti ML decoding by orthogonal decoupling.

    Returns ``((x1, x2), metric_count)`` with ``metric_count = 2 Q``.
    """
    H = np.asarray(H)
    cfg = SchemeConfig(Scheme.ALAMOUTI, Q=constellation.order, R=H.shape[0], kind=constellation.kind)
    object.__setattr__(cfg, "constellation", constellation)
    Yb, Hb = _single(cfg, Y, H)
    idx, count = detect_indices(cfg, Yb, Hb, "conditional")
    _, s1, s2 = cfg.split_index(int(idx[0]))
    return (complex(constellation.points[s1]), complex(constellation.points[s2])), count
