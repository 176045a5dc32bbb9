import itertools

import numpy as np
import pytest

from stcm.channel import RngStream, draw_extended_channel
from stcm.codec import (
    MbmCodeword,
    Scheme,
    SchemeConfig,
    StcmCodeword,
    build_equivalent_channel,
    codeword_matrices,
    decode,
    encode,
    enumerate_codewords,
    receive_vector,
    transmit,
    transmit_batch,
)
from stcm.core import ConfigurationError, EnumerationTooLarge

SMALL = [
    SchemeConfig("simo", Q=8),
    SchemeConfig("ssk", T=8),
    SchemeConfig("mbm-simo", M=2, Q=1),
    SchemeConfig("mbm-simo", M=2, Q=4),
    SchemeConfig("mbm-mimo", M=1, Q=4),
    SchemeConfig("alamouti", Q=16),
    SchemeConfig("stcm1", M=2, Q=4),
    SchemeConfig("stcm2", M=3, Q=8),
    SchemeConfig("stcm3", M=1, Q=2),
    SchemeConfig("stcm3", M=2, Q=4),
]
IDS = [c.label() for c in SMALL]


def bits_of(v: int, w: int):
    return [(v >> (w - 1 - i)) & 1 for i in range(w)]


@pytest.mark.parametrize(
    "bits,z",
    [((0, 0), [1, 0, 0, 0]), ((0, 1), [0, 1, 0, 0]), ((1, 0), [0, 0, 1, 0]), ((1, 1), [0, 0, 0, 1])],
)
def test_plain_mbm_vectors(bits, z):
    cw = encode(bits, SchemeConfig("mbm-simo", M=2, Q=1))
    assert isinstance(cw, MbmCodeword)
    np.testing.assert_array_equal(cw.z, z)


def test_stcm2_hand_example():
    cfg = SchemeConfig("stcm2", M=2, Q=2)
    cw = encode([1, 1, 0, 0], cfg)
    assert (cw.k, cw.l, cw.m, cw.n) == (4, 4, 4, 4)
    assert cw.x1 == 1 and cw.x2 == 1
    expected = np.zeros((8, 2))
    expected[3, 0], expected[7, 0], expected[3, 1], expected[7, 1] = 1, 1, -1, 1
    np.testing.assert_array_equal(cw.Z, expected)


def test_stcm3_small_is_injective_with_constraints():
    cfg = SchemeConfig("stcm3", M=1, Q=2)
    assert cfg.bits_per_codeword == 4
    cws = enumerate_codewords(cfg)
    assert len({cw.Z.tobytes() for cw in cws}) == len(cws) == 16
    assert all(cw.m == cw.l and cw.n == cw.k for cw in cws)


@pytest.mark.parametrize(
    "cfg,eta,bits",
    [
        (SchemeConfig("simo", Q=256), 8, 8),
        (SchemeConfig("ssk", T=16), 4, 4),
        (SchemeConfig("mbm-simo", M=4, Q=2), 5, 5),
        (SchemeConfig("mbm-mimo", M=2, Q=4), 8, 8),
        (SchemeConfig("alamouti", Q=32), 5, 10),
        (SchemeConfig("stcm1", M=4, Q=2), 5, 10),
        (SchemeConfig("stcm2", M=4, Q=8), 5, 10),
        (SchemeConfig("stcm2", M=3, Q=2), 2.5, 5),
        (SchemeConfig("stcm3", M=4, Q=4), 6, 12),
    ],
)
def test_rates(cfg, eta, bits):
    assert cfg.eta == eta
    assert cfg.bits_per_codeword == bits


def test_energy_normalization():
    assert SchemeConfig("mbm-simo", M=4, Q=1).energy_per_bit == pytest.approx(1 / 4)
    assert SchemeConfig("stcm1", M=4, Q=2).energy_per_bit == pytest.approx(2 / 5)
    assert SchemeConfig("alamouti", Q=64).energy_per_bit == pytest.approx(2 / 6)
    cfg = SchemeConfig("simo", Q=4)
    assert cfg.noise_power(10.0) == pytest.approx(0.5 / 10)


@pytest.mark.parametrize("cfg", SMALL, ids=IDS)
def test_encode_decode_bijective(cfg):
    w = cfg.bits_per_codeword
    seen = set()
    for v in range(1 << w):
        bits = tuple(bits_of(v, w))
        cw = encode(bits, cfg)
        assert decode(cw, cfg) == bits
        seen.add(cw.matrix.round(12).tobytes())
    assert len(seen) == 1 << w


@pytest.mark.parametrize("cfg", [c for c in SMALL if c.scheme.two_slot], ids=lambda c: c.label())
def test_z_pattern(cfg):
    for cw in enumerate_codewords(cfg):
        assert isinstance(cw, StcmCodeword)
        Z = cw.Z
        assert (np.count_nonzero(Z, axis=0) == 2).all()
        K = 1 << cfg.M
        assert Z[cw.k - 1, 0] == cw.x1 and Z[K + cw.l - 1, 0] == cw.x2
        assert Z[cw.m - 1, 1] == -np.conj(cw.x2) and Z[K + cw.n - 1, 1] == np.conj(cw.x1)
        if cfg.scheme is Scheme.STCM1:
            assert (cw.m, cw.n) == (cw.k, cw.l)
        elif cfg.scheme is Scheme.STCM2:
            assert cw.k == cw.l == cw.m == cw.n
        elif cfg.scheme is Scheme.STCM3:
            assert (cw.m, cw.n) == (cw.l, cw.k)


@pytest.mark.parametrize("cfg", SMALL, ids=IDS)
def test_codeword_matrices_match_objects(cfg):
    dense = codeword_matrices(cfg)
    for cw in enumerate_codewords(cfg):
        np.testing.assert_array_equal(dense[cw.index], cw.matrix)


def test_enumeration_sizes_and_cap():
    assert len(enumerate_codewords(SchemeConfig("stcm1", M=4, Q=2))) == 1024
    assert len(enumerate_codewords(SchemeConfig("alamouti", Q=2))) == 4
    with pytest.raises(EnumerationTooLarge, match="enumeration too large.*sampled bound"):
        enumerate_codewords(SchemeConfig("stcm3", M=4, Q=32))
    with pytest.raises(EnumerationTooLarge):
        enumerate_codewords(SchemeConfig("stcm1", M=4, Q=2), cap=1000)


def test_equivalent_channel_hand_pattern():
    C = np.arange(1, 9)[None, :] * (1 + 1j)  # R = 1, M = 2, distinct entries
    Ceq = build_equivalent_channel(C, 2, 3, 1, 4)
    expected = np.array([[C[0, 1], C[0, 6]], [np.conj(C[0, 7]), -np.conj(C[0, 0])]])
    np.testing.assert_array_equal(Ceq, expected)


def test_equivalent_channel_reproduces_transmission():
    cfg = SchemeConfig("stcm3", M=2, Q=4, R=3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        C = draw_extended_channel(3, 8, rng)
        cw = encode(bits_of(int(rng.integers(cfg.n_codewords)), cfg.bits_per_codeword), cfg)
        Y = transmit(cw, C)
        Ceq = build_equivalent_channel(C, cw.k, cw.l, cw.m, cw.n)
        y_eq = receive_vector(cfg, Y[None])[0]
        np.testing.assert_allclose(Ceq @ [cw.x1, cw.x2], y_eq, atol=1e-12)


@pytest.mark.parametrize("scheme", ["stcm1", "stcm2"])
def test_orthogonal_equivalent_channels(scheme):
    M = 3
    cfg = SchemeConfig(scheme, M=M, Q=2, R=2)
    rng = np.random.default_rng(1)
    for _ in range(20):
        C = draw_extended_channel(2, 16, rng)
        for cw in enumerate_codewords(cfg)[:: cfg.Q**2]:
            c1, c2 = build_equivalent_channel(C, cw.k, cw.l, cw.m, cw.n).T
            assert abs(np.vdot(c1, c2)) <= 1e-12 * np.linalg.norm(c1) * np.linalg.norm(c2)


def test_scheme3_is_not_orthogonal():
    C = draw_extended_channel(2, 8, RngStream(0))
    c1, c2 = build_equivalent_channel(C, 1, 2, 2, 1).T
    assert abs(np.vdot(c1, c2)) > 1e-3


def test_state_index_range():
    with pytest.raises(ValueError):
        build_equivalent_channel(np.ones((1, 8)), 5, 1, 1, 1)


@pytest.mark.parametrize("cfg", SMALL, ids=IDS)
def test_sparse_transmit_matches_dense(cfg):
    rng = np.random.default_rng(2)
    idx = rng.integers(0, cfg.n_codewords, 100)
    C = draw_extended_channel(3, cfg.n_columns, rng, batch=100)
    cfg3 = SchemeConfig(cfg.scheme, M=cfg.M, Q=cfg.Q, R=3, T=cfg.T)
    batch = transmit_batch(cfg3, C, idx)
    for b, i in enumerate(idx):
        cw = encode(bits_of(int(i), cfg.bits_per_codeword), cfg)
        dense = C[b] @ cw.matrix
        single = transmit(cw, C[b])
        assert np.linalg.norm(single - dense) <= 1e-12 * max(1.0, np.linalg.norm(dense))
        np.testing.assert_allclose(batch[b], dense, rtol=1e-12, atol=1e-12)


def test_plain_mbm_transmit_selects_column():
    cfg = SchemeConfig("mbm-simo", M=3, Q=1, R=4)
    C = draw_extended_channel(4, 8, RngStream(9))
    for cw in enumerate_codewords(cfg):
        np.testing.assert_array_equal(transmit(cw, C)[:, 0], C[:, cw.i - 1])


def test_ssk_equals_mbm_vectors():
    ssk, mbm = SchemeConfig("ssk", T=16), SchemeConfig("mbm-simo", M=4, Q=1)
    assert ssk.M == 4 and ssk.n_columns == mbm.n_columns
    for bits in itertools.product((0, 1), repeat=4):
        np.testing.assert_array_equal(encode(bits, ssk).z, encode(bits, mbm).z)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(scheme="stcm4"), "scheme"),
        (dict(scheme="stcm1", M=0, Q=2), "M"),
        (dict(scheme="stcm1", M=2, Q=1), "Q"),
        (dict(scheme="stcm1", M=2, Q=6), "Q"),
        (dict(scheme="simo", Q=4, R=0), "R"),
        (dict(scheme="ssk", T=6), "T"),
        (dict(scheme="alamouti", M=1, Q=4), "M"),
        (dict(scheme="simo", Q=4, kind="hex"), "kind"),
    ],
)
def test_invalid_configs_name_the_field(kwargs, field):
    with pytest.raises(ConfigurationError, match=f"^{field}:"):
        SchemeConfig(**kwargs)


def test_wrong_bit_length():
    with pytest.raises(ValueError):
        encode([0, 1], SchemeConfig("stcm1", M=1, Q=2))
