import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stcm.analysis import (
    abep_bound,
    abep_bound_mbm,
    abep_bound_sampled,
    abep_bound_stcm,
    diversity_min,
    gram_eigenvalues,
    pair_spectrum,
    pairwise_eigs,
    tradeoff_table,
    tradeoff_table_at_rate,
    upep,
    upep_mbm,
    upep_stcm,
)
from stcm.codec import SchemeConfig, enumerate_codewords
from stcm.core import ConfigurationError, EnumerationTooLarge

from oracles import naive_union_bound, upep_closed_form, upep_mpmath, upep_trapezoid


def test_upep_matches_closed_form_random():
    rng = np.random.default_rng(0)
    for _ in range(300):
        lam = float(rng.uniform(0.01, 16))
        R = int(rng.integers(1, 9))
        N0 = float(10 ** rng.uniform(-3, 0.5))
        assert float(upep(lam, R, N0)) == pytest.approx(upep_closed_form(lam, R, N0), abs=1e-12)


@pytest.mark.parametrize("c", [1e-6, 1e-4, 3e-3, 0.05, 1.0, 1e3])
@pytest.mark.parametrize("R", [1, 2, 8])
def test_upep_low_and_high_snr(c, R):
    N0 = 0.25
    lam = 4 * N0 * c
    assert float(upep(lam, R, N0)) == pytest.approx(upep_closed_form(lam, R, N0), abs=1e-12)


@pytest.mark.parametrize("lams", [(2.0, 0.5), (4.0, 4.0), (1.3, 0.02), (8.0,)])
@pytest.mark.parametrize("R", [1, 2, 4])
def test_upep_two_eigenvalues_against_adaptive_and_trapezoid(lams, R):
    N0 = 0.1
    v = float(upep(np.array(lams), R, N0))
    assert v == pytest.approx(upep_mpmath(lams, R, N0), abs=1e-12)
    assert v == pytest.approx(upep_trapezoid(lams, R, N0), abs=1e-12)


def test_upep_limits_and_theta_bound():
    # P -> 1/2 - sqrt(c)/2 as c = lam / (4 N0) -> 0
    assert float(upep(4e-14, 1, 1.0)) == pytest.approx(0.5 - 0.5e-7, abs=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        lams = rng.uniform(0, 10, size=2)
        R, N0 = int(rng.integers(1, 5)), float(rng.uniform(0.05, 2))
        chernoff = np.prod((1 + lams / (4 * N0)) ** (-R))
        v = float(upep(lams, R, N0))
        assert 0 < v <= 0.5
        assert v <= chernoff + 1e-15


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.01, 10), st.floats(0.0, 10), st.integers(1, 6), st.floats(0.01, 3),
    st.floats(1.01, 3),
)
def test_upep_monotone(l1, l2, R, N0, k):
    base = float(upep(np.array([l1, l2]), R, N0))
    assert float(upep(np.array([l1 * k, l2]), R, N0)) <= base
    assert float(upep(np.array([l1, l2]), R + 1, N0)) <= base
    assert float(upep(np.array([l1, l2]), R, N0 / k)) <= base


def test_mbm_is_single_eigenvalue_stcm():
    cfg = SchemeConfig("stcm1", M=1, Q=2)
    cws = enumerate_codewords(cfg)
    for cw_hat in cws[1:]:
        ev = pairwise_eigs(cws[0], cw_hat)
        if ev.D == 1:
            assert upep_mbm(ev.lambdas[0], 3, 0.2) == pytest.approx(upep_stcm(ev, 3, 0.2), abs=1e-12)
    mu = math.sqrt(0.5)
    assert upep_mbm(2.0, 1, 0.5) == pytest.approx((1 - mu) / 2, abs=1e-12)


def test_pairwise_events():
    cfg = SchemeConfig("stcm1", M=1, Q=2)
    cws = enumerate_codewords(cfg)
    same = pairwise_eigs(cws[3], cws[3])
    assert same.D == 0 and same.lambdas == ()
    with pytest.raises(ValueError):
        upep_stcm(same, 1, 1.0)
    # same states, symbols differ: scaled identity Gram
    a = next(c for c in cws if (c.k, c.l) == (1, 1) and c.x1 == 1 and c.x2 == 1)
    b = next(c for c in cws if (c.k, c.l) == (1, 1) and c.x1 == -1 and c.x2 == 1)
    ev = pairwise_eigs(a, b)
    assert ev.D == 2 and ev.lambdas[0] == pytest.approx(ev.lambdas[1])
    assert ev.bit_errors == 1
    # k kept, l changed, symbols kept: rank one
    c = next(c for c in cws if (c.k, c.l) == (1, 2) and c.x1 == 1 and c.x2 == 1)
    assert pairwise_eigs(a, c).D == 1


def test_eigen_sum_equals_trace():
    rng = np.random.default_rng(2)
    g = rng.standard_normal((1000, 2, 2)) + 1j * rng.standard_normal((1000, 2, 2))
    G = g.conj().transpose(0, 2, 1) @ g
    l1, l2, _ = gram_eigenvalues(G[:, 0, 0].real, G[:, 1, 1].real, G[:, 0, 1])
    tr = np.trace(G, axis1=1, axis2=2).real
    np.testing.assert_allclose(l1 + l2, tr, rtol=1e-10)
    ref = np.linalg.eigvalsh(G)
    np.testing.assert_allclose(l1, ref[:, 1], rtol=1e-10)
    np.testing.assert_allclose(l2, ref[:, 0], rtol=1e-8, atol=1e-12)


@pytest.mark.parametrize(
    "cfg",
    [
        SchemeConfig("stcm1", M=1, Q=2, R=2),
        SchemeConfig("stcm2", M=2, Q=2, R=1),
        SchemeConfig("stcm3", M=1, Q=4, R=2),
        SchemeConfig("alamouti", Q=4, R=2),
        SchemeConfig("mbm-simo", M=2, Q=2, R=3),
        SchemeConfig("mbm-mimo", M=1, Q=2, R=2),
    ],
    ids=lambda c: c.label(),
)
def test_spectrum_bound_equals_naive_double_sum(cfg):
    N0 = cfg.noise_power(8.0)
    naive = naive_union_bound(
        enumerate_codewords(cfg), cfg.bits_per_codeword, cfg.R, N0,
        lambda ev, R, n0: upep_trapezoid(ev, R, n0, n=4096),
    )
    assert float(abep_bound(cfg, N0)) == pytest.approx(naive, rel=1e-9)


def test_spectrum_counts_all_ordered_pairs():
    spec = pair_spectrum(SchemeConfig("stcm1", M=4, Q=2))
    assert spec.count.sum() == 1024 * 1023
    assert spec.n_codewords == 1024 and spec.bits_per_codeword == 10


@pytest.mark.parametrize(
    "scheme,M,Q,d",
    [("stcm1", 2, 2, 1), ("stcm2", 2, 2, 2), ("stcm3", 2, 4, 2), ("alamouti", 0, 4, 2), ("mbm-simo", 3, 1, 1)],
)
def test_diversity(scheme, M, Q, d):
    assert diversity_min(SchemeConfig(scheme, M=M, Q=Q)) == d


def test_bound_vacuous_at_low_snr_and_monotone():
    cfg = SchemeConfig("stcm1", M=2, Q=2, R=1)
    snr = np.arange(-20, 41, 2.0)
    b = abep_bound(cfg, cfg.noise_power(snr))
    assert b[0] > 0.5
    assert (np.diff(b) < 0).all()


@pytest.mark.parametrize("scheme,Q,d", [("stcm1", 2, 1), ("stcm2", 4, 2), ("stcm3", 2, 2)])
@pytest.mark.parametrize("R", [1, 2])
def test_bound_slope_is_diversity_order(scheme, Q, d, R):
    cfg = SchemeConfig(scheme, M=2, Q=Q, R=R)
    snr = np.arange(30.0, 41.0)
    y = np.log10(abep_bound(cfg, cfg.noise_power(snr)))
    slope = -np.polyfit(snr / 10.0, y, 1)[0]
    assert slope == pytest.approx(R * d, abs=0.15)


def test_mbm_bound_symmetry_shortcut():
    N0 = 0.05
    for R in (1, 4):
        p2 = upep_mbm(2.0, R, N0)
        assert float(abep_bound_mbm(1, 1, R, N0)) == pytest.approx(p2, abs=1e-15)
        assert float(abep_bound_mbm(2, 1, R, N0)) == pytest.approx(2 * p2, abs=1e-15)
        full = abep_bound(SchemeConfig("mbm-simo", M=3, Q=1, R=R), N0)
        assert float(abep_bound_mbm(3, 1, R, N0)) == pytest.approx(float(full), rel=1e-12)
        ssk = abep_bound(SchemeConfig("ssk", T=8, R=R), N0)
        assert float(ssk) == pytest.approx(float(full), rel=1e-12)


def test_sampled_bound_covers_exact():
    cfg = SchemeConfig("stcm3", M=2, Q=2, R=2)
    N0 = cfg.noise_power(10.0)
    exact = float(abep_bound(cfg, N0))
    est = abep_bound_sampled(cfg, N0, n_pairs=200_000, seed=3)
    assert abs(est.value - exact) <= 1.5 * est.half_width
    assert est.half_width < 0.05 * exact


def test_cap_and_sampling_switch():
    cfg = SchemeConfig("stcm3", M=4, Q=32, R=2)
    with pytest.raises(EnumerationTooLarge):
        abep_bound(cfg, 0.1)
    est = abep_bound_stcm(cfg, 0.01, sample=True, n_pairs=20_000)
    assert est.value > 0 and est.n_pairs == 20_000
    with pytest.raises(ConfigurationError):
        abep_bound(cfg, 0.0)
    with pytest.raises(ConfigurationError):
        abep_bound_stcm(SchemeConfig("simo", Q=4), 0.1)


def test_tradeoff_table_values():
    rows = {r.scheme: r for r in tradeoff_table(4, 2, 4)}
    assert len(rows) == 8
    assert [rows[f"STCM Scheme {i}"].complexity for i in (1, 2, 3)] == [1024, 64, 1024]
    assert [rows[f"STCM Scheme {i}"].d_min for i in (1, 2, 3)] == [1, 2, 2]
    assert rows["STBC-SM"].eta == 2 and rows["STBC-SM"].complexity == 16
    assert tradeoff_table(4, 8, 4)[6].eta == 5 and tradeoff_table(4, 8, 4)[6].complexity == 256
    assert tradeoff_table(4, 4, 4)[7].eta == 6 and tradeoff_table(4, 4, 4)[7].complexity == 4096


@pytest.mark.parametrize("eta,expected", [(5, [1024, 256, 1024]), (6, [2048, 512, 4096])])
def test_rate_matched_table(eta, expected):
    rows = tradeoff_table_at_rate(eta, 4)
    assert [r.complexity for r in rows[5:]] == expected
    assert all(r.eta == eta for r in rows if r.eta is not None)
    assert rows[4].eta is None  # MBM-MIMO cannot hit an odd rate with M=4
