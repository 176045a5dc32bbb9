import numpy as np
import pytest
from scipy import stats

from stcm.channel import RngStream, add_awgn, draw_extended_channel
from stcm.core import ConfigurationError


def test_same_stream_same_matrix():
    s = RngStream(42, (3, 7, 1))
    a = draw_extended_channel(2, 4, s)
    b = draw_extended_channel(2, 4, s)
    assert a.shape == (2, 4)
    np.testing.assert_array_equal(a, b)


def test_distinct_streams_differ():
    a = draw_extended_channel(2, 4, RngStream(42, (0, 0, 1)))
    b = draw_extended_channel(2, 4, RngStream(42, (0, 1, 1)))
    c = draw_extended_channel(2, 4, RngStream(43, (0, 0, 1)))
    assert not np.allclose(a, b) and not np.allclose(a, c)


def test_child_matches_explicit_key():
    s = RngStream(5, (1,))
    np.testing.assert_array_equal(
        draw_extended_channel(1, 8, s.child(2, 3)),
        draw_extended_channel(1, 8, RngStream(5, (1, 2, 3))),
    )


def test_batched_shape():
    assert draw_extended_channel(3, 8, RngStream(0), batch=5).shape == (5, 3, 8)


def test_channel_moments():
    h = draw_extended_channel(4, 250, RngStream(1), batch=1000).ravel()
    assert h.size == 10**6
    assert abs(h.mean()) < 0.01
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.01)
    assert np.var(h.real) == pytest.approx(0.5, abs=0.01)
    assert abs(np.corrcoef(h.real, h.imag)[0, 1]) < 0.01


def test_channel_power_is_exponential():
    h = draw_extended_channel(1, 10**5, RngStream(2))
    p = stats.kstest(np.abs(h.ravel()) ** 2, "expon").pvalue
    assert p > 0.001


def test_noise_variance_and_input_untouched():
    sig = np.ones((1000, 1000), dtype=complex)
    before = sig.copy()
    out = add_awgn(sig, 0.25, RngStream(3))
    np.testing.assert_array_equal(sig, before)
    assert np.var(out - sig) == pytest.approx(0.25, rel=0.01)
    np.testing.assert_array_equal(out, add_awgn(sig, 0.25, RngStream(3)))


@pytest.mark.parametrize("N0", [0.0, -1.0, float("nan")])
def test_noise_power_must_be_positive(N0):
    with pytest.raises(ConfigurationError):
        add_awgn(np.zeros(3), N0, RngStream(0))


def test_bad_dimensions():
    with pytest.raises(ConfigurationError):
        draw_extended_channel(0, 4, RngStream(0))
