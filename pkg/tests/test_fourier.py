import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vblwaves import fourier


def trig(x, L, a, b):
    """Real trigonometric polynomial with cosine/sine amplitudes ``a``, ``b``."""
    out = np.full_like(x, a[0])
    for k in range(1, len(a)):
        w = 2 * np.pi * k * x / L
        out += a[k] * np.cos(w) + b[k] * np.sin(w)
    return out


def dtrig(x, L, a, b):
    out = np.zeros_like(x)
    for k in range(1, len(a)):
        w = 2 * np.pi * k / L
        out += w * (-a[k] * np.sin(w * x) + b[k] * np.cos(w * x))
    return out


amps = st.lists(st.floats(-2, 2), min_size=4, max_size=4)
lengths = st.floats(1.0, 20.0)


@settings(max_examples=40, deadline=None)
@given(amps, amps, lengths, st.sampled_from([16, 17, 32]))
def test_derivative_and_evaluate_are_exact_on_band_limited_data(a, b, L, M):
    x = np.arange(M) * L / M
    u = trig(x, L, a, b)
    assert np.allclose(fourier.derivative(u, L), dtrig(x, L, a, b), atol=1e-10)
    xs = np.linspace(-L, 2 * L, 37)
    assert np.allclose(fourier.evaluate(u, L, xs), trig(xs, L, a, b), atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(amps, amps, lengths, st.floats(-30, 30))
def test_shift_matches_translated_samples(a, b, L, r):
    M = 24
    x = np.arange(M) * L / M
    u = trig(x, L, a, b)
    assert np.allclose(fourier.shift(u, L, r), trig(x + r, L, a, b), atol=1e-11)


@pytest.mark.parametrize("M,Mn", [(16, 40), (17, 64), (32, 15), (64, 16), (20, 20)])
def test_resize_preserves_resolved_content(M, Mn):
    L = 3.0
    a, b = [0.3, 1.0, -0.5, 0.2], [0.0, 0.4, 0.1, -0.7]
    u = trig(np.arange(M) * L / M, L, a, b)
    v = fourier.resize(u, Mn)
    assert np.allclose(v, trig(np.arange(Mn) * L / Mn, L, a, b), atol=1e-12)


def test_resize_nyquist_round_trip():
    rng = np.random.default_rng(3)
    u = rng.standard_normal(16)
    assert np.allclose(fourier.resize(fourier.resize(u, 48), 16), u, atol=1e-13)


def test_diff_matrices_on_two_pi():
    M = 18
    x = 2 * np.pi * np.arange(M) / M
    D1, D2 = fourier.diff_matrices(M)
    assert np.allclose(D1 @ np.sin(3 * x), 3 * np.cos(3 * x), atol=1e-12)
    assert np.allclose(D2 @ np.sin(3 * x), -9 * np.sin(3 * x), atol=1e-11)


def test_sobolev_norm_integer_weights():
    # u = cos(2 pi k x / L) has |u_hat(+-k)| = 1/2
    L, M, k = 5.0, 32, 3
    x = np.arange(M) * L / M
    u = np.cos(2 * np.pi * k * x / L)
    for s in (0.0, 1.0, 2.0):
        assert fourier.sobolev_norm(u, L, s) == pytest.approx(np.sqrt(L * 0.5 * (1 + k * k) ** s), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_parseval(seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(20)
    L = 7.0
    assert fourier.sobolev_norm(u, L, 0) ** 2 == pytest.approx(L * np.mean(u**2), rel=1e-12)


def test_tail_ratio_detects_unresolved_modes():
    M = 60
    x = 2 * np.pi * np.arange(M) / M
    assert fourier.tail_ratio(np.sin(x)) < 1e-15
    assert fourier.tail_ratio(np.sin(x) + 1e-3 * np.cos(25 * x)) == pytest.approx(1e-3, rel=1e-10)
    assert fourier.tail_ratio(np.zeros(8)) == 0.0
