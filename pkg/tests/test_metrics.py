import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vofdenoise.metrics import SsimParams, format_psnr, psnr, ssim, ssim_map

image_16 = arrays(np.float64, (16, 16), elements=st.floats(0, 255))


class TestPsnr:
    def test_uniform_unit_error(self, rng):
        ref = rng.uniform(10, 200, (20, 20))
        assert psnr(ref + 1.0, ref) == pytest.approx(48.1308, abs=1e-3)
        assert psnr(ref + 1.0, ref) == pytest.approx(20 * math.log10(255), rel=1e-12)

    def test_identical_is_sentinel(self):
        x = np.ones((3, 3))
        assert psnr(x, x) == math.inf
        assert format_psnr(psnr(x, x)) == "identical"
        assert format_psnr(20.123456) == "20.1235"

    def test_symmetric(self, rng):
        a, b = rng.uniform(0, 255, (2, 9, 9))
        assert psnr(a, b) == psnr(b, a)

    def test_monotone_in_error(self, rng):
        ref = rng.uniform(0, 255, (12, 12))
        noise = rng.normal(size=ref.shape)
        values = [psnr(ref + s * noise, ref) for s in (0.5, 1, 2, 4)]
        assert values == sorted(values, reverse=True)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)))


class TestSsim:
    @settings(max_examples=30, deadline=None)
    @given(image_16)
    def test_self_similarity(self, x):
        assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(image_16, image_16)
    def test_symmetric_and_bounded(self, x, y):
        a, b = ssim(x, y), ssim(y, x)
        assert a == pytest.approx(b, abs=1e-12)
        assert -1.0 - 1e-12 <= a <= 1.0 + 1e-12

    def test_inverted_checkerboard_is_negative(self):
        board = (np.indices((16, 16)).sum(axis=0) % 2) * 200.0 + 20.0
        assert ssim(board, 240.0 - board) < 0.0

    def test_constant_offset_closed_form(self):
        x = np.full((16, 16), 100.0)
        y = x + 10.0
        p = SsimParams()
        expected = (2 * 100 * 110 + p.c1) / (100**2 + 110**2 + p.c1)
        value = ssim(x, y)
        assert 0.0 < value < 1.0
        assert value == pytest.approx(expected, rel=1e-10)

    def test_noise_lowers_ssim(self, rng):
        x = rng.uniform(0, 255, (24, 24))
        lo = ssim(x + rng.normal(scale=30, size=x.shape), x)
        hi = ssim(x + rng.normal(scale=3, size=x.shape), x)
        assert lo < hi < 1.0

    def test_translation_on_interior(self, rng):
        # mirror boundaries break shift equivariance only within the window radius
        big_x = rng.uniform(0, 255, (40, 40))
        big_y = big_x + rng.normal(scale=10, size=big_x.shape)
        m = ssim_map(big_x, big_y)
        shifted = ssim_map(np.roll(big_x, 3, axis=1), np.roll(big_y, 3, axis=1))
        assert np.allclose(shifted[10:-10, 13:-10], m[10:-10, 10:-13], rtol=0, atol=1e-10)

    def test_too_small_image(self):
        with pytest.raises(ValueError, match="window"):
            ssim(np.zeros((10, 30)), np.zeros((10, 30)))

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SsimParams(c1=0)
        with pytest.raises(ValueError):
            SsimParams(radius=0)
