"""Blur operator against a brute-force convolution oracle, plus kernel
parametrization and motion-kernel properties."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdcheck import central_diff_grad, rel_err
from zsldb.blur import apply_blur, check_kernel, convolve2d, kernel_from_logits, random_motion_kernel
from zsldb.errors import ConfigurationError, ShapeError


def brute_force_blur(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Quadruple-loop true convolution with replicate padding."""
    H, W, C = x.shape
    k = kernel.shape[0]
    c = k // 2
    out = np.zeros_like(x, dtype=np.float64)
    for i in range(H):
        for j in range(W):
            for u in range(k):
                for v in range(k):
                    si = min(max(i - (u - c), 0), H - 1)
                    sj = min(max(j - (v - c), 0), W - 1)
                    out[i, j] += kernel[u, v] * x[si, sj]
    return out


def delta_kernel(k: int) -> np.ndarray:
    d = np.zeros((k, k), dtype=np.float64)
    d[k // 2, k // 2] = 1.0
    return d


class TestKernelFromLogits:
    def test_equal_logits_uniform(self):
        kern = kernel_from_logits(np.zeros((5, 5)))
        np.testing.assert_allclose(kern, np.full((5, 5), 1.0 / 25.0), rtol=1e-12)

    def test_saturated_logit_near_delta(self):
        logits = np.zeros((5, 5))
        logits[2, 2] = 20.0
        kern = kernel_from_logits(logits)
        assert kern[2, 2] > 0.999

    @given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)), st.floats(-50, 50))
    @settings(max_examples=50, deadline=None)
    def test_shift_invariance(self, logits, const):
        a = kernel_from_logits(logits)
        b = kernel_from_logits(logits + const)
        np.testing.assert_allclose(a, b, atol=1e-12)

    @given(arrays(np.float64, (7, 7), elements=st.floats(-30, 30)))
    @settings(max_examples=100, deadline=None)
    def test_simplex_invariant(self, logits):
        kern = kernel_from_logits(logits)
        assert kern.min() >= 0.0
        assert abs(kern.sum() - 1.0) <= 1e-6
        check_kernel(kern)

    def test_even_size_rejected(self):
        with pytest.raises(ConfigurationError):
            kernel_from_logits(np.zeros((4, 4)))

    def test_torch_path_matches_numpy(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(5, 5))
        a = kernel_from_logits(logits)
        b = kernel_from_logits(torch.from_numpy(logits)).numpy()
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestApplyBlur:
    def test_delta_identity_exact(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(size=(12, 12, 3)).astype(np.float32)
        out = apply_blur(x, delta_kernel(5))
        np.testing.assert_array_equal(out, x)

    def test_constant_image_preserved(self):
        rng = np.random.default_rng(2)
        kern = kernel_from_logits(rng.normal(size=(7, 7)))
        x = np.full((16, 16, 3), 0.37, dtype=np.float32)
        out = apply_blur(x, kern)
        np.testing.assert_allclose(out, x, atol=1e-6)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(size=(16, 16, 3))
        kern = kernel_from_logits(rng.normal(size=(5, 5)))
        out = apply_blur(x.astype(np.float32), kern)
        want = brute_force_blur(x, kern)
        np.testing.assert_allclose(out, want, atol=1e-6)

    def test_noise_term_and_argument_contract(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(size=(8, 8, 1)).astype(np.float32)
        noise = rng.normal(size=(8, 8, 1)).astype(np.float32)
        kern = delta_kernel(3)
        out = apply_blur(x, kern, noise_sigma=0.1, noise=noise)
        np.testing.assert_allclose(out, x + 0.1 * noise, atol=1e-6)
        with pytest.raises(ConfigurationError):
            apply_blur(x, kern, noise_sigma=0.1)
        with pytest.raises(ConfigurationError):
            apply_blur(x, kern, noise=noise)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            apply_blur(np.zeros((8, 8)), delta_kernel(3))
        with pytest.raises(ShapeError):
            convolve2d(torch.zeros(3, 8, 8), torch.from_numpy(delta_kernel(3)))

    def test_nonnegative_preserved_and_interior_padding_free(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(size=(20, 20, 3)).astype(np.float64)
        kern = kernel_from_logits(rng.normal(size=(5, 5)))
        rep = apply_blur(x, kern, padding="replicate")
        cir = apply_blur(x, kern, padding="circular")
        assert rep.min() >= 0.0
        pad = 2
        np.testing.assert_allclose(rep[pad * 2 : -pad * 2, pad * 2 : -pad * 2], cir[pad * 2 : -pad * 2, pad * 2 : -pad * 2], atol=1e-12)

    def test_mean_preserved_exactly_on_circular_padding(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(size=(16, 16, 3)).astype(np.float64)
        kern = kernel_from_logits(rng.normal(size=(5, 5)))
        out = apply_blur(x, kern, padding="circular")
        assert abs(out.mean() - x.mean()) <= 1e-12


class TestBlurGradients:
    def test_gradient_wrt_logits_matches_fd(self):
        gen = torch.Generator().manual_seed(7)
        x = torch.rand(1, 3, 10, 10, generator=gen, dtype=torch.float64)
        w = torch.randn(1, 3, 10, 10, generator=gen, dtype=torch.float64)
        logits0 = torch.randn(5, 5, generator=gen, dtype=torch.float64)

        def loss(logits):
            return (convolve2d(x, kernel_from_logits(logits)) * w).sum()

        lg = logits0.detach().clone().requires_grad_(True)
        loss(lg).backward()
        fd = central_diff_grad(loss, logits0.clone())
        assert rel_err(fd, lg.grad) <= 1e-3

    def test_gradient_wrt_image_matches_fd(self):
        gen = torch.Generator().manual_seed(8)
        x0 = torch.rand(1, 1, 6, 6, generator=gen, dtype=torch.float64)
        kern = kernel_from_logits(torch.randn(3, 3, generator=gen, dtype=torch.float64))

        def loss(x):
            return (convolve2d(x, kern) ** 2).sum()

        xg = x0.detach().clone().requires_grad_(True)
        loss(xg).backward()
        fd = central_diff_grad(loss, x0.clone())
        assert rel_err(fd, xg.grad) <= 1e-3


class TestRandomMotionKernel:
    def test_length_one_is_near_delta(self):
        kern = random_motion_kernel(1, np.random.default_rng(0), size=9)
        assert kern[4, 4] > 0.9

    def test_normalized_and_nonnegative_over_many_draws(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            kern = random_motion_kernel(int(rng.integers(1, 9)), rng, size=9)
            assert kern.min() >= 0.0
            assert abs(kern.sum() - 1.0) <= 1e-9

    def test_support_grows_with_length(self):
        rng = np.random.default_rng(2)
        means = []
        for length in (3, 7, 11):
            sizes = [np.count_nonzero(random_motion_kernel(length, rng, size=13) > 1e-4) for _ in range(100)]
            means.append(np.mean(sizes))
        assert means[0] < means[1] < means[2]

    def test_length_bounds(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ConfigurationError):
            random_motion_kernel(0, rng, size=9)
        with pytest.raises(ConfigurationError):
            random_motion_kernel(9, rng, size=9)
