"""Degradation operator: spatially-invariant convolution with a
simplex-constrained kernel, plus motion-kernel synthesis for the corpus.

Kernels are parametrized by unconstrained logits; the realized kernel is a
softmax over all k*k entries, so every iterate is nonnegative and sums to 1.
`apply_blur` is differentiable with respect to both the image and the kernel
when called with torch tensors.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from scipy.ndimage import gaussian_filter

from .errors import ConfigurationError, ShapeError

PAD_MODES = ("replicate", "circular")


def _check_kernel_shape(k: int):
    if k % 2 == 0 or k < 1:
        raise ConfigurationError(f"kernel side must be odd and positive, got {k}")


def kernel_from_logits(logits):
    """Softmax over all k*k logits; accepts numpy or torch, returns same kind."""
    if isinstance(logits, np.ndarray):
        if logits.ndim != 2 or logits.shape[0] != logits.shape[1]:
            raise ShapeError(f"logits must be square, got {logits.shape}")
        _check_kernel_shape(logits.shape[0])
        flat = logits.astype(np.float64).ravel()
        flat = np.exp(flat - flat.max())
        return (flat / flat.sum()).reshape(logits.shape)
    if logits.ndim != 2 or logits.shape[0] != logits.shape[1]:
        raise ShapeError(f"logits must be square, got {tuple(logits.shape)}")
    _check_kernel_shape(logits.shape[0])
    return torch.softmax(logits.reshape(-1), dim=0).reshape(logits.shape)


def check_kernel(kernel, tol: float = 1e-6):
    """Assert the simplex invariant: nonnegative entries summing to 1."""
    arr = kernel.detach().cpu().numpy() if isinstance(kernel, torch.Tensor) else np.asarray(kernel)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"kernel must be square, got {arr.shape}")
    _check_kernel_shape(arr.shape[0])
    if arr.min() < -tol:
        raise ConfigurationError(f"kernel has negative mass {arr.min()}")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise ConfigurationError(f"kernel mass {arr.sum()} differs from 1")


def convolve2d(x: torch.Tensor, kernel: torch.Tensor, padding: str = "replicate") -> torch.Tensor:
    """True per-channel 2D convolution of an (N, C, H, W) tensor.

    out[i, j] = sum_{u, v} kernel[u, v] * x[i - u + c, j - v + c], realized by
    flipping the kernel before the correlation that conv2d computes. Boundary
    handling is replicate by default; `circular` exists for energy tests.
    """
    if padding not in PAD_MODES:
        raise ConfigurationError(f"padding must be one of {PAD_MODES}")
    if x.ndim != 4:
        raise ShapeError(f"expected (N, C, H, W), got {tuple(x.shape)}")
    k = kernel.shape[0]
    _check_kernel_shape(k)
    c = x.shape[1]
    pad = k // 2
    xp = F.pad(x, (pad, pad, pad, pad), mode=padding)
    w = torch.flip(kernel.to(x.dtype), dims=(0, 1)).reshape(1, 1, k, k).expand(c, 1, k, k)
    return F.conv2d(xp, w, groups=c)


def apply_blur(x, kernel, noise_sigma: float = 0.0, noise=None, padding: str = "replicate"):
    """Blur an (H, W, C) image: convolution plus optional noise_sigma * noise.

    Accepts numpy arrays or torch tensors and returns the same kind; the torch
    path carries gradients. The output is not clipped, matching the linear
    observation model (storage code clips before quantizing).
    """
    if noise_sigma > 0.0 and noise is None:
        raise ConfigurationError("noise_sigma > 0 requires a noise sample")
    if noise_sigma == 0.0 and noise is not None:
        raise ConfigurationError("noise supplied but noise_sigma is 0")
    is_numpy = isinstance(x, np.ndarray)
    xt = torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32)) if is_numpy else x
    if xt.ndim != 3:
        raise ShapeError(f"expected (H, W, C) image, got {tuple(xt.shape)}")
    kt = torch.from_numpy(np.asarray(kernel, dtype=np.float32)) if isinstance(kernel, np.ndarray) else kernel
    out = convolve2d(xt.permute(2, 0, 1).unsqueeze(0), kt, padding=padding)[0].permute(1, 2, 0)
    if noise_sigma > 0.0:
        nt = torch.from_numpy(np.ascontiguousarray(noise, dtype=np.float32)) if isinstance(noise, np.ndarray) else noise
        if tuple(nt.shape) != tuple(xt.shape):
            raise ShapeError(f"noise shape {tuple(nt.shape)} does not match image {tuple(xt.shape)}")
        out = out + noise_sigma * nt
    return out.numpy() if is_numpy else out


def random_motion_kernel(length_px: int, rng: np.random.Generator, size: int = 9) -> np.ndarray:
    """Rasterize a random smooth camera-shake trajectory onto a size x size grid.

    A random walk of sub-pixel steps with total path length (length_px - 1) is
    centered, splatted bilinearly, and lightly gaussian-smoothed; the result is
    normalized to sum 1. length_px = 1 degenerates to a near-delta kernel.
    """
    _check_kernel_shape(size)
    if not 1 <= length_px < size:
        raise ConfigurationError(f"length_px must be in [1, {size}), got {length_px}")
    path = max(0.0, float(length_px) - 1.0)
    n = max(2, int(round(path * 16)) + 1)
    theta = rng.uniform(0.0, 2.0 * math.pi)
    turn = rng.normal(0.0, 0.35, size=n)
    pts = np.zeros((n, 2))
    step = path / (n - 1)
    for i in range(1, n):
        theta += turn[i]
        pts[i] = pts[i - 1] + step * np.array([math.cos(theta), math.sin(theta)])
    pts -= pts.mean(axis=0)

    grid = np.zeros((size, size), dtype=np.float64)
    center = size // 2
    half = size / 2.0 - 1e-6
    pts = np.clip(pts, -half + 0.5, half - 0.5)
    for px, py in pts:
        gx, gy = px + center, py + center
        x0, y0 = int(math.floor(gx)), int(math.floor(gy))
        fx, fy = gx - x0, gy - y0
        for dx, wx in ((0, 1 - fx), (1, fx)):
            for dy, wy in ((0, 1 - fy), (1, fy)):
                xi, yi = min(max(x0 + dx, 0), size - 1), min(max(y0 + dy, 0), size - 1)
                grid[yi, xi] += wx * wy
    grid = gaussian_filter(grid, sigma=0.35, mode="constant")
    return (grid / grid.sum()).astype(np.float64)
