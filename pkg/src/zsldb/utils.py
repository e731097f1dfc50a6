"""Small shared helpers: array/tensor conversion, seeding, fingerprints.

Array conventions: the public API is channel-last. An Image is an (H, W, C)
float array in [0, 1] (C is 1 or 3), a DepthMap is (H, W) in meters with 0
marking invalid pixels, a LatentCode is (h, w, c). Torch modules operate on
NCHW internally; the helpers here do the permuting.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
import torch

from .errors import ShapeError


def as_image_tensor(x, dtype=torch.float32) -> torch.Tensor:
    """(H, W, C) array or tensor -> (1, C, H, W) tensor."""
    if isinstance(x, np.ndarray):
        x = torch.from_numpy(np.ascontiguousarray(x))
    if x.ndim != 3:
        raise ShapeError(f"expected (H, W, C) image, got shape {tuple(x.shape)}")
    return x.to(dtype).permute(2, 0, 1).unsqueeze(0)


def as_image_array(t: torch.Tensor) -> np.ndarray:
    """(1, C, H, W) or (C, H, W) tensor -> (H, W, C) float32 array."""
    if t.ndim == 4:
        if t.shape[0] != 1:
            raise ShapeError(f"expected a single image, got batch of {t.shape[0]}")
        t = t[0]
    return t.detach().permute(1, 2, 0).contiguous().cpu().numpy().astype(np.float32)


def as_latent_tensor(z, dtype=torch.float32) -> torch.Tensor:
    """(h, w, c) array or tensor -> (1, c, h, w) tensor."""
    return as_image_tensor(z, dtype=dtype)


def as_latent_array(t: torch.Tensor) -> np.ndarray:
    return as_image_array(t)


def quantize8(img: np.ndarray) -> np.ndarray:
    """Round an image in [0, 1] to the 8-bit grid, staying float."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.float32) / 255.0


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"psnr shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * float(np.log10(peak * peak / mse))


def seeded_generator(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(seed))
    return g


def derive_seed(seed: int, *tags) -> int:
    """Stable per-item seed from a base seed and string/int tags."""
    h = hashlib.sha256(repr((int(seed),) + tuple(tags)).encode()).digest()
    return int.from_bytes(h[:8], "little") % (2**63)


def config_fingerprint(obj) -> str:
    """sha256 over a canonical JSON rendering of a config-like object."""
    if hasattr(obj, "__dataclass_fields__"):
        from dataclasses import asdict

        obj = asdict(obj)
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def parameter_checksum(module: torch.nn.Module) -> str:
    """Order-stable checksum over a module's parameters and buffers."""
    h = hashlib.sha256()
    for name, p in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(p.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def measure_saved_activation_bytes(fn) -> int:
    """Total unique bytes stashed for backward while running ``fn()``.

    Counts each saved storage once (weights that several ops save are not
    double counted). Used by the activation-recomputation memory contract:
    checkpointed chains stash only segment boundaries, so their count stays
    near the single-step count.
    """
    seen = set()
    total = 0

    def pack(t):
        nonlocal total
        key = (t.untyped_storage().data_ptr(), t.untyped_storage().nbytes())
        if key not in seen:
            seen.add(key)
            total += key[1]
        return t

    def unpack(t):
        return t

    with torch.autograd.graph.saved_tensors_hooks(pack, unpack):
        fn()
    return total
