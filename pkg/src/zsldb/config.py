"""Dataclass configs for training, synthesis, and the deblurring run."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import ConfigurationError


@dataclass
class TrainConfig:
    """Shared knobs for the small training loops."""

    batch_size: int = 32
    learning_rate: float = 2e-4
    total_steps: int = 2000
    ema_decay: float = 0.999
    schedule_kind: str = "cosine"
    seed: int = 0

    def validate(self):
        if self.batch_size <= 0 or self.total_steps <= 0 or self.learning_rate <= 0:
            raise ConfigurationError("batch_size, total_steps, learning_rate must be positive")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ConfigurationError(f"ema_decay must be in [0, 1), got {self.ema_decay}")
        return self


@dataclass
class ZSLDBConfig:
    """Hyperparameters of the joint latent/kernel optimization.

    ``gamma`` weights the aesthetic reward and ``lambda_`` the perceptual
    distance to the observation (defaults 0.1 and 1.5). The observation is
    inverted once with ``invert_steps`` deterministic DDIM steps; each loss
    evaluation re-runs the conditioned sampler with ``sample_steps`` steps.
    """

    gamma: float = 0.1
    lambda_: float = 1.5
    invert_steps: int = 50
    sample_steps: int = 10
    iterations: int = 200
    step_size: float = 0.05
    kernel_step_size: float = 0.01
    kernel_size: int = 9
    conditioning: str = "depth"  # depth | edge | none
    control_scale: float = 1.0
    lpips_on_reblurred: bool = False
    use_checkpointing: bool = True
    seed: int = 0

    def validate(self):
        if self.gamma < 0 or self.lambda_ < 0:
            raise ConfigurationError("gamma and lambda_ must be >= 0")
        if not self.invert_steps >= self.sample_steps >= 1:
            raise ConfigurationError(
                f"need invert_steps >= sample_steps >= 1, got {self.invert_steps}/{self.sample_steps}"
            )
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.kernel_size % 2 == 0 or self.kernel_size < 1:
            raise ConfigurationError(f"kernel_size must be odd and positive, got {self.kernel_size}")
        if self.conditioning not in ("depth", "edge", "none"):
            raise ConfigurationError(f"unknown conditioning {self.conditioning!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthConfig:
    """Scene-synthesis parameters for the toy corpus."""

    image_size: int = 64
    shape_count: tuple[int, int] = (2, 4)
    depth_range: tuple[float, float] = (1.0, 5.0)
    blur_length: tuple[int, int] = (3, 7)
    noise_sigma: tuple[float, float] = (0.0, 0.01)
    kernel_size: int = 9
    lidar_downsample: int = 2
    lidar_dropout: float = 0.05
    lowlight_prob: float = 0.3
    seed: int = 0

    def validate(self):
        if self.image_size < 16:
            raise ConfigurationError("image_size must be >= 16")
        lo, hi = self.shape_count
        if not (1 <= lo <= hi):
            raise ConfigurationError(f"degenerate shape_count range {self.shape_count}")
        if not (0 < self.depth_range[0] < self.depth_range[1]):
            raise ConfigurationError(f"degenerate depth_range {self.depth_range}")
        if not (1 <= self.blur_length[0] <= self.blur_length[1] < self.kernel_size):
            raise ConfigurationError(
                f"blur_length {self.blur_length} must fit inside kernel_size {self.kernel_size}"
            )
        if not (0.0 <= self.noise_sigma[0] <= self.noise_sigma[1]):
            raise ConfigurationError(f"degenerate noise_sigma range {self.noise_sigma}")
        if self.kernel_size % 2 == 0:
            raise ConfigurationError("kernel_size must be odd")
        if self.lidar_downsample < 1 or not 0.0 <= self.lidar_dropout < 1.0:
            raise ConfigurationError("bad lidar simulation parameters")
        return self

    def to_dict(self) -> dict:
        return asdict(self)
