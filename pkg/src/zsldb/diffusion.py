"""Noise schedule and DDIM machinery: forward noising, deterministic or
stochastic stepping, sub-sampled sampling plans, and inversion.

All latent states are (N, c, h, w) tensors. The denoiser passed to
:func:`ddim_sample` / :func:`ddim_invert` is any callable
``denoiser(x, t, control) -> eps_hat`` returning a same-shape noise
prediction; pass ``control=None`` for the unconditioned path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import ConfigurationError, ShapeError

BETA_MIN = 1e-8
BETA_MAX = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal coefficients alpha_bar[0..T], alpha_bar[0] == 1."""

    T: int
    alpha_bar: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if ab.shape != (self.T + 1,):
            raise ConfigurationError(f"alpha_bar must have length T+1={self.T + 1}, got {ab.shape}")
        if ab[0] != 1.0:
            raise ConfigurationError("alpha_bar[0] must be exactly 1")
        if ab[-1] <= 0.0:
            raise ConfigurationError("alpha_bar[T] must stay positive")
        if not np.all(np.diff(ab) < 0):
            raise ConfigurationError("alpha_bar must be strictly decreasing")
        object.__setattr__(self, "alpha_bar", ab)


def make_schedule(kind: str, T: int) -> NoiseSchedule:
    """Build a `linear` or `cosine` schedule with T training timesteps."""
    if T < 2:
        raise ConfigurationError(f"T must be >= 2, got {T}")
    if kind == "linear":
        betas = np.linspace(1e-4, 0.02, T, dtype=np.float64)
    elif kind == "cosine":
        # betas derived from the squared-cosine alpha_bar curve (offset 0.008),
        # clipped so alpha_bar stays strictly decreasing and positive at T.
        s = 0.008

        def f(t):
            return math.cos((t / T + s) / (1 + s) * math.pi / 2) ** 2

        ratio = np.array([f(t) / f(t - 1) for t in range(1, T + 1)], dtype=np.float64)
        betas = np.clip(1.0 - ratio, BETA_MIN, BETA_MAX)
    else:
        raise ConfigurationError(f"unknown schedule kind {kind!r}")
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return NoiseSchedule(T=T, alpha_bar=alpha_bar)


@dataclass(frozen=True)
class TimestepPlan:
    """Strictly monotone list of timesteps; consecutive pairs are transitions.

    A descending plan ending at 0 drives sampling; an ascending plan starting
    at 0 drives inversion. ``len(steps) - 1`` transitions means that many
    denoiser evaluations.
    """

    steps: tuple[int, ...]

    def __post_init__(self):
        st = tuple(int(s) for s in self.steps)
        diffs = [b - a for a, b in zip(st, st[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ConfigurationError(f"plan must be strictly monotone, got {st}")
        if st and min(st) < 0:
            raise ConfigurationError("plan steps must be >= 0")
        object.__setattr__(self, "steps", st)

    @property
    def transitions(self):
        return list(zip(self.steps, self.steps[1:]))

    @staticmethod
    def sampling(T: int, n_steps: int) -> "TimestepPlan":
        """Uniform-stride descending plan T -> 0 with ``n_steps`` transitions."""
        if not 1 <= n_steps <= T:
            raise ConfigurationError(f"n_steps must be in [1, T], got {n_steps}")
        steps = np.unique(np.round(np.linspace(0, T, n_steps + 1)).astype(int))
        return TimestepPlan(tuple(int(s) for s in steps[::-1]))

    @staticmethod
    def inversion(T: int, n_steps: int) -> "TimestepPlan":
        """Uniform-stride ascending plan 0 -> T with ``n_steps`` transitions."""
        return TimestepPlan(tuple(reversed(TimestepPlan.sampling(T, n_steps).steps)))


def _check_t(t: int, schedule: NoiseSchedule):
    if not 0 <= t <= schedule.T:
        raise ConfigurationError(f"timestep {t} outside [0, {schedule.T}]")


def add_noise(x0: torch.Tensor, t: int, eps: torch.Tensor, schedule: NoiseSchedule) -> torch.Tensor:
    """Forward noising: sqrt(a_t) * x0 + sqrt(1 - a_t) * eps."""
    _check_t(t, schedule)
    if eps.shape != x0.shape:
        raise ShapeError(f"eps shape {tuple(eps.shape)} does not match x0 {tuple(x0.shape)}")
    a = float(schedule.alpha_bar[t])
    return math.sqrt(a) * x0 + math.sqrt(1.0 - a) * eps


def sigma(eta: float, t: int, t_prev: int, schedule: NoiseSchedule) -> float:
    """Stochasticity coefficient of the t -> t_prev transition.

    sigma_t(eta) = eta * sqrt((1 - a_prev) / (1 - a_t)) * sqrt((1 - a_t) / a_prev);
    eta = 0 gives the deterministic sampler.
    """
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(f"eta must be in [0, 1], got {eta}")
    if not t > t_prev >= 0:
        raise ConfigurationError(f"need t > t_prev >= 0, got t={t}, t_prev={t_prev}")
    _check_t(t, schedule)
    if eta == 0.0:
        return 0.0
    a_t = float(schedule.alpha_bar[t])
    a_prev = float(schedule.alpha_bar[t_prev])
    return eta * math.sqrt((1.0 - a_prev) / (1.0 - a_t)) * math.sqrt((1.0 - a_t) / a_prev)


def ddim_step(
    x_t: torch.Tensor,
    eps_hat: torch.Tensor,
    t: int,
    t_prev: int,
    eta: float,
    schedule: NoiseSchedule,
    noise: torch.Tensor | None = None,
) -> torch.Tensor:
    """One transition x_t -> x_{t_prev}.

    sqrt(a_prev) * (x_t - sqrt(1-a_t) eps_hat) / sqrt(a_t)
      + sqrt(1 - a_prev - sigma^2) * eps_hat + sigma * noise

    The direction radical is clamped at 0 before the square root: with the
    sigma expression above it goes negative as eta -> 1 (and by round-off
    near t_prev = 0), and the clamp is what keeps every eta in [0, 1] a
    well-defined step. With eta = 0 the map is deterministic and
    differentiable in x_t and eps_hat.
    """
    if eps_hat.shape != x_t.shape:
        raise ShapeError(f"eps_hat shape {tuple(eps_hat.shape)} does not match x_t {tuple(x_t.shape)}")
    s = sigma(eta, t, t_prev, schedule)
    if s > 0.0 and noise is None:
        raise ConfigurationError("eta > 0 requires a gaussian noise sample")
    a_t = float(schedule.alpha_bar[t])
    a_prev = float(schedule.alpha_bar[t_prev])
    x0_pred = (x_t - math.sqrt(1.0 - a_t) * eps_hat) / math.sqrt(a_t)
    direction = math.sqrt(max(1.0 - a_prev - s * s, 0.0)) * eps_hat
    out = math.sqrt(a_prev) * x0_pred + direction
    if s > 0.0:
        if noise.shape != x_t.shape:
            raise ShapeError("noise shape does not match x_t")
        out = out + s * noise
    return out


def ddim_sample(
    z_T: torch.Tensor,
    plan: TimestepPlan,
    denoiser,
    schedule: NoiseSchedule,
    control=None,
    eta: float = 0.0,
    noise_generator: torch.Generator | None = None,
    use_checkpointing: bool = False,
) -> torch.Tensor:
    """Run the sampler over a descending plan ending at 0.

    With eta = 0 the whole chain is a pure differentiable function of z_T
    (and of whatever the denoiser closure carries, e.g. the control input).
    ``use_checkpointing`` recomputes each step's activations in backward
    instead of retaining them, bounding memory by one step.
    """
    steps = plan.steps
    if len(steps) >= 2 and (steps[0] < steps[-1] or steps[-1] != 0):
        raise ConfigurationError(f"sampling plan must descend to 0, got {steps}")
    x = z_T
    for t, t_prev in plan.transitions:
        noise = None
        if eta > 0.0:
            if noise_generator is None:
                raise ConfigurationError("eta > 0 requires a noise generator")
            noise = torch.randn(x.shape, generator=noise_generator, dtype=x.dtype, device=x.device)

        def step_fn(x_in, _t=t, _t_prev=t_prev, _noise=noise):
            eps_hat = denoiser(x_in, _t, control)
            return ddim_step(x_in, eps_hat, _t, _t_prev, eta, schedule, noise=_noise)

        if use_checkpointing and torch.is_grad_enabled() and x.requires_grad:
            x = torch.utils.checkpoint.checkpoint(step_fn, x, use_reentrant=False)
        else:
            x = step_fn(x)
    return x


def ddim_invert(
    x0: torch.Tensor,
    plan: TimestepPlan,
    denoiser,
    schedule: NoiseSchedule,
) -> torch.Tensor:
    """Reverse the deterministic recursion over an ascending plan from 0.

    Each transition t_prev -> t reuses the denoiser prediction at the current
    state (single pass, no fixed-point refinement), so
    ``ddim_sample(ddim_invert(x0))`` recovers x0 only approximately.
    """
    steps = plan.steps
    if len(steps) >= 2 and (steps[0] != 0 or steps[1] < steps[0]):
        raise ConfigurationError(f"inversion plan must ascend from 0, got {steps}")
    x = x0
    for t_prev, t in plan.transitions:
        eps_hat = denoiser(x, t_prev, None)
        a_t = float(schedule.alpha_bar[t])
        a_prev = float(schedule.alpha_bar[t_prev])
        x0_pred = (x - math.sqrt(1.0 - a_prev) * eps_hat) / math.sqrt(a_prev)
        x = math.sqrt(a_t) * x0_pred + math.sqrt(1.0 - a_t) * eps_hat
    return x
