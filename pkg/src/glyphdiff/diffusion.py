"""DDPM machinery shared by both stages: cosine schedule, forward noising,
noise-prediction loss, and the ancestral sampler, generic over any real
array state (4-channel image or M x D tensor alike)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

COSINE_OFFSET = 0.008
BETA_CLIP = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta variances and cumulative alpha-bar products.

    Arrays index step t at position t - 1, for t = 1..T.
    """

    beta: np.ndarray
    alpha_bar: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.beta)


def cosine_schedule(steps: int) -> NoiseSchedule:
    """Cosine schedule: alpha_bar(t) = f(t)/f(0) with
    f(t) = cos^2(((t/T + s) / (1 + s)) * pi/2), s = 0.008; betas clip at
    0.999 and alpha_bar is recomputed from the clipped betas so the two
    tables stay internally consistent."""
    if steps < 1:
        raise ValueError("schedule needs at least one step")
    t = np.arange(steps + 1, dtype=np.float64)
    f = np.cos(((t / steps + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)) * (np.pi / 2.0)) ** 2
    raw_bar = f / f[0]
    beta = np.minimum(1.0 - raw_bar[1:] / raw_bar[:-1], BETA_CLIP)
    return NoiseSchedule(beta=beta, alpha_bar=np.cumprod(1.0 - beta))


def q_sample(x0, t: int, eps, schedule: NoiseSchedule):
    """Closed form of the iterated forward chain:
    sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps."""
    ab = float(schedule.alpha_bar[t - 1])
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def _noise_like(x, rng):
    eps = rng.standard_normal(np.shape(x))
    if isinstance(x, np.ndarray):
        return eps
    import torch  # duck-typed path for tensor states

    return torch.as_tensor(eps, dtype=x.dtype, device=x.device)


def eps_loss(denoiser, x0, cond, rng, schedule: NoiseSchedule):
    """Single-draw training objective: draw t uniform in [1, T] and unit
    Gaussian eps, return the mean squared error between the denoiser's
    prediction at the noised state and eps."""
    t = int(rng.integers(1, schedule.steps + 1))
    eps = _noise_like(x0, rng)
    xt = q_sample(x0, t, eps, schedule)
    return ((denoiser(xt, t, cond) - eps) ** 2).mean()


def ddpm_sample(denoiser, cond, schedule: NoiseSchedule, rng, shape):
    """Ancestral DDPM sampling from x_T ~ N(0, I) down to x_0.

    x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(1 - beta_t)
              + sqrt(beta_t) * z,  with z = 0 at t = 1.

    All randomness comes from `rng` (x_T first, then one z per step t > 1),
    so a fixed stream fixes the output bit for bit.
    """
    x = rng.standard_normal(shape)
    for t in range(schedule.steps, 0, -1):
        beta = float(schedule.beta[t - 1])
        ab = float(schedule.alpha_bar[t - 1])
        eps_hat = denoiser(x, t, cond)
        x = (x - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(1.0 - beta)
        if t > 1:
            x = x + np.sqrt(beta) * rng.standard_normal(shape)
    return x


# --- seeded noise streams ----------------------------------------------------

RASTER_STREAM = 0
VECTOR_STREAM = 1
TRAIN_STREAM = 2


def noise_stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for a named substream.

    Stream-splitting rule: substream `key` is SeedSequence(seed, spawn_key=key).
    Sampling uses key = (request_index, stage) with stage 0 for the raster
    stage and 1 for the vector stage; training uses key = (2, stage). Each
    sampling trajectory consumes its stream in step order, so parallel or
    batched sampling reproduces the sequential draws exactly.
    """
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))
    )


class StreamBatch:
    """Adapter presenting per-member generators as one batched stream.

    standard_normal((B, ...)) stacks one (…)-shaped draw per member, so a
    batched sampler consumes exactly the same per-glyph noise as B
    independent sequential runs."""

    def __init__(self, streams):
        self.streams = list(streams)

    def standard_normal(self, shape):
        batch, *rest = shape
        if batch != len(self.streams):
            raise ValueError(f"batch {batch} != {len(self.streams)} streams")
        return np.stack([g.standard_normal(rest) for g in self.streams])


# --- schedule text dump -------------------------------------------------------


def save_schedule(schedule: NoiseSchedule, path: Path | str) -> None:
    """Two-column text table (t, beta_t) for cross-implementation comparison."""
    with open(path, "w") as fh:
        fh.write(f"# cosine noise schedule, T={schedule.steps}\n")
        for t in range(1, schedule.steps + 1):
            fh.write(f"{t} {float(schedule.beta[t - 1])!r}\n")


def load_schedule(path: Path | str) -> NoiseSchedule:
    beta = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        t_str, beta_str = line.split()
        if int(t_str) != len(beta) + 1:
            raise ValueError(f"{path}: non-contiguous step numbering at t={t_str}")
        beta.append(float(beta_str))
    beta_arr = np.asarray(beta, dtype=np.float64)
    return NoiseSchedule(beta=beta_arr, alpha_bar=np.cumprod(1.0 - beta_arr))
