"""Per-sample contribution weights for the three luma branches, and fusion.

Weights are computed independently for every channel sample, so one pixel
can take its R output mostly from the bright branch while its B output
comes from the dark branch. All modes partition unity: the three weight
planes sum to 1 at every sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError

DEFAULT_TB = 0.55
DEFAULT_TD = 0.45
DEFAULT_MU = 5000.0


class ContributionMode(Enum):
    # Values double as the wire / CLI tokens.
    LINEAR = "eq3"
    SOFT = "soft"
    HARD = "hard"
    CONSTANT = "constant"


@dataclass(frozen=True)
class ContributionParams:
    mode: ContributionMode = ContributionMode.LINEAR
    tb: float = DEFAULT_TB
    td: float = DEFAULT_TD
    mu: float = DEFAULT_MU

    def __post_init__(self):
        if not 0.0 < self.tb < 1.0 or not 0.0 < self.td < 1.0:
            raise ValidationError(f"thresholds must lie in (0,1), "
                                  f"got tb={self.tb} td={self.td}")
        if self.mode in (ContributionMode.LINEAR, ContributionMode.HARD) \
                and self.td >= self.tb:
            raise ValidationError(f"dark threshold must stay below bright "
                                  f"threshold, got tb={self.tb} td={self.td}")
        if self.mu <= 0.0:
            raise ValidationError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True)
class ContributionMap:
    """Bright / middle / dark weight planes, one per input sample."""

    bright: np.ndarray
    middle: np.ndarray
    dark: np.ndarray


def contribution(x: np.ndarray, params: ContributionParams) -> ContributionMap:
    """Weight planes for an array of SDR code values in [0,1].

    linear: ramps up to the bright branch above tb and to the dark branch
    below td, middle takes the remainder. soft: logarithmic ramps spanning
    the whole range. hard: one-hot by thresholds, ties at a threshold going
    to the extreme branch. constant: 1/3 everywhere.
    """
    x = np.asarray(x, dtype=np.float64)
    mode = params.mode
    if mode is ContributionMode.LINEAR:
        p_b = np.clip((x - params.tb) / (1.0 - params.tb), 0.0, 1.0)
        p_d = np.clip((params.td - x) / params.td, 0.0, 1.0)
        p_m = 1.0 - p_b - p_d
    elif mode is ContributionMode.SOFT:
        norm = np.log1p(params.mu)
        p_b = 1.0 - np.log1p(params.mu * (1.0 - x)) / norm
        p_d = 1.0 - np.log1p(params.mu * x) / norm
        p_m = 1.0 - p_b - p_d
    elif mode is ContributionMode.HARD:
        p_b = (x >= params.tb).astype(np.float64)
        p_d = (x <= params.td).astype(np.float64)
        p_m = 1.0 - p_b - p_d
    else:
        third = np.full_like(x, 1.0 / 3.0)
        p_b, p_m, p_d = third, third.copy(), third.copy()
    return ContributionMap(bright=p_b, middle=p_m, dark=p_d)


def fuse(y_bright: np.ndarray, y_middle: np.ndarray, y_dark: np.ndarray,
         cmap: ContributionMap, clamp: bool = True) -> np.ndarray:
    """Weighted per-sample sum of the three branch results.

    The weights partition unity, so equal branch results pass through
    unchanged. The fused output is clamped to [0,1] PQ code space unless
    ``clamp`` is disabled (training-style use).
    """
    if not (y_bright.shape == y_middle.shape == y_dark.shape
            == cmap.bright.shape):
        raise ValidationError(
            f"branch results and contribution map must share one shape, got "
            f"{y_bright.shape}/{y_middle.shape}/{y_dark.shape}/{cmap.bright.shape}")
    out = cmap.bright * y_bright + cmap.middle * y_middle + cmap.dark * y_dark
    if clamp:
        np.clip(out, 0.0, 1.0, out=out)
    return out
