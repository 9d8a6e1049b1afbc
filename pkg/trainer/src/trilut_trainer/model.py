"""Differentiable forward pass of the three-branch LUT converter.

Mirrors the engine's composition exactly: per-channel means, branch vertex
grids, downsample + merge-weight prediction, basis merging, non-uniform
trilinear lookup, contribution-weighted fusion. Gradients flow to the 15
basis lattices and the three predictor networks; vertex positions are
frame statistics and stay detached (only content and networks train).

The fused output is left unclamped for the loss (the weighted sum itself)
and clamped to [0,1] when mimicking the engine's final output.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .initluts import init_basis

BRANCH_NAMES = ("bright", "middle", "dark")
CONV_CHANNELS = (3, 16, 32, 64, 128, 128)
LEAKY_SLOPE = 0.1
DOWNSAMPLE_SIZE = 256
N_BASIS = 5


def vertex_axes(branch: str, n: int, means) -> np.ndarray:
    """(3, n) float64 vertex positions for one branch."""
    u = np.linspace(0.0, 1.0, n)
    axes = []
    for mean in means:
        if branch == "bright":
            v = u ** (1.0 / (1.4 + 0.8 * float(mean)))
        elif branch == "dark":
            v = u ** (2.2 - 0.8 * float(mean))
        else:
            tp = 3.0 * np.pi
            v = (tp * u - np.cos(tp * u) + 1.0) / (tp + 2.0)
            v[0] = 0.0
            v[-1] = 1.0
        axes.append(v)
    return np.stack(axes)


class WeightPredictor(nn.Module):
    """Five stride-2 convolutions, global average pool, FC to 5 weights."""

    def __init__(self):
        super().__init__()
        convs = []
        for cin, cout in zip(CONV_CHANNELS[:-1], CONV_CHANNELS[1:]):
            convs.append(nn.Conv2d(cin, cout, 3, stride=2, padding=1))
        self.convs = nn.ModuleList(convs)
        self.fc = nn.Linear(CONV_CHANNELS[-1], N_BASIS)

    def forward(self, x_small: torch.Tensor) -> torch.Tensor:
        h = x_small
        for conv in self.convs:
            h = F.leaky_relu(conv(h), LEAKY_SLOPE)
        pooled = h.mean(dim=(2, 3))
        return self.fc(pooled)


def init_network(net: WeightPredictor, generator: torch.Generator | None = None):
    """Xavier-uniform weight tensors; Kaiming-style normal biases."""
    for module in net.modules():
        if isinstance(module, nn.Conv2d):
            fan_in = module.in_channels * 9
            fan_out = module.out_channels * 9
        elif isinstance(module, nn.Linear):
            fan_in = module.in_features
            fan_out = module.out_features
        else:
            continue
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        with torch.no_grad():
            module.weight.uniform_(-bound, bound, generator=generator)
            module.bias.normal_(0.0, math.sqrt(2.0 / fan_in),
                                generator=generator)


def interp_nonuniform(content: torch.Tensor, axes: torch.Tensor,
                      planes: torch.Tensor) -> torch.Tensor:
    """Trilinear lookup of (3, h, w) planes in one (n, n, n, 3) lattice.

    ``axes`` is (3, n); gradients flow to ``content`` only.
    """
    n = content.shape[0]
    idx = []
    frac = []
    for a in range(3):
        axis = axes[a]
        x = planes[a].reshape(-1).clamp(0.0, 1.0)
        i = torch.searchsorted(axis.contiguous(), x.contiguous(), right=True) - 1
        i = i.clamp(0, n - 2)
        t = (x - axis[i]) / (axis[i + 1] - axis[i])
        idx.append(i)
        frac.append(t.unsqueeze(-1))
    ir, ig, ib = idx
    tr, tg, tb = frac
    flat = content.reshape(-1, 3)
    base = (ir * n + ig) * n + ib
    nn_ = n * n
    c00 = flat[base] * (1 - tr) + flat[base + nn_] * tr
    c10 = flat[base + n] * (1 - tr) + flat[base + nn_ + n] * tr
    c01 = flat[base + 1] * (1 - tr) + flat[base + nn_ + 1] * tr
    c11 = flat[base + n + 1] * (1 - tr) + flat[base + nn_ + n + 1] * tr
    c0 = c00 * (1 - tg) + c10 * tg
    c1 = c01 * (1 - tg) + c11 * tg
    out = c0 * (1 - tb) + c1 * tb
    return out.T.reshape(planes.shape)


def contribution_planes(x: torch.Tensor, params: dict) -> dict[str, torch.Tensor]:
    """Per-sample branch weights for an arbitrary tensor of code values."""
    mode = params["mode"]
    if mode == "eq3":
        tb, td = params["tb"], params["td"]
        p_b = ((x - tb) / (1.0 - tb)).clamp(0.0, 1.0)
        p_d = ((td - x) / td).clamp(0.0, 1.0)
        p_m = 1.0 - p_b - p_d
    elif mode == "soft":
        mu = params["mu"]
        norm = math.log1p(mu)
        p_b = 1.0 - torch.log1p(mu * (1.0 - x)) / norm
        p_d = 1.0 - torch.log1p(mu * x) / norm
        p_m = 1.0 - p_b - p_d
    elif mode == "hard":
        tb, td = params["tb"], params["td"]
        p_b = (x >= tb).to(x.dtype)
        p_d = (x <= td).to(x.dtype)
        p_m = 1.0 - p_b - p_d
    elif mode == "constant":
        p_b = torch.full_like(x, 1.0 / 3.0)
        p_m = torch.full_like(x, 1.0 / 3.0)
        p_d = torch.full_like(x, 1.0 / 3.0)
    else:
        raise ValueError(f"unknown contribution mode {mode!r}")
    return {"bright": p_b, "middle": p_m, "dark": p_d}


class TriLutNet(nn.Module):
    """Trainable state: 3 x 5 basis lattices plus 3 weight predictors."""

    def __init__(self, n: int = 17, init_mode: str = "table3",
                 vertex_mode: str = "eq2", contribution: dict | None = None,
                 ocio2_cube: str | None = None, davinci_cube: str | None = None,
                 seed: int = 0):
        super().__init__()
        self.n = n
        self.vertex_mode = vertex_mode
        self.contribution = contribution or {"mode": "eq3", "tb": 0.55,
                                             "td": 0.45, "mu": 5000.0}
        stack, notes = init_basis(init_mode, n, ocio2_cube, davinci_cube)
        self.init_notes = notes
        self.basis = nn.ParameterDict({
            branch: nn.Parameter(torch.from_numpy(stack.astype(np.float32)))
            for branch in BRANCH_NAMES})
        self.nets = nn.ModuleDict({branch: WeightPredictor()
                                   for branch in BRANCH_NAMES})
        generator = torch.Generator().manual_seed(seed)
        for branch in BRANCH_NAMES:
            init_network(self.nets[branch], generator)

    def predict_weights(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        x_small = F.interpolate(x, size=(DOWNSAMPLE_SIZE, DOWNSAMPLE_SIZE),
                                mode="bilinear", align_corners=False)
        return {branch: self.nets[branch](x_small) for branch in BRANCH_NAMES}

    def merge(self, weights: dict[str, torch.Tensor]) -> dict[str, torch.Tensor]:
        return {branch: torch.einsum("bs,sijkc->bijkc", weights[branch],
                                     self.basis[branch])
                for branch in BRANCH_NAMES}

    def forward(self, x: torch.Tensor, clamp: bool = False,
                weights: dict[str, torch.Tensor] | None = None):
        """(b, 3, h, w) SDR batch to fused output plus the merged lattices.

        ``weights`` short-circuits the predictor with fixed merge weights
        (gradient checks differentiate the loss at a frozen network).
        """
        x = x.clamp(0.0, 1.0)
        if weights is None:
            weights = self.predict_weights(x)
        merged = self.merge(weights)
        dtype = x.dtype
        device = x.device
        outputs = []
        for i in range(x.shape[0]):
            item = x[i]
            means = item.mean(dim=(1, 2)).detach().cpu().numpy().astype(np.float64)
            results = {}
            for branch in BRANCH_NAMES:
                if self.vertex_mode == "uniform":
                    axes = np.tile(np.linspace(0.0, 1.0, self.n), (3, 1))
                else:
                    axes = vertex_axes(branch, self.n, means)
                axes_t = torch.from_numpy(axes).to(device=device, dtype=dtype)
                results[branch] = interp_nonuniform(merged[branch][i], axes_t,
                                                    item)
            cmap = contribution_planes(item, self.contribution)
            fused = (cmap["bright"] * results["bright"]
                     + cmap["middle"] * results["middle"]
                     + cmap["dark"] * results["dark"])
            outputs.append(fused)
        y = torch.stack(outputs)
        if clamp:
            y = y.clamp(0.0, 1.0)
        return y, merged


def reg_smoothness(content: torch.Tensor) -> torch.Tensor:
    """Squared forward differences over lattice axes, all channels."""
    total = content.new_zeros(())
    for axis in (-4, -3, -2):
        d = torch.diff(content, dim=axis)
        total = total + (d * d).sum()
    return total


def reg_monotonicity(content: torch.Tensor) -> torch.Tensor:
    """Hinge on decreasing steps of the axis-matching channel."""
    total = content.new_zeros(())
    # channel k varies along lattice axis k; dropping the channel axis
    # leaves the lattice on the last three dims
    for k, axis in enumerate((-3, -2, -1)):
        d = torch.diff(content[..., k], dim=axis)
        total = total + torch.clamp(-d, min=0.0).sum()
    return total


