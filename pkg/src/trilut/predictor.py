"""Forward pass of the per-branch merge-weight predictor network.

Fixed architecture, shared by all three branches (parameters are not):
five 3x3 stride-2 zero-pad-1 convolutions with channel widths
3 -> 16 -> 32 -> 64 -> 128 -> 128, each followed by LeakyReLU(0.1),
then global average pooling and a fully-connected 128 -> 5 head.
The head output is the five merge weights; no softmax is applied since
merging is affine, not convex.

The input contract is a fixed 256x256 frame produced by bilinear
downsampling with half-pixel centers. All arithmetic accumulates in double
precision and the weights are returned in single precision, which makes
the pass bit-deterministic for identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import BundleError, ValidationError

CHANNELS = (3, 16, 32, 64, 128, 128)
KERNEL = 3
STRIDE = 2
PAD = 1
LEAKY_SLOPE = 0.1
INPUT_SIZE = 256
N_WEIGHTS = 5


def parameter_count() -> int:
    """Closed-form parameter count of one branch network."""
    total = 0
    for cin, cout in zip(CHANNELS[:-1], CHANNELS[1:]):
        total += cout * cin * KERNEL * KERNEL + cout
    total += N_WEIGHTS * CHANNELS[-1] + N_WEIGHTS
    return total


@dataclass(frozen=True)
class PredictorWeights:
    """Parameter set of one branch network.

    Convolution kernels are laid out (out-channel, in-channel, ky, kx),
    the FC matrix (out, in).
    """

    conv_weights: tuple[np.ndarray, ...]
    conv_biases: tuple[np.ndarray, ...]
    fc_weight: np.ndarray
    fc_bias: np.ndarray

    def __post_init__(self):
        if len(self.conv_weights) != 5 or len(self.conv_biases) != 5:
            raise BundleError("shape-mismatch", "expected 5 convolution layers")
        for i, (cin, cout) in enumerate(zip(CHANNELS[:-1], CHANNELS[1:])):
            w, b = self.conv_weights[i], self.conv_biases[i]
            if w.shape != (cout, cin, KERNEL, KERNEL):
                raise BundleError("shape-mismatch",
                                  f"conv{i + 1} kernel is {w.shape}, expected "
                                  f"{(cout, cin, KERNEL, KERNEL)}")
            if b.shape != (cout,):
                raise BundleError("shape-mismatch",
                                  f"conv{i + 1} bias is {b.shape}, expected ({cout},)")
        if self.fc_weight.shape != (N_WEIGHTS, CHANNELS[-1]):
            raise BundleError("shape-mismatch",
                              f"fc matrix is {self.fc_weight.shape}, expected "
                              f"{(N_WEIGHTS, CHANNELS[-1])}")
        if self.fc_bias.shape != (N_WEIGHTS,):
            raise BundleError("shape-mismatch",
                              f"fc bias is {self.fc_bias.shape}, expected ({N_WEIGHTS},)")
        actual = sum(int(t.size) for t in (*self.conv_weights,
                                           *self.conv_biases,
                                           self.fc_weight, self.fc_bias))
        if actual != parameter_count():
            raise BundleError("shape-mismatch",
                              f"parameter count {actual} != {parameter_count()}")

    @staticmethod
    def zeros(fc_bias: np.ndarray | None = None) -> "PredictorWeights":
        """All-zero network; its output is exactly the FC bias."""
        ws, bs = [], []
        for cin, cout in zip(CHANNELS[:-1], CHANNELS[1:]):
            ws.append(np.zeros((cout, cin, KERNEL, KERNEL), dtype=np.float64))
            bs.append(np.zeros(cout, dtype=np.float64))
        bias = np.zeros(N_WEIGHTS) if fc_bias is None else np.asarray(fc_bias, dtype=np.float64)
        return PredictorWeights(tuple(ws), tuple(bs),
                                np.zeros((N_WEIGHTS, CHANNELS[-1])), bias)


def _axis_coords(out_size: int, in_size: int):
    """Half-pixel-center source coordinates for one axis."""
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1.0)
    lo = np.floor(src).astype(np.intp)
    np.clip(lo, 0, max(in_size - 2, 0), out=lo)
    frac = src - lo
    if in_size == 1:
        frac = np.zeros_like(frac)
    return lo, frac


def downsample(planes: np.ndarray, out_size: int = INPUT_SIZE) -> np.ndarray:
    """Bilinear resample of a planar (3, h, w) stack to out_size x out_size."""
    planes = np.asarray(planes)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValidationError(f"expected planar (3, h, w) input, got {planes.shape}")
    h, w = planes.shape[1:]
    if h < 8 or w < 8:
        raise ValidationError(f"input must be at least 8x8, got {h}x{w}")
    ylo, yfrac = _axis_coords(out_size, h)
    xlo, xfrac = _axis_coords(out_size, w)
    yhi = np.minimum(ylo + 1, h - 1)
    xhi = np.minimum(xlo + 1, w - 1)
    yfrac = yfrac[:, None]
    xfrac = xfrac[None, :]
    # Row gathers first, in double precision, so the full-resolution input
    # is never copied.
    rows_lo = planes[:, ylo].astype(np.float64)
    rows_hi = planes[:, yhi].astype(np.float64)
    top = rows_lo[:, :, xlo] * (1.0 - xfrac) + rows_lo[:, :, xhi] * xfrac
    bot = rows_hi[:, :, xlo] * (1.0 - xfrac) + rows_hi[:, :, xhi] * xfrac
    return top * (1.0 - yfrac) + bot * yfrac


def _conv3x3_s2(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 stride-2 zero-pad-1 convolution on a (c, h, w) tensor."""
    c, h, w = x.shape
    padded = np.zeros((c, h + 2 * PAD, w + 2 * PAD), dtype=np.float64)
    padded[:, PAD:PAD + h, PAD:PAD + w] = x
    out_h = (h + 2 * PAD - KERNEL) // STRIDE + 1
    out_w = (w + 2 * PAD - KERNEL) // STRIDE + 1
    s0, s1, s2 = padded.strides
    patches = as_strided(
        padded,
        shape=(c, out_h, out_w, KERNEL, KERNEL),
        strides=(s0, STRIDE * s1, STRIDE * s2, s1, s2),
        writeable=False,
    )
    out = np.tensordot(weight, patches, axes=([1, 2, 3], [0, 3, 4]))
    return out + bias[:, None, None]


def predict_weights(x_small: np.ndarray, params: PredictorWeights) -> np.ndarray:
    """Five merge weights (float32) for one 256x256 downsampled frame."""
    x = np.asarray(x_small, dtype=np.float64)
    if x.shape != (3, INPUT_SIZE, INPUT_SIZE):
        raise BundleError("shape-mismatch",
                          f"predictor input must be (3, {INPUT_SIZE}, {INPUT_SIZE}), "
                          f"got {x.shape}")
    for w, b in zip(params.conv_weights, params.conv_biases):
        x = _conv3x3_s2(x, np.asarray(w, dtype=np.float64),
                        np.asarray(b, dtype=np.float64))
        x = np.where(x > 0.0, x, LEAKY_SLOPE * x)
    pooled = x.mean(axis=(1, 2))
    w = np.asarray(params.fc_weight, dtype=np.float64) @ pooled
    w = w + np.asarray(params.fc_bias, dtype=np.float64)
    return w.astype(np.float32)
