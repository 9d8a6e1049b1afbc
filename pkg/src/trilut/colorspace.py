"""Transfer functions and gamut matrices for SDR and HDR/WCG signal conventions.

SDR here means gamma-encoded BT.709-gamut code values; HDR/WCG means
PQ-encoded (SMPTE ST 2084, absolute, 10000 nit reference) BT.2020-gamut
code values. The PQ constants are the exact rationals from ST 2084.

Gamut matrices were derived once from the BT.709 / BT.2020 chromaticity
coordinates with D65 white and are stored to 10 significant digits so every
platform sees identical coefficients; the test suite re-derives them from
the primaries as an independent check.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import ValidationError

# SMPTE ST 2084 constants (exact rationals).
PQ_M1 = 2610.0 / 16384.0
PQ_M2 = 2523.0 / 4096.0 * 128.0
PQ_C1 = 3424.0 / 4096.0
PQ_C2 = 2413.0 / 4096.0 * 32.0
PQ_C3 = 2392.0 / 4096.0 * 32.0
PQ_MAX_NITS = 10000.0

# Default SDR decode exponent. A pure power law; the BT.709 linear toe
# segment is deliberately not applied. 2.4 is offered for experiments.
SDR_DECODE_EXPONENT = 1.0 / 0.45
ALT_SDR_DECODE_EXPONENT = 2.4

# Linear-light RGB to linear-light RGB, 10 significant digits.
BT709_TO_BT2020 = np.array([
    [0.6274038959, 0.3292830384, 0.04331306569],
    [0.06909728936, 0.9195403951, 0.01136231557],
    [0.01639143888, 0.08801330788, 0.8955952532],
])

BT2020_TO_BT709 = np.array([
    [1.660491002, -0.5876411388, -0.07284986332],
    [-0.1245504745, 1.132899897, -0.008349422604],
    [-0.01815076335, -0.100578898, 1.118729661],
])

# BT.2020 luminance weights (also used as non-linear luma weights).
BT2020_LUMA = np.array([0.2627, 0.6780, 0.0593])


class ClampCounter:
    """Mutable counter recording how many samples were clamped into range."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)


class TransferKind(Enum):
    GAMMA_DECODE = "gamma-decode"
    GAMMA_ENCODE = "gamma-encode"
    PQ_ENCODE = "pq-encode"
    PQ_DECODE = "pq-decode"


def _clamp01(v, counter: ClampCounter | None):
    v = np.asarray(v, dtype=np.float64)
    if counter is not None:
        counter.add(np.count_nonzero((v < 0.0) | (v > 1.0)))
    return np.clip(v, 0.0, 1.0)


def gamma_decode(v, exponent: float = SDR_DECODE_EXPONENT,
                 counter: ClampCounter | None = None):
    """Gamma code value in [0,1] to linear relative value, v ** exponent."""
    if exponent <= 0.0:
        raise ValidationError(f"decode exponent must be positive, got {exponent}")
    return _clamp01(v, counter) ** exponent


def gamma_encode(v, exponent: float = SDR_DECODE_EXPONENT,
                 counter: ClampCounter | None = None):
    """Inverse of :func:`gamma_decode` with the same exponent."""
    if exponent <= 0.0:
        raise ValidationError(f"encode exponent must be positive, got {exponent}")
    return _clamp01(v, counter) ** (1.0 / exponent)


def pq_encode(luminance, counter: ClampCounter | None = None):
    """Absolute luminance in nits [0, 10000] to PQ code value in [0, 1].

    ST 2084 inverse EOTF. Negative input clamps to 0 (and counts);
    input above 10000 nit clamps to 10000 (and counts).
    """
    lum = np.asarray(luminance, dtype=np.float64)
    if counter is not None:
        counter.add(np.count_nonzero((lum < 0.0) | (lum > PQ_MAX_NITS)))
    y = np.clip(lum, 0.0, PQ_MAX_NITS) / PQ_MAX_NITS
    ym = y ** PQ_M1
    return ((PQ_C1 + PQ_C2 * ym) / (1.0 + PQ_C3 * ym)) ** PQ_M2


def pq_decode(code, counter: ClampCounter | None = None):
    """PQ code value in [0, 1] back to absolute luminance in nits."""
    n = _clamp01(code, counter)
    nm = n ** (1.0 / PQ_M2)
    num = np.maximum(nm - PQ_C1, 0.0)
    den = PQ_C2 - PQ_C3 * nm
    return PQ_MAX_NITS * (num / den) ** (1.0 / PQ_M1)


def convert_gamut(rgb, matrix: np.ndarray):
    """Apply a 3x3 linear-light gamut matrix.

    Accepts a triple, an (..., 3) array, or a planar (3, h, w) stack;
    negative / out-of-gamut outputs are passed through untouched since
    they carry gamut-excursion information.
    """
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.shape[0] == 3 and arr.ndim >= 2 and arr.shape[-1] != 3:
        return np.tensordot(matrix, arr, axes=(1, 0))
    return arr @ matrix.T


def apply_transfer(kind: TransferKind, values, exponent: float | None = None,
                   counter: ClampCounter | None = None):
    """Dispatch a transfer function by kind (config / CLI surface)."""
    if kind is TransferKind.GAMMA_DECODE:
        return gamma_decode(values, exponent or SDR_DECODE_EXPONENT, counter)
    if kind is TransferKind.GAMMA_ENCODE:
        return gamma_encode(values, exponent or SDR_DECODE_EXPONENT, counter)
    if kind is TransferKind.PQ_ENCODE:
        return pq_encode(values, counter)
    return pq_decode(values, counter)
