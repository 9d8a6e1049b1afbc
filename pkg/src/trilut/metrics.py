"""Quality and HDR/WCG-volume metrics for PQ/BT.2020 frames.

PSNR and the color difference operate in PQ code space; SSIM runs on the
non-linear luma plane (BT.2020 weights applied to PQ code values). The
color difference follows Rec. ITU-R BT.2124 (ICtCp opponent space).

The four volume statistics (fraction/extent of highlight and wide-gamut
pixels) are documented approximations sharing the names of the published
statistics; reports flag them as such so absolute numbers are not read as
comparable across tools.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from . import colorspace
from .errors import ValidationError
from .image_io import Frame, SignalConvention

# BT.2124: linear BT.2020 RGB to LMS (exact rationals).
BT2020_TO_LMS = np.array([
    [1688.0, 2146.0, 262.0],
    [683.0, 2951.0, 462.0],
    [99.0, 309.0, 3688.0],
]) / 4096.0

# BT.2124: PQ-encoded L'M'S' to ICtCp (exact rationals).
LMS_TO_ICTCP = np.array([
    [2048.0, 2048.0, 0.0],
    [6610.0, -13613.0, 7003.0],
    [17933.0, -17390.0, -543.0],
]) / 4096.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

HIGHLIGHT_NITS = 100.0
WIDE_GAMUT_TOL = 1e-4


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    delta_e_itp_mean: float
    delta_e_itp_p95: float
    fhlp_pct: float
    ehl_pct: float
    fwgp_pct: float
    ewg_pct: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["note"] = ("fhlp/ehl/fwgp/ewg are documented approximations of the "
                     "published volume statistics")
        return d


def _check_pair(a: Frame, b: Frame, pq_only: bool = True):
    if a.planes.shape != b.planes.shape:
        raise ValidationError(f"frame shapes differ: {a.planes.shape} vs "
                              f"{b.planes.shape}")
    if pq_only and not (a.convention is SignalConvention.HDR_PQ2020
                        and b.convention is SignalConvention.HDR_PQ2020):
        raise ValidationError("metric expects two PQ-tagged frames")


def psnr(a: Frame, b: Frame) -> float:
    """10*log10(1/MSE) over all samples; +inf for identical frames."""
    _check_pair(a, b)
    diff = a.planes.astype(np.float64) - b.planes.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _pq_luma(frame: Frame) -> np.ndarray:
    w = colorspace.BT2020_LUMA
    p = frame.planes.astype(np.float64)
    return w[0] * p[0] + w[1] * p[1] + w[2] * p[2]


def _gaussian_kernel() -> np.ndarray:
    half = SSIM_WINDOW // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return k / k.sum()


def _windowed(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable Gaussian filter, cropped to valid window centers."""
    half = SSIM_WINDOW // 2
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(a: Frame, b: Frame) -> float:
    """Single-scale SSIM on the PQ-luma plane, mean over valid windows."""
    _check_pair(a, b, pq_only=False)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValidationError(f"frames must be at least "
                              f"{SSIM_WINDOW}x{SSIM_WINDOW} for ssim")
    x = _pq_luma(a)
    y = _pq_luma(b)
    kernel = _gaussian_kernel()
    mu_x = _windowed(x, kernel)
    mu_y = _windowed(y, kernel)
    xx = _windowed(x * x, kernel) - mu_x * mu_x
    yy = _windowed(y * y, kernel) - mu_y * mu_y
    xy = _windowed(x * y, kernel) - mu_x * mu_y
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def _ictcp(frame: Frame) -> np.ndarray:
    """PQ code planes to ICtCp planes (3, h, w)."""
    nits = colorspace.pq_decode(frame.planes.astype(np.float64))
    lms = colorspace.convert_gamut(nits, BT2020_TO_LMS)
    lms_pq = colorspace.pq_encode(lms)
    return colorspace.convert_gamut(lms_pq, LMS_TO_ICTCP)


def delta_e_itp(a: Frame, b: Frame) -> tuple[float, float]:
    """Mean and 95th-percentile BT.2124 color difference.

    Per pixel: 720 * sqrt(dI^2 + 0.25*dCt^2 + dCp^2) with I, Ct, Cp from
    the PQ-encoded LMS transform of the decoded linear light.
    """
    _check_pair(a, b)
    ia = _ictcp(a)
    ib = _ictcp(b)
    d = ia - ib
    de = 720.0 * np.sqrt(d[0] ** 2 + 0.25 * d[1] ** 2 + d[2] ** 2)
    return float(np.mean(de)), float(np.percentile(de, 95.0))


def hdr_wcg_volume(y: Frame) -> tuple[float, float, float, float]:
    """(fhlp, ehl, fwgp, ewg) percentages for one PQ/BT.2020 frame.

    fhlp: share of pixels whose linear luminance exceeds 100 nit.
    ehl:  mean normalized luminance excess above 100 nit.
    fwgp: share of pixels that leave the BT.709 gamut (any negative
          component after conversion, display-relative scale).
    ewg:  mean total negative excursion magnitude, clamped at 1.
    """
    if y.convention is not SignalConvention.HDR_PQ2020:
        raise ValidationError("volume metrics expect a PQ-tagged frame")
    nits = colorspace.pq_decode(y.planes.astype(np.float64))
    w = colorspace.BT2020_LUMA
    lum = w[0] * nits[0] + w[1] * nits[1] + w[2] * nits[2]
    fhlp = 100.0 * float(np.mean(lum > HIGHLIGHT_NITS))
    ehl = 100.0 * float(np.mean(np.maximum(0.0, lum - HIGHLIGHT_NITS)
                                / (colorspace.PQ_MAX_NITS - HIGHLIGHT_NITS)))
    rel = nits / colorspace.PQ_MAX_NITS
    narrow = colorspace.convert_gamut(rel, colorspace.BT2020_TO_BT709)
    negative = np.maximum(0.0, -narrow)
    fwgp = 100.0 * float(np.mean(np.any(narrow < -WIDE_GAMUT_TOL, axis=0)))
    ewg = 100.0 * float(np.mean(np.minimum(1.0, negative.sum(axis=0))))
    return fhlp, ehl, fwgp, ewg


def report(reference: Frame, test: Frame) -> MetricReport:
    """Full metric report of a test frame against its reference."""
    de_mean, de_p95 = delta_e_itp(reference, test)
    fhlp, ehl, fwgp, ewg = hdr_wcg_volume(test)
    return MetricReport(
        psnr_db=psnr(reference, test),
        ssim=ssim(reference, test),
        delta_e_itp_mean=de_mean,
        delta_e_itp_p95=de_p95,
        fhlp_pct=fhlp,
        ehl_pct=ehl,
        fwgp_pct=fwgp,
        ewg_pct=ewg,
    )
