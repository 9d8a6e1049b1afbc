"""Frame container and readers/writers for the supported interchange formats.

Mandatory formats:
  ppm16   Netpbm P6 with maxval 65535, big-endian samples, interleaved RGB.
  rawf32  planar float32 with a 16-byte header: magic "ITMF", then
          little-endian u32 width, u32 height, u32 channels; payload is
          little-endian float32, one full plane per channel.

Optional:
  png16   16-bit PNG via OpenCV, available when cv2 imports.

The signal convention (SDR gamma / HDR PQ) is metadata only. It is never
stored in the pixel payload and never inferred from pixel statistics; on
disk it travels in a JSON sidecar written by the CLI.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ParseError, ValidationError

RAW_MAGIC = b"ITMF"
PPM_MAXVAL = 65535


class SignalConvention(Enum):
    SDR_GAMMA709 = "sdr-gamma709"
    HDR_PQ2020 = "hdr-pq2020"


class FrameFormat(Enum):
    PPM16 = "ppm16"
    RAWF32 = "rawf32"
    PNG16 = "png16"


@dataclass
class Frame:
    """Planar 3-channel image with samples in [0,1] plus its convention tag.

    ``clamped`` counts samples that had to be forced into range on load.
    """

    planes: np.ndarray  # (3, h, w) float32
    convention: SignalConvention
    clamped: int = field(default=0, compare=False)

    def __post_init__(self):
        planes = np.asarray(self.planes, dtype=np.float32)
        if planes.ndim != 3 or planes.shape[0] != 3:
            raise ValidationError(f"frame planes must be (3, h, w), got {planes.shape}")
        self.planes = planes

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


def _sanitize(planes: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp-and-count policy: force samples finite and into [0,1]."""
    bad = ~np.isfinite(planes)
    out_of_range = np.count_nonzero(bad | (planes < 0.0) | (planes > 1.0))
    if bad.any():
        planes = np.where(bad, 0.0, planes)
    return np.clip(planes, 0.0, 1.0), int(out_of_range)


def _parse_ppm_header(data: bytes):
    """Parse the P6 header: magic, width, height, maxval, tolerant of
    comments and any whitespace, per Netpbm."""
    if len(data) < 2 or data[:2] != b"P6":
        raise ParseError("bad magic: not a P6 ppm file")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ParseError("short file: truncated ppm header")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch.isdigit():
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise ParseError(f"unexpected byte {ch!r} in ppm header")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ParseError("short file: missing whitespace after maxval")
    pos += 1  # single whitespace separates header and raster
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ParseError(f"bad dimensions {width}x{height}")
    if maxval != PPM_MAXVAL:
        raise ParseError(f"maxval must be {PPM_MAXVAL} for 16-bit frames, got {maxval}")
    return width, height, pos


def read_frame(data: bytes, fmt: FrameFormat,
               convention: SignalConvention) -> Frame:
    """Decode bytes into a Frame tagged with the given signal convention."""
    if fmt is FrameFormat.PPM16:
        width, height, offset = _parse_ppm_header(data)
        expected = width * height * 3 * 2
        raster = data[offset:offset + expected]
        if len(raster) < expected:
            raise ParseError(f"short file: raster has {len(raster)} bytes, "
                             f"expected {expected}")
        samples = np.frombuffer(raster, dtype=">u2").astype(np.float32)
        planes = samples.reshape(height, width, 3).transpose(2, 0, 1)
        planes = planes / np.float32(PPM_MAXVAL)
        return Frame(planes=planes, convention=convention)

    if fmt is FrameFormat.RAWF32:
        if len(data) < 16:
            raise ParseError("short file: raw header needs 16 bytes")
        if data[:4] != RAW_MAGIC:
            raise ParseError(f"bad magic {data[:4]!r}, expected {RAW_MAGIC!r}")
        width, height, channels = struct.unpack("<III", data[4:16])
        if channels != 3:
            raise ParseError(f"expected 3 channels, got {channels}")
        if width <= 0 or height <= 0:
            raise ParseError(f"bad dimensions {width}x{height}")
        expected = width * height * channels * 4
        payload = data[16:16 + expected]
        if len(payload) < expected:
            raise ParseError(f"short file: payload has {len(payload)} bytes, "
                             f"expected {expected}")
        planes = np.frombuffer(payload, dtype="<f4").reshape(channels, height, width)
        planes, clamped = _sanitize(planes.astype(np.float32))
        return Frame(planes=planes, convention=convention, clamped=clamped)

    if fmt is FrameFormat.PNG16:
        return _read_png16(data, convention)

    raise ValidationError(f"unsupported frame format {fmt}")


def _quantize16(planes: np.ndarray, byteorder: str) -> np.ndarray:
    """Planar [0,1] floats to interleaved (h, w, 3) 16-bit codes.

    Works channel by channel with in-place rounding so intermediate buffers
    stay below twice the finished payload even for UHD frames.
    """
    h, w = planes.shape[1:]
    out = np.empty((h, w, 3), dtype=byteorder + "u2")
    for c in range(3):
        scaled = np.multiply(planes[c], PPM_MAXVAL, dtype=np.float32)
        np.rint(scaled, out=scaled)
        np.clip(scaled, 0, PPM_MAXVAL, out=scaled)
        out[:, :, c] = scaled
    return out


def write_frame(frame: Frame, fmt: FrameFormat) -> bytes:
    """Encode a frame; inverse of read_frame up to 16-bit quantization."""
    if fmt is FrameFormat.PPM16:
        header = f"P6\n{frame.width} {frame.height}\n{PPM_MAXVAL}\n".encode("ascii")
        return header + _quantize16(frame.planes, ">").tobytes()

    if fmt is FrameFormat.RAWF32:
        header = RAW_MAGIC + struct.pack("<III", frame.width, frame.height, 3)
        return header + frame.planes.astype("<f4").tobytes()

    if fmt is FrameFormat.PNG16:
        return _write_png16(frame)

    raise ValidationError(f"unsupported frame format {fmt}")


def _require_cv2():
    try:
        import cv2
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ValidationError("png16 support needs opencv-python-headless "
                              "(install the 'png' extra)") from exc
    return cv2


def _read_png16(data: bytes, convention: SignalConvention) -> Frame:
    cv2 = _require_cv2()
    buf = np.frombuffer(data, dtype=np.uint8)
    img = cv2.imdecode(buf, cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ParseError("bad magic: not a decodable png")
    if img.dtype != np.uint16 or img.ndim != 3 or img.shape[2] != 3:
        raise ParseError(f"expected 16-bit RGB png, got dtype={img.dtype} "
                         f"shape={img.shape}")
    rgb = img[:, :, ::-1].astype(np.float32) / np.float32(PPM_MAXVAL)
    return Frame(planes=rgb.transpose(2, 0, 1), convention=convention)


def _write_png16(frame: Frame) -> bytes:
    cv2 = _require_cv2()
    bgr = _quantize16(frame.planes, "=")[:, :, ::-1]
    ok, buf = cv2.imencode(".png", np.ascontiguousarray(bgr))
    if not ok:  # pragma: no cover - cv2 failure path
        raise ValidationError("png encoding failed")
    return buf.tobytes()


def format_from_path(path: str) -> FrameFormat:
    """Pick a frame format from a file extension."""
    lowered = path.lower()
    if lowered.endswith(".ppm"):
        return FrameFormat.PPM16
    if lowered.endswith(".png"):
        return FrameFormat.PNG16
    if lowered.endswith((".itmf", ".raw")):
        return FrameFormat.RAWF32
    raise ValidationError(f"cannot infer frame format from path {path!r}; "
                          f"use an explicit format flag")
