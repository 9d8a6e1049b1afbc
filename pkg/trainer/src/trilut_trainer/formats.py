"""Byte-level I/O for the engine's interchange formats.

The trainer talks to the engine exclusively through files, so this module
implements the documented layouts itself: the bundle container
(magic "ITMLUT1\\n", u64 LE header length, JSON header with an ordered
tensor manifest, little-endian float32 payload), 16-bit P6 PPM frames and
planar float32 "ITMF" frames.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

BUNDLE_MAGIC = b"ITMLUT1\n"
BUNDLE_VERSION = 1
RAW_MAGIC = b"ITMF"
PPM_MAXVAL = 65535

BRANCH_NAMES = ("bright", "middle", "dark")
CONV_CHANNELS = (3, 16, 32, 64, 128, 128)
N_WEIGHTS = 5


class FormatError(ValueError):
    pass


# --- frames -------------------------------------------------------------


def write_raw_frame(planes: np.ndarray) -> bytes:
    planes = np.asarray(planes, dtype="<f4")
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise FormatError(f"expected (3, h, w) planes, got {planes.shape}")
    _, h, w = planes.shape
    return RAW_MAGIC + struct.pack("<III", w, h, 3) + planes.tobytes()


def read_raw_frame(data: bytes) -> np.ndarray:
    if data[:4] != RAW_MAGIC:
        raise FormatError("bad raw frame magic")
    w, h, c = struct.unpack("<III", data[4:16])
    if c != 3:
        raise FormatError(f"expected 3 channels, got {c}")
    expected = w * h * c * 4
    payload = data[16:16 + expected]
    if len(payload) < expected:
        raise FormatError("short raw frame payload")
    return np.frombuffer(payload, dtype="<f4").reshape(3, h, w).copy()


def write_ppm16(planes: np.ndarray) -> bytes:
    planes = np.asarray(planes)
    _, h, w = planes.shape
    codes = np.clip(np.rint(planes.astype(np.float64) * PPM_MAXVAL),
                    0, PPM_MAXVAL).astype(">u2")
    return (f"P6\n{w} {h}\n{PPM_MAXVAL}\n".encode("ascii")
            + codes.transpose(1, 2, 0).tobytes())


def read_ppm16(data: bytes) -> np.ndarray:
    if data[:2] != b"P6":
        raise FormatError("bad ppm magic")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        ch = data[pos:pos + 1]
        if ch == b"#":
            pos = data.find(b"\n", pos) + 1
        elif ch.isspace():
            pos += 1
        elif ch.isdigit():
            start = pos
            while data[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise FormatError("malformed ppm header")
    pos += 1
    w, h, maxval = fields
    if maxval != PPM_MAXVAL:
        raise FormatError(f"expected maxval {PPM_MAXVAL}, got {maxval}")
    raster = np.frombuffer(data[pos:pos + w * h * 6], dtype=">u2")
    if raster.size != w * h * 3:
        raise FormatError("short ppm raster")
    return (raster.reshape(h, w, 3).transpose(2, 0, 1)
            .astype(np.float32) / np.float32(PPM_MAXVAL))


def read_frame_file(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P6":
        return read_ppm16(data)
    if data[:4] == RAW_MAGIC:
        return read_raw_frame(data).astype(np.float32)
    raise FormatError(f"{path}: not a ppm16 or raw float frame")


# --- bundle container -----------------------------------------------------


@dataclass
class BundleState:
    """In-memory image of one bundle, numpy-only."""

    n: int
    vertex_mode: str = "eq2"
    contribution: dict = field(default_factory=lambda: {
        "mode": "eq3", "tb": 0.55, "td": 0.45, "mu": 5000.0})
    basis: dict[str, np.ndarray] = field(default_factory=dict)       # (5,n,n,n,3)
    predictor: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    provenance: list[str] = field(default_factory=list)


def predictor_tensor_names() -> list[str]:
    names = []
    for i in range(1, 6):
        names.append(f"conv{i}.weight")
        names.append(f"conv{i}.bias")
    names.append("fc.weight")
    names.append("fc.bias")
    return names


def expected_predictor_shapes() -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for i, (cin, cout) in enumerate(zip(CONV_CHANNELS[:-1], CONV_CHANNELS[1:]),
                                    start=1):
        shapes[f"conv{i}.weight"] = (cout, cin, 3, 3)
        shapes[f"conv{i}.bias"] = (cout,)
    shapes["fc.weight"] = (N_WEIGHTS, CONV_CHANNELS[-1])
    shapes["fc.bias"] = (N_WEIGHTS,)
    return shapes


def write_bundle(state: BundleState) -> bytes:
    n = state.n
    shapes = expected_predictor_shapes()
    tensors: list[tuple[str, np.ndarray]] = []
    for branch in BRANCH_NAMES:
        stack = np.asarray(state.basis[branch])
        if stack.shape != (5, n, n, n, 3):
            raise FormatError(f"basis stack for {branch} has shape "
                              f"{stack.shape}, expected {(5, n, n, n, 3)}")
        for i in range(5):
            tensors.append((f"basis.{branch}.{i}", stack[i]))
    for branch in BRANCH_NAMES:
        params = state.predictor[branch]
        for name in predictor_tensor_names():
            arr = np.asarray(params[name])
            if arr.shape != shapes[name]:
                raise FormatError(f"predictor.{branch}.{name} has shape "
                                  f"{arr.shape}, expected {shapes[name]}")
            tensors.append((f"predictor.{branch}.{name}", arr))

    manifest = []
    chunks = []
    offset = 0
    for name, arr in tensors:
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(arr.shape),
                         "offset": offset, "length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = {
        "version": BUNDLE_VERSION,
        "n": n,
        "vertex_mode": state.vertex_mode,
        "contribution": state.contribution,
        "provenance": list(state.provenance),
        "tensors": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    return BUNDLE_MAGIC + struct.pack("<Q", len(blob)) + blob + b"".join(chunks)


def read_bundle(data: bytes) -> BundleState:
    if data[:8] != BUNDLE_MAGIC:
        raise FormatError("bad bundle magic")
    (header_len,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + header_len].decode("utf-8"))
    if header.get("version") != BUNDLE_VERSION:
        raise FormatError(f"unsupported bundle version {header.get('version')!r}")
    payload = data[16 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        arr = np.frombuffer(
            payload[entry["offset"]:entry["offset"] + entry["length"]],
            dtype="<f4").reshape(entry["shape"])
        tensors[entry["name"]] = arr.copy()
    state = BundleState(n=int(header["n"]),
                        vertex_mode=header["vertex_mode"],
                        contribution=header["contribution"],
                        provenance=[str(p) for p in header.get("provenance", [])])
    for branch in BRANCH_NAMES:
        state.basis[branch] = np.stack(
            [tensors[f"basis.{branch}.{i}"] for i in range(5)])
        state.predictor[branch] = {
            name: tensors[f"predictor.{branch}.{name}"]
            for name in predictor_tensor_names()}
    return state
