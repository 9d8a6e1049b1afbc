"""Serialization: `.cube` LUT files and the engine's bundle container.

Cube files follow the de-facto text convention: optional TITLE,
LUT_3D_SIZE, optional DOMAIN_MIN / DOMAIN_MAX, then N^3 whitespace
separated float triples with the R index running fastest. `#` starts a
comment; CRLF and leading whitespace are tolerated.

Bundle container layout (version 1):

    offset  size  field
    0       8     magic  "ITMLUT1\\n"
    8       8     u64 little-endian header byte length
    16      H     UTF-8 JSON header
    16+H    P     raw little-endian float32 tensor payload

The JSON header carries the lattice size, the vertex mode, contribution
parameters, provenance notes and an ordered tensor manifest of
{name, shape, offset, length} records; offsets are relative to the payload
start and must tile it exactly (trailing bytes are rejected). A bundle
holds 3 branches x 5 basis lattices, one predictor parameter set per
branch, and, for the from-file vertex mode, one (3, n) vertex tensor per
branch.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import colorspace
from .contribution import ContributionMode, ContributionParams
from .errors import BundleError, ParseError, ValidationError
from .lutcore import (BRANCHES, Branch, Lut3D, VertexGrid, identity_content,
                      lookup, uniform_grid, uniform_vertices)
from .predictor import CHANNELS, KERNEL, N_WEIGHTS, PredictorWeights

BUNDLE_MAGIC = b"ITMLUT1\n"
BUNDLE_VERSION = 1
DIFFUSE_WHITE_100 = 100.0
DIFFUSE_WHITE_203 = 203.0


class VertexMode(Enum):
    # Values double as the wire / CLI tokens.
    ADAPTIVE = "eq2"
    UNIFORM = "uniform"
    FROM_FILE = "file"


class InitLut(Enum):
    C_100DW = "c100dw"
    C_203DW = "c203dw"
    IDENTITY = "identity"


# ---------------------------------------------------------------------------
# .cube files


@dataclass
class CubeFile:
    size: int
    data: np.ndarray  # (size**3, 3), R index fastest
    domain_min: np.ndarray = field(default_factory=lambda: np.zeros(3))
    domain_max: np.ndarray = field(default_factory=lambda: np.ones(3))
    title: str | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.domain_min = np.asarray(self.domain_min, dtype=np.float64)
        self.domain_max = np.asarray(self.domain_max, dtype=np.float64)
        if self.data.shape != (self.size ** 3, 3):
            raise ValidationError(f"cube data shape {self.data.shape} does not "
                                  f"match size {self.size}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("cube data contains non-finite values")
        if not np.all(self.domain_min < self.domain_max):
            raise ValidationError("DOMAIN_MIN must be below DOMAIN_MAX per component")


def parse_cube(data: bytes) -> CubeFile:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid utf-8 text: {exc}") from None

    size: int | None = None
    title: str | None = None
    domain_min = np.zeros(3)
    domain_max = np.ones(3)
    triples: list[tuple[float, float, float]] = []
    first_extra_line: int | None = None
    last_line = 0

    for lineno, raw in enumerate(text.split("\n"), start=1):
        last_line = lineno
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        upper = line.upper()
        if upper.startswith("TITLE"):
            title = line[5:].strip().strip('"')
            continue
        if upper.startswith("LUT_3D_SIZE"):
            try:
                size = int(line.split()[1])
            except (IndexError, ValueError):
                raise ParseError("malformed LUT_3D_SIZE", lineno) from None
            if size < 2:
                raise ParseError(f"LUT_3D_SIZE must be >= 2, got {size}", lineno)
            continue
        if upper.startswith("LUT_1D_SIZE"):
            raise ParseError("1D LUTs are not supported", lineno)
        if upper.startswith("DOMAIN_MIN") or upper.startswith("DOMAIN_MAX"):
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"{parts[0]} needs 3 values", lineno)
            try:
                vals = np.array([float(p) for p in parts[1:]])
            except ValueError:
                raise ParseError(f"non-numeric {parts[0]} value", lineno) from None
            if upper.startswith("DOMAIN_MIN"):
                domain_min = vals
            else:
                domain_max = vals
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected an RGB triple, found {len(parts)} "
                             f"fields", lineno)
        if size is None:
            raise ParseError("data before LUT_3D_SIZE", lineno)
        try:
            triples.append((float(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError:
            raise ParseError("non-numeric value in triple", lineno) from None
        if len(triples) == size ** 3 + 1 and first_extra_line is None:
            first_extra_line = lineno

    if size is None:
        raise ParseError("missing LUT_3D_SIZE", last_line)
    expected = size ** 3
    if len(triples) > expected:
        raise ParseError(f"too many triples: expected {expected}, found "
                         f"{len(triples)}", first_extra_line)
    if len(triples) < expected:
        raise ParseError(f"too few triples: expected {expected}, found "
                         f"{len(triples)}", last_line)
    try:
        return CubeFile(size=size, data=np.array(triples),
                        domain_min=domain_min, domain_max=domain_max,
                        title=title)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def write_cube(cube: CubeFile) -> bytes:
    lines = []
    if cube.title:
        lines.append(f'TITLE "{cube.title}"')
    lines.append(f"LUT_3D_SIZE {cube.size}")
    lines.append("DOMAIN_MIN " + " ".join(f"{v:.6f}" for v in cube.domain_min))
    lines.append("DOMAIN_MAX " + " ".join(f"{v:.6f}" for v in cube.domain_max))
    for r, g, b in cube.data:
        lines.append(f"{r:.6f} {g:.6f} {b:.6f}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def cube_to_lut(cube: CubeFile) -> Lut3D:
    """View cube data as a LUT lattice (content[ir, ig, ib])."""
    n = cube.size
    content = cube.data.reshape(n, n, n, 3).transpose(2, 1, 0, 3)
    return Lut3D(content=content, grid=uniform_grid(n))


def lut_to_cube(lut: Lut3D, title: str | None = None) -> CubeFile:
    """Uniform-grid LUT content to cube data (R fastest)."""
    data = lut.content.transpose(2, 1, 0, 3).reshape(-1, 3)
    return CubeFile(size=lut.n, data=data, title=title)


def resample_cube(cube: CubeFile, n: int) -> np.ndarray:
    """Resample cube content onto an n-per-axis uniform lattice in [0,1].

    Lattice inputs are mapped through the cube's declared domain before
    the trilinear lookup, so non-[0,1] domains are honored.
    """
    lut = cube_to_lut(cube)
    targets = identity_content(n)
    span = cube.domain_max - cube.domain_min
    local = np.clip((targets - cube.domain_min) / span, 0.0, 1.0)
    return lookup(lut, local)


# ---------------------------------------------------------------------------
# Initialization lattices


def make_init_basis(which: InitLut, n: int) -> np.ndarray:
    """Analytic initialization content on a uniform n-lattice.

    The two container conversions decode the SDR gamma, convert the gamut
    to BT.2020, scale diffuse white to 100 or 203 nit and PQ-encode.
    """
    if n < 2:
        raise ValidationError(f"lattice size must be >= 2, got {n}")
    if which is InitLut.IDENTITY:
        return identity_content(n)
    nits = DIFFUSE_WHITE_100 if which is InitLut.C_100DW else DIFFUSE_WHITE_203
    x = identity_content(n)
    linear = colorspace.gamma_decode(x)
    wide = colorspace.convert_gamut(linear, colorspace.BT709_TO_BT2020)
    return colorspace.pq_encode(wide * nits)


# ---------------------------------------------------------------------------
# Bundle container


_PREDICTOR_TENSORS = []
for _i, (_cin, _cout) in enumerate(zip(CHANNELS[:-1], CHANNELS[1:]), start=1):
    _PREDICTOR_TENSORS.append((f"conv{_i}.weight", (_cout, _cin, KERNEL, KERNEL)))
    _PREDICTOR_TENSORS.append((f"conv{_i}.bias", (_cout,)))
_PREDICTOR_TENSORS.append(("fc.weight", (N_WEIGHTS, CHANNELS[-1])))
_PREDICTOR_TENSORS.append(("fc.bias", (N_WEIGHTS,)))


@dataclass
class Bundle:
    """Everything the engine needs for one trained model."""

    n: int
    vertex_mode: VertexMode
    contribution: ContributionParams
    basis: dict[Branch, np.ndarray]          # each (5, n, n, n, 3)
    predictor: dict[Branch, PredictorWeights]
    vertices: dict[Branch, np.ndarray] | None = None  # each (3, n), from-file mode
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        lattices = 0
        for branch in BRANCHES:
            if branch not in self.basis or branch not in self.predictor:
                raise BundleError("missing-tensor",
                                  f"branch {branch.value} is incomplete")
            stack = np.asarray(self.basis[branch], dtype=np.float64)
            if stack.shape != (5, self.n, self.n, self.n, 3):
                raise BundleError("shape-mismatch",
                                  f"basis stack for {branch.value} is "
                                  f"{stack.shape}, expected "
                                  f"{(5, self.n, self.n, self.n, 3)}")
            self.basis[branch] = stack
            lattices += 5
        if lattices != 15:
            raise BundleError("missing-tensor", f"expected 15 basis lattices, "
                                                f"got {lattices}")
        if self.vertex_mode is VertexMode.FROM_FILE:
            if not self.vertices:
                raise BundleError("missing-tensor",
                                  "from-file vertex mode needs vertex tensors")
            for branch in BRANCHES:
                v = np.asarray(self.vertices[branch], dtype=np.float64)
                if v.shape != (3, self.n):
                    raise BundleError("shape-mismatch",
                                      f"vertex tensor for {branch.value} is "
                                      f"{v.shape}, expected {(3, self.n)}")
                self.vertices[branch] = v
                VertexGrid(v[0], v[1], v[2])  # validates monotonicity

    def vertex_grid(self, branch: Branch) -> VertexGrid:
        if self.vertex_mode is not VertexMode.FROM_FILE:
            raise ValidationError("bundle does not embed vertex grids")
        v = self.vertices[branch]
        return VertexGrid(v[0], v[1], v[2])


def _tensor_list(bundle: Bundle) -> list[tuple[str, np.ndarray]]:
    tensors: list[tuple[str, np.ndarray]] = []
    for branch in BRANCHES:
        for i in range(5):
            tensors.append((f"basis.{branch.value}.{i}", bundle.basis[branch][i]))
    for branch in BRANCHES:
        params = bundle.predictor[branch]
        arrays = []
        for i in range(5):
            arrays.append((f"conv{i + 1}.weight", params.conv_weights[i]))
            arrays.append((f"conv{i + 1}.bias", params.conv_biases[i]))
        arrays.append(("fc.weight", params.fc_weight))
        arrays.append(("fc.bias", params.fc_bias))
        for name, arr in arrays:
            tensors.append((f"predictor.{branch.value}.{name}", arr))
    if bundle.vertex_mode is VertexMode.FROM_FILE:
        for branch in BRANCHES:
            tensors.append((f"vertices.{branch.value}", bundle.vertices[branch]))
    return tensors


def save_bundle(bundle: Bundle) -> bytes:
    manifest = []
    chunks = []
    offset = 0
    for name, arr in _tensor_list(bundle):
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(np.shape(arr)),
                         "offset": offset, "length": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = {
        "version": BUNDLE_VERSION,
        "n": bundle.n,
        "vertex_mode": bundle.vertex_mode.value,
        "contribution": {
            "mode": bundle.contribution.mode.value,
            "tb": bundle.contribution.tb,
            "td": bundle.contribution.td,
            "mu": bundle.contribution.mu,
        },
        "provenance": list(bundle.provenance),
        "tensors": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return (BUNDLE_MAGIC + struct.pack("<Q", len(header_bytes))
            + header_bytes + b"".join(chunks))


def load_bundle(data: bytes) -> Bundle:
    if len(data) < 16 or data[:8] != BUNDLE_MAGIC:
        raise BundleError("bad-magic", f"expected {BUNDLE_MAGIC!r} at offset 0")
    (header_len,) = struct.unpack("<Q", data[8:16])
    if len(data) < 16 + header_len:
        raise BundleError("length-mismatch",
                          f"header claims {header_len} bytes, file has "
                          f"{len(data) - 16}")
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError("bad-header", f"undecodable JSON header: {exc}") from None
    if not isinstance(header, dict):
        raise BundleError("bad-header", "header must be a JSON object")
    if header.get("version") != BUNDLE_VERSION:
        raise BundleError("bad-version",
                          f"unsupported version {header.get('version')!r}")

    try:
        n = int(header["n"])
        vertex_mode = VertexMode(header["vertex_mode"])
        contrib_raw = header["contribution"]
        manifest = header["tensors"]
        provenance = [str(p) for p in header.get("provenance", [])]
    except (KeyError, ValueError, TypeError) as exc:
        raise BundleError("bad-header", f"malformed header field: {exc}") from None
    try:
        contribution = ContributionParams(
            mode=ContributionMode(contrib_raw["mode"]),
            tb=float(contrib_raw["tb"]), td=float(contrib_raw["td"]),
            mu=float(contrib_raw["mu"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise BundleError("bad-header", f"malformed contribution: {exc}") from None
    except ValidationError as exc:
        raise BundleError("bad-header", str(exc)) from None

    payload = data[16 + header_len:]
    tensors: dict[str, np.ndarray] = {}
    cursor = 0
    if not isinstance(manifest, list):
        raise BundleError("bad-header", "tensor manifest must be a list")
    for entry in manifest:
        try:
            name = entry["name"]
            shape = tuple(int(s) for s in entry["shape"])
            off = int(entry["offset"])
            length = int(entry["length"])
        except (KeyError, ValueError, TypeError) as exc:
            raise BundleError("bad-header", f"malformed manifest entry: {exc}") from None
        if off != cursor:
            raise BundleError("length-mismatch",
                              f"tensor {name} at offset {off}, expected {cursor}")
        expected = int(np.prod(shape, dtype=np.int64)) * 4 if shape else 4
        if length != expected:
            raise BundleError("length-mismatch",
                              f"tensor {name} declares {length} bytes for shape "
                              f"{shape}, expected {expected}")
        if off + length > len(payload):
            raise BundleError("length-mismatch",
                              f"tensor {name} overruns payload "
                              f"({off + length} > {len(payload)})")
        arr = np.frombuffer(payload[off:off + length], dtype="<f4").reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise BundleError("non-finite-payload",
                              f"tensor {name} contains NaN or Inf")
        tensors[name] = arr.astype(np.float64)
        cursor += length
    if cursor != len(payload):
        raise BundleError("length-mismatch",
                          f"payload has {len(payload)} bytes, manifest covers "
                          f"{cursor} (trailing bytes rejected)")

    def take(name: str, shape: tuple[int, ...]) -> np.ndarray:
        if name not in tensors:
            raise BundleError("missing-tensor", f"tensor {name} absent")
        arr = tensors.pop(name)
        if arr.shape != shape:
            raise BundleError("shape-mismatch",
                              f"tensor {name} is {arr.shape}, expected {shape}")
        return arr

    basis = {}
    for branch in BRANCHES:
        stack = [take(f"basis.{branch.value}.{i}", (n, n, n, 3)) for i in range(5)]
        basis[branch] = np.stack(stack)
    predictor = {}
    for branch in BRANCHES:
        ws, bs = [], []
        for i, (cin, cout) in enumerate(zip(CHANNELS[:-1], CHANNELS[1:]), start=1):
            ws.append(take(f"predictor.{branch.value}.conv{i}.weight",
                           (cout, cin, KERNEL, KERNEL)))
            bs.append(take(f"predictor.{branch.value}.conv{i}.bias", (cout,)))
        fc_w = take(f"predictor.{branch.value}.fc.weight", (N_WEIGHTS, CHANNELS[-1]))
        fc_b = take(f"predictor.{branch.value}.fc.bias", (N_WEIGHTS,))
        predictor[branch] = PredictorWeights(tuple(ws), tuple(bs), fc_w, fc_b)
    vertices = None
    if vertex_mode is VertexMode.FROM_FILE:
        vertices = {branch: take(f"vertices.{branch.value}", (3, n))
                    for branch in BRANCHES}
    if tensors:
        raise BundleError("bad-header",
                          f"unexpected tensors in manifest: {sorted(tensors)}")
    try:
        return Bundle(n=n, vertex_mode=vertex_mode, contribution=contribution,
                      basis=basis, predictor=predictor, vertices=vertices,
                      provenance=provenance)
    except ValidationError as exc:
        raise BundleError("bad-header", str(exc)) from None


# ---------------------------------------------------------------------------
# Bundle construction helpers


def init_basis_stack(mode: str, n: int,
                     ocio2_cube: CubeFile | None = None,
                     davinci_cube: CubeFile | None = None
                     ) -> tuple[np.ndarray, list[str]]:
    """The five initialization lattices shared by all branches.

    ``table3``: the practical conversion set (100-nit container conversion,
    OCIO2 export, 203-nit conversion, DaVinci export, identity). The two
    external LUTs cannot be synthesized analytically, so they come from
    user-supplied cube files and fall back to duplicates of the analytic
    conversions when absent. ``c100x5``: five copies of the 100-nit
    conversion. ``identity-ones``: four identities plus an all-1 lattice.
    ``identity``: five identities.
    """
    notes = []
    if mode == "table3":
        if ocio2_cube is not None:
            slot1 = resample_cube(ocio2_cube, n)
            notes.append("slot1: user-supplied ocio2 cube")
        else:
            slot1 = make_init_basis(InitLut.C_100DW, n)
            notes.append("slot1: fallback duplicate of c100dw (no ocio2 cube)")
        if davinci_cube is not None:
            slot3 = resample_cube(davinci_cube, n)
            notes.append("slot3: user-supplied davinci cube")
        else:
            slot3 = make_init_basis(InitLut.C_203DW, n)
            notes.append("slot3: fallback duplicate of c203dw (no davinci cube)")
        stack = np.stack([
            make_init_basis(InitLut.C_100DW, n),
            slot1,
            make_init_basis(InitLut.C_203DW, n),
            slot3,
            make_init_basis(InitLut.IDENTITY, n),
        ])
    elif mode == "c100x5":
        stack = np.stack([make_init_basis(InitLut.C_100DW, n)] * 5)
    elif mode == "identity-ones":
        ident = make_init_basis(InitLut.IDENTITY, n)
        stack = np.stack([ident, ident, ident, ident,
                          np.ones((n, n, n, 3))])
    elif mode == "identity":
        stack = np.stack([make_init_basis(InitLut.IDENTITY, n)] * 5)
    else:
        raise ValidationError(f"unknown init mode {mode!r}")
    return stack, notes


def make_bundle(n: int = 17, init: str = "table3",
                vertex_mode: VertexMode = VertexMode.ADAPTIVE,
                contribution_params: ContributionParams | None = None,
                ocio2_cube: CubeFile | None = None,
                davinci_cube: CubeFile | None = None) -> Bundle:
    """Fresh engine bundle with an all-zero predictor.

    The zero predictor's FC bias is (1,0,0,0,0), so a fresh bundle applies
    exactly its first basis lattice regardless of input.
    """
    stack, notes = init_basis_stack(init, n, ocio2_cube, davinci_cube)
    first_slot = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    bundle = Bundle(
        n=n,
        vertex_mode=vertex_mode,
        contribution=contribution_params or ContributionParams(),
        basis={branch: stack.copy() for branch in BRANCHES},
        predictor={branch: PredictorWeights.zeros(first_slot) for branch in BRANCHES},
        provenance=[f"init: {init}"] + notes,
    )
    return bundle


def with_overrides(bundle: Bundle,
                   vertex_mode: VertexMode | None = None,
                   contribution_params: ContributionParams | None = None) -> Bundle:
    """Bundle with config overrides applied, validated up front."""
    out = bundle
    if vertex_mode is not None and vertex_mode is not bundle.vertex_mode:
        if vertex_mode is VertexMode.FROM_FILE and bundle.vertices is None:
            raise ValidationError("cannot switch to from-file vertices: the "
                                  "bundle embeds no vertex tensors")
        out = replace(out, vertex_mode=vertex_mode)
    if contribution_params is not None:
        out = replace(out, contribution=contribution_params)
    return out
