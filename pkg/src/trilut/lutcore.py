"""Non-uniform 3D LUT core: vertex generation, trilinear lookup, merging.

A LUT is an n*n*n lattice of output RGB triples over the SDR input cube.
Lattice axis 0 indexes the R input, axis 1 the G input, axis 2 the B input;
the trailing dimension holds the output triple. Content values are stored
unclamped: branch results may run out of [0,1] and are only clamped once,
after the final fusion.

The three luma branches (bright / middle / dark) redistribute lattice
precision by warping the uniform vertex positions: the bright law pushes
vertices toward 1, the dark law toward 0, and the middle law concentrates
them around 0.5. Bright and dark adapt to the frame's per-channel mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import CorruptionError, ValidationError
from .colorspace import ClampCounter

ENDPOINT_TOL = 1e-9


class Branch(Enum):
    BRIGHT = "bright"
    MIDDLE = "middle"
    DARK = "dark"


BRANCHES = (Branch.BRIGHT, Branch.MIDDLE, Branch.DARK)


@dataclass(frozen=True)
class ChannelMeans:
    """Per-channel arithmetic means of an SDR frame, each in [0,1]."""

    mean_r: float
    mean_g: float
    mean_b: float

    def __post_init__(self):
        for name, v in (("mean_r", self.mean_r), ("mean_g", self.mean_g),
                        ("mean_b", self.mean_b)):
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0,1], got {v}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mean_r, self.mean_g, self.mean_b)


@dataclass(frozen=True)
class VertexGrid:
    """Strictly increasing per-axis vertex vectors spanning [0,1]."""

    axis_r: np.ndarray
    axis_g: np.ndarray
    axis_b: np.ndarray

    def __post_init__(self):
        for name, axis in self.axes():
            axis = np.asarray(axis, dtype=np.float64)
            object.__setattr__(self, name, axis)
            if axis.ndim != 1 or axis.size < 2:
                raise ValidationError(f"{name} needs at least 2 vertices")
            if abs(axis[0]) > ENDPOINT_TOL or abs(axis[-1] - 1.0) > ENDPOINT_TOL:
                raise ValidationError(f"{name} must span [0,1], got "
                                      f"[{axis[0]}, {axis[-1]}]")
            if np.any(np.diff(axis) <= 0.0):
                raise ValidationError(f"{name} must be strictly increasing")
        if not (self.axis_r.size == self.axis_g.size == self.axis_b.size):
            raise ValidationError("vertex axes must share one length")

    def axes(self):
        return (("axis_r", self.axis_r), ("axis_g", self.axis_g),
                ("axis_b", self.axis_b))

    @property
    def n(self) -> int:
        return self.axis_r.size


@dataclass(frozen=True)
class Lut3D:
    """An n^3 content lattice paired with its input vertex grid."""

    content: np.ndarray  # (n, n, n, 3)
    grid: VertexGrid

    def __post_init__(self):
        content = np.asarray(self.content, dtype=np.float64)
        object.__setattr__(self, "content", content)
        n = self.grid.n
        if content.shape != (n, n, n, 3):
            raise ValidationError(f"content shape {content.shape} does not "
                                  f"match lattice size {n}")
        # Channel-major flat copy for the gather-heavy lookup path.
        flat = np.ascontiguousarray(content.transpose(3, 0, 1, 2)).reshape(3, -1)
        object.__setattr__(self, "_flat_channels", flat)

    @property
    def n(self) -> int:
        return self.grid.n


def uniform_vertices(n: int) -> np.ndarray:
    """k/(n-1) for k in 0..n-1."""
    if n < 2:
        raise ValidationError(f"lattice size must be >= 2, got {n}")
    return np.linspace(0.0, 1.0, n)


def uniform_grid(n: int) -> VertexGrid:
    v = uniform_vertices(n)
    return VertexGrid(v, v.copy(), v.copy())


def _bright_vertices(v_u: np.ndarray, mean: float) -> np.ndarray:
    return v_u ** (1.0 / (1.4 + 0.8 * mean))


def _dark_vertices(v_u: np.ndarray, mean: float) -> np.ndarray:
    return v_u ** (2.2 - 0.8 * mean)


def _middle_vertices(v_u: np.ndarray) -> np.ndarray:
    three_pi = 3.0 * np.pi
    v = (three_pi * v_u - np.cos(three_pi * v_u) + 1.0) / (three_pi + 2.0)
    # cos(3*pi) is not exactly -1 in floating point; pin the endpoints.
    v[0] = 0.0
    v[-1] = 1.0
    return v


def gen_vertices(branch: Branch, n: int, means: ChannelMeans) -> VertexGrid:
    """Branch-specific non-uniform vertex grid, one law per luma branch.

    Bright and dark use that axis's channel mean; the middle law is
    mean-independent. Endpoints land exactly on 0 and 1.
    """
    v_u = uniform_vertices(n)
    if branch is Branch.MIDDLE:
        v = _middle_vertices(v_u)
        return VertexGrid(v, v.copy(), v.copy())
    law = _bright_vertices if branch is Branch.BRIGHT else _dark_vertices
    axes = [law(v_u, m) for m in means.as_tuple()]
    return VertexGrid(*axes)


def _cell_index(axis: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Enclosing cell index and local coordinate along one axis.

    Binary search (searchsorted) keeps large lattices viable; a query
    exactly on a vertex yields local coordinate 0 (or 1 at the top end).
    """
    widths = np.diff(axis)
    if np.any(widths <= 0.0):
        raise CorruptionError("vertex axis no longer strictly increasing")
    idx = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, axis.size - 2)
    t = (x - axis[idx]) / widths[idx]
    return idx, t


def lookup_planes(lut: Lut3D, planes: np.ndarray,
                  counter: ClampCounter | None = None) -> np.ndarray:
    """Trilinear interpolation of a planar (3, ...) stack of code values.

    The hot path of the engine: flat-index gathers per output channel keep
    the per-tile working set small. Inputs outside [0,1] are clamped (and
    counted when a counter is given).
    """
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim < 1 or planes.shape[0] != 3:
        raise ValidationError(f"expected planar (3, ...) input, "
                              f"got shape {planes.shape}")
    if counter is not None:
        counter.add(np.count_nonzero((planes < 0.0) | (planes > 1.0)))
    planes = np.clip(planes, 0.0, 1.0)

    ir, tr = _cell_index(lut.grid.axis_r, planes[0])
    ig, tg = _cell_index(lut.grid.axis_g, planes[1])
    ib, tb = _cell_index(lut.grid.axis_b, planes[2])

    n = lut.n
    nn = n * n
    base = (ir * n + ig) * n + ib
    corners = (base, base + nn, base + n, base + nn + n,
               base + 1, base + nn + 1, base + n + 1, base + nn + n + 1)
    sr = 1.0 - tr
    sg = 1.0 - tg
    sb = 1.0 - tb
    out = np.empty(planes.shape, dtype=np.float64)
    flat = lut._flat_channels
    for c in range(3):
        fc = flat[c]
        c00 = fc[corners[0]] * sr + fc[corners[1]] * tr
        c10 = fc[corners[2]] * sr + fc[corners[3]] * tr
        c01 = fc[corners[4]] * sr + fc[corners[5]] * tr
        c11 = fc[corners[6]] * sr + fc[corners[7]] * tr
        c00 *= sg
        c00 += c10 * tg
        c01 *= sg
        c01 += c11 * tg
        c00 *= sb
        c00 += c01 * tb
        out[c] = c00
    return out


def lookup(lut: Lut3D, rgb: np.ndarray,
           counter: ClampCounter | None = None) -> np.ndarray:
    """Trilinear interpolation of an (..., 3) array of code triples."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValidationError(f"expected RGB triples on the last axis, "
                              f"got shape {rgb.shape}")
    planes = np.moveaxis(rgb, -1, 0)
    return np.moveaxis(lookup_planes(lut, planes, counter), 0, -1)


def merge_luts(basis: list[np.ndarray] | np.ndarray,
               weights: np.ndarray) -> np.ndarray:
    """Elementwise weighted sum of five basis lattices (shared shape)."""
    stack = np.asarray(basis, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if stack.ndim != 5 or stack.shape[0] != 5:
        raise ValidationError(f"expected 5 stacked lattices, got {stack.shape}")
    if not (stack.shape[1] == stack.shape[2] == stack.shape[3]):
        raise ValidationError(f"basis lattices disagree on size: {stack.shape}")
    if weights.shape != (5,):
        raise ValidationError(f"expected 5 merge weights, got {weights.shape}")
    return np.tensordot(weights, stack, axes=(0, 0))


def identity_content(n: int) -> np.ndarray:
    """Lattice recording output = input on a uniform grid."""
    v = uniform_vertices(n)
    r, g, b = np.meshgrid(v, v, v, indexing="ij")
    return np.stack([r, g, b], axis=-1)


def reg_smoothness(content: np.ndarray) -> float:
    """Sum of squared forward differences over all lattice axes and channels."""
    content = np.asarray(content, dtype=np.float64)
    total = 0.0
    for axis in range(3):
        d = np.diff(content, axis=axis)
        total += float(np.sum(d * d))
    return total


def reg_monotonicity(content: np.ndarray) -> float:
    """Hinge penalty on decreasing steps of each axis-matching channel.

    Zero exactly when channel c never decreases along lattice axis c.
    """
    content = np.asarray(content, dtype=np.float64)
    total = 0.0
    for axis in range(3):
        d = np.diff(content[..., axis], axis=axis)
        total += float(np.sum(np.maximum(0.0, -d)))
    return total
