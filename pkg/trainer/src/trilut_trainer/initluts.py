"""Analytic initialization lattices for the basic LUTs.

These must match the engine's init outputs bit-exactly once cast to
float32 (verified end to end through exported bundle checksums), so the
float64 expressions below follow the same operation order: decode the SDR
gamma, convert the gamut, scale diffuse white, PQ-encode.
"""

from __future__ import annotations

import numpy as np

SDR_DECODE_EXPONENT = 1.0 / 0.45

PQ_M1 = 2610.0 / 16384.0
PQ_M2 = 2523.0 / 4096.0 * 128.0
PQ_C1 = 3424.0 / 4096.0
PQ_C2 = 2413.0 / 4096.0 * 32.0
PQ_C3 = 2392.0 / 4096.0 * 32.0
PQ_MAX_NITS = 10000.0

BT709_TO_BT2020 = np.array([
    [0.6274038959, 0.3292830384, 0.04331306569],
    [0.06909728936, 0.9195403951, 0.01136231557],
    [0.01639143888, 0.08801330788, 0.8955952532],
])


def pq_encode(luminance: np.ndarray) -> np.ndarray:
    y = np.clip(np.asarray(luminance, dtype=np.float64), 0.0, PQ_MAX_NITS) \
        / PQ_MAX_NITS
    ym = y ** PQ_M1
    return ((PQ_C1 + PQ_C2 * ym) / (1.0 + PQ_C3 * ym)) ** PQ_M2


def identity_lattice(n: int) -> np.ndarray:
    v = np.linspace(0.0, 1.0, n)
    r, g, b = np.meshgrid(v, v, v, indexing="ij")
    return np.stack([r, g, b], axis=-1)


def container_conversion(n: int, nits: float) -> np.ndarray:
    """Gamma SDR to PQ/BT.2020 with diffuse white at the given level."""
    x = identity_lattice(n)
    linear = np.clip(x, 0.0, 1.0) ** SDR_DECODE_EXPONENT
    wide = linear @ BT709_TO_BT2020.T
    return pq_encode(wide * nits)


# --- minimal cube handling for user-supplied init slots -----------------


def parse_cube_file(path: str) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    size = None
    domain_min = np.zeros(3)
    domain_max = np.ones(3)
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            upper = line.upper()
            if upper.startswith("TITLE"):
                continue
            if upper.startswith("LUT_3D_SIZE"):
                size = int(line.split()[1])
                continue
            if upper.startswith("DOMAIN_MIN"):
                domain_min = np.array([float(v) for v in line.split()[1:4]])
                continue
            if upper.startswith("DOMAIN_MAX"):
                domain_max = np.array([float(v) for v in line.split()[1:4]])
                continue
            parts = line.split()
            triples.append((float(parts[0]), float(parts[1]), float(parts[2])))
    if size is None or len(triples) != size ** 3:
        raise ValueError(f"{path}: not a complete 3D cube file")
    return size, np.array(triples), domain_min, domain_max


def resample_cube_content(path: str, n: int) -> np.ndarray:
    """Cube data (R fastest) to an (n,n,n,3) lattice over [0,1].

    Trilinear with the blend order R, then G, then B, matching the engine's
    resampler so shared cube files produce identical float32 tensors.
    """
    size, data, dmin, dmax = parse_cube_file(path)
    content = data.reshape(size, size, size, 3).transpose(2, 1, 0, 3)
    targets = identity_lattice(n)
    local = np.clip((targets - dmin) / (dmax - dmin), 0.0, 1.0)

    axis = np.linspace(0.0, 1.0, size)
    widths = np.diff(axis)
    idx = []
    frac = []
    for a in range(3):
        x = local[..., a]
        i = np.clip(np.searchsorted(axis, x, side="right") - 1, 0, size - 2)
        idx.append(i)
        frac.append((x - axis[i]) / widths[i])
    ir, ig, ib = idx
    tr = frac[0][..., None]
    tg = frac[1][..., None]
    tb = frac[2][..., None]
    c00 = content[ir, ig, ib] * (1.0 - tr) + content[ir + 1, ig, ib] * tr
    c10 = content[ir, ig + 1, ib] * (1.0 - tr) + content[ir + 1, ig + 1, ib] * tr
    c01 = content[ir, ig, ib + 1] * (1.0 - tr) + content[ir + 1, ig, ib + 1] * tr
    c11 = content[ir, ig + 1, ib + 1] * (1.0 - tr) \
        + content[ir + 1, ig + 1, ib + 1] * tr
    c0 = c00 * (1.0 - tg) + c10 * tg
    c1 = c01 * (1.0 - tg) + c11 * tg
    return c0 * (1.0 - tb) + c1 * tb


def init_basis(mode: str, n: int, ocio2_cube: str | None = None,
               davinci_cube: str | None = None
               ) -> tuple[np.ndarray, list[str]]:
    """Five initialization lattices, shared by all three branches."""
    notes = []
    if mode == "table3":
        c100 = container_conversion(n, 100.0)
        c203 = container_conversion(n, 203.0)
        if ocio2_cube:
            slot1 = resample_cube_content(ocio2_cube, n)
            notes.append("slot1: user-supplied ocio2 cube")
        else:
            slot1 = c100.copy()
            notes.append("slot1: fallback duplicate of c100dw (no ocio2 cube)")
        if davinci_cube:
            slot3 = resample_cube_content(davinci_cube, n)
            notes.append("slot3: user-supplied davinci cube")
        else:
            slot3 = c203.copy()
            notes.append("slot3: fallback duplicate of c203dw (no davinci cube)")
        stack = np.stack([c100, slot1, c203, slot3, identity_lattice(n)])
    elif mode == "c100x5":
        stack = np.stack([container_conversion(n, 100.0)] * 5)
    elif mode == "identity-ones":
        ident = identity_lattice(n)
        stack = np.stack([ident, ident, ident, ident, np.ones((n, n, n, 3))])
    else:
        raise ValueError(f"unknown init mode {mode!r}")
    return stack, notes
