"""Independent reference implementations used as test oracles.

Everything here is written straight-line with scalar math (bisect, math,
explicit loops), sharing no code with the package under test. Slow on
purpose; correctness is the only goal.
"""

from __future__ import annotations

import bisect
import math

import numpy as np


# --- trilinear interpolation ------------------------------------------------

def naive_lookup(axes, content, r, g, b):
    """Scalar trilinear lookup. axes: three python lists; content: numpy
    (n,n,n,3) indexed [ir][ig][ib]."""

    def locate(axis, x):
        x = min(max(x, 0.0), 1.0)
        i = bisect.bisect_right(axis, x) - 1
        i = min(max(i, 0), len(axis) - 2)
        t = (x - axis[i]) / (axis[i + 1] - axis[i])
        return i, t

    ir, tr = locate(axes[0], r)
    ig, tg = locate(axes[1], g)
    ib, tb = locate(axes[2], b)
    out = [0.0, 0.0, 0.0]
    for dr in (0, 1):
        wr = tr if dr else 1.0 - tr
        for dg in (0, 1):
            wg = tg if dg else 1.0 - tg
            for db in (0, 1):
                wb = tb if db else 1.0 - tb
                weight = wr * wg * wb
                corner = content[ir + dr, ig + dg, ib + db]
                for c in range(3):
                    out[c] += weight * float(corner[c])
    return out


def batch_naive_lookup(axes, content, queries):
    """Second independent interpolator, vectorized for large query batches.

    Locates cells with np.digitize and accumulates the eight corner terms
    explicitly; shares no code or structure with the engine's flat-gather
    path (cross-checked against naive_lookup in the acceptance suite).
    """
    queries = np.clip(np.asarray(queries, dtype=np.float64), 0.0, 1.0)
    n = len(axes[0])
    idx = []
    frac = []
    for a in range(3):
        axis = np.asarray(axes[a])
        i = np.digitize(queries[:, a], axis) - 1
        i = np.minimum(np.maximum(i, 0), n - 2)
        idx.append(i)
        frac.append((queries[:, a] - axis[i]) / (axis[i + 1] - axis[i]))
    out = np.zeros((queries.shape[0], 3))
    for dr in (0, 1):
        for dg in (0, 1):
            for db in (0, 1):
                weight = ((frac[0] if dr else 1.0 - frac[0])
                          * (frac[1] if dg else 1.0 - frac[1])
                          * (frac[2] if db else 1.0 - frac[2]))
                out += weight[:, None] * content[idx[0] + dr, idx[1] + dg,
                                                 idx[2] + db]
    return out


# --- vertex laws -------------------------------------------------------------

def naive_vertices(branch: str, n: int, mean: float) -> list[float]:
    out = []
    for k in range(n):
        u = k / (n - 1)
        if branch == "bright":
            v = u ** (1.0 / (1.4 + 0.8 * mean))
        elif branch == "dark":
            v = u ** (2.2 - 0.8 * mean)
        else:
            tp = 3.0 * math.pi
            v = (tp * u - math.cos(tp * u) + 1.0) / (tp + 2.0)
            if k == 0:
                v = 0.0
            if k == n - 1:
                v = 1.0
        out.append(v)
    return out


# --- contribution map --------------------------------------------------------

def naive_contribution(x: float, mode: str, tb: float, td: float, mu: float):
    if mode == "eq3":
        p_b = min(max((x - tb) / (1.0 - tb), 0.0), 1.0)
        p_d = min(max((td - x) / td, 0.0), 1.0)
        p_m = 1.0 - p_b - p_d
    elif mode == "soft":
        norm = math.log(1.0 + mu)
        p_b = 1.0 - math.log(1.0 + mu * (1.0 - x)) / norm
        p_d = 1.0 - math.log(1.0 + mu * x) / norm
        p_m = 1.0 - p_b - p_d
    elif mode == "hard":
        p_b = 1.0 if x >= tb else 0.0
        p_d = 1.0 if x <= td else 0.0
        p_m = 1.0 - p_b - p_d
    else:
        p_b = p_m = p_d = 1.0 / 3.0
    return p_b, p_m, p_d


# --- end-to-end pipeline (fusion of three branch lookups) --------------------

def scalar_pipeline(planes, bundle_like):
    """Straight-line per-pixel reference of the whole conversion.

    ``bundle_like`` must provide: n, contribution (mode/tb/td/mu strings and
    floats), vertex_mode ("eq2" or "uniform"), per-branch basis stacks
    (5,n,n,n,3) and per-branch weight 5-vectors. Merging is done with an
    explicit per-entry loop; interpolation and fusion are scalar.
    Returns (3, h, w) float64 planes, clamped to [0,1].
    """
    h, w = planes.shape[1], planes.shape[2]
    n = bundle_like["n"]

    means = []
    for c in range(3):
        total = 0.0
        for row in planes[c]:
            for v in row:
                total += min(max(float(v), 0.0), 1.0)
        means.append(total / (h * w))

    axes = {}
    for branch in ("bright", "middle", "dark"):
        if bundle_like["vertex_mode"] == "uniform":
            ax = [[k / (n - 1) for k in range(n)]] * 3
        else:
            ax = [naive_vertices(branch, n, means[c]) for c in range(3)]
        axes[branch] = ax

    merged = {}
    for branch in ("bright", "middle", "dark"):
        stack = bundle_like["basis"][branch]
        weights = bundle_like["weights"][branch]
        content = np.zeros((n, n, n, 3))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for c in range(3):
                        acc = 0.0
                        for s in range(5):
                            acc += float(weights[s]) * float(stack[s, i, j, k, c])
                        content[i, j, k, c] = acc
        merged[branch] = content

    mode = bundle_like["contribution"]["mode"]
    tb = bundle_like["contribution"]["tb"]
    td = bundle_like["contribution"]["td"]
    mu = bundle_like["contribution"]["mu"]

    out = np.zeros((3, h, w))
    for yy in range(h):
        for xx in range(w):
            r = min(max(float(planes[0, yy, xx]), 0.0), 1.0)
            g = min(max(float(planes[1, yy, xx]), 0.0), 1.0)
            b = min(max(float(planes[2, yy, xx]), 0.0), 1.0)
            results = {}
            for branch in ("bright", "middle", "dark"):
                results[branch] = naive_lookup(axes[branch], merged[branch], r, g, b)
            for c, x in enumerate((r, g, b)):
                p_b, p_m, p_d = naive_contribution(x, mode, tb, td, mu)
                val = (p_b * results["bright"][c] + p_m * results["middle"][c]
                       + p_d * results["dark"][c])
                out[c, yy, xx] = min(max(val, 0.0), 1.0)
    return out


# --- bilinear resampling -----------------------------------------------------

def naive_bilinear(plane, out_h, out_w):
    in_h, in_w = plane.shape
    out = np.zeros((out_h, out_w))
    for oy in range(out_h):
        sy = (oy + 0.5) * in_h / out_h - 0.5
        sy = min(max(sy, 0.0), in_h - 1.0)
        y0 = min(int(math.floor(sy)), in_h - 2) if in_h > 1 else 0
        fy = sy - y0
        for ox in range(out_w):
            sx = (ox + 0.5) * in_w / out_w - 0.5
            sx = min(max(sx, 0.0), in_w - 1.0)
            x0 = min(int(math.floor(sx)), in_w - 2) if in_w > 1 else 0
            fx = sx - x0
            a = float(plane[y0, x0]) * (1 - fx) + float(plane[y0, x0 + 1]) * fx
            bb = float(plane[y0 + 1, x0]) * (1 - fx) + float(plane[y0 + 1, x0 + 1]) * fx
            out[oy, ox] = a * (1 - fy) + bb * fy
    return out


# --- SSIM --------------------------------------------------------------------

def naive_ssim(x, y, window=11, sigma=1.5, k1=0.01, k2=0.03):
    half = window // 2
    kern = np.zeros((window, window))
    for u in range(window):
        for v in range(window):
            du, dv = u - half, v - half
            kern[u, v] = math.exp(-(du * du + dv * dv) / (2 * sigma * sigma))
    kern /= kern.sum()

    h, w = x.shape
    vals = []
    for cy in range(half, h - half):
        for cx in range(half, w - half):
            wx = x[cy - half:cy + half + 1, cx - half:cx + half + 1]
            wy = y[cy - half:cy + half + 1, cx - half:cx + half + 1]
            mx = float((kern * wx).sum())
            my = float((kern * wy).sum())
            vxx = float((kern * wx * wx).sum()) - mx * mx
            vyy = float((kern * wy * wy).sum()) - my * my
            vxy = float((kern * wx * wy).sum()) - mx * my
            c1, c2 = k1 * k1, k2 * k2
            vals.append(((2 * mx * my + c1) * (2 * vxy + c2))
                        / ((mx * mx + my * my + c1) * (vxx + vyy + c2)))
    return sum(vals) / len(vals)


# --- ST 2084 and BT.2124, literal transcriptions ------------------------------

M1 = 2610 / 16384
M2 = 2523 / 4096 * 128
C1 = 3424 / 4096
C2 = 2413 / 4096 * 32
C3 = 2392 / 4096 * 32


def st2084_encode(nits: float) -> float:
    y = min(max(nits / 10000.0, 0.0), 1.0)
    ym = y ** M1
    return ((C1 + C2 * ym) / (1.0 + C3 * ym)) ** M2


def st2084_decode(code: float) -> float:
    nm = code ** (1.0 / M2)
    num = max(nm - C1, 0.0)
    return 10000.0 * (num / (C2 - C3 * nm)) ** (1.0 / M1)


RGB2020_TO_LMS = [
    [1688 / 4096, 2146 / 4096, 262 / 4096],
    [683 / 4096, 2951 / 4096, 462 / 4096],
    [99 / 4096, 309 / 4096, 3688 / 4096],
]
LMSP_TO_ICTCP = [
    [2048 / 4096, 2048 / 4096, 0.0],
    [6610 / 4096, -13613 / 4096, 7003 / 4096],
    [17933 / 4096, -17390 / 4096, -543 / 4096],
]


def naive_delta_e_itp(rgb_a, rgb_b) -> float:
    """BT.2124 color difference of two PQ-coded BT.2020 triples."""

    def to_itp(rgb):
        linear = [st2084_decode(float(v)) for v in rgb]
        lms = [sum(RGB2020_TO_LMS[i][j] * linear[j] for j in range(3))
               for i in range(3)]
        lmsp = [st2084_encode(v) for v in lms]
        i = sum(LMSP_TO_ICTCP[0][j] * lmsp[j] for j in range(3))
        ct = sum(LMSP_TO_ICTCP[1][j] * lmsp[j] for j in range(3))
        cp = sum(LMSP_TO_ICTCP[2][j] * lmsp[j] for j in range(3))
        return i, ct, cp

    ia, cta, cpa = to_itp(rgb_a)
    ib, ctb, cpb = to_itp(rgb_b)
    return 720.0 * math.sqrt((ia - ib) ** 2 + 0.25 * (cta - ctb) ** 2
                             + (cpa - cpb) ** 2)


# --- colorimetry -------------------------------------------------------------

def derive_rgb_to_rgb(src_primaries, dst_primaries, white):
    """Gamut matrix from CIE xy chromaticities, scalar Gaussian elimination."""

    def rgb_to_xyz(primaries):
        cols = []
        for (px, py) in primaries:
            cols.append([px / py, 1.0, (1.0 - px - py) / py])
        wx, wy = white
        target = [wx / wy, 1.0, (1.0 - wx - wy) / wy]
        a = [[cols[j][i] for j in range(3)] for i in range(3)]
        s = _solve3(a, target)
        return [[a[i][j] * s[j] for j in range(3)] for i in range(3)]

    src = rgb_to_xyz(src_primaries)
    dst = rgb_to_xyz(dst_primaries)
    dst_inv = _invert3(dst)
    return [[sum(dst_inv[i][k] * src[k][j] for k in range(3)) for j in range(3)]
            for i in range(3)]


def _solve3(a, b):
    m = [row[:] + [bv] for row, bv in zip(a, b)]
    for col in range(3):
        pivot = max(range(col, 3), key=lambda r: abs(m[r][col]))
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(3):
            if r != col:
                f = m[r][col] / m[col][col]
                for c in range(col, 4):
                    m[r][c] -= f * m[col][c]
    return [m[i][3] / m[i][i] for i in range(3)]


def _invert3(a):
    cols = []
    for j in range(3):
        e = [1.0 if i == j else 0.0 for i in range(3)]
        cols.append(_solve3(a, e))
    return [[cols[j][i] for j in range(3)] for i in range(3)]


BT709_PRIMARIES = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)]
BT2020_PRIMARIES = [(0.708, 0.292), (0.170, 0.797), (0.131, 0.046)]
D65_WHITE = (0.3127, 0.3290)
