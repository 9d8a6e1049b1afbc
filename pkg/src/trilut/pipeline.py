"""End-to-end SDR to HDR/WCG conversion and the benchmark harness.

One frame is processed in six deterministic stages:
  1. per-channel means of the clamped input,
  2. per-branch vertex grids (adaptive law, uniform, or bundle-embedded),
  3. downsample + merge-weight prediction per branch (once per frame),
  4. weighted merge of the five basis lattices per branch,
  5. three trilinear lookups per pixel,
  6. contribution weighting and fusion, clamped to [0,1] PQ code space.

Stages 5-6 fan out over row tiles; every tile writes a disjoint slice of
the output, and no reduction crosses tile boundaries, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import resource
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bundle_io import Bundle, VertexMode, lut_to_cube, with_overrides
from .contribution import ContributionMap, ContributionParams, contribution, fuse
from .errors import ValidationError
from .image_io import Frame, SignalConvention
from .lutcore import (BRANCHES, Branch, ChannelMeans, Lut3D, VertexGrid,
                      gen_vertices, identity_content, lookup, lookup_planes,
                      merge_luts, uniform_grid)
from .predictor import downsample, predict_weights

TILE_ROWS = 64

# Per-sample work inside one tile runs in fixed-size chunks so the live
# temporaries stay cache-resident; per-pixel cost is then resolution
# independent. Chunking never changes values (all ops are per-sample).
CHUNK_SAMPLES = 49152


@dataclass
class PipelineConfig:
    vertex_mode: VertexMode | None = None          # override, None = bundle's
    contribution_params: ContributionParams | None = None
    threads: int = 1
    clamp_output: bool = True
    tile_rows: int = TILE_ROWS

    def __post_init__(self):
        if self.threads < 1:
            raise ValidationError(f"thread count must be >= 1, got {self.threads}")
        if self.tile_rows < 1:
            raise ValidationError(f"tile rows must be >= 1, got {self.tile_rows}")


@dataclass
class ApplyStats:
    """Per-stage wall times plus instrumentation counters."""

    stage_seconds: dict[str, float] = field(default_factory=dict)
    clamped_input: int = 0
    means: tuple[float, float, float] = (0.0, 0.0, 0.0)
    weights: dict[str, list[float]] = field(default_factory=dict)
    # Largest bright-branch weight seen on samples at or below the dark
    # threshold; stays 0 for the linear map (its bright ramp has no support
    # there), which is what lets the dark lattice own that range.
    max_bright_weight_in_dark: float = 0.0


def _branch_grids(bundle: Bundle, mode: VertexMode,
                  means: ChannelMeans) -> dict[Branch, VertexGrid]:
    if mode is VertexMode.UNIFORM:
        grid = uniform_grid(bundle.n)
        return {branch: grid for branch in BRANCHES}
    if mode is VertexMode.FROM_FILE:
        return {branch: bundle.vertex_grid(branch) for branch in BRANCHES}
    return {branch: gen_vertices(branch, bundle.n, means) for branch in BRANCHES}


def _process_tile(tile: np.ndarray, luts: dict[Branch, Lut3D],
                  params: ContributionParams, clamp: bool,
                  track_dark: float | None) -> tuple[np.ndarray, float]:
    """Stages 5-6 on one (3, rows, w) tile. Pure, no shared state."""
    rows, w = tile.shape[1:]
    flat = tile.reshape(3, rows * w)
    fused = np.empty((3, rows * w), dtype=np.float64)
    bright_in_dark = 0.0
    for start in range(0, rows * w, CHUNK_SAMPLES):
        chunk = flat[:, start:start + CHUNK_SAMPLES]
        y_b = lookup_planes(luts[Branch.BRIGHT], chunk)
        y_m = lookup_planes(luts[Branch.MIDDLE], chunk)
        y_d = lookup_planes(luts[Branch.DARK], chunk)
        cmap = contribution(chunk, params)
        fused[:, start:start + CHUNK_SAMPLES] = fuse(y_b, y_m, y_d, cmap,
                                                     clamp=clamp)
        if track_dark is not None:
            dark_px = np.all(chunk <= track_dark, axis=0)
            if dark_px.any():
                bright_in_dark = max(bright_in_dark,
                                     float(cmap.bright[:, dark_px].max()))
    return fused.reshape(3, rows, w), bright_in_dark


def apply(frame: Frame, bundle: Bundle, config: PipelineConfig | None = None,
          return_stats: bool = False):
    """Convert one SDR frame to an HDR/WCG frame through the bundle."""
    config = config or PipelineConfig()
    if frame.convention is not SignalConvention.SDR_GAMMA709:
        raise ValidationError("apply expects an SDR-tagged input frame")
    bundle = with_overrides(bundle, config.vertex_mode, config.contribution_params)
    stats = ApplyStats()

    t0 = time.perf_counter()
    planes = frame.planes
    out_of_range = int(np.count_nonzero((planes < 0.0) | (planes > 1.0)))
    if out_of_range:
        planes = np.clip(planes, 0.0, 1.0)
    stats.clamped_input = out_of_range
    means = ChannelMeans(*(float(np.mean(planes[c], dtype=np.float64))
                           for c in range(3)))
    stats.means = means.as_tuple()
    stats.stage_seconds["means"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    grids = _branch_grids(bundle, bundle.vertex_mode, means)
    stats.stage_seconds["vertices"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    x_small = downsample(planes)
    weights = {branch: predict_weights(x_small, bundle.predictor[branch])
               for branch in BRANCHES}
    stats.weights = {b.value: [float(w) for w in weights[b]] for b in BRANCHES}
    stats.stage_seconds["predict"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    luts = {branch: Lut3D(content=merge_luts(bundle.basis[branch], weights[branch]),
                          grid=grids[branch])
            for branch in BRANCHES}
    stats.stage_seconds["merge"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    h, w = planes.shape[1:]
    params = bundle.contribution
    track_dark = params.td if return_stats else None
    out = np.empty((3, h, w), dtype=np.float32)
    spans = [(r, min(r + config.tile_rows, h)) for r in range(0, h, config.tile_rows)]

    def run_span(span):
        r0, r1 = span
        tile = planes[:, r0:r1].astype(np.float64)
        fused, bright_in_dark = _process_tile(
            tile, luts, params, config.clamp_output, track_dark)
        out[:, r0:r1] = fused
        return bright_in_dark

    if config.threads == 1 or len(spans) == 1:
        dark_hits = [run_span(s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            dark_hits = list(pool.map(run_span, spans))
    if track_dark is not None and dark_hits:
        stats.max_bright_weight_in_dark = max(dark_hits)
    stats.stage_seconds["lookup_fuse"] = time.perf_counter() - t0

    result = Frame(planes=out, convention=SignalConvention.HDR_PQ2020)
    if return_stats:
        return result, stats
    return result


# ---------------------------------------------------------------------------
# Benchmarking


def _random_sdr_frame(width: int, height: int, seed: int) -> Frame:
    rng = np.random.default_rng(seed)
    planes = rng.random((3, height, width), dtype=np.float32)
    return Frame(planes=planes, convention=SignalConvention.SDR_GAMMA709)


def _peak_rss_bytes() -> int:
    # ru_maxrss is kilobytes on Linux.
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def bench(bundle: Bundle, resolutions: list[tuple[int, int]],
          iterations: int = 8, warmup: int = 3, threads: int = 1,
          thread_curve: tuple[int, ...] = (1, 2, 4, 8),
          seed: int = 2024) -> dict:
    """Runtime / memory report over the given resolutions.

    Timing numbers are report-only: no accuracy contract depends on them,
    and published GPU timings are not reproducible on CPU (stated in the
    report header).
    """
    if warmup < 3:
        raise ValidationError("at least 3 warmup iterations are excluded by contract")
    report: dict = {
        "header": ("CPU benchmark; wall-clock medians. Published GPU timings "
                    "are not comparable or reproducible here; numbers are "
                    "report-only."),
        "iterations": iterations,
        "warmup": warmup,
        "threads": threads,
        "resolutions": [],
    }
    config = PipelineConfig(threads=threads)
    for width, height in resolutions:
        frame = _random_sdr_frame(width, height, seed)
        for _ in range(warmup):
            apply(frame, bundle, config)
        times = []
        stage_acc: dict[str, list[float]] = {}
        for _ in range(iterations):
            t0 = time.perf_counter()
            _, stats = apply(frame, bundle, config, return_stats=True)
            times.append(time.perf_counter() - t0)
            for k, v in stats.stage_seconds.items():
                stage_acc.setdefault(k, []).append(v)
        report["resolutions"].append({
            "width": width,
            "height": height,
            "median_seconds": float(np.median(times)),
            "min_seconds": float(np.min(times)),
            "max_seconds": float(np.max(times)),
            "stage_median_seconds": {k: float(np.median(v))
                                     for k, v in stage_acc.items()},
            "peak_rss_bytes": _peak_rss_bytes(),
        })
    if thread_curve:
        width, height = max(resolutions, key=lambda r: r[0] * r[1])
        frame = _random_sdr_frame(width, height, seed)
        curve = []
        for t in thread_curve:
            cfg = PipelineConfig(threads=t)
            for _ in range(warmup):
                apply(frame, bundle, cfg)
            samples = []
            for _ in range(max(3, iterations // 2)):
                _, stats = apply(frame, bundle, cfg, return_stats=True)
                samples.append(stats.stage_seconds["lookup_fuse"])
            curve.append({"threads": t,
                          "lookup_fuse_median_seconds": float(np.median(samples))})
        report["thread_scaling"] = curve
    report["frame_write"] = _write_accounting(*max(resolutions,
                                                   key=lambda r: r[0] * r[1]),
                                              seed=seed)
    return report


def _write_accounting(width: int, height: int, seed: int) -> dict:
    """Traced allocation peak of one frame write vs its payload size."""
    import tracemalloc

    from .image_io import FrameFormat, write_frame

    frame = _random_sdr_frame(width, height, seed)
    tracemalloc.start()
    tracemalloc.reset_peak()
    data = write_frame(frame, FrameFormat.PPM16)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    payload = len(data)
    return {"width": width, "height": height, "payload_bytes": payload,
            "traced_peak_bytes": int(peak),
            "intermediates_to_payload": (float(peak) - payload) / payload}


# ---------------------------------------------------------------------------
# LUT export for external inspection


def dump_luts(bundle: Bundle, weights: dict[Branch, np.ndarray],
              means: ChannelMeans, out_n: int = 65) -> dict[Branch, bytes]:
    """Merged per-branch LUTs as `.cube` texts on a uniform out_n lattice.

    The merged content lives on each branch's non-uniform grid; it is
    resampled through the engine's own lookup so grading tools (which
    assume uniform lattices) see the same transform the engine applies.
    """
    grids = _branch_grids(bundle, bundle.vertex_mode, means)
    cubes = {}
    targets = identity_content(out_n)
    for branch in BRANCHES:
        merged = Lut3D(content=merge_luts(bundle.basis[branch], weights[branch]),
                       grid=grids[branch])
        resampled = np.clip(lookup(merged, targets), 0.0, 1.0)
        cube = lut_to_cube(Lut3D(content=resampled, grid=uniform_grid(out_n)),
                           title=f"{branch.value} branch merged lut")
        cubes[branch] = cube
    from .bundle_io import write_cube
    return {branch: write_cube(cube) for branch, cube in cubes.items()}
