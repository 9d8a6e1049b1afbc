"""End-to-end engine tests."""

import numpy as np
import pytest

from trilut.bundle_io import (Bundle, VertexMode, load_bundle, make_bundle,
                              parse_cube, resample_cube, save_bundle)
from trilut.contribution import ContributionMode, ContributionParams
from trilut.errors import ValidationError
from trilut.image_io import Frame, SignalConvention
from trilut.lutcore import BRANCHES, Branch, ChannelMeans, Lut3D, lookup, uniform_grid
from trilut.pipeline import PipelineConfig, apply, bench, dump_luts
from trilut.predictor import PredictorWeights

import oracles
from conftest import random_bundle

SDR = SignalConvention.SDR_GAMMA709


def sdr_frame(rng, h=32, w=48) -> Frame:
    return Frame(planes=rng.random((3, h, w), dtype=np.float32),
                 convention=SDR)


def identity_bundle(n=5) -> Bundle:
    return make_bundle(
        n=n, init="identity", vertex_mode=VertexMode.UNIFORM,
        contribution_params=ContributionParams(mode=ContributionMode.CONSTANT))


class TestIdentityComposition:
    def test_identity_bundle_reproduces_input(self):
        rng = np.random.default_rng(229)
        frame = sdr_frame(rng)
        out = apply(frame, identity_bundle())
        assert out.convention is SignalConvention.HDR_PQ2020
        diff = out.planes.astype(np.float64) - frame.planes.astype(np.float64)
        assert np.max(np.abs(diff)) <= 1e-6

    def test_equal_branches_collapse_to_single_lut(self):
        # every branch merges to the first basis lattice (zero predictor),
        # so any contribution mode must reproduce that lattice's lookup
        rng = np.random.default_rng(233)
        frame = sdr_frame(rng, 16, 16)
        for mode in ContributionMode:
            bundle = make_bundle(
                n=9, init="c100x5", vertex_mode=VertexMode.UNIFORM,
                contribution_params=ContributionParams(mode=mode))
            out = apply(frame, bundle)
            single = Lut3D(content=bundle.basis[Branch.BRIGHT][0],
                           grid=uniform_grid(9))
            expect = lookup(single, frame.planes.astype(np.float64)
                            .transpose(1, 2, 0))
            got = out.planes.astype(np.float64).transpose(1, 2, 0)
            assert np.max(np.abs(got - np.clip(expect, 0, 1))) <= 1e-6

    def test_rejects_pq_tagged_input(self):
        rng = np.random.default_rng(239)
        frame = Frame(planes=rng.random((3, 8, 8), dtype=np.float32),
                      convention=SignalConvention.HDR_PQ2020)
        with pytest.raises(ValidationError):
            apply(frame, identity_bundle())


class TestScalarOracle:
    def test_matches_straight_line_reference(self):
        rng = np.random.default_rng(241)
        for _ in range(3):
            bundle = random_bundle(rng, n=5)
            frame = sdr_frame(rng, 12, 10)
            out = apply(frame, bundle)
            ref = oracles.scalar_pipeline(
                frame.planes.astype(np.float64),
                {
                    "n": bundle.n,
                    "vertex_mode": bundle.vertex_mode.value,
                    "contribution": {
                        "mode": bundle.contribution.mode.value,
                        "tb": bundle.contribution.tb,
                        "td": bundle.contribution.td,
                        "mu": bundle.contribution.mu,
                    },
                    "basis": {b.value: bundle.basis[b] for b in BRANCHES},
                    "weights": {b.value: bundle.predictor[b].fc_bias
                                for b in BRANCHES},
                })
            assert np.max(np.abs(out.planes.astype(np.float64) - ref)) <= 1e-5


class TestDeterminism:
    def test_thread_counts_bit_identical(self):
        rng = np.random.default_rng(251)
        bundle = random_bundle(rng, n=9)
        frame = sdr_frame(rng, 200, 128)
        outputs = [apply(frame, bundle, PipelineConfig(threads=t, tile_rows=16))
                   for t in (1, 4, 8)]
        assert np.array_equal(outputs[0].planes, outputs[1].planes)
        assert np.array_equal(outputs[0].planes, outputs[2].planes)

    def test_repeat_invocation_bit_identical(self):
        rng = np.random.default_rng(257)
        bundle = random_bundle(rng, n=5)
        frame = sdr_frame(rng)
        a = apply(frame, bundle)
        b = apply(frame, bundle)
        assert np.array_equal(a.planes, b.planes)


class TestInstrumentation:
    def test_dark_pixels_get_no_bright_contribution(self):
        rng = np.random.default_rng(263)
        bundle = random_bundle(rng, n=5, mode=ContributionMode.LINEAR)
        planes = rng.random((3, 24, 24), dtype=np.float32)
        planes[:, :8, :] *= np.float32(bundle.contribution.td)  # all-dark rows
        frame = Frame(planes=planes, convention=SDR)
        _, stats = apply(frame, bundle, return_stats=True)
        assert stats.max_bright_weight_in_dark == 0.0

    def test_stats_fields(self):
        rng = np.random.default_rng(269)
        bundle = random_bundle(rng, n=5)
        frame = sdr_frame(rng)
        _, stats = apply(frame, bundle, return_stats=True)
        assert set(stats.stage_seconds) == {"means", "vertices", "predict",
                                            "merge", "lookup_fuse"}
        assert all(len(w) == 5 for w in stats.weights.values())
        means = frame.planes.mean(axis=(1, 2))
        assert np.allclose(stats.means, means, atol=1e-6)


class TestOverrides:
    def test_vertex_override_changes_output(self):
        rng = np.random.default_rng(271)
        bundle = random_bundle(rng, n=9, vertex_mode=VertexMode.ADAPTIVE)
        frame = sdr_frame(rng, 16, 16)
        base = apply(frame, bundle)
        uniform = apply(frame, bundle,
                        PipelineConfig(vertex_mode=VertexMode.UNIFORM))
        assert not np.array_equal(base.planes, uniform.planes)

    def test_contribution_override(self):
        rng = np.random.default_rng(277)
        bundle = random_bundle(rng, n=5, mode=ContributionMode.LINEAR)
        frame = sdr_frame(rng, 16, 16)
        soft = apply(frame, bundle, PipelineConfig(
            contribution_params=ContributionParams(mode=ContributionMode.SOFT)))
        base = apply(frame, bundle)
        assert not np.array_equal(base.planes, soft.planes)

    def test_from_file_override_without_tensors_rejected(self):
        rng = np.random.default_rng(281)
        bundle = random_bundle(rng, n=5)
        frame = sdr_frame(rng, 8, 8)
        with pytest.raises(ValidationError):
            apply(frame, bundle,
                  PipelineConfig(vertex_mode=VertexMode.FROM_FILE))


class TestDumpLuts:
    def test_identity_bundle_dumps_identity_cubes(self):
        bundle = identity_bundle()
        weights = {b: np.array([1.0, 0, 0, 0, 0]) for b in BRANCHES}
        cubes = dump_luts(bundle, weights, ChannelMeans(0.5, 0.5, 0.5),
                          out_n=5)
        for branch in BRANCHES:
            cube = parse_cube(cubes[branch])
            content = resample_cube(cube, 5)
            from trilut.lutcore import identity_content
            assert np.max(np.abs(content - identity_content(5))) <= 1e-5

    def test_equal_basis_dumps_duplicates(self):
        bundle = make_bundle(n=5, init="c100x5")
        weights = {b: np.array([0.2] * 5) for b in BRANCHES}
        cubes = dump_luts(bundle, weights, ChannelMeans(0.5, 0.5, 0.5),
                          out_n=9)
        bright = parse_cube(cubes[Branch.BRIGHT]).data
        middle = parse_cube(cubes[Branch.MIDDLE]).data
        assert not np.array_equal(bright, middle)  # grids differ
        uniform_bundle = make_bundle(n=5, init="c100x5",
                                     vertex_mode=VertexMode.UNIFORM)
        cubes_u = dump_luts(uniform_bundle, weights,
                            ChannelMeans(0.5, 0.5, 0.5), out_n=9)
        assert np.array_equal(parse_cube(cubes_u[Branch.BRIGHT]).data,
                              parse_cube(cubes_u[Branch.MIDDLE]).data)

    def test_reimported_cube_matches_direct_apply(self):
        # The default out_n=65 nests a 17-point uniform lattice, so for a
        # uniform-vertex bundle the dump chain (resample, 6-decimal text,
        # reparse, reapply) must land within 2/1023 per sample. Adaptive
        # grids are inspection-only: uniform content warped by the inverse
        # of the middle law has unbounded slope at 0.5, which no practical
        # uniform cube can represent.
        rng = np.random.default_rng(283)
        bundle = make_bundle(n=17, init="table3",
                             vertex_mode=VertexMode.UNIFORM,
                             contribution_params=ContributionParams(
                                 mode=ContributionMode.CONSTANT))
        frame = sdr_frame(rng, 24, 24)
        direct = apply(frame, bundle)
        _, stats = apply(frame, bundle, return_stats=True)
        weights = {b: np.array(stats.weights[b.value]) for b in BRANCHES}
        cubes = dump_luts(bundle, weights, ChannelMeans(*stats.means))
        rgb = frame.planes.astype(np.float64).transpose(1, 2, 0)
        branch_results = {}
        for branch in BRANCHES:
            cube = parse_cube(cubes[branch])
            content = resample_cube(cube, 65)
            lut = Lut3D(content=content, grid=uniform_grid(65))
            branch_results[branch] = lookup(lut, rgb)
        fused = np.clip(sum(branch_results.values()) / 3.0, 0.0, 1.0)
        got = direct.planes.astype(np.float64).transpose(1, 2, 0)
        assert np.max(np.abs(fused - got)) <= 2.0 / 1023.0


class TestBench:
    def test_report_shape(self):
        bundle = identity_bundle()
        report = bench(bundle, [(96, 64), (192, 128)], iterations=3,
                       warmup=3, thread_curve=(1, 2))
        assert "not comparable" in report["header"] or \
            "report-only" in report["header"]
        assert len(report["resolutions"]) == 2
        for entry in report["resolutions"]:
            assert entry["median_seconds"] > 0.0
            assert "lookup_fuse" in entry["stage_median_seconds"]
            assert entry["peak_rss_bytes"] > 0
        assert [c["threads"] for c in report["thread_scaling"]] == [1, 2]

    def test_rejects_insufficient_warmup(self):
        with pytest.raises(ValidationError):
            bench(identity_bundle(), [(64, 64)], warmup=1)
