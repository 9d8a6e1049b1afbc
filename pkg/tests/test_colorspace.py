"""Transfer function and gamut matrix tests.

Frozen expected values were computed with a 40-digit mpmath evaluation of
the ST 2084 closed form and cross-checked against published PQ tables.
"""

import numpy as np
import pytest

from trilut import colorspace as cs

import oracles

# 40-digit mpmath evaluations, frozen.
PQ_100_NIT = 0.50807842151739486
PQ_203_NIT = 0.58068888104160784
PQ_1000_NIT = 0.75182709624704177
GAMMA_HALF = 0.21431099571326821  # 0.5 ** (1/0.45)


class TestGamma:
    def test_fixed_points(self):
        assert cs.gamma_decode(0.0) == 0.0
        assert cs.gamma_decode(1.0) == 1.0

    def test_half_decode(self):
        assert cs.gamma_decode(0.5) == pytest.approx(GAMMA_HALF, abs=1e-12)

    def test_round_trip_grid(self):
        v = np.linspace(0.0, 1.0, 10_000)
        back = cs.gamma_encode(cs.gamma_decode(v))
        assert np.max(np.abs(back - v)) <= 1e-7

    def test_alt_exponent_round_trip(self):
        v = np.linspace(0.0, 1.0, 1000)
        back = cs.gamma_encode(cs.gamma_decode(v, cs.ALT_SDR_DECODE_EXPONENT),
                               cs.ALT_SDR_DECODE_EXPONENT)
        assert np.max(np.abs(back - v)) <= 1e-7

    def test_out_of_range_clamps_and_counts(self):
        counter = cs.ClampCounter()
        out = cs.gamma_decode(np.array([-0.5, 0.5, 1.5]), counter=counter)
        assert counter.count == 2
        assert out[0] == 0.0 and out[2] == 1.0

    def test_monotone(self):
        v = np.linspace(0.0, 1.0, 4096)
        assert np.all(np.diff(cs.gamma_decode(v)) > 0)

    def test_bad_exponent(self):
        from trilut.errors import ValidationError
        with pytest.raises(ValidationError):
            cs.gamma_decode(0.5, exponent=0.0)


class TestPq:
    def test_endpoints(self):
        # The exact ST 2084 closed form gives c1**m2 ~ 7.4e-7 at zero, so
        # "0 maps to 0" holds to the code-value tolerance, not bit-exactly.
        assert cs.pq_encode(0.0) == pytest.approx(0.0, abs=1e-6)
        assert cs.pq_encode(10_000.0) == pytest.approx(1.0, abs=1e-12)

    def test_spot_values(self):
        assert cs.pq_encode(100.0) == pytest.approx(PQ_100_NIT, abs=1e-12)
        assert cs.pq_encode(203.0) == pytest.approx(PQ_203_NIT, abs=1e-12)
        assert cs.pq_encode(1000.0) == pytest.approx(PQ_1000_NIT, abs=1e-12)

    def test_matches_literal_transcription(self):
        for nits in (0.01, 0.5, 5.0, 80.0, 600.0, 4000.0, 9999.0):
            assert cs.pq_encode(nits) == pytest.approx(
                oracles.st2084_encode(nits), rel=1e-12)

    def test_round_trip_log_grid(self):
        lum = np.logspace(-2.0, 4.0, 10_000)  # 0.01 nit .. 10000 nit
        back = cs.pq_decode(cs.pq_encode(lum))
        assert np.max(np.abs(back / lum - 1.0)) <= 1e-4

    def test_strictly_increasing(self):
        lum = np.linspace(0.0, 10_000.0, 4096)
        assert np.all(np.diff(cs.pq_encode(lum)) > 0)

    def test_negative_clamps_and_counts(self):
        counter = cs.ClampCounter()
        assert cs.pq_encode(-5.0, counter=counter) == cs.pq_encode(0.0)
        assert counter.count == 1


class TestGamut:
    def test_matrices_are_mutual_inverses(self):
        prod = cs.BT709_TO_BT2020 @ cs.BT2020_TO_BT709
        assert np.max(np.abs(prod - np.eye(3))) <= 1e-6

    def test_white_preservation(self):
        assert np.max(np.abs(cs.BT709_TO_BT2020.sum(axis=1) - 1.0)) <= 1e-6
        white = cs.convert_gamut(np.array([1.0, 1.0, 1.0]), cs.BT709_TO_BT2020)
        assert np.max(np.abs(white - 1.0)) <= 1e-6

    def test_black(self):
        out = cs.convert_gamut(np.zeros(3), cs.BT709_TO_BT2020)
        assert np.all(out == 0.0)

    def test_matches_independent_derivation(self):
        derived = np.array(oracles.derive_rgb_to_rgb(
            oracles.BT709_PRIMARIES, oracles.BT2020_PRIMARIES,
            oracles.D65_WHITE))
        assert np.max(np.abs(derived - cs.BT709_TO_BT2020)) <= 1e-9

    def test_pure_709_red(self):
        red = cs.convert_gamut(np.array([1.0, 0.0, 0.0]), cs.BT709_TO_BT2020)
        assert np.all(red > 0.0) and np.all(red < 1.0)
        assert red[0] == max(red)

    def test_round_trip_random_triples(self):
        rng = np.random.default_rng(7)
        rgb = rng.random((10_000, 3))
        back = cs.convert_gamut(cs.convert_gamut(rgb, cs.BT709_TO_BT2020),
                                cs.BT2020_TO_BT709)
        assert np.max(np.abs(back - rgb)) <= 1e-5

    def test_planar_layout(self):
        rng = np.random.default_rng(8)
        planes = rng.random((3, 6, 5))
        out = cs.convert_gamut(planes, cs.BT709_TO_BT2020)
        flat = cs.convert_gamut(planes.reshape(3, -1).T, cs.BT709_TO_BT2020)
        assert np.allclose(out.reshape(3, -1).T, flat, atol=1e-12)
