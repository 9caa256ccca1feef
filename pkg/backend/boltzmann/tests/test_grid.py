import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from boltzmann.spectral.exceptions import ContractError, NumericalError
from boltzmann.spectral.grid import (
    BOX_RATIO,
    ModeIndex,
    SpectralField,
    VelocityGrid,
    analyze,
    band_positions,
    embed_modes,
    hermitian_part,
    reflect_modes,
    restrict_modes,
    spectral_convolve,
    synthesize,
)


def gaussian_values(grid, sigma=1.0):
    return np.exp(-grid.speed_squared / (2 * sigma**2)) / (2 * np.pi * sigma**2) ** (grid.d / 2)


class VelocityGridTest(SimpleTestCase):
    def test_box_and_support(self):
        grid = VelocityGrid(d=2, N=16, S=3.0)
        self.assertAlmostEqual(grid.T, (3 + math.sqrt(2)) / 2 * 3.0)
        self.assertAlmostEqual(grid.T, BOX_RATIO * grid.S)
        self.assertEqual(grid.R, 6.0)
        self.assertEqual(grid.shape, (16, 16))
        self.assertAlmostEqual(grid.spacing * grid.N, 2 * grid.T)
        self.assertAlmostEqual(grid.nodes_1d[0], -grid.T)

    def test_rejects_invalid_grids(self):
        with self.assertRaises(ContractError):
            VelocityGrid(d=2, N=15, S=3.0)
        with self.assertRaises(ContractError):
            VelocityGrid(d=4, N=16, S=3.0)
        with self.assertRaises(ContractError):
            VelocityGrid(d=3, N=16, S=0.0)

    def test_modes_are_fft_ordered(self):
        grid = VelocityGrid(d=2, N=8, S=1.0)
        assert_array_equal(grid.modes_1d, [0, 1, 2, 3, -4, -3, -2, -1])

    def test_mode_index_positions(self):
        mode = ModeIndex((-1, 3))
        self.assertEqual(mode.position(8), (7, 3))
        self.assertEqual(ModeIndex.from_flat(mode.flat(8), 8, 2), mode)
        with self.assertRaises(ContractError):
            ModeIndex((4, 0)).position(8)


class TransformTest(SimpleTestCase):
    def setUp(self):
        self.grid = VelocityGrid(d=2, N=32, S=3.0)
        self.values = gaussian_values(self.grid)

    def test_analyze_then_synthesize_recovers_nodal_values(self):
        field = analyze(self.values, self.grid)
        assert_allclose(synthesize(field), self.values, atol=1e-14)

    def test_mass_is_dc_mode_times_volume(self):
        field = analyze(self.values, self.grid)
        self.assertAlmostEqual(field.mass, np.sum(self.values) * self.grid.cell_volume, places=12)
        self.assertAlmostEqual(field.mass, 1.0, places=8)

    def test_parseval(self):
        field = analyze(self.values, self.grid)
        physical = math.sqrt(np.sum(self.values**2) * self.grid.cell_volume)
        self.assertAlmostEqual(field.norm(), physical, places=12)

    def test_synthesize_rejects_complex_fields(self):
        coeffs = np.zeros(self.grid.shape, dtype=complex)
        coeffs[1, 0] = 1.0
        with self.assertRaises(NumericalError):
            synthesize(SpectralField(self.grid, coeffs))

    def test_hermitian_part_is_real_in_physical_space(self):
        rng = np.random.default_rng(3)
        coeffs = rng.standard_normal(self.grid.shape) + 1j * rng.standard_normal(self.grid.shape)
        field = SpectralField(self.grid, hermitian_part(coeffs, 2))
        synthesize(field)

    def test_field_shape_must_match_grid(self):
        with self.assertRaises(ContractError):
            SpectralField(self.grid, np.zeros((16, 16)))
        with self.assertRaises(ContractError):
            analyze(np.zeros(10), self.grid)


class ModeBandTest(SimpleTestCase):
    def test_band_positions(self):
        assert_array_equal(band_positions(2, 8), [0, 1, 6, 7])
        with self.assertRaises(ContractError):
            band_positions(5, 8)

    def test_embed_then_restrict_is_identity(self):
        rng = np.random.default_rng(0)
        block = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
        embedded = embed_modes(block, 16, 2)
        self.assertEqual(embedded.shape, (3, 16, 16))
        assert_array_equal(restrict_modes(embedded, 2, 2), block)
        self.assertEqual(np.count_nonzero(embedded), np.count_nonzero(block))

    def test_reflect_maps_k_to_minus_k(self):
        grid = VelocityGrid(d=2, N=8, S=1.0)
        reflected = reflect_modes(grid.modes[0], 2)
        assert_array_equal(reflected % 8, (-grid.modes[0]) % 8)
        x = np.arange(64.0).reshape(8, 8)
        assert_array_equal(reflect_modes(reflect_modes(x, 2), 2), x)


class ConvolutionTest(SimpleTestCase):
    def test_matches_cyclic_double_sum(self):
        N = 4
        rng = np.random.default_rng(1)
        a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        b = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        expected = np.zeros((N, N), dtype=complex)
        for l1 in range(N):
            for l2 in range(N):
                for m1 in range(N):
                    for m2 in range(N):
                        expected[(l1 + m1) % N, (l2 + m2) % N] += a[l1, l2] * b[m1, m2]
        assert_allclose(spectral_convolve(a, b), expected, atol=1e-12)

    def test_batches_broadcast(self):
        grid = VelocityGrid(d=2, N=8, S=1.0)
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 8, 8)) + 0j
        b = rng.standard_normal((5, 8, 8)) + 0j
        batched = spectral_convolve(a, b, grid)
        assert_allclose(batched[3], spectral_convolve(a[3], b[3], grid), atol=1e-12)
