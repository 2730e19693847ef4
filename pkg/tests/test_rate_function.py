import math
import numpy as np
import pytest
from phi4.spectral_core import SpectralField, TorusGrid, Trajectory
from phi4.noise_process import NoiseStream, stationary_field
from phi4.rate_function import (
    endpoint_rate, level_set_modulus, linear_path, modulus_sweep,
    rate_functional, refine_linear, sample_level_set
)

GRID = TorusGrid(8)


def random_field(seed: int) -> SpectralField:
    f = stationary_field(NoiseStream(seed), GRID)
    return f.with_coeffs(f.coeffs[0])


def test_constant_path_has_zero_rate():
    z0 = random_field(1)
    g = Trajectory(np.linspace(0, 1, 11), np.tile(z0.coeffs, (11, 1)), GRID)

    result = rate_functional(g, z0)
    assert result.admissible
    assert result.value == 0.0


def test_linear_paths_attain_the_endpoint_rate():
    rng = np.random.Generator(np.random.Philox(3))
    for trial in range(100):
        z0, y = random_field(2 * trial), random_field(2 * trial + 1)
        T = float(rng.uniform(0.1, 5.0))
        g = linear_path(z0, y, T, 7)

        expected = endpoint_rate(z0, y, T)
        assert rate_functional(g, z0).value == \
            pytest.approx(expected, rel=1e-10)


def test_unit_displacement_reference_value():
    z0 = SpectralField.zeros(GRID)
    y = SpectralField.from_amplitudes(GRID, np.eye(8)[0], np.zeros(8))
    assert endpoint_rate(z0, y, 1.0) == pytest.approx(0.5)
    assert endpoint_rate(z0, y, 2.0) == pytest.approx(0.25)
    assert endpoint_rate(z0, z0, 1.0) == 0.0
    with pytest.raises(ValueError):
        endpoint_rate(z0, y, 0.0)


def test_wrong_start_is_not_admissible():
    z0, y = random_field(5), random_field(6)
    g = linear_path(y, z0, 1.0, 4)

    result = rate_functional(g, z0)
    assert not result.admissible
    assert math.isinf(result.value)


def test_single_sample_is_rejected():
    z0 = random_field(7)
    g = Trajectory([0.0], z0.coeffs[np.newaxis], GRID)
    with pytest.raises(ValueError):
        rate_functional(g, z0)


def test_quadratic_scaling():
    z0 = random_field(8)
    paths = sample_level_set(z0, 1.3, 1.0, 12, NoiseStream(9))
    g = paths[0]
    base = rate_functional(g, z0).value

    for c in (0.5, 2.0, 3.7):
        scaled = Trajectory(g.times, z0.coeffs + c * (g.coeffs - z0.coeffs),
                            GRID)
        assert rate_functional(scaled, z0).value == \
            pytest.approx(c ** 2 * base, rel=1e-12)


def test_refinement_does_not_increase_the_rate():
    z0 = random_field(10)
    g = sample_level_set(z0, 2.0, 1.0, 9, NoiseStream(11))[0]

    base = rate_functional(g, z0).value
    refined = rate_functional(refine_linear(g, 4), z0).value
    assert refined <= base * (1 + 1e-12)
    assert refined == pytest.approx(base, rel=1e-10)


def test_time_change_is_penalized():
    z0 = SpectralField.zeros(GRID)
    y = random_field(12)
    g = linear_path(z0, y, 1.0, 10)
    base = rate_functional(g, z0).value

    rng = np.random.Generator(np.random.Philox(13))
    for _ in range(20):
        times = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, 9)), [1.0]])
        warped = Trajectory(times, g.coeffs, GRID)
        assert rate_functional(warped, z0).value > base


def test_batched_paths():
    z0 = SpectralField.zeros(GRID)
    paths = sample_level_set(z0, 0.7, 1.0, 6, NoiseStream(14, count=3))
    coeffs = np.stack([p.coeffs for p in paths], axis=1)
    batch = Trajectory(paths[0].times, coeffs, GRID)

    result = rate_functional(batch, z0)
    np.testing.assert_allclose(result.value, 0.7, rtol=1e-12)
    assert np.all(result.admissible)


def test_level_set_paths_have_the_requested_rate():
    z0 = random_field(15)
    for r in (0.5, 1.0, 2.0, 4.0):
        for g in sample_level_set(z0, r, 2.0, 10, NoiseStream(16, count=4)):
            assert rate_functional(g, z0).value == pytest.approx(r)


def test_modulus_of_constant_paths_is_zero():
    z0 = random_field(17)
    g = Trajectory(np.linspace(0, 1, 5), np.tile(z0.coeffs, (5, 1)), GRID)
    report = level_set_modulus([g], 1.0)
    assert report["max_ratio"] == 0.0
    assert report["endpoint_radius"] == 0.0


def test_modulus_of_linear_paths_scales_exactly():
    z0 = SpectralField.zeros(GRID)
    ratios = []
    for r in (0.5, 1.0, 2.0, 4.0):
        paths = sample_level_set(z0, r, 1.0, 8, NoiseStream(18, count=3),
                                 linear=True)
        ratios.append(level_set_modulus(paths, r)["max_ratio"])
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-9)


def test_modulus_is_uniform_across_levels():
    z0 = SpectralField.zeros(GRID)
    levels = {r: sample_level_set(z0, r, 1.0, 16, NoiseStream(19, count=8))
              for r in (0.5, 1.0, 2.0, 4.0)}

    sweep = modulus_sweep(levels)
    assert sweep.value <= 2.0
    assert set(sweep.modulus_report) == set(levels)


def test_level_set_endpoints_lie_in_a_ball():
    z0 = random_field(20)
    for r in (0.5, 4.0):
        paths = sample_level_set(z0, r, 1.5, 12, NoiseStream(21, count=8))
        assert level_set_modulus(paths, r)["endpoint_radius"] <= 1 + 1e-12


def test_modulus_rejects_bad_input():
    z0 = SpectralField.zeros(GRID)
    with pytest.raises(ValueError):
        level_set_modulus([], 1.0)

    g = sample_level_set(z0, 2.0, 1.0, 4, NoiseStream(22))[0]
    with pytest.raises(ValueError):
        level_set_modulus([g], 1.0)
