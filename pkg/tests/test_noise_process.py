import math
import numpy as np
import pytest
import scipy.stats
from scipy.special import gammaln
from phi4.spectral_core import SpectralField, TorusGrid
from phi4.noise_process import (
    NoiseStream, brownian_path, ou_coefficients, philox_normals,
    stationary_field, stochastic_convolution, wiener_increment
)
from phi4.sde_solvers import SolverConfig, solve_linear, solve_phi4_direct
from phi4.estimators import moment_profile


def test_draws_do_not_depend_on_chunking():
    whole = philox_normals(7, 3, 0, 10, 5)
    parts = np.concatenate([philox_normals(7, 3, 0, 4, 5),
                            philox_normals(7, 3, 4, 6, 5)])
    np.testing.assert_array_equal(whole, parts)

    stream = NoiseStream(7, count=10)
    np.testing.assert_array_equal(stream.chunk(4, 6).normals(2, 5),
                                  stream.normals(2, 5)[4:])


def test_draws_differ_between_keys():
    a = philox_normals(1, 0, 0, 4, 3)
    assert not np.array_equal(a, philox_normals(2, 0, 0, 4, 3))
    assert not np.array_equal(a, philox_normals(1, 1, 0, 4, 3))


def test_normals_are_standard():
    z = philox_normals(0, 0, 0, 20000, 4).ravel()
    assert abs(np.mean(z)) < 4 / math.sqrt(z.size)
    assert np.var(z) == pytest.approx(1.0, abs=4 * math.sqrt(2 / z.size))


def test_refined_stream_sums_fine_draws():
    fine = NoiseStream(5, count=3).normals(4, 2)
    coarse = NoiseStream(5, count=3).refined(2).normals(2, 2)
    expected = (fine[:, 0::2] + fine[:, 1::2]) / math.sqrt(2.0)
    np.testing.assert_allclose(coarse, expected, atol=1e-14)


def test_refined_convolution_agrees_with_fine_steps():
    grid = TorusGrid(8)
    stream = NoiseStream(9, count=6)
    coarse = stochastic_convolution(stream.refined(4), 0.2, 1.0, 5, grid)
    fine = stochastic_convolution(stream, 0.2, 1.0, 20, grid)

    np.testing.assert_allclose(coarse.times, fine.times[::4])
    np.testing.assert_allclose(coarse.coeffs, fine.coeffs[::4],
                               rtol=1e-10, atol=1e-13)


def test_refined_brownian_path_agrees_with_fine_steps():
    grid = TorusGrid(3)
    stream = NoiseStream(4, count=5)
    coarse = brownian_path(stream.refined(3), 0.5, 1.0, 4, grid)
    fine = brownian_path(stream, 0.5, 1.0, 12, grid)
    np.testing.assert_allclose(coarse.coeffs, fine.coeffs[::3], atol=1e-13)


def test_weights_must_match_the_refinement():
    with pytest.raises(ValueError):
        NoiseStream(0).refined(2).weighted_normals(3, 4, np.ones((1, 4)))


def test_stream_validation_and_muting():
    with pytest.raises(ValueError):
        NoiseStream(-1)
    with pytest.raises(ValueError):
        NoiseStream(0, count=0)
    with pytest.raises(ValueError):
        NoiseStream(0, count=3).chunk(2, 2)

    muted = NoiseStream(0, count=2, muted=True)
    assert np.all(muted.normals(3, 4) == 0.0)


def test_wiener_increment_variance():
    grid = TorusGrid(3)
    dW = wiener_increment(NoiseStream(1, count=20000), 0.5, grid)
    cos_amp, sin_amp = dW.amplitudes()

    assert dW.coeffs[0, 0] == 0.0
    for amp in (cos_amp, sin_amp):
        np.testing.assert_allclose(np.var(amp, axis=0), 0.5, rtol=0.05)

    with pytest.raises(ValueError):
        wiener_increment(NoiseStream(1), 0.0, grid)


def test_ou_variance_reference_value():
    _, std = ou_coefficients(TorusGrid(1), 0.1, 1.0)
    assert std[0] ** 2 == pytest.approx(0.04362, rel=1e-3)


def test_ou_variance_saturates_at_stationary_value():
    grid = TorusGrid(4)
    _, std = ou_coefficients(grid, 1.0, 100.0)
    np.testing.assert_allclose(std ** 2, 1.0 / (2 * grid.eigenvalues[1:]))


def test_stochastic_convolution_matches_ou_variance():
    grid = TorusGrid(8)
    eps, T = 0.1, 1.0
    Z = stochastic_convolution(NoiseStream(21, count=20000), eps, T, 10, grid)

    assert np.all(Z.coeffs[0] == 0.0)
    _, std = ou_coefficients(grid, eps, T)
    cos_amp, sin_amp = Z.state(-1).amplitudes()
    pooled = np.concatenate([cos_amp, sin_amp])

    # 4 standard errors of a variance estimate from 40000 samples
    np.testing.assert_allclose(np.var(pooled, axis=0), std ** 2,
                               rtol=4 * math.sqrt(2 / 40000))


def test_modes_are_uncorrelated():
    grid = TorusGrid(8)
    Z = stochastic_convolution(NoiseStream(41, count=200_000), 0.1, 0.5, 1,
                               grid)
    cos_amp, sin_amp = Z.state(-1).amplitudes()
    amplitudes = np.concatenate([cos_amp, sin_amp], axis=1)

    corr = np.corrcoef(amplitudes, rowvar=False)
    off_diagonal = corr[~np.eye(corr.shape[0], dtype=bool)]
    assert np.max(np.abs(off_diagonal)) < 0.01


def test_mode_marginals_are_gaussian():
    grid = TorusGrid(8)
    eps, T = 0.1, 0.5
    Z = stochastic_convolution(NoiseStream(43, count=100_000), eps, T, 1,
                               grid)
    _, std = ou_coefficients(grid, eps, T)
    cos_amp, sin_amp = Z.state(-1).amplitudes()

    for amp in (cos_amp, sin_amp):
        for k in range(grid.n_modes):
            result = scipy.stats.kstest(amp[:, k] / std[k], "norm")
            assert result.pvalue > 1e-4


def gaussian_abs_moment(p: float) -> float:
    """(E|X|^p)^{1/p} of a standard normal."""
    log_m = 0.5 * p * math.log(2.0) + gammaln(0.5 * (p + 1)) - \
        0.5 * math.log(math.pi)
    return math.exp(log_m / p)


def test_moment_growth_is_gaussian():
    grid = TorusGrid(1)
    eps, T = 0.1, 1.0
    Z = stochastic_convolution(NoiseStream(47, count=1_000_000), eps, T, 1,
                               grid)
    _, std = ou_coefficients(grid, eps, T)
    cos_amp, _ = Z.state(-1).amplitudes()

    ps = (2, 4, 8, 16)
    moments, _ = moment_profile(cos_amp[:, 0] / std[0], ps)
    for p, m in zip(ps, moments):
        assert m == pytest.approx(gaussian_abs_moment(p), rel=0.05)

    normalised = moments / np.sqrt(ps)
    assert np.max(normalised) / np.min(normalised) < 1.2


def test_stochastic_convolution_needs_positive_eps():
    with pytest.raises(ValueError):
        stochastic_convolution(NoiseStream(0), 0.0, 1.0, 4, TorusGrid(2))


def test_brownian_path_shares_draws_with_convolution():
    grid = TorusGrid(4)
    stream = NoiseStream(2, count=5)
    x = brownian_path(stream, 0.2, 1.0, 8, grid)
    Z = stochastic_convolution(stream, 0.2, 1.0, 8, grid)

    # One step: OU increment and Brownian increment differ only by scale
    _, std = ou_coefficients(grid, 0.2, 1.0 / 8)
    ratio = Z.coeffs[1][:, 1:] / x.coeffs[1][:, 1:]
    np.testing.assert_allclose(ratio, std / math.sqrt(0.2 / 8), rtol=1e-12)


def test_brownian_path_starts_at_z0():
    grid = TorusGrid(3)
    z0 = SpectralField.from_modes(grid, {1: 0.5})
    x = brownian_path(NoiseStream(0, count=2), 0.3, 1.0, 4, grid, z0=z0)
    np.testing.assert_allclose(x.coeffs[0], np.tile(z0.coeffs, (2, 1)))


def test_stationary_field_variance():
    grid = TorusGrid(4)
    f = stationary_field(NoiseStream(8, count=20000), grid)
    cos_amp, _ = f.amplitudes()
    np.testing.assert_allclose(np.var(cos_amp, axis=0),
                               1.0 / (2 * grid.eigenvalues[1:]),
                               rtol=4 * math.sqrt(2 / 20000))


@pytest.mark.slow
def test_linear_solution_matches_ou_variance_at_scale():
    grid = TorusGrid(8)
    eps = 0.1
    cfg = SolverConfig(eps, 1.0, 10, grid)
    u0 = SpectralField.zeros(grid)
    Z = solve_linear(u0, cfg, NoiseStream(31, count=100_000))

    _, std = ou_coefficients(grid, eps, 1.0)
    cos_amp, sin_amp = Z.state(-1).amplitudes()
    pooled = np.concatenate([cos_amp, sin_amp])
    np.testing.assert_allclose(np.var(pooled, axis=0), std ** 2, rtol=0.01)


@pytest.mark.slow
def test_linear_solution_matches_fine_euler_oracle():
    grid = TorusGrid(8)
    eps, T, steps, refine = 0.1, 0.4, 4, 1000
    count = 500
    u0 = SpectralField.zeros(grid)

    coarse_cfg = SolverConfig(eps, T, steps, grid)
    fine_cfg = SolverConfig(eps, T, steps * refine, grid,
                            scheme="semi-implicit")

    stream = NoiseStream(17, count=count)
    exact = solve_linear(u0, coarse_cfg, stream.refined(refine))
    oracle = solve_phi4_direct(u0, fine_cfg, stream, cubic=False)

    a, _ = exact.state(-1).amplitudes()
    b, _ = oracle.state(-1).amplitudes()
    np.testing.assert_allclose(np.var(a, axis=0), np.var(b, axis=0),
                               rtol=0.005)
