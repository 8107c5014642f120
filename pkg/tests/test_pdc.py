import numpy as np
import pytest

from tmsim import (
    BasisMismatchError,
    ChirpPhase,
    CoverageError,
    HermiteGaussParams,
    InvalidArgumentError,
    JointSpectralAmplitude,
    PhasematchingModel,
    apply_chirp,
    background_mixed_g2,
    build_jsa,
    chirp_purity_analytic,
    convert_bandwidth,
    fit_basis_width,
    g2_from_purity,
    hg_mode,
    jsi_marginal_sigmas,
    make_grid,
    matched_phasematching_width,
    mean_photon_from_g11,
    mode_overlap_matrix,
    purity_from_schmidt,
    reduced_density_matrix,
    schmidt_decompose,
    schmidt_weights,
)

# decorrelated-source parameters: 1.72 nm pump at 769 nm
PUMP_SIGMA = np.sqrt(2.0) * convert_bandwidth(769.0, 1.72).sigma_omega
PM_WIDTH = matched_phasematching_width(PUMP_SIGMA)


def gaussian_jsa(pump_order=0, pump_sigma=PUMP_SIGMA, pm_width=PM_WIDTH,
                 angle=45.0, chirp=0.0, count=320, pump_count=8192):
    """Source model sized so Hermite-Gauss bases up to order 6 fit."""
    marginal_sigma = pump_sigma / np.sqrt(2.0)
    half_span = max(6.0 * marginal_sigma, 10.7 * PM_WIDTH)
    signal_grid = make_grid(1.223, 2.0 * half_span, count)
    idler_grid = make_grid(1.220, 2.0 * half_span, count)
    pump_center = signal_grid.center + idler_grid.center
    pump_grid = make_grid(pump_center,
                          (signal_grid.span + idler_grid.span) * 1.02, pump_count)
    pump = hg_mode(HermiteGaussParams(order=pump_order, center=pump_center,
                                      width=pump_sigma), pump_grid)
    if chirp:
        pump = apply_chirp(pump, ChirpPhase(coefficient=chirp, center=pump_center))
    pm = PhasematchingModel(angle_deg=angle, width=pm_width)
    return build_jsa(pump, pm, signal_grid, idler_grid)


def product_jsa(count=64):
    """Exactly separable (rank-one) joint amplitude."""
    signal_grid = make_grid(0.0, 14.0, count)
    idler_grid = make_grid(0.0, 16.0, count)
    a = hg_mode(HermiteGaussParams(order=0, center=0.0, width=1.0), signal_grid)
    b = hg_mode(HermiteGaussParams(order=1, center=0.0, width=1.2), idler_grid)
    values = np.outer(a.amplitudes, b.amplitudes)
    return JointSpectralAmplitude(signal_grid, idler_grid, values)


class TestBuildJsa:
    def test_matched_widths_give_separable_state(self):
        weights = schmidt_weights(gaussian_jsa())
        assert np.sum(weights**2) > 0.99

    def test_odd_pump_gives_two_dominant_modes(self):
        weights = schmidt_weights(gaussian_jsa(pump_order=1))
        assert weights[0] + weights[1] > 0.99
        assert weights[1] > 0.4

    def test_narrowband_pump_anticorrelated_and_mixed(self):
        narrow_sigma = np.sqrt(2.0) * convert_bandwidth(769.0, 0.54).sigma_omega
        jsa = gaussian_jsa(pump_sigma=narrow_sigma)
        weights = schmidt_weights(jsa)
        assert np.sum(weights**2) < 0.7
        # intensity covariance between signal and idler detunings is negative
        intensity = jsa.intensity()
        intensity = intensity / intensity.sum()
        ws = jsa.signal_grid.points - jsa.signal_grid.center
        wi = jsa.idler_grid.points - jsa.idler_grid.center
        cov = np.sum(intensity * np.outer(ws, wi))
        assert cov < 0

    def test_insufficient_pump_coverage(self):
        signal_grid = make_grid(1.223, 0.02, 64)
        idler_grid = make_grid(1.220, 0.02, 64)
        pump_grid = make_grid(2.443, 0.01, 64)  # narrower than the sum range
        with pytest.warns(UserWarning):  # pump truncated on its own grid too
            pump = hg_mode(HermiteGaussParams(order=0, center=2.443, width=0.003),
                           pump_grid)
        with pytest.raises(CoverageError, match="sum-frequency"):
            build_jsa(pump, PhasematchingModel(45.0, 0.002), signal_grid, idler_grid)

    def test_normalization(self):
        jsa = gaussian_jsa(count=128)
        total = np.sum(np.abs(jsa.amplitudes) ** 2) * jsa.cell_area
        assert abs(total - 1.0) < 1e-10

    def test_sinc_shape_close_to_gaussian_at_matched_width(self):
        marginal = PUMP_SIGMA / np.sqrt(2.0)
        signal_grid = make_grid(1.223, 12 * marginal, 128)
        idler_grid = make_grid(1.220, 12 * marginal, 128)
        pump_grid = make_grid(2.443, (signal_grid.span + idler_grid.span) * 1.02, 4096)
        pump = hg_mode(HermiteGaussParams(order=0, center=2.443, width=PUMP_SIGMA),
                       pump_grid)
        sinc = build_jsa(pump, PhasematchingModel(45.0, PM_WIDTH, shape="sinc"),
                         signal_grid, idler_grid)
        gauss = build_jsa(pump, PhasematchingModel(45.0, PM_WIDTH, shape="gaussian"),
                          signal_grid, idler_grid)
        overlap = abs(np.sum(np.conj(sinc.amplitudes) * gauss.amplitudes)
                      * sinc.cell_area)
        assert overlap > 0.9


class TestSchmidtDecompose:
    def test_rank_one_input(self):
        dec = schmidt_decompose(product_jsa(), max_modes=5)
        assert abs(dec.weights[0] - 1.0) < 1e-8
        assert np.all(dec.weights[1:] < 1e-8)

    def test_odd_pump_weights_balanced(self):
        dec = schmidt_decompose(gaussian_jsa(pump_order=1), max_modes=4)
        assert abs(dec.weights[0] - 0.5) < 1e-3
        assert abs(dec.weights[1] - 0.5) < 1e-3

    def test_chirped_matches_analytic(self):
        chirp = 0.38e6
        jsa = gaussian_jsa(chirp=chirp)
        svd_purity = float(np.sum(schmidt_weights(jsa)**2))
        sigma_s, sigma_i = jsi_marginal_sigmas(jsa)
        assert abs(svd_purity - chirp_purity_analytic(chirp, sigma_s, sigma_i)) < 1e-3

    def test_modes_orthonormal(self):
        dec = schmidt_decompose(gaussian_jsa(pump_order=1, count=128), max_modes=6)
        for modes in (dec.signal_modes, dec.idler_modes):
            for i, a in enumerate(modes):
                for j, b in enumerate(modes):
                    expected = 1.0 if i == j else 0.0
                    got = np.sum(np.conj(a.amplitudes) * b.amplitudes) * a.grid.spacing
                    assert abs(got - expected) < 1e-6

    def test_reconstruction_consistency(self):
        jsa = gaussian_jsa(pump_order=1, count=128)
        dec = schmidt_decompose(jsa, max_modes=40)
        assert dec.residual_weight < 1e-8
        rebuilt = np.zeros_like(jsa.amplitudes)
        for w, psi, phi in zip(dec.weights, dec.signal_modes, dec.idler_modes):
            rebuilt += np.sqrt(w) * np.outer(psi.amplitudes, phi.amplitudes)
        err = np.sqrt(np.sum(np.abs(jsa.amplitudes - rebuilt) ** 2) * jsa.cell_area)
        assert err < 1e-6

    def test_truncation_reports_residual(self):
        narrow_sigma = np.sqrt(2.0) * convert_bandwidth(769.0, 0.54).sigma_omega
        dec = schmidt_decompose(gaussian_jsa(pump_sigma=narrow_sigma), max_modes=2)
        assert dec.residual_weight > 1e-3
        assert abs(dec.weights.sum() - 1.0) < 1e-12


class TestPurityAndG2:
    def test_purity_trivials(self):
        assert purity_from_schmidt(_dec([1.0])) == pytest.approx(1.0)
        assert purity_from_schmidt(_dec([0.5, 0.5])) == pytest.approx(0.5)
        assert purity_from_schmidt(_dec([0.8, 0.2])) == pytest.approx(0.68)

    def test_g2_values(self):
        assert g2_from_purity(1.0) == 2.0
        assert g2_from_purity(0.5) == 1.5
        assert g2_from_purity(0.929) == pytest.approx(1.929)

    def test_g2_range_check(self):
        with pytest.raises(InvalidArgumentError):
            g2_from_purity(1.5)
        with pytest.raises(InvalidArgumentError):
            g2_from_purity(-0.1)


def _dec(weights):
    """Minimal decomposition carrying only weights (modes unused)."""
    grid = make_grid(0.0, 16.0, 64)
    modes = [hg_mode(HermiteGaussParams(order=k, center=0.0, width=1.0), grid)
             for k in range(len(weights))]
    from tmsim import SchmidtDecomposition
    return SchmidtDecomposition(weights=np.array(sorted(weights, reverse=True),
                                                 dtype=float),
                                signal_modes=modes, idler_modes=modes)


class TestReducedDensityMatrix:
    def test_matched_state_is_basis_aligned(self):
        dec = schmidt_decompose(gaussian_jsa(), max_modes=10)
        width = fit_basis_width(dec)
        basis = HermiteGaussParams(order=0, center=1.223, width=width)
        rho = reduced_density_matrix(dec, basis, 7)
        assert abs(rho.entries[0, 0].real - 1.0) < 1e-3
        assert rho.leakage < 1e-3

    def test_odd_pump_occupies_first_two_modes(self):
        dec = schmidt_decompose(gaussian_jsa(pump_order=1), max_modes=10)
        # the matched-state basis width also diagonalizes the odd-pump state
        basis = HermiteGaussParams(order=0, center=1.223,
                                   width=PUMP_SIGMA / np.sqrt(2.0))
        rho = reduced_density_matrix(dec, basis, 7)
        diag = np.diag(rho.entries).real
        assert abs(diag[0] - 0.5) < 5e-3
        assert abs(diag[1] - 0.5) < 5e-3

    def test_purity_consistent_with_weights(self):
        # basis fitted to this state's own dominant mode, so the first
        # seven modes capture essentially all of the mixture
        narrow_sigma = np.sqrt(2.0) * convert_bandwidth(769.0, 0.54).sigma_omega
        jsa = gaussian_jsa(pump_sigma=narrow_sigma)
        dec = schmidt_decompose(jsa, max_modes=20)
        basis = HermiteGaussParams(order=0, center=1.223,
                                   width=fit_basis_width(dec))
        rho = reduced_density_matrix(dec, basis, 7)
        assert abs(rho.purity() - purity_from_schmidt(dec)) < 1e-3

    def test_badly_mismatched_basis_raises(self):
        dec = schmidt_decompose(gaussian_jsa(), max_modes=5)
        tiny = HermiteGaussParams(order=0, center=1.223,
                                  width=PUMP_SIGMA / np.sqrt(2.0) / 40.0)
        with pytest.raises(BasisMismatchError):
            reduced_density_matrix(dec, tiny, 2)

    def test_moderately_mismatched_basis_warns(self):
        # width ratio 3 captures ~60% of a Gaussian, inside the warning band
        dec = schmidt_decompose(gaussian_jsa(), max_modes=5)
        offset = HermiteGaussParams(order=0, center=1.223,
                                    width=PUMP_SIGMA / np.sqrt(2.0) / 3.0)
        with pytest.warns(UserWarning, match="leakage"):
            reduced_density_matrix(dec, offset, 2)

    def test_overlap_matrix_shape(self):
        dec = schmidt_decompose(gaussian_jsa(count=128), max_modes=4)
        basis = HermiteGaussParams(order=0, center=1.223,
                                   width=PUMP_SIGMA / np.sqrt(2.0))
        coeffs = mode_overlap_matrix(dec, basis, 5)
        assert coeffs.shape == (4, 5)


class TestFitBasisWidth:
    def test_recovers_matched_mode_width(self):
        dec = schmidt_decompose(gaussian_jsa(), max_modes=1)
        width = fit_basis_width(dec)
        assert width == pytest.approx(PUMP_SIGMA / np.sqrt(2.0), rel=1e-4)


class TestChirpPurityAnalytic:
    def test_unchirped(self):
        assert chirp_purity_analytic(0.0, 1.0, 2.0) == 1.0

    def test_algebraic_point(self):
        # 16 A^2 s_s^2 s_i^2 = 3  ->  purity 1/2
        sigma = 1.0
        chirp = np.sqrt(3.0 / 16.0)
        assert chirp_purity_analytic(chirp, sigma, sigma) == pytest.approx(0.5)

    def test_measured_marginals_bracket_reported_purity(self):
        # signal 4.9 nm at 1540 nm, idler 3.6 nm at the energy-conserving partner
        sigma_s = convert_bandwidth(1540.0, 4.9).sigma_omega
        idler_nm = 1.0 / (1.0 / 769.0 - 1.0 / 1540.0)
        sigma_i = convert_bandwidth(idler_nm, 3.6).sigma_omega
        purity = chirp_purity_analytic(0.38e6, sigma_s, sigma_i)
        assert 0.30 < purity < 0.38


class TestPhotonNumberInference:
    def test_reported_values(self):
        mean_n = mean_photon_from_g11(8.303, 1.929)
        assert 0.15 < mean_n < 0.16

    def test_inversion_identity(self):
        for n in (0.1, 0.5, 2.0):
            assert mean_photon_from_g11(2.0 + 1.0 / n, 2.0) == pytest.approx(n)

    def test_unphysical_rejected(self):
        with pytest.raises(InvalidArgumentError):
            mean_photon_from_g11(1.5, 2.0)


class TestBackgroundMixedG2:
    def test_no_background(self):
        assert background_mixed_g2(1.7, 100.0, 0.0) == pytest.approx(1.7)

    def test_poisson_plus_poisson(self):
        for split in (0.1, 0.5, 0.9):
            assert background_mixed_g2(1.0, split, 1 - split) == pytest.approx(1.0)

    def test_both_zero_rejected(self):
        with pytest.raises(InvalidArgumentError):
            background_mixed_g2(2.0, 0.0, 0.0)

    def test_four_percent_background_value(self):
        assert background_mixed_g2(2.0, 0.96, 0.04) == pytest.approx(1.9216)

    def test_against_photon_count_simulation(self):
        # oracle: thermal signal (g2 = 2) merged with Poisson background
        rng = np.random.default_rng(1234)
        pulses = 4_000_000
        mean_signal, mean_background = 0.48, 0.02
        signal = rng.geometric(1.0 / (1.0 + mean_signal), size=pulses) - 1
        background = rng.poisson(mean_background, size=pulses)
        n = signal + background
        g2_mc = np.mean(n * (n - 1.0)) / np.mean(n) ** 2
        g2_model = background_mixed_g2(2.0, mean_signal, mean_background)
        assert g2_model < 2.0
        assert abs(g2_mc - g2_model) < 0.01


class TestInvariants:
    def test_purity_monotone_in_chirp(self):
        chirps = [0.0, 1e5, 2e5, 4e5, 8e5]
        purities = [float(np.sum(schmidt_weights(gaussian_jsa(chirp=a, count=192))**2))
                    for a in chirps]
        assert all(p1 >= p2 - 1e-9 for p1, p2 in zip(purities, purities[1:]))

    def test_jsi_blind_to_chirp(self):
        flat = gaussian_jsa(count=128)
        chirped = gaussian_jsa(chirp=0.38e6, count=128)
        peak = flat.intensity().max()
        np.testing.assert_allclose(chirped.intensity(), flat.intensity(),
                                   atol=1e-12 * peak)

    def test_g2_bounds(self):
        for jsa in (gaussian_jsa(count=128), gaussian_jsa(pump_order=1, count=128)):
            g2 = g2_from_purity(float(np.sum(schmidt_weights(jsa)**2)))
            assert 1.0 <= g2 <= 2.0
