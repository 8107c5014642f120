"""Photon-pair model: joint spectral amplitudes from pump and phasematching,
their Schmidt decomposition, reduced modal density matrices and the photon
statistics derived from them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BasisMismatchError,
    BasisMismatchWarning,
    CoverageError,
    InvalidArgumentError,
)
from .spectral import (
    ComplexSpectrum,
    FrequencyGrid,
    HermiteGaussParams,
    hg_mode,
    inner_product,
)

_PM_SHAPES = ("gaussian", "sinc")

#: solves sinc(x)^2 = 1/2; pins the sinc width to the Gaussian -3 dB point
_SINC_HALF_POWER_ARG = 1.3915573777836395
_GAUSS_HALF_POWER_ARG = float(np.sqrt(np.log(2.0)))


@dataclass(frozen=True)
class PhasematchingModel:
    """Phasematching ridge in the (w_s, w_i) plane.

    `angle_deg` is the orientation of the ridge measured from the signal
    axis (the ridge line has slope tan(angle)); `width` is the Gaussian
    amplitude width along the direction perpendicular to the ridge.  The
    sinc option matches the Gaussian at the -3 dB intensity point.
    """

    angle_deg: float
    width: float
    shape: str = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise InvalidArgumentError(
                f"phasematching width must be positive, got {self.width}")
        if not 0.0 < self.angle_deg < 90.0:
            raise InvalidArgumentError(
                f"phasematching angle must lie in (0, 90) degrees, got {self.angle_deg}")
        if self.shape not in _PM_SHAPES:
            raise InvalidArgumentError(
                f"phasematching shape must be one of {_PM_SHAPES}, got {self.shape!r}")


def matched_phasematching_width(pump_amplitude_sigma: float) -> float:
    """Width that makes a 45-degree Gaussian ridge separable for a Gaussian
    pump of the given amplitude width (pump told apart from the ridge by
    running along the sum direction)."""
    if pump_amplitude_sigma <= 0:
        raise InvalidArgumentError("pump width must be positive")
    return pump_amplitude_sigma / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class JointSpectralAmplitude:
    """Normalized two-photon amplitude f(w_s, w_i) on a signal x idler grid."""

    signal_grid: FrequencyGrid
    idler_grid: FrequencyGrid
    amplitudes: np.ndarray  # shape (signal count, idler count)

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        expected = (self.signal_grid.count, self.idler_grid.count)
        if amp.shape != expected:
            raise InvalidArgumentError(
                f"amplitude array shape {amp.shape} does not match grids {expected}")
        total = np.sum(np.abs(amp) ** 2) * self.cell_area
        if abs(total - 1.0) > 1e-10:
            raise InvalidArgumentError(
                f"joint amplitude not normalized: weight {total!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def cell_area(self) -> float:
        return self.signal_grid.spacing * self.idler_grid.spacing

    def intensity(self) -> np.ndarray:
        """Phase-blind |f|^2 (what a spectrally resolved measurement sees)."""
        return np.abs(self.amplitudes) ** 2


def _interp_complex(x, points: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Linear interpolation of complex samples with the modulus pinned to
    the interpolated modulus.

    Plain linear interpolation of oscillating complex values shrinks the
    modulus between samples, so a pure-phase factor (a chirp) would leak
    into sampled intensities.  Rescaling to the separately interpolated
    modulus keeps |result| independent of any phase applied to the samples.
    """
    linear = (np.interp(x, points, values.real)
              + 1j * np.interp(x, points, values.imag))
    modulus = np.interp(x, points, np.abs(values))
    linear_mod = np.abs(linear)
    floor = 1e-12 * max(linear_mod.max(), 1e-300)
    scale = np.where(linear_mod > floor, modulus / np.maximum(linear_mod, floor), 1.0)
    return linear * scale


def build_jsa(pump: ComplexSpectrum, pm: PhasematchingModel,
              signal_grid: FrequencyGrid, idler_grid: FrequencyGrid
              ) -> JointSpectralAmplitude:
    """Joint spectral amplitude = pump(w_s + w_i) x phasematching(w_s, w_i).

    The pump spectrum is evaluated at the sum frequency by linear
    interpolation of its samples, so its grid must cover the full range of
    w_s + w_i reached by the output grids.

    Raises
    ------
    CoverageError
        If the pump grid does not cover the sampled sum-frequency range.
    """
    sum_min = signal_grid.minimum + idler_grid.minimum
    sum_max = signal_grid.maximum + idler_grid.maximum
    if pump.grid.minimum > sum_min or pump.grid.maximum < sum_max:
        raise CoverageError(
            f"pump grid [{pump.grid.minimum:.6g}, {pump.grid.maximum:.6g}] does not "
            f"cover the sum-frequency range [{sum_min:.6g}, {sum_max:.6g}]; missing "
            f"[{sum_min:.6g}, {pump.grid.minimum:.6g}] and/or "
            f"[{pump.grid.maximum:.6g}, {sum_max:.6g}]")

    w_s = signal_grid.points
    w_i = idler_grid.points
    sums = w_s[:, None] + w_i[None, :]
    alpha = _interp_complex(sums, pump.grid.points, pump.amplitudes)

    theta = np.deg2rad(pm.angle_deg)
    u = (-(w_s[:, None] - signal_grid.center) * np.sin(theta)
         + (w_i[None, :] - idler_grid.center) * np.cos(theta))
    if pm.shape == "gaussian":
        phi = np.exp(-u**2 / (2.0 * pm.width**2))
    else:
        scale = _SINC_HALF_POWER_ARG / (_GAUSS_HALF_POWER_ARG * pm.width)
        phi = np.sinc(scale * u / np.pi)

    values = alpha * phi
    weight = np.sum(np.abs(values) ** 2) * signal_grid.spacing * idler_grid.spacing
    if weight <= 0.0:
        raise InvalidArgumentError(
            "pump and phasematching do not overlap on the requested grids")
    return JointSpectralAmplitude(signal_grid, idler_grid, values / np.sqrt(weight))


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Descending mode weights with paired signal/idler mode functions.

    `weights` sum to one over the kept modes; `residual_weight` is the
    fraction discarded by truncation before renormalization.
    """

    weights: np.ndarray
    signal_modes: tuple
    idler_modes: tuple
    residual_weight: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidArgumentError("weights must be a non-empty 1-D sequence")
        if np.any(w < -1e-12):
            raise InvalidArgumentError("weights must be non-negative")
        if np.any(np.diff(w) > 1e-12):
            raise InvalidArgumentError("weights must be sorted in descending order")
        if abs(w.sum() - 1.0) > 1e-8:
            raise InvalidArgumentError(f"weights must sum to 1, got {w.sum()!r}")
        if not (len(self.signal_modes) == len(self.idler_modes) == w.size):
            raise InvalidArgumentError("one signal and one idler mode per weight")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "signal_modes", tuple(self.signal_modes))
        object.__setattr__(self, "idler_modes", tuple(self.idler_modes))


def _kernel_schmidt(values: np.ndarray, row_grid: FrequencyGrid,
                    col_grid: FrequencyGrid, max_modes: int):
    """SVD of a sampled two-frequency kernel.

    Returns normalized weights of all modes, the kept row/column mode
    functions (phase-fixed so the largest row-mode sample is real positive)
    and the truncated weight fraction.
    """
    if max_modes < 1:
        raise InvalidArgumentError(f"max_modes must be >= 1, got {max_modes}")
    u_mat, svals, vh_mat = np.linalg.svd(values, full_matrices=False)
    gamma = svals**2 * row_grid.spacing * col_grid.spacing
    gamma = gamma / gamma.sum()
    keep = min(max_modes, gamma.size)
    residual = float(gamma[keep:].sum())
    kept = gamma[:keep] / gamma[:keep].sum()

    row_modes = []
    col_modes = []
    for m in range(keep):
        col_u = u_mat[:, m]
        anchor = col_u[np.argmax(np.abs(col_u))]
        phase = anchor / abs(anchor) if abs(anchor) > 0 else 1.0
        row_modes.append(ComplexSpectrum(
            row_grid, col_u * np.conj(phase) / np.sqrt(row_grid.spacing)))
        col_modes.append(ComplexSpectrum(
            col_grid, vh_mat[m, :] * phase / np.sqrt(col_grid.spacing)))
    return kept, tuple(row_modes), tuple(col_modes), residual


def schmidt_decompose(jsa: JointSpectralAmplitude,
                      max_modes: int = 20) -> SchmidtDecomposition:
    """Schmidt decomposition of a joint amplitude by singular value
    decomposition of its sampled matrix.

    Weights are the squared singular values times the grid cell area,
    renormalized over the kept modes; the discarded fraction is reported in
    ``residual_weight``.  Mode functions carry unit discrete norm.
    """
    weights, signal_modes, idler_modes, residual = _kernel_schmidt(
        jsa.amplitudes, jsa.signal_grid, jsa.idler_grid, max_modes)
    return SchmidtDecomposition(weights=weights, signal_modes=signal_modes,
                                idler_modes=idler_modes, residual_weight=residual)


def schmidt_weights(jsa: JointSpectralAmplitude) -> np.ndarray:
    """All normalized Schmidt weights, without building mode functions.

    Cheaper than :func:`schmidt_decompose` when only the weight spectrum
    (purity, effective mode number) is needed; nothing is truncated.
    """
    svals = np.linalg.svd(jsa.amplitudes, compute_uv=False)
    gamma = svals**2 * jsa.cell_area
    return gamma / gamma.sum()


def jsi_marginal_sigmas(jsa: JointSpectralAmplitude) -> tuple:
    """Intensity standard deviations (rad/fs) of the signal and idler
    marginals of |f|^2; blind to any spectral phase."""
    intensity = jsa.intensity()
    sigmas = []
    for axis, grid in ((1, jsa.signal_grid), (0, jsa.idler_grid)):
        marginal = intensity.sum(axis=axis)
        marginal = marginal / marginal.sum()
        mean = float(np.sum(grid.points * marginal))
        sigmas.append(float(np.sqrt(np.sum((grid.points - mean) ** 2 * marginal))))
    return tuple(sigmas)


def purity_from_schmidt(dec: SchmidtDecomposition) -> float:
    """Purity of the reduced one-photon state, sum of squared weights.

    Truncation biases this upward by at most ~2 x residual_weight; the
    residual is available on the decomposition for error bookkeeping.
    """
    return float(np.sum(dec.weights**2))


def g2_from_purity(purity: float) -> float:
    """Marginal second-order autocorrelation 1 + P of a low-gain pair source."""
    if not -1e-9 <= purity <= 1.0 + 1e-9:
        raise InvalidArgumentError(f"purity must lie in [0, 1], got {purity}")
    return 1.0 + min(max(purity, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class ModalDensityMatrix:
    """d x d density matrix in a truncated Hermite-Gauss mode basis.

    `basis` describes the mode family (its `order` field is irrelevant
    here); `leakage` records the weight lost to modes outside the
    truncation before the matrix was renormalized to unit trace.  `basis`
    is None for matrices in an abstract d-dimensional basis (e.g. fresh
    tomography output).
    """

    dimension: int
    entries: np.ndarray
    basis: Optional[HermiteGaussParams] = None
    leakage: float = 0.0

    def __post_init__(self):
        mat = np.array(self.entries, dtype=complex)
        d = self.dimension
        if mat.shape != (d, d):
            raise InvalidArgumentError(
                f"expected a {d}x{d} matrix, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-10:
            raise InvalidArgumentError("density matrix must be Hermitian")
        eigenvalues = np.linalg.eigvalsh(mat)
        if eigenvalues.min() < -1e-8:
            raise InvalidArgumentError(
                f"density matrix must be positive semidefinite; "
                f"smallest eigenvalue {eigenvalues.min():.3e}")
        if abs(np.trace(mat).real - 1.0) > 1e-8:
            raise InvalidArgumentError(
                f"density matrix trace must be 1, got {np.trace(mat).real!r}")
        mat.flags.writeable = False
        object.__setattr__(self, "entries", mat)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def hg_basis(basis: HermiteGaussParams, dimension: int,
             grid: FrequencyGrid) -> list:
    """First `dimension` Hermite-Gauss modes of the family on a grid."""
    return [hg_mode(HermiteGaussParams(order=k, center=basis.center,
                                       width=basis.width), grid)
            for k in range(dimension)]


def mode_overlap_matrix(dec: SchmidtDecomposition, basis: HermiteGaussParams,
                        dimension: int) -> np.ndarray:
    """Overlaps <HG_m | psi_k> as an array of shape (modes, dimension)."""
    grid = dec.signal_modes[0].grid
    basis_modes = hg_basis(basis, dimension, grid)
    coeffs = np.empty((len(dec.signal_modes), dimension), dtype=complex)
    for k, psi in enumerate(dec.signal_modes):
        for m, hg in enumerate(basis_modes):
            coeffs[k, m] = inner_product(hg, psi)
    return coeffs


def reduced_density_matrix(dec: SchmidtDecomposition, basis: HermiteGaussParams,
                           dimension: int) -> ModalDensityMatrix:
    """Reduced signal-photon state in the truncated Hermite-Gauss basis.

    rho_mn = sum_k gamma_k <HG_m|psi_k><psi_k|HG_n>.  The weight falling
    outside the truncated basis is reported as leakage and the matrix is
    renormalized to unit trace.  Leakage above 0.1 warns; above 0.5 the
    basis is considered unusable and an error is raised.
    """
    if dimension < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {dimension}")
    coeffs = mode_overlap_matrix(dec, basis, dimension)
    rho = (coeffs.T * dec.weights) @ np.conj(coeffs)
    trace = float(np.trace(rho).real)
    leakage = 1.0 - trace
    if leakage > 0.5:
        raise BasisMismatchError(
            f"basis captures only {trace:.3f} of the state (leakage {leakage:.3f})")
    if leakage > 0.1:
        warnings.warn(
            f"basis leakage {leakage:.3f} exceeds 0.1; consider a wider basis",
            BasisMismatchWarning, stacklevel=2)
    rho = rho / trace
    rho = 0.5 * (rho + rho.conj().T)
    return ModalDensityMatrix(dimension=dimension, entries=rho, basis=basis,
                              leakage=max(leakage, 0.0))


def fit_basis_width(dec: SchmidtDecomposition,
                    center: Optional[float] = None) -> float:
    """Basis width maximizing the overlap of HG0 with the dominant mode.

    Used to freeze one tomography basis from a reference (decorrelated)
    state.  The search is bracketed around the dominant mode's measured
    amplitude width.
    """
    from scipy.optimize import minimize_scalar

    psi0 = dec.signal_modes[0]
    grid = psi0.grid
    if center is None:
        center = grid.center
    density = np.abs(psi0.amplitudes) ** 2 * grid.spacing
    density = density / density.sum()
    mean = float(np.sum(grid.points * density))
    std = float(np.sqrt(np.sum((grid.points - mean) ** 2 * density)))
    guess = np.sqrt(2.0) * std  # amplitude width of a Gaussian with that intensity std

    def negative_overlap(width: float) -> float:
        mode = hg_mode(HermiteGaussParams(order=0, center=center, width=width), grid)
        return -abs(inner_product(mode, psi0)) ** 2

    result = minimize_scalar(negative_overlap, bounds=(guess / 4.0, guess * 4.0),
                             method="bounded", options={"xatol": guess * 1e-9})
    return float(result.x)


def chirp_purity_analytic(chirp_fs2: float, sigma_s: float,
                          sigma_i: float) -> float:
    """Closed-form purity of a separable Gaussian pair state whose pump
    carries quadratic spectral phase.

    `sigma_s` and `sigma_i` are the intensity standard deviations (rad/fs)
    of the signal and idler marginals.
    """
    if not (sigma_s > 0 and sigma_i > 0):
        raise InvalidArgumentError("marginal widths must be positive")
    return float(1.0 / np.sqrt(1.0 + 16.0 * chirp_fs2**2 * sigma_s**2 * sigma_i**2))


def mean_photon_from_g11(g11: float, g2: float) -> float:
    """Mean photon number from the cross- and auto-correlation values,
    <n> = 1/(g11 - g2)."""
    if not g11 > g2:
        raise InvalidArgumentError(
            f"cross-correlation g11={g11} must exceed g2={g2}")
    return 1.0 / (g11 - g2)


def background_mixed_g2(g2_signal: float, signal_rate: float,
                        background_rate: float) -> float:
    """g2 of a signal mixed with an independent Poissonian background.

    Rates are mean counts per unit time; the background contributes g2 = 1.
    """
    if signal_rate < 0 or background_rate < 0:
        raise InvalidArgumentError("rates must be non-negative")
    total = signal_rate + background_rate
    if total == 0:
        raise InvalidArgumentError("signal and background rates cannot both be zero")
    s, b = signal_rate, background_rate
    return (g2_signal * s**2 + 2.0 * s * b + b**2) / total**2
