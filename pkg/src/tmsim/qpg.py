"""Quantum pulse gate model: sum-frequency mapping functions and their
separability, projective measurements with imperfect selectivity, and
add-drop temporal-mode filtering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BasisMismatchError, CoverageError, InvalidArgumentError
from .pdc import ModalDensityMatrix, _interp_complex, _kernel_schmidt
from .spectral import ComplexSpectrum, FrequencyGrid


@dataclass(frozen=True, eq=False)
class MappingFunction:
    """Sampled sum-frequency kernel xi(w_in, w_out), unit total weight."""

    input_grid: FrequencyGrid
    output_grid: FrequencyGrid
    values: np.ndarray  # shape (input count, output count)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        expected = (self.input_grid.count, self.output_grid.count)
        if vals.shape != expected:
            raise InvalidArgumentError(
                f"values shape {vals.shape} does not match grids {expected}")
        weight = (np.sum(np.abs(vals) ** 2)
                  * self.input_grid.spacing * self.output_grid.spacing)
        if abs(weight - 1.0) > 1e-10:
            raise InvalidArgumentError(
                f"mapping function not normalized: weight {weight!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def build_mapping(qpg_pump: ComplexSpectrum, output_pm: ComplexSpectrum,
                  input_grid: FrequencyGrid,
                  group_velocity_mismatch: float = 0.0) -> MappingFunction:
    """Mapping function xi(w_in, w_out) = pump(w_out - w_in) x phasematching.

    At zero group-velocity mismatch the phasematching depends on the output
    frequency alone; a nonzero dimensionless mismatch skews its ridge so the
    accepted output frequency shifts with the input detuning.  The output
    grid is taken from the phasematching spectrum.

    Raises
    ------
    CoverageError
        If the pump grid does not cover the sampled difference-frequency
        range.
    """
    output_grid = output_pm.grid
    w_in = input_grid.points
    w_out = output_grid.points
    diff = w_out[None, :] - w_in[:, None]
    if qpg_pump.grid.minimum > diff.min() or qpg_pump.grid.maximum < diff.max():
        raise CoverageError(
            f"QPG pump grid [{qpg_pump.grid.minimum:.6g}, {qpg_pump.grid.maximum:.6g}] "
            f"does not cover the difference-frequency range "
            f"[{diff.min():.6g}, {diff.max():.6g}]")
    alpha = _interp_complex(diff, qpg_pump.grid.points, qpg_pump.amplitudes)

    skewed = (w_out[None, :]
              - group_velocity_mismatch * (w_in[:, None] - input_grid.center))
    pm_points = output_pm.grid.points
    phi = (np.interp(skewed, pm_points, output_pm.amplitudes.real, left=0.0, right=0.0)
           + 1j * np.interp(skewed, pm_points, output_pm.amplitudes.imag,
                            left=0.0, right=0.0))

    values = alpha * phi
    weight = np.sum(np.abs(values) ** 2) * input_grid.spacing * output_grid.spacing
    if weight <= 0.0:
        raise InvalidArgumentError(
            "pump and phasematching do not overlap on the requested grids")
    return MappingFunction(input_grid, output_grid, values / np.sqrt(weight))


@dataclass(frozen=True, eq=False)
class SelectivityReport:
    """Schmidt view of a mapping function."""

    schmidt_weights: np.ndarray
    dominant_input_mode: ComplexSpectrum
    dominant_output_mode: ComplexSpectrum
    separability: float


def separability_report(xi: MappingFunction, max_modes: int = 20) -> SelectivityReport:
    """Decompose a mapping function; separability is its largest normalized
    squared singular value (1 for a rank-one, perfectly mode-selective gate)."""
    weights, input_modes, output_modes, _ = _kernel_schmidt(
        xi.values, xi.input_grid, xi.output_grid, max_modes)
    return SelectivityReport(schmidt_weights=weights,
                             dominant_input_mode=input_modes[0],
                             dominant_output_mode=output_modes[0],
                             separability=float(weights[0]))


@dataclass(frozen=True)
class SelectivityModel:
    """Imperfect projector: depolarizing crosstalk plus an optional
    per-order efficiency falloff.

    `crosstalk` routes that fraction of every projection to a uniform
    background over the basis; `per_order_falloff` scales the efficiency of
    each basis order (orders beyond the list keep efficiency 1).
    """

    crosstalk: float = 0.0
    per_order_falloff: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 <= self.crosstalk <= 1.0:
            raise InvalidArgumentError(
                f"crosstalk must lie in [0, 1], got {self.crosstalk}")
        if self.per_order_falloff is not None:
            falloff = tuple(float(f) for f in self.per_order_falloff)
            if any(not 0.0 < f <= 1.0 for f in falloff):
                raise InvalidArgumentError(
                    "per-order falloff entries must lie in (0, 1]")
            object.__setattr__(self, "per_order_falloff", falloff)

    def order_efficiencies(self, dimension: int) -> np.ndarray:
        eff = np.ones(dimension)
        if self.per_order_falloff is not None:
            n = min(dimension, len(self.per_order_falloff))
            eff[:n] = self.per_order_falloff[:n]
        return eff


def _as_unit_mode(mode: Sequence, dimension: int) -> np.ndarray:
    vec = np.asarray(mode, dtype=complex)
    if vec.shape != (dimension,):
        raise InvalidArgumentError(
            f"mode has shape {vec.shape}, expected ({dimension},)")
    norm = np.linalg.norm(vec)
    if abs(norm - 1.0) > 1e-10:
        raise InvalidArgumentError(f"mode must be unit norm, got |mode| = {norm!r}")
    return vec


def project_probability(rho: ModalDensityMatrix, mode: Sequence,
                        sel: SelectivityModel = SelectivityModel()) -> float:
    """Probability of the gate registering the state in the given mode.

    p = (1 - eps) <m~|rho|m~> + eps Tr(rho)/d, where m~ carries the
    per-order amplitude falloff (for a pure basis element this reduces to
    falloff_k <k|rho|k>).
    """
    vec = _as_unit_mode(mode, rho.dimension)
    weighted = vec * np.sqrt(sel.order_efficiencies(rho.dimension))
    overlap = float(np.real(np.conj(weighted) @ rho.entries @ weighted))
    trace = float(np.trace(rho.entries).real)
    p = (1.0 - sel.crosstalk) * overlap + sel.crosstalk * trace / rho.dimension
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class SuppressionRatio:
    ratio: float
    db: float
    infinite: bool


def suppression_ratio(rho: ModalDensityMatrix, mode_a: Sequence, mode_b: Sequence,
                      sel: SelectivityModel = SelectivityModel()) -> SuppressionRatio:
    """Count-rate ratio between two projections, also in dB.

    A vanishing denominator is flagged rather than raised: a perfectly
    selective gate on a pure state suppresses the orthogonal mode entirely.
    """
    p_a = project_probability(rho, mode_a, sel)
    p_b = project_probability(rho, mode_b, sel)
    if p_b <= 0.0:
        return SuppressionRatio(ratio=np.inf, db=np.inf, infinite=True)
    ratio = p_a / p_b
    return SuppressionRatio(ratio=ratio, db=10.0 * np.log10(ratio), infinite=False)


@dataclass(frozen=True)
class FilterSpec:
    """Mode to remove (coefficients in the truncated basis) and the
    conversion efficiency of the removal."""

    mode: np.ndarray
    efficiency: float

    def __post_init__(self):
        vec = np.array(self.mode, dtype=complex)
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidArgumentError(
                f"filter mode must be unit norm, got |mode| = {norm!r}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise InvalidArgumentError(
                f"efficiency must lie in [0, 1], got {self.efficiency}")
        vec.flags.writeable = False
        object.__setattr__(self, "mode", vec)


@dataclass(frozen=True, eq=False)
class ModeFilterResult:
    """Weights and statistics of both output arms of the add-drop filter."""

    transmitted_weights: np.ndarray
    upconverted_weights: np.ndarray
    transmitted_g2: float
    upconverted_g2: float
    transmitted_fraction: float
    upconverted_fraction: float
    upconverted_empty: bool


def apply_mode_filter(weights: Sequence, mode_coefficients: np.ndarray,
                      spec: FilterSpec) -> ModeFilterResult:
    """Partially remove one mode from a weighted mixture of modes.

    `weights` are the mixture weights; row k of `mode_coefficients` holds
    the k-th mode's coefficients in the truncated basis the filter mode is
    written in.  The component of each mode along the filter mode is
    upconverted with probability `efficiency`; both arms are renormalized
    and their g2 = 1 + sum(w^2) reported.  A rank-one upconverted arm has
    g2 = 2 exactly.

    Raises
    ------
    BasisMismatchError
        If any mode loses more than 1e-3 of its norm in the truncated basis.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0) or w.sum() <= 0:
        raise InvalidArgumentError("weights must be non-negative with positive sum")
    coeffs = np.asarray(mode_coefficients, dtype=complex)
    if coeffs.shape[0] != w.size:
        raise InvalidArgumentError(
            f"{w.size} weights but {coeffs.shape[0]} coefficient rows")
    if coeffs.shape[1] != spec.mode.size:
        raise InvalidArgumentError(
            f"coefficient rows have length {coeffs.shape[1]}, filter mode "
            f"has length {spec.mode.size}")
    row_norms = np.sum(np.abs(coeffs) ** 2, axis=1)
    leakage = 1.0 - row_norms
    if np.any(leakage > 1e-3):
        raise BasisMismatchError(
            f"mode leakage outside the truncated basis reaches {leakage.max():.3e} "
            "(limit 1e-3)")

    selected = np.abs(coeffs @ np.conj(spec.mode)) ** 2
    selected = np.minimum(selected, 1.0)
    upconverted = w * spec.efficiency * selected
    transmitted = w - upconverted

    total = w.sum()
    transmitted_fraction = float(transmitted.sum() / total)
    upconverted_fraction = float(upconverted.sum() / total)

    t_norm = transmitted / transmitted.sum() if transmitted.sum() > 0 else transmitted
    empty = not upconverted.sum() > 0
    if empty:
        u_norm = upconverted
        u_g2 = float("nan")
    else:
        u_norm = upconverted / upconverted.sum()
        u_g2 = 1.0 + float(np.sum(u_norm**2))
    t_g2 = 1.0 + float(np.sum(t_norm**2)) if transmitted.sum() > 0 else float("nan")
    return ModeFilterResult(
        transmitted_weights=t_norm, upconverted_weights=u_norm,
        transmitted_g2=t_g2, upconverted_g2=u_g2,
        transmitted_fraction=transmitted_fraction,
        upconverted_fraction=upconverted_fraction,
        upconverted_empty=empty)
