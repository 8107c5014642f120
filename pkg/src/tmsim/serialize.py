"""Byte-stable serialization of toolkit objects to JSON and CSV.

All floating-point data is rendered as %.12e with sorted JSON keys, so
identical inputs always produce identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidArgumentError
from .pdc import JointSpectralAmplitude, ModalDensityMatrix, SchmidtDecomposition
from .qpg import MappingFunction, ModeFilterResult, SelectivityReport
from .spectral import ComplexSpectrum, FrequencyGrid
from .tomography import CountRecord, ProjectorSet

FLOAT_FORMAT = "%.12e"


def format_float(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def dump_json(obj) -> str:
    """Render a plain dict/list tree with sorted keys and %.12e floats."""
    parts = []
    _render_json(obj, parts)
    return "".join(parts) + "\n"


def _render_json(obj, parts) -> None:
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        # JSON has no NaN/inf; empty-branch statistics serialize as null
        parts.append(format_float(obj) if np.isfinite(obj) else "null")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise InvalidArgumentError("JSON object keys must be strings")
            if i:
                parts.append(",")
            parts.append(json.dumps(key) + ":")
            _render_json(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _render_json(item, parts)
        parts.append("]")
    else:
        raise InvalidArgumentError(
            f"cannot serialize object of type {type(obj).__name__}")


def grid_to_dict(grid: FrequencyGrid) -> dict:
    return {"center": grid.center, "spacing": grid.spacing, "count": grid.count}


def grid_from_dict(data: dict) -> FrequencyGrid:
    return FrequencyGrid(center=float(data["center"]),
                         spacing=float(data["spacing"]),
                         count=int(data["count"]))


def spectrum_to_dict(spectrum: ComplexSpectrum) -> dict:
    return {"grid": grid_to_dict(spectrum.grid),
            "re": spectrum.amplitudes.real.tolist(),
            "im": spectrum.amplitudes.imag.tolist()}


def spectrum_from_dict(data: dict) -> ComplexSpectrum:
    grid = grid_from_dict(data["grid"])
    amp = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    return ComplexSpectrum(grid, amp)


def spectrum_to_csv(spectrum: ComplexSpectrum) -> str:
    lines = ["omega_rad_per_fs,real,imag"]
    for w, a in zip(spectrum.grid.points, spectrum.amplitudes):
        lines.append(f"{format_float(w)},{format_float(a.real)},{format_float(a.imag)}")
    return "\n".join(lines) + "\n"


def jsa_to_dict(jsa: JointSpectralAmplitude) -> dict:
    return {"signal_grid": grid_to_dict(jsa.signal_grid),
            "idler_grid": grid_to_dict(jsa.idler_grid),
            "re": jsa.amplitudes.real.tolist(),
            "im": jsa.amplitudes.imag.tolist()}


def _grid_pair_csv(row_name: str, col_name: str, row_grid: FrequencyGrid,
                   col_grid: FrequencyGrid, values: np.ndarray) -> str:
    rows = row_grid.points
    cols = col_grid.points
    lines = [f"{row_name},{col_name},real,imag"]
    for j, w_row in enumerate(rows):
        w_row_s = format_float(w_row)
        for k, w_col in enumerate(cols):
            v = values[j, k]
            lines.append(f"{w_row_s},{format_float(w_col)},"
                         f"{format_float(v.real)},{format_float(v.imag)}")
    return "\n".join(lines) + "\n"


def jsa_to_csv(jsa: JointSpectralAmplitude) -> str:
    return _grid_pair_csv("omega_s", "omega_i", jsa.signal_grid, jsa.idler_grid,
                          jsa.amplitudes)


def jsi_to_csv(jsa: JointSpectralAmplitude) -> str:
    """Phase-blind |f|^2 view of a joint amplitude."""
    intensity = jsa.intensity()
    rows = jsa.signal_grid.points
    cols = jsa.idler_grid.points
    lines = ["omega_s,omega_i,intensity"]
    for j, w_s in enumerate(rows):
        w_s_s = format_float(w_s)
        for k, w_i in enumerate(cols):
            lines.append(f"{w_s_s},{format_float(w_i)},{format_float(intensity[j, k])}")
    return "\n".join(lines) + "\n"


def mapping_to_csv(xi: MappingFunction) -> str:
    return _grid_pair_csv("omega_in", "omega_out", xi.input_grid, xi.output_grid,
                          xi.values)


def mapping_to_dict(xi: MappingFunction) -> dict:
    return {"input_grid": grid_to_dict(xi.input_grid),
            "output_grid": grid_to_dict(xi.output_grid),
            "re": xi.values.real.tolist(),
            "im": xi.values.imag.tolist()}


def density_to_dict(rho: ModalDensityMatrix) -> dict:
    return {"d": rho.dimension,
            "re": rho.entries.real.tolist(),
            "im": rho.entries.imag.tolist(),
            "leakage": rho.leakage}


def density_from_dict(data: dict) -> ModalDensityMatrix:
    entries = (np.asarray(data["re"], dtype=float)
               + 1j * np.asarray(data["im"], dtype=float))
    return ModalDensityMatrix(dimension=int(data["d"]), entries=entries,
                              leakage=float(data.get("leakage", 0.0)))


def schmidt_to_dict(dec: SchmidtDecomposition) -> dict:
    return {"weights": dec.weights.tolist(),
            "residual_weight": dec.residual_weight}


def projector_set_to_dict(pset: ProjectorSet) -> dict:
    return {"dimension": pset.dimension,
            "projectors": [{"basis_index": p.basis_index,
                            "element_index": p.element_index,
                            "re": p.coefficients.real.tolist(),
                            "im": p.coefficients.imag.tolist()}
                           for p in pset.projectors]}


def count_records_to_csv(records) -> str:
    lines = ["basis_index,element_index,counts,exposure"]
    for rec in records:
        lines.append(f"{rec.basis_index},{rec.element_index},{rec.counts},"
                     f"{format_float(rec.exposure)}")
    return "\n".join(lines) + "\n"


def count_records_from_csv(text: str) -> list:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    expected = ["basis_index", "element_index", "counts", "exposure"]
    if header != expected:
        raise InvalidArgumentError(
            f"count CSV header must be {','.join(expected)}, got {lines[0]!r}")
    records = []
    for ln in lines[1:]:
        basis, element, counts, exposure = ln.split(",")
        records.append(CountRecord(basis_index=int(basis),
                                   element_index=int(element),
                                   counts=int(counts),
                                   exposure=float(exposure)))
    return records


def count_records_to_dict(records) -> dict:
    return {"records": [{"basis_index": rec.basis_index,
                         "element_index": rec.element_index,
                         "counts": rec.counts,
                         "exposure": rec.exposure}
                        for rec in records]}


def selectivity_report_to_dict(report: SelectivityReport) -> dict:
    return {"schmidt_weights": report.schmidt_weights.tolist(),
            "separability": report.separability}


def filter_result_to_dict(result: ModeFilterResult) -> dict:
    return {"transmitted_weights": result.transmitted_weights.tolist(),
            "upconverted_weights": result.upconverted_weights.tolist(),
            "transmitted_g2": result.transmitted_g2,
            "upconverted_g2": result.upconverted_g2,
            "transmitted_fraction": result.transmitted_fraction,
            "upconverted_fraction": result.upconverted_fraction,
            "upconverted_empty": result.upconverted_empty}


_JSON_RENDERERS = {
    ComplexSpectrum: spectrum_to_dict,
    JointSpectralAmplitude: jsa_to_dict,
    MappingFunction: mapping_to_dict,
    ModalDensityMatrix: density_to_dict,
    SchmidtDecomposition: schmidt_to_dict,
    ProjectorSet: projector_set_to_dict,
    SelectivityReport: selectivity_report_to_dict,
    ModeFilterResult: filter_result_to_dict,
}

_CSV_RENDERERS = {
    ComplexSpectrum: spectrum_to_csv,
    JointSpectralAmplitude: jsa_to_csv,
    MappingFunction: mapping_to_csv,
}


def render(obj, fmt: str) -> str:
    """Render any supported toolkit object to `json` or `csv` text."""
    if fmt == "json":
        if isinstance(obj, dict):
            return dump_json(obj)
        if isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], CountRecord):
            return dump_json(count_records_to_dict(obj))
        renderer = _JSON_RENDERERS.get(type(obj))
        if renderer is not None:
            return dump_json(renderer(obj))
    elif fmt == "csv":
        if isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], CountRecord):
            return count_records_to_csv(obj)
        renderer = _CSV_RENDERERS.get(type(obj))
        if renderer is not None:
            return renderer(obj)
    else:
        raise InvalidArgumentError(f"unsupported format {fmt!r}")
    raise InvalidArgumentError(
        f"cannot render {type(obj).__name__} as {fmt}")
