"""Dynamically scaled 5x5 prioritization matrix.

The vertical axis is SIF, the horizontal axis is the inverted EJ score
(``max(EJ) - EJ``) so that up and right are both worse. Each axis is binned
with ``floor(value / axis_max * 4)`` where ``axis_max`` is the cohort maximum
unless pinned. A cell's priority follows the sum of its two coordinates.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence
from xml.sax.saxutils import escape

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import AxisDegenerate, EmptyInput, UnsupportedFormat
from .model import Priority, PriorityRecord
from .validation import check_score_matrix, check_vector

GRID = 5
TOP = GRID - 1

# Upper bound (inclusive) of the coordinate sum for each level.
_PRIORITY_BANDS = ((1, Priority.P5), (3, Priority.P4), (4, Priority.P3), (6, Priority.P2),
                   (8, Priority.P1))

PALETTE = {
    Priority.P1: "#8b0000",
    Priority.P2: "#e31a1c",
    Priority.P3: "#fd8d3c",
    Priority.P4: "#ffe34d",
    Priority.P5: "#41ab5d",
}

CSV_COLUMNS = ("uca_id", "pms", "cif", "sif", "ej", "ej_inverted", "sif_scaled", "ej_scaled",
               "priority", "final_rank", "stability")


def invert_ej(ej) -> np.ndarray:
    """``max(ej) - ej``: the best (lowest) EJ becomes the largest value."""
    ej = check_vector(ej, name="ej")
    return ej.max() - ej


def scale_axis(value: float, axis_max: float) -> int:
    """Bin ``value`` in ``[0, axis_max]`` to 0..4 with ``floor(value / axis_max * 4)``."""
    if axis_max == 0:
        raise AxisDegenerate("axis maximum is 0; every value sits at the maximum")
    if not axis_max > 0:
        raise ValueError(f"axis maximum must be positive, got {axis_max!r}")
    if not 0 <= value <= axis_max:
        raise ValueError(f"value {value!r} outside [0, {axis_max!r}]")
    return min(TOP, math.floor(value / axis_max * TOP))


def _scale_values(values: np.ndarray, axis_max: float, axis: str) -> np.ndarray:
    if axis_max == 0:
        warnings.warn(f"{axis} axis is degenerate (maximum 0); all UCAs placed in the top bin",
                      stacklevel=3)
        return np.full(values.shape, TOP, dtype=np.int64)
    if values.min() < 0 or values.max() > axis_max:
        raise ValueError(f"{axis} values must lie in [0, {axis_max}]; got "
                         f"[{values.min()}, {values.max()}]")
    return np.minimum(TOP, np.floor(values / axis_max * TOP)).astype(np.int64)


def cell_priority(sif_scaled: int, ej_scaled: int) -> Priority:
    """Priority level of a cell from the sum of its coordinates (0..8)."""
    for name, v in (("sif_scaled", sif_scaled), ("ej_scaled", ej_scaled)):
        if not 0 <= v <= TOP:
            raise ValueError(f"{name} must be in 0..{TOP}, got {v}")
    total = sif_scaled + ej_scaled
    for upper, level in _PRIORITY_BANDS:
        if total <= upper:
            return level
    raise AssertionError("unreachable")


class MatrixInput(NamedTuple):
    uca_id: str
    sif: float
    ej: float
    pms: int | None = None
    cif: int | None = None


@dataclass(frozen=True)
class MatrixCell:
    sif_scaled: int
    ej_scaled: int
    priority: Priority
    ucas: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"sif_scaled": self.sif_scaled, "ej_scaled": self.ej_scaled,
                "priority": self.priority.value, "ucas": list(self.ucas)}


@dataclass(frozen=True)
class PriorityMatrix:
    cells: tuple[MatrixCell, ...]
    max_sif: float
    max_ej_inverted: float
    records: tuple[PriorityRecord, ...]

    def cell(self, sif_scaled: int, ej_scaled: int) -> MatrixCell:
        return self.cells[sif_scaled * GRID + ej_scaled]

    def record(self, uca_id: str) -> PriorityRecord:
        for r in self.records:
            if r.uca_id == uca_id:
                return r
        raise KeyError(uca_id)

    def to_dict(self) -> dict:
        return {
            "max_sif": _json_number(self.max_sif),
            "max_ej_inverted": float(self.max_ej_inverted),
            "cells": [c.to_dict() for c in self.cells],
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PriorityMatrix":
        cells = tuple(MatrixCell(c["sif_scaled"], c["ej_scaled"], Priority(c["priority"]),
                                 tuple(c["ucas"]))
                      for c in sorted(d["cells"], key=lambda c: (c["sif_scaled"], c["ej_scaled"])))
        if len(cells) != GRID * GRID:
            raise ValueError(f"expected {GRID * GRID} cells, got {len(cells)}")
        records = tuple(PriorityRecord.from_dict(r) for r in d.get("records", []))
        return cls(cells, d["max_sif"], d["max_ej_inverted"], records)

    @classmethod
    def from_json(cls, data: bytes | str) -> "PriorityMatrix":
        return cls.from_dict(json.loads(data))


def _json_number(x):
    x = float(x)
    return int(x) if x.is_integer() else x


def _coerce_inputs(records: Iterable) -> list[MatrixInput]:
    out = []
    for r in records:
        if isinstance(r, MatrixInput):
            out.append(r)
        elif isinstance(r, tuple):
            out.append(MatrixInput(*r))
        else:
            out.append(MatrixInput(r.uca_id, r.sif, r.ej, getattr(r, "pms", None),
                                   getattr(r, "cif", None)))
    return out


def build_matrix(records: Iterable, *, max_sif: float | None = None,
                 max_ej_inverted: float | None = None) -> PriorityMatrix:
    """Place every UCA in the 5x5 grid.

    ``records`` holds ``(uca_id, sif, ej)`` tuples, :class:`MatrixInput` items or
    any objects with those attributes (``pms``/``cif`` are carried through when
    present). Axis maxima come from the cohort unless pinned with ``max_sif`` or
    ``max_ej_inverted``.
    """
    items = _coerce_inputs(records)
    if not items:
        raise EmptyInput("build_matrix needs at least one record")
    ids = [i.uca_id for i in items]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate uca_id in matrix input")
    sif = check_vector([i.sif for i in items], name="sif")
    if (sif <= 0).any():
        raise ValueError("every sif must be > 0")
    ej = check_vector([i.ej for i in items], name="ej")
    ej_inv = ej.max() - ej

    axis_sif = float(sif.max()) if max_sif is None else float(max_sif)
    axis_ej = float(ej_inv.max()) if max_ej_inverted is None else float(max_ej_inverted)
    sif_bins = _scale_values(sif, axis_sif, "SIF")
    ej_bins = _scale_values(ej_inv, axis_ej, "EJ")

    placed: dict[tuple[int, int], list[str]] = {}
    recs = []
    for item, s, e, s_bin, e_bin in zip(items, sif, ej_inv, sif_bins, ej_bins):
        s_bin, e_bin = int(s_bin), int(e_bin)
        recs.append(PriorityRecord(
            uca_id=item.uca_id, pms=item.pms, cif=item.cif, sif=_json_number(s), ej=float(item.ej),
            ej_inverted=float(e), sif_scaled=s_bin, ej_scaled=e_bin,
            priority=cell_priority(s_bin, e_bin)))
        placed.setdefault((s_bin, e_bin), []).append(item.uca_id)
    cells = tuple(MatrixCell(s, e, cell_priority(s, e), tuple(placed.get((s, e), ())))
                  for s in range(GRID) for e in range(GRID))
    return PriorityMatrix(cells, _json_number(axis_sif), axis_ej, tuple(recs))


def priority_counts(matrix: PriorityMatrix) -> dict[Priority, int]:
    counts = {p: 0 for p in Priority}
    for cell in matrix.cells:
        counts[cell.priority] += len(cell.ucas)
    return counts


# ------------------------------------------------------------------- rendering

def render(matrix: PriorityMatrix, format: str = "text", *,
           extra: Mapping[str, Mapping] | None = None) -> bytes:
    """Render as ``text``, ``svg``, ``json`` or ``csv``.

    ``extra`` optionally maps uca_id to ``final_rank``/``stability`` for the CSV
    columns that the matrix itself does not know.
    """
    try:
        fn = _RENDERERS[format]
    except KeyError:
        raise UnsupportedFormat(f"unsupported format {format!r}; choose from "
                                f"{', '.join(_RENDERERS)}") from None
    if format == "csv":
        return fn(matrix, extra or {})
    return fn(matrix)


def _render_json(matrix: PriorityMatrix) -> bytes:
    return (json.dumps(matrix.to_dict(), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _render_csv(matrix: PriorityMatrix, extra: Mapping[str, Mapping]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in matrix.records:
        more = extra.get(r.uca_id, {})
        writer.writerow([r.uca_id, "" if r.pms is None else r.pms, "" if r.cif is None else r.cif,
                         r.sif, repr(r.ej), repr(r.ej_inverted), r.sif_scaled, r.ej_scaled,
                         r.priority.value, more.get("final_rank", ""), more.get("stability", "")])
    return buf.getvalue().encode("utf-8")


def read_matrix_csv(data: bytes | str) -> list[dict]:
    """Parse :func:`render` CSV output back into typed rows."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({
            "uca_id": row["uca_id"],
            "pms": int(row["pms"]) if row["pms"] else None,
            "cif": int(row["cif"]) if row["cif"] else None,
            "sif": float(row["sif"]) if "." in row["sif"] else int(row["sif"]),
            "ej": float(row["ej"]),
            "ej_inverted": float(row["ej_inverted"]),
            "sif_scaled": int(row["sif_scaled"]),
            "ej_scaled": int(row["ej_scaled"]),
            "priority": row["priority"],
            "final_rank": int(row["final_rank"]) if row["final_rank"] else None,
            "stability": row["stability"] or None,
        })
    return rows


EMPTY_MARK = "·"


def _render_text(matrix: PriorityMatrix) -> bytes:
    def content(cell):
        return f"{cell.priority.value} " + (",".join(cell.ucas) if cell.ucas else EMPTY_MARK)

    width = max(len(content(c)) for c in matrix.cells)
    label_w = len("SIF 4")
    sep = " " * label_w + " +" + "+".join("-" * (width + 2) for _ in range(GRID)) + "+"
    lines = [f"Prioritization matrix (max SIF {_json_number(matrix.max_sif)}, "
             f"max EJ inverted {matrix.max_ej_inverted:.6g})", sep]
    for s in reversed(range(GRID)):
        cells = [f" {content(matrix.cell(s, e)).ljust(width)} " for e in range(GRID)]
        lines.append(f"SIF {s} |" + "|".join(cells) + "|")
        lines.append(sep)
    lines.append(" " * label_w + "  " + "".join(f"EJ {e}".center(width + 3) for e in range(GRID)))
    lines.append(" " * label_w + "  " + "EJ (inverted) ->")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render_svg(matrix: PriorityMatrix) -> bytes:
    cell_w, cell_h = 180, 110
    left, top = 90, 40
    width = left + GRID * cell_w + 20
    height = top + GRID * cell_h + 110
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        '<title>UCA prioritization matrix</title>',
    ]
    for s in range(GRID):
        for e in range(GRID):
            cell = matrix.cell(s, e)
            x = left + e * cell_w
            y = top + (TOP - s) * cell_h
            out.append(f'<rect class="cell" data-sif="{s}" data-ej="{e}" x="{x}" y="{y}" '
                       f'width="{cell_w}" height="{cell_h}" fill="{PALETTE[cell.priority]}" '
                       f'stroke="#ffffff" stroke-width="2"/>')
            ink = "#ffffff" if cell.priority in (Priority.P1, Priority.P2) else "#000000"
            out.append(f'<text x="{x + 6}" y="{y + 16}" font-size="12" font-weight="bold" '
                       f'fill="{ink}">{cell.priority.value}</text>')
            for k, uca in enumerate(cell.ucas[:6]):
                out.append(f'<text x="{x + 6}" y="{y + 32 + 13 * k}" font-size="11" '
                           f'fill="{ink}">{escape(uca)}</text>')
            if len(cell.ucas) > 6:
                out.append(f'<text x="{x + 6}" y="{y + 32 + 13 * 6}" font-size="11" '
                           f'fill="{ink}">+{len(cell.ucas) - 6} more</text>')
    for k in range(GRID):
        lo_sif = matrix.max_sif * k / TOP
        lo_ej = matrix.max_ej_inverted * k / TOP
        out.append(f'<text x="{left - 8}" y="{top + (TOP - k) * cell_h + cell_h / 2}" '
                   f'font-size="11" text-anchor="end">{k} (&#8805;{lo_sif:.4g})</text>')
        out.append(f'<text x="{left + k * cell_w + cell_w / 2}" y="{top + GRID * cell_h + 18}" '
                   f'font-size="11" text-anchor="middle">{k} (&#8805;{lo_ej:.4g})</text>')
    out.append(f'<text x="20" y="{top + GRID * cell_h / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {top + GRID * cell_h / 2})">SIF</text>')
    out.append(f'<text x="{left + GRID * cell_w / 2}" y="{top + GRID * cell_h + 42}" '
               f'font-size="14" text-anchor="middle">EJ (inverted)</text>')
    for k, p in enumerate(Priority):
        x = left + k * cell_w
        y = top + GRID * cell_h + 70
        out.append(f'<circle cx="{x + 8}" cy="{y - 4}" r="7" fill="{PALETTE[p]}"/>')
        out.append(f'<text x="{x + 20}" y="{y}" font-size="11">{p.colour} ({p.label}: '
                   f'{p.value})</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


_RENDERERS = {"text": _render_text, "svg": _render_svg, "json": _render_json, "csv": _render_csv}


class PrioritizationMatrix(TransformerMixin, BaseEstimator):
    """Scikit-learn front end for the matrix placement.

    ``X`` has two columns: SIF and EJ score (lower EJ = higher priority).
    ``fit`` learns the cohort maxima, ``transform`` returns the scaled
    ``(sif_scaled, ej_scaled)`` coordinates and ``predict`` the priority labels.
    Values outside the fitted range are clipped to the grid.
    """

    def __init__(self, fixed_max_sif=None, fixed_max_ej=None):
        self.fixed_max_sif = fixed_max_sif
        self.fixed_max_ej = fixed_max_ej

    def fit(self, X, y=None):
        X = check_score_matrix(X, n_features=2, estimator=self)
        self.n_features_in_ = 2
        self.max_ej_ = float(X[:, 1].max())
        inverted = self.max_ej_ - X[:, 1]
        self.max_sif_ = float(X[:, 0].max()) if self.fixed_max_sif is None else float(self.fixed_max_sif)
        self.max_ej_inverted_ = (float(inverted.max()) if self.fixed_max_ej is None
                                 else float(self.fixed_max_ej))
        return self

    def _bins(self, values, axis_max):
        if axis_max == 0:
            return np.full(values.shape, TOP, dtype=np.int64)
        return np.clip(np.floor(values / axis_max * TOP), 0, TOP).astype(np.int64)

    def transform(self, X):
        check_is_fitted(self, "max_sif_")
        X = check_score_matrix(X, n_features=2, estimator=self)
        return np.column_stack([self._bins(X[:, 0], self.max_sif_),
                                self._bins(self.max_ej_ - X[:, 1], self.max_ej_inverted_)])

    def predict(self, X):
        coords = self.transform(X)
        return np.array([cell_priority(int(s), int(e)).value for s, e in coords])

    def build(self, records: Sequence) -> PriorityMatrix:
        """Fit on ``records`` and return the full :class:`PriorityMatrix`."""
        items = _coerce_inputs(records)
        self.fit(np.array([[i.sif, i.ej] for i in items], dtype=np.float64))
        return build_matrix(items, max_sif=self.fixed_max_sif, max_ej_inverted=self.fixed_max_ej)
