"""Uniform Cartesian grids and real/complex scalar fields.

Indexing convention (used by every module and by the CSV format):
cells are addressed by a multi-index ``(i0, i1, ..)``, one entry per axis,
``0 <= i_a < shape[a]``.  Arrays are stored C-contiguous (row major), so the
flattened cell index is ``i0 * shape[1] * shape[2] + i1 * shape[2] + i2``
in 3-D, with the trailing factors dropped in lower dimensions.  The cell
centre coordinate along axis ``a`` is ``origin[a] + i_a * spacing[a]`` and
each cell carries the volume ``prod(spacing)``.

Fields are immutable snapshots: the value arrays are copied on construction
and marked read-only, so instances can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "ComplexField",
    "l2_norm_squared",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid in 1, 2 or 3 dimensions.

    shape    cells per axis
    spacing  metres per cell per axis
    origin   coordinate of cell (0, 0, ..) in metres per axis
    """

    shape: tuple
    spacing: tuple
    origin: tuple

    def __init__(self, shape: Sequence[int], spacing: Sequence[float],
                 origin: Optional[Sequence[float]] = None):
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        spacing = tuple(float(s) for s in np.atleast_1d(spacing))
        if origin is None:
            origin = (0.0,) * len(shape)
        origin = tuple(float(o) for o in np.atleast_1d(origin))
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"grid must be 1-D, 2-D or 3-D, got shape {shape}")
        if len(spacing) != len(shape) or len(origin) != len(shape):
            raise ValueError("shape, spacing and origin must have equal length")
        if any(n < 2 for n in shape):
            raise ValueError(f"need >= 2 cells per axis, got shape {shape}")
        if any(not (s > 0.0 and math.isfinite(s)) for s in spacing):
            raise ValueError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Cell centre coordinates along one axis."""
        return self.origin[axis] + self.spacing[axis] * np.arange(self.shape[axis])

    def coordinate_arrays(self) -> tuple:
        """Broadcastable coordinate arrays, one per axis (ij indexing)."""
        axes = [self.axis_coordinates(a) for a in range(self.dims)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


def _as_grid_array(grid: Grid, values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.size != grid.n_cells:
        raise ValueError(
            f"values size {arr.size} does not match grid cells {grid.n_cells}"
        )
    arr = arr.reshape(grid.shape).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real-valued field on a grid (units depend on context)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values",
                           _as_grid_array(self.grid, self.values, np.float64))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex-valued field on a grid with a time stamp in seconds."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    time_stamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values",
                           _as_grid_array(self.grid, self.values, np.complex128))
        object.__setattr__(self, "time_stamp", float(self.time_stamp))


def l2_norm_squared(f: ComplexField | ScalarField,
                    mask: Optional[np.ndarray] = None) -> float:
    """Discrete squared L2 norm: sum |f_i|^2 * cell volume over selected cells.

    ``mask`` selects cells (True = include); None includes every cell.
    """
    values = f.values
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValueError(
                f"mask shape {mask.shape} does not match field shape {values.shape}"
            )
        values = values[mask]
    total = float(np.sum(np.abs(values) ** 2))
    return total * f.grid.cell_volume


# --- CSV serialization ------------------------------------------------------
#
# One row per cell in row-major order:
#   index_axis0[,index_axis1[,index_axis2]],value_re[,value_im]
# LF line endings, '.' decimal point, 17 significant digits.

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(f: ComplexField | ScalarField, out: TextIO | str) -> None:
    """Write a field in the package CSV format (complex fields add value_im)."""
    if isinstance(out, str):
        with open(out, "w", newline="") as handle:
            write_field_csv(f, handle)
        return
    grid = f.grid
    is_complex = np.iscomplexobj(f.values)
    index_cols = [f"index_axis{a}" for a in range(grid.dims)]
    value_cols = ["value_re", "value_im"] if is_complex else ["value_re"]
    out.write(",".join(index_cols + value_cols) + "\n")
    flat = f.values.reshape(-1)
    for flat_index, value in enumerate(flat):
        multi = np.unravel_index(flat_index, grid.shape)
        cols = [str(int(i)) for i in multi]
        if is_complex:
            cols += [_fmt(value.real), _fmt(value.imag)]
        else:
            cols += [_fmt(value)]
        out.write(",".join(cols) + "\n")


def read_field_csv(src: TextIO | str,
                   spacing: Optional[Sequence[float]] = None,
                   origin: Optional[Sequence[float]] = None,
                   time_stamp: float = 0.0) -> ComplexField | ScalarField:
    """Read a field CSV written by :func:`write_field_csv`.

    The CSV stores only indices and values; grid geometry is supplied by the
    caller (defaults: unit spacing, zero origin).  The shape is inferred from
    the largest index per axis.  Returns a ComplexField when a value_im
    column is present, else a ScalarField.
    """
    if isinstance(src, str):
        with open(src, "r", newline="") as handle:
            return read_field_csv(handle, spacing=spacing, origin=origin,
                                  time_stamp=time_stamp)
    header = src.readline().strip()
    if not header:
        raise ValueError("empty field CSV")
    columns = header.split(",")
    dims = sum(1 for c in columns if c.startswith("index_axis"))
    is_complex = "value_im" in columns
    expected = [f"index_axis{a}" for a in range(dims)] + ["value_re"]
    if is_complex:
        expected.append("value_im")
    if columns != expected:
        raise ValueError(f"unexpected field CSV header: {header!r}")
    indices: list = []
    values: list = []
    for line_no, line in enumerate(src, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ValueError(f"line {line_no}: expected {len(columns)} columns")
        indices.append(tuple(int(p) for p in parts[:dims]))
        if is_complex:
            values.append(complex(float(parts[dims]), float(parts[dims + 1])))
        else:
            values.append(float(parts[dims]))
    if not indices:
        raise ValueError("field CSV holds no cells")
    shape = tuple(max(idx[a] for idx in indices) + 1 for a in range(dims))
    if len(indices) != int(np.prod(shape)):
        raise ValueError(f"field CSV holds {len(indices)} cells, "
                         f"expected {int(np.prod(shape))} for shape {shape}")
    grid = Grid(shape,
                spacing if spacing is not None else (1.0,) * dims,
                origin)
    dtype = np.complex128 if is_complex else np.float64
    arr = np.empty(shape, dtype=dtype)
    for idx, value in zip(indices, values):
        arr[idx] = value
    if is_complex:
        return ComplexField(grid, arr, time_stamp=time_stamp)
    return ScalarField(grid, arr)
