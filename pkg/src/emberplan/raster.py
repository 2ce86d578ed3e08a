"""ESRI ASCII grid I/O and the raster grid type used across the package."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridGeometry:
    """Placement of a regular grid in map coordinates (lower-left anchored)."""

    nrows: int
    ncols: int
    cellsize: float
    xllcorner: float = 0.0
    yllcorner: float = 0.0

    def __post_init__(self):
        if self.nrows <= 0 or self.ncols <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Map coordinates (x, y) of every cell center; row 0 is the top row."""
        cols = np.arange(self.ncols)
        rows = np.arange(self.nrows)
        x = self.xllcorner + (cols + 0.5) * self.cellsize
        y = self.yllcorner + (self.nrows - rows - 0.5) * self.cellsize
        return np.meshgrid(x, y)

    def contains_cell(self, row: int, col: int) -> bool:
        return 0 <= row < self.nrows and 0 <= col < self.ncols


@dataclass(frozen=True)
class RasterGrid:
    """A dense raster layer tied to a grid geometry."""

    geom: GridGeometry
    values: np.ndarray
    nodata: float | None = None

    def __post_init__(self):
        if self.values.shape != self.geom.shape:
            raise ValueError(
                f"raster shape {self.values.shape} does not match geometry {self.geom.shape}"
            )
        self.values.flags.writeable = False

    def congruent(self, other: "RasterGrid") -> bool:
        return self.geom == other.geom


def read_ascii_grid(path: str | Path) -> RasterGrid:
    """Read an ESRI ASCII grid (.asc) file.

    Header keys are case-insensitive; NODATA_value is optional. Values are
    row-major, row 0 first (the northernmost row).
    """
    path = Path(path)
    header: dict[str, float] = {}
    with path.open() as fh:
        lines = fh.read().split("\n")
    idx = 0
    while idx < len(lines):
        parts = lines[idx].split()
        if len(parts) == 2 and parts[0].lower() in (
            "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
        ):
            header[parts[0].lower()] = float(parts[1])
            idx += 1
        else:
            break
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise ValueError(f"{path}: missing required header line '{key}'")
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    body = " ".join(lines[idx:])
    values = np.array(body.split(), dtype=float)
    if values.size != nrows * ncols:
        raise ValueError(
            f"{path}: expected {nrows * ncols} values, found {values.size}"
        )
    geom = GridGeometry(
        nrows=nrows,
        ncols=ncols,
        cellsize=header["cellsize"],
        xllcorner=header.get("xllcorner", 0.0),
        yllcorner=header.get("yllcorner", 0.0),
    )
    return RasterGrid(geom=geom, values=values.reshape(nrows, ncols),
                      nodata=header.get("nodata_value"))


def write_ascii_grid(grid: RasterGrid, path: str | Path, fmt: str = "%.10g") -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(format_ascii_grid(grid, fmt=fmt))


def format_ascii_grid(grid: RasterGrid, fmt: str = "%.10g") -> str:
    """Serialize to the ESRI ASCII grid text format (bit-stable for goldens)."""
    g = grid.geom
    out = [
        f"ncols {g.ncols}",
        f"nrows {g.nrows}",
        f"xllcorner {g.xllcorner:.10g}",
        f"yllcorner {g.yllcorner:.10g}",
        f"cellsize {g.cellsize:.10g}",
    ]
    if grid.nodata is not None:
        out.append(f"NODATA_value {grid.nodata:.10g}")
    for row in grid.values:
        out.append(" ".join(fmt % v for v in row))
    return "\n".join(out) + "\n"
