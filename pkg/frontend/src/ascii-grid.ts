// ESRI ASCII grid parsing and character-cell rendering. Rasters arrive from
// the server as plain text; rendering happens entirely on the client.

export interface AsciiGrid {
  nrows: number;
  ncols: number;
  cellsize: number;
  xllcorner: number;
  yllcorner: number;
  nodata: number | null;
  values: number[][]; // row 0 = top (north)
}

export class GridParseError extends Error {}

const HEADER_KEYS = new Set([
  "nrows",
  "ncols",
  "cellsize",
  "xllcorner",
  "yllcorner",
  "nodata_value",
]);

export function parseAsciiGrid(text: string): AsciiGrid {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  const header: Record<string, number> = {};
  let i = 0;
  for (; i < lines.length; i++) {
    const parts = lines[i].trim().split(/\s+/);
    const key = parts[0].toLowerCase();
    if (!HEADER_KEYS.has(key)) break;
    if (parts.length !== 2 || !isFinite(Number(parts[1]))) {
      throw new GridParseError(`bad header line: ${lines[i]}`);
    }
    header[key] = Number(parts[1]);
  }
  for (const required of ["nrows", "ncols", "cellsize"]) {
    if (!(required in header)) {
      throw new GridParseError(`missing header field ${required}`);
    }
  }
  const nrows = header["nrows"];
  const ncols = header["ncols"];
  const values: number[][] = [];
  for (; i < lines.length; i++) {
    const row = lines[i].trim().split(/\s+/).map(Number);
    if (row.some((v) => !isFinite(v))) {
      throw new GridParseError(`non-numeric data row: ${lines[i]}`);
    }
    if (row.length !== ncols) {
      throw new GridParseError(
        `row ${values.length} has ${row.length} columns, expected ${ncols}`,
      );
    }
    values.push(row);
  }
  if (values.length !== nrows) {
    throw new GridParseError(
      `found ${values.length} data rows, expected ${nrows}`,
    );
  }
  return {
    nrows,
    ncols,
    cellsize: header["cellsize"],
    xllcorner: header["xllcorner"] ?? 0,
    yllcorner: header["yllcorner"] ?? 0,
    nodata: header["nodata_value"] ?? null,
    values,
  };
}

export type Palette = (value: number, min: number, max: number) => string;

// Fire state wire encoding: 0 unburnable, 1 fuel, 2 burning, 3 burned.
export const FIRE_PALETTE: Palette = (v) => {
  switch (v) {
    case 0:
      return " ";
    case 1:
      return ".";
    case 2:
      return "*";
    case 3:
      return "#";
    default:
      return "?";
  }
};

const RAMP = " .:-=+*#";

// Continuous fields (belief, probabilities): linear ramp between min and max.
export const RAMP_PALETTE: Palette = (v, min, max) => {
  if (max <= min) return RAMP[0];
  const idx = Math.min(
    RAMP.length - 1,
    Math.floor(((v - min) / (max - min)) * RAMP.length),
  );
  return RAMP[idx];
};

export function renderGrid(grid: AsciiGrid, palette: Palette): string[] {
  const flat = grid.values.flat();
  const min = Math.min(...flat);
  const max = Math.max(...flat);
  return grid.values.map((row) =>
    row.map((v) => palette(v, min, max)).join(""),
  );
}
