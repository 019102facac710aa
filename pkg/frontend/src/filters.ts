/**
 * Reading and re-writing the filter-export format: a directory holding
 * one CSV grid per (output, input) channel pair plus an index.csv
 * manifest with header `out_channel,in_channel,file`.
 */

import { readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

/** One exported convolution kernel: a square, finite matrix. */
export interface FilterGrid {
  rows: number[][];
  size: number;
}

/** A full export: every channel pair's grid, indexed by the manifest. */
export interface FilterExport {
  outChannels: number;
  inChannels: number;
  size: number;
  grids: Map<string, FilterGrid>; // key "out:in"
}

export function pairKey(out: number, inp: number): string {
  return `${out}:${inp}`;
}

/** Parse one CSV grid; rejects ragged, non-square, or non-finite input. */
export function parseGrid(text: string): FilterGrid {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty grid file");
  }
  const rows = lines.map((line, i) => {
    const values = line.split(",").map((token) => {
      const value = Number(token);
      if (token.trim() === "" || !Number.isFinite(value)) {
        throw new Error(`row ${i + 1}: bad cell ${JSON.stringify(token)}`);
      }
      return value;
    });
    return values;
  });
  const size = rows.length;
  for (const [i, row] of rows.entries()) {
    if (row.length !== size) {
      throw new Error(
        `row ${i + 1} has ${row.length} cells, expected ${size} (square grid)`,
      );
    }
  }
  return { rows, size };
}

/**
 * Format a float the way the exporter prints it, so a parsed grid can be
 * re-serialized to the exact same text: shortest round-trip digits, a
 * trailing ".0" on integral values, and two-digit signed exponents.
 */
export function formatValue(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite value ${value}`);
  }
  if (value === 0) {
    return Object.is(value, -0) ? "-0.0" : "0.0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e16 || magnitude < 1e-4) {
    const [mantissa, exponent] = value.toExponential().split("e") as [
      string,
      string,
    ];
    const sign = exponent.startsWith("-") ? "-" : "+";
    const digits = exponent.replace(/^[+-]/, "").padStart(2, "0");
    return `${mantissa}e${sign}${digits}`;
  }
  const text = String(value);
  return text.includes(".") ? text : `${text}.0`;
}

/** Inverse of parseGrid, value-for-value at full printed precision. */
export function serializeGrid(grid: FilterGrid): string {
  return (
    grid.rows.map((row) => row.map(formatValue).join(",")).join("\n") + "\n"
  );
}

/** Load a whole export directory through its index.csv manifest. */
export function loadFilterExport(dir: string): FilterExport {
  let entries: string[];
  try {
    entries = readdirSync(dir);
  } catch {
    throw new Error(`cannot read directory ${dir}`);
  }
  if (!entries.includes("index.csv")) {
    throw new Error(`no index.csv in ${dir}`);
  }
  const index = readFileSync(join(dir, "index.csv"), "utf8")
    .split("\n")
    .filter((line) => line.length > 0);
  if (index[0] !== "out_channel,in_channel,file") {
    throw new Error(`unexpected index header ${JSON.stringify(index[0])}`);
  }
  if (index.length === 1) {
    throw new Error(`index.csv lists no grids in ${dir}`);
  }

  const grids = new Map<string, FilterGrid>();
  let outChannels = 0;
  let inChannels = 0;
  let size: number | null = null;
  for (const line of index.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 3) {
      throw new Error(`bad index row ${JSON.stringify(line)}`);
    }
    const out = Number(parts[0]);
    const inp = Number(parts[1]);
    const file = parts[2]!;
    if (!Number.isInteger(out) || !Number.isInteger(inp)) {
      throw new Error(`bad channel pair in index row ${JSON.stringify(line)}`);
    }
    const grid = parseGrid(readFileSync(join(dir, file), "utf8"));
    if (size === null) {
      size = grid.size;
    } else if (grid.size !== size) {
      throw new Error(
        `${file} is ${grid.size}x${grid.size}, expected ${size}x${size}`,
      );
    }
    grids.set(pairKey(out, inp), grid);
    outChannels = Math.max(outChannels, out + 1);
    inChannels = Math.max(inChannels, inp + 1);
  }
  if (grids.size !== outChannels * inChannels) {
    throw new Error(
      `index lists ${grids.size} grids, expected ` +
        `${outChannels}x${inChannels} channel pairs`,
    );
  }
  return { outChannels, inChannels, size: size!, grids };
}
