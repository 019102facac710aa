/**
 * The filter sheet: one small heatmap per channel pair, arranged output
 * channels down and input channels across, on a single shared color
 * scale. Heatmap cell (i, j) is the kernel weight for the window
 * position pair (i, j), so the sheet's axes are window positions.
 */

import { type ColorScale, fillFor, makeScale } from "./color.js";
import { type FilterExport, type FilterGrid, pairKey } from "./filters.js";

const CELL = 12; // pixels per kernel cell
const GAP = 6; // pixels between heatmaps
const MARGIN = 34; // sheet margin holding the axis labels

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;");
}

function renderGrid(
  grid: FilterGrid,
  scale: ColorScale,
  x0: number,
  y0: number,
  label: string,
): string {
  const cells: string[] = [];
  for (const [i, row] of grid.rows.entries()) {
    for (const [j, value] of row.entries()) {
      cells.push(
        `<rect class="cell" x="${x0 + j * CELL}" y="${y0 + i * CELL}" ` +
          `width="${CELL}" height="${CELL}" fill="${fillFor(scale, value)}"/>`,
      );
    }
  }
  return `<g class="pair" data-pair="${esc(label)}">${cells.join("")}</g>`;
}

/** Render a whole export as a standalone SVG document. */
export function renderFilterSheet(data: FilterExport): string {
  const all: number[] = [];
  for (const grid of data.grids.values()) {
    for (const row of grid.rows) {
      all.push(...row);
    }
  }
  const scale = makeScale(all);
  const k = data.size;
  const step = k * CELL + GAP;
  const width = MARGIN + data.inChannels * step + GAP;
  const height = MARGIN + data.outChannels * step + GAP + 18;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
  );
  // axis titles; the top-left heatmap carries the position ticks that
  // every other heatmap shares
  parts.push(
    `<text x="${MARGIN + (data.inChannels * step) / 2}" y="12" ` +
      `text-anchor="middle" font-size="10">input channel → ` +
      `(cell axes: window position 1…${k})</text>`,
    `<text x="10" y="${MARGIN + (data.outChannels * step) / 2}" ` +
      `text-anchor="middle" font-size="10" transform="rotate(-90 10 ` +
      `${MARGIN + (data.outChannels * step) / 2})">output channel →</text>`,
  );
  for (let pos = 0; pos < k; pos++) {
    const center = MARGIN + pos * CELL + CELL / 2;
    parts.push(
      `<text class="tick" x="${center}" y="${MARGIN - 3}" ` +
        `text-anchor="middle" font-size="7">${pos + 1}</text>`,
      `<text class="tick" x="${MARGIN - 3}" y="${MARGIN + pos * CELL + CELL / 2 + 2}" ` +
        `text-anchor="end" font-size="7">${pos + 1}</text>`,
    );
  }

  for (let out = 0; out < data.outChannels; out++) {
    for (let inp = 0; inp < data.inChannels; inp++) {
      const grid = data.grids.get(pairKey(out, inp));
      if (!grid) {
        throw new Error(`missing grid for channel pair (${out}, ${inp})`);
      }
      parts.push(
        renderGrid(
          grid,
          scale,
          MARGIN + inp * step,
          MARGIN + out * step,
          `${out}:${inp}`,
        ),
      );
    }
  }
  parts.push(
    `<text x="${MARGIN}" y="${height - 5}" font-size="9">` +
      `darker = higher (${formatRange(scale)})</text>`,
    "</svg>",
  );
  return parts.join("\n");
}

function formatRange(scale: ColorScale): string {
  return `${scale.lo.toPrecision(3)} … ${scale.hi.toPrecision(3)}`;
}

/** Render one grid by itself, on its own scale. */
export function renderSingleGrid(grid: FilterGrid): string {
  const scale = makeScale(grid.rows.flat());
  const side = MARGIN + grid.size * CELL + GAP;
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${side}" height="${side}" ` +
      `viewBox="0 0 ${side} ${side}">`,
    `<rect width="${side}" height="${side}" fill="white"/>`,
    renderGrid(grid, scale, MARGIN, MARGIN, "0:0"),
    "</svg>",
  ].join("\n");
}
