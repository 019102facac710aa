/**
 * Loss / validation-MAP curves over epochs as a standalone SVG. The
 * loss uses the left axis, MAP (when logged) the right one; a single
 * epoch degenerates to marked points rather than lines.
 */

import type { EpochRecord } from "./logs.js";

const WIDTH = 560;
const HEIGHT = 300;
const M = { left: 52, right: 52, top: 20, bottom: 34 };

export interface CurveRender {
  svg: string;
  warnings: string[];
}

interface Axis {
  lo: number;
  hi: number;
  toY(value: number): number;
}

function axisFor(values: number[]): Axis {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    // avoid a zero-height range so the single level sits mid-plot
    lo -= 0.5;
    hi += 0.5;
  }
  const innerH = HEIGHT - M.top - M.bottom;
  return {
    lo,
    hi,
    toY: (value) => M.top + innerH * (1 - (value - lo) / (hi - lo)),
  };
}

function xFor(epochs: number[]): (epoch: number) => number {
  const lo = Math.min(...epochs);
  const hi = Math.max(...epochs);
  const innerW = WIDTH - M.left - M.right;
  if (lo === hi) {
    return () => M.left + innerW / 2;
  }
  return (epoch) => M.left + (innerW * (epoch - lo)) / (hi - lo);
}

function seriesMarkup(
  points: Array<[number, number]>,
  cls: string,
  stroke: string,
): string {
  const dots = points
    .map(
      ([x, y]) =>
        `<circle class="${cls}-pt" cx="${x.toFixed(2)}" cy="${y.toFixed(2)}" ` +
        `r="2.5" fill="${stroke}"/>`,
    )
    .join("");
  if (points.length === 1) {
    return dots;
  }
  const path = points
    .map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`)
    .join(" ");
  return (
    `<polyline class="${cls}" points="${path}" fill="none" ` +
    `stroke="${stroke}" stroke-width="1.5"/>` + dots
  );
}

export function renderTrainingCurves(records: EpochRecord[]): CurveRender {
  const warnings: string[] = [];
  const epochs = records.map((r) => r.epoch);
  const x = xFor(epochs);
  const lossAxis = axisFor(records.map((r) => r.loss));

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<line x1="${M.left}" y1="${HEIGHT - M.bottom}" x2="${WIDTH - M.right}" ` +
      `y2="${HEIGHT - M.bottom}" stroke="black"/>`,
    `<line x1="${M.left}" y1="${M.top}" x2="${M.left}" ` +
      `y2="${HEIGHT - M.bottom}" stroke="black"/>`,
    `<text x="${(M.left + WIDTH - M.right) / 2}" y="${HEIGHT - 8}" ` +
      `text-anchor="middle" font-size="11">epoch</text>`,
    `<text x="14" y="${HEIGHT / 2}" text-anchor="middle" font-size="11" ` +
      `transform="rotate(-90 14 ${HEIGHT / 2})">loss</text>`,
    `<text x="${M.left}" y="${lossAxis.toY(lossAxis.hi) - 4}" ` +
      `font-size="9">${lossAxis.hi.toPrecision(4)}</text>`,
    `<text x="${M.left}" y="${lossAxis.toY(lossAxis.lo) - 4}" ` +
      `font-size="9">${lossAxis.lo.toPrecision(4)}</text>`,
  ];

  parts.push(
    seriesMarkup(
      records.map((r) => [x(r.epoch), lossAxis.toY(r.loss)]),
      "loss",
      "#b5442d",
    ),
  );

  const withMap = records.filter((r) => r.valMap !== undefined);
  if (withMap.length === 0) {
    warnings.push("no val_map field in any record; plotting loss only");
  } else {
    if (withMap.length < records.length) {
      warnings.push(
        `val_map present in only ${withMap.length} of ${records.length} records`,
      );
    }
    const mapAxis = axisFor(withMap.map((r) => r.valMap!));
    parts.push(
      `<line x1="${WIDTH - M.right}" y1="${M.top}" x2="${WIDTH - M.right}" ` +
        `y2="${HEIGHT - M.bottom}" stroke="black"/>`,
      `<text x="${WIDTH - 14}" y="${HEIGHT / 2}" text-anchor="middle" ` +
        `font-size="11" transform="rotate(90 ${WIDTH - 14} ${HEIGHT / 2})">` +
        `validation MAP</text>`,
      seriesMarkup(
        withMap.map((r) => [x(r.epoch), mapAxis.toY(r.valMap!)]),
        "map",
        "#2d6eb5",
      ),
    );
  }
  parts.push("</svg>");
  return { svg: parts.join("\n"), warnings };
}
