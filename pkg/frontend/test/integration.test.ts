/**
 * End-to-end rendering from real artifacts: the cosrec CLI trains on the
 * cyclic overfit-smoke corpus, exports its filters, and the renderers
 * must consume those files as-is. Needs `cosrec` on PATH (pip install
 * the parent package); skipped otherwise.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { renderTrainingCurves } from "../src/curves.js";
import { loadFilterExport, parseGrid, serializeGrid } from "../src/filters.js";
import { renderFilterSheet } from "../src/heatmap.js";
import { parseTrainingLog } from "../src/logs.js";

function cosrecAvailable(): boolean {
  try {
    execFileSync("cosrec", ["--help"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

function cyclicLog(numUsers: number, numItems: number): string {
  // every user repeats a fixed 10-item cycle three times
  const lines: string[] = [];
  for (let u = 1; u <= numUsers; u++) {
    const start = ((u - 1) * 7) % numItems;
    for (let t = 0; t < 30; t++) {
      const item = ((start + (t % 10)) % numItems) + 1;
      lines.push(`${u}::${item}::5::${1000000 + u * 100 + t}`);
    }
  }
  return lines.join("\n") + "\n";
}

const available = cosrecAvailable();
let dir: string;

beforeAll(() => {
  if (!available) return;
  dir = mkdtempSync(join(tmpdir(), "cosrec-viz-"));
  writeFileSync(join(dir, "raw.dat"), cyclicLog(200, 50));
  const run = (args: string[]) =>
    execFileSync("cosrec", args, { cwd: dir, encoding: "utf8" });
  run([
    "preprocess", "--dataset", "ml1m", "--input", "raw.dat",
    "--output", "cyclic.ds", "--min-user", "1", "--min-item", "1",
  ]);
  const log = run([
    "train", "--data", "cyclic.ds", "--out", "smoke.ck",
    "--embedding-dim", "32", "--channels", "16", "32",
    "--dropout", "0.1", "--learning-rate", "0.005",
    "--batch-size", "128", "--epochs", "5", "--no-validation",
    "--seed", "0",
  ]);
  writeFileSync(join(dir, "train.log"), log);
  run(["export-filters", "--checkpoint", "smoke.ck",
       "--layer", "conv1_1", "--out", "filters_1x1"]);
  run(["export-filters", "--checkpoint", "smoke.ck",
       "--layer", "conv1_2", "--out", "filters_3x3"]);
}, 180_000);

afterAll(() => {
  if (dir) rmSync(dir, { recursive: true, force: true });
});

describe.skipIf(!available)("rendering real training artifacts", () => {
  it("renders the 3x3 filter sheet, one heatmap per channel pair", () => {
    const data = loadFilterExport(join(dir, "filters_3x3"));
    expect(data.outChannels).toBe(16);
    expect(data.inChannels).toBe(16);
    expect(data.size).toBe(3);
    const svg = renderFilterSheet(data);
    const pairs = svg.match(/<g class="pair"/g)!;
    expect(pairs).toHaveLength(16 * 16);
    const cells = svg.match(/<rect class="cell"/g)!;
    expect(cells).toHaveLength(16 * 16 * 9);
  });

  it("renders the 1x1 filter sheet with single-cell heatmaps", () => {
    const data = loadFilterExport(join(dir, "filters_1x1"));
    expect(data.outChannels).toBe(16);
    expect(data.inChannels).toBe(64); // both halves of the pair encoding
    expect(data.size).toBe(1);
    const svg = renderFilterSheet(data);
    expect(svg.match(/<g class="pair"/g)!).toHaveLength(16 * 64);
    expect(svg.match(/<rect class="cell"/g)!).toHaveLength(16 * 64);
  });

  it("re-serializes every exported grid byte-for-byte", () => {
    const where = join(dir, "filters_3x3");
    const files = readdirSync(where).filter((f) => f !== "index.csv");
    expect(files.length).toBe(256);
    for (const file of files) {
      const text = readFileSync(join(where, file), "utf8");
      expect(serializeGrid(parseGrid(text))).toBe(text);
    }
  });

  it("plots the training log it was given", () => {
    const records = parseTrainingLog(readFileSync(join(dir, "train.log"), "utf8"));
    expect(records).toHaveLength(5);
    expect(records.every((r) => Number.isFinite(r.loss))).toBe(true);
    const { svg, warnings } = renderTrainingCurves(records);
    expect(svg).toContain('<polyline class="loss"');
    expect(warnings.some((w) => w.includes("val_map"))).toBe(true);
  });
});
