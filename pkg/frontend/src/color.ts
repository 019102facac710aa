/**
 * Shared color scale for the heatmaps: darker means higher. Values are
 * normalized over the whole sheet so grids stay comparable.
 */

export interface ColorScale {
  lo: number;
  hi: number;
}

export function makeScale(values: Iterable<number>): ColorScale {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) {
    throw new Error("color scale needs at least one finite value");
  }
  return { lo, hi };
}

/** Grayscale fill for a value; the highest value maps to black. */
export function fillFor(scale: ColorScale, value: number): string {
  const span = scale.hi - scale.lo;
  const t = span === 0 ? 0.5 : (value - scale.lo) / span;
  const level = Math.round(255 * (1 - t));
  return `rgb(${level},${level},${level})`;
}

/** The gray level baked into a fill, for tests and tooling. */
export function grayLevel(fill: string): number {
  const match = /^rgb\((\d+),\d+,\d+\)$/.exec(fill);
  if (!match) {
    throw new Error(`not a grayscale fill: ${fill}`);
  }
  return Number(match[1]);
}
