/** Linear data -> pixel mapping with padded extent and round tick values. */
export interface LinearScale {
  domain: [number, number];
  range: [number, number];
  map: (value: number) => number;
  ticks: number[];
}

/** Round a raw step to the nearest 1/2/5 x 10^k ladder value. */
function niceStep(rawStep: number): number {
  const power = Math.floor(Math.log10(rawStep));
  const base = Math.pow(10, power);
  const fraction = rawStep / base;
  if (fraction <= 1) return base;
  if (fraction <= 2) return 2 * base;
  if (fraction <= 5) return 5 * base;
  return 10 * base;
}

export function tickValues(lo: number, hi: number, count = 6): number[] {
  if (lo === hi) return [lo];
  const step = niceStep((hi - lo) / Math.max(count - 1, 1));
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    // snap away float drift so labels stay clean
    ticks.push(Number(v.toFixed(10)));
  }
  return ticks;
}

export function linearScale(values: number[], range: [number, number], padFraction = 0.06): LinearScale {
  const finite = values.filter(Number.isFinite);
  if (finite.length === 0) {
    throw new Error("no finite values to build an axis from");
  }
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * padFraction;
  const domain: [number, number] = [lo - pad, hi + pad];
  const spanPx = range[1] - range[0];
  const map = (value: number): number =>
    range[0] + ((value - domain[0]) / (domain[1] - domain[0])) * spanPx;
  return { domain, range, map, ticks: tickValues(lo, hi) };
}
