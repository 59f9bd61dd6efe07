/** Logarithmic axis helpers. */

export interface LogScale {
  domain: [number, number];
  range: [number, number];
  map(value: number): number;
}

export function makeLogScale(domain: [number, number], range: [number, number]): LogScale {
  const [d0, d1] = domain;
  if (!(d0 > 0 && d1 > 0)) {
    throw new Error(`log scale needs positive bounds, got [${d0}, ${d1}]`);
  }
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  return {
    domain,
    range,
    map(value: number): number {
      const t = (Math.log10(value) - l0) / span;
      return range[0] + t * (range[1] - range[0]);
    },
  };
}

/** Decade tick values covering [lo, hi], thinned to at most maxTicks. */
export function decadeTicks(lo: number, hi: number, maxTicks = 12): number[] {
  const k0 = Math.ceil(Math.log10(lo) - 1e-9);
  const k1 = Math.floor(Math.log10(hi) + 1e-9);
  const ticks: number[] = [];
  for (let k = k0; k <= k1; k += 1) {
    ticks.push(Math.pow(10, k));
  }
  if (ticks.length > maxTicks) {
    const step = Math.ceil(ticks.length / maxTicks);
    return ticks.filter((_, i) => i % step === 0);
  }
  return ticks;
}

export function tickLabel(value: number): string {
  const k = Math.round(Math.log10(value));
  return `1e${k}`;
}

/** Pad a positive interval multiplicatively on the log axis. */
export function padLog(lo: number, hi: number, factor = 1.3): [number, number] {
  return [lo / factor, hi * factor];
}
